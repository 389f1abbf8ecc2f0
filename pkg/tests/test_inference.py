import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ciebench.inference import (
    InferenceConfig,
    InferenceConfigError,
    ZeroVelocitySample,
    affordance_graph,
    anneal_split,
    bellman_update,
    cie_of_model,
    dataset_from_arrays,
    dataset_from_trajectory,
    featurize,
    fit_object,
    grow,
    region_agreement,
    seed_hypotheses,
    seed_new_object,
    structure_learning_loop,
    try_unify,
)
from ciebench.inference.anneal import Annealer, system_from_parts
from ciebench.inference.cie import (
    STAY,
    BellmanStep,
    affordance_entropies,
    transition_counts,
)
from ciebench.inference.metrics import matched_labels
from ciebench.inference.structure import relative_gain, without_object
from ciebench.world import StateSample, WorldConfig, simulate

ROT_MINUS_90 = np.array([[0.0, 0.0, 1.0], [0.0, -1.0, 0.0]])


def normal_equations(X, Y):
    """Closed-form least squares, kept independent of the fitting code."""
    return np.linalg.solve(X.T @ X, X.T @ Y).T


def iteration_entries(model):
    return [e for rec in model.trace if rec.get("stage") == "anneal" for e in rec["iterations"]]


def model_from_labels(data, labels, cfg=None):
    """Fit one object per label without any annealing."""
    cfg = cfg or InferenceConfig()
    labels = np.asarray(labels, dtype=np.int64)
    ann = Annealer(data.X, data.Y, data.t, cfg)
    objects, assign = ann.fit_all(labels, int(labels.max()) + 1)
    return system_from_parts(data, objects, assign)


def constant_fields_dataset(fields, n=1200, seed=0):
    """Samples on the unit square; field ``fields[i]`` acts on the i-th vertical strip."""
    rng = np.random.default_rng(seed)
    pos = rng.random((n, 2))
    ang = rng.random(n) * 2 * math.pi
    vel = np.column_stack([np.cos(ang), np.sin(ang)]) * (0.1 + rng.random(n)[:, None])
    strip = np.minimum((pos[:, 0] * len(fields)).astype(int), len(fields) - 1)
    acc = np.array(fields, dtype=float)[strip]
    return dataset_from_arrays(np.arange(n), pos, vel, acc, strip + 1)


@pytest.fixture(scope="module")
def learned(default_dataset):
    return structure_learning_loop(default_dataset, InferenceConfig())


class TestFeaturize:
    def test_example(self):
        s = StateSample(0, (0.5, 0.5), (2.0, 0.0), (0.0, -1.0), 1)
        x, y = featurize(s, 1.0)
        assert x.tolist() == [1.0, 1.0, 0.0]
        assert y.tolist() == [0.0, -1.0]

    def test_zero_velocity(self):
        with pytest.raises(ZeroVelocitySample):
            featurize(StateSample(3, (0.0, 0.0), (0.0, 0.0), (0.0, 1.0), 1), 1.0)

    def test_region_two_targets_are_constant(self, default_dataset):
        rows = default_dataset.region_true == 2
        assert np.allclose(default_dataset.Y[rows], [0.0, 1.0], atol=1e-12)

    def test_region_one_targets_follow_the_heading(self, default_dataset):
        d = default_dataset
        rows = d.region_true == 1
        expected = np.column_stack([d.X[rows, 2], -d.X[rows, 1]])
        assert np.allclose(d.Y[rows], expected, atol=1e-9)

    def test_zero_velocity_rows_are_excluded(self):
        data = dataset_from_arrays([0, 1, 2], np.zeros((3, 2)), [[0, 0], [1, 0], [0, 1]], [[0, 1]] * 3)
        assert data.m == 2
        assert data.excluded.tolist() == [0]


class TestFitObject:
    def test_region_two_is_the_constant_law(self, default_dataset):
        d = default_dataset
        rows = d.region_true == 2
        obj = fit_object(d.X[rows], d.Y[rows])
        assert np.allclose(obj.weights, [[0, 0, 0], [1, 0, 0]], atol=1e-9)
        assert np.allclose(obj.weights, normal_equations(d.X[rows], d.Y[rows]), atol=1e-9)
        assert obj.sse < 1e-20
        assert not obj.ridge

    def test_region_one_is_a_quarter_turn(self, default_dataset):
        d = default_dataset
        rows = d.region_true == 1
        obj = fit_object(d.X[rows], d.Y[rows])
        assert np.allclose(obj.weights, ROT_MINUS_90, atol=1e-9)
        assert np.allclose(obj.weights, normal_equations(d.X[rows], d.Y[rows]), atol=1e-9)

    def test_duplicated_sample_is_predicted_exactly(self):
        X = np.tile([1.0, 0.6, 0.8], (10, 1))
        Y = np.tile([0.3, -0.7], (10, 1))
        obj = fit_object(X, Y)
        assert obj.ridge
        assert np.allclose(obj.predict(X[:1]), Y[:1], atol=1e-6)

    def test_empty(self):
        with pytest.raises(ValueError):
            fit_object(np.empty((0, 3)), np.empty((0, 2)))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(4, 60), st.integers(0, 10_000))
    def test_agrees_with_normal_equations(self, n, seed):
        rng = np.random.default_rng(seed)
        ang = rng.random(n) * 2 * math.pi
        X = np.column_stack([np.ones(n), np.cos(ang), np.sin(ang)])
        Y = rng.standard_normal((n, 2))
        if np.linalg.matrix_rank(X) < 3:
            return
        assert np.allclose(fit_object(X, Y).weights, normal_equations(X, Y), atol=1e-8)


class TestConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"min_improvement": 0},
            {"seed_fraction": 1.5},
            {"criterion": "bic"},
            {"driver": "sgd"},
            {"seed_mode": "random"},
            {"gamma": 0},
            {"max_objects": 0},
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(InferenceConfigError):
            InferenceConfig(**kwargs)

    def test_json_round_trip(self):
        cfg = InferenceConfig(min_improvement=0.1, criterion="cie")
        assert InferenceConfig.from_json(cfg.to_json()) == cfg

    def test_unknown_field(self):
        with pytest.raises(InferenceConfigError, match="colour"):
            InferenceConfig.from_json({"colour": 1})


class TestAnneal:
    def test_single_object_equals_one_fit(self, default_dataset):
        d = default_dataset
        m = anneal_split(d, 1)
        ref = fit_object(d.X, d.Y)
        assert m.k == 1
        assert np.allclose(m.objects[0].weights, ref.weights, atol=1e-12)
        assert m.loss == pytest.approx(ref.sse / d.m, rel=1e-12)

    def test_k_must_be_positive(self, default_dataset):
        with pytest.raises(ValueError):
            anneal_split(default_dataset, 0)

    @pytest.mark.parametrize("seed, k", [(1, 2), (4, 3), (9, 5)])
    def test_hard_em_is_monotone(self, seed, k):
        data = _small_world(seed)
        m = anneal_split(data, k, InferenceConfig(seed=seed))
        prev = None
        for e in iteration_entries(m):
            if prev is not None and "iter" in e:
                assert e["sse"] <= prev * (1 + 1e-9) + 1e-12
            prev = e["sse"]

    def test_assignment_is_total(self, default_dataset, grown_model):
        a = grown_model.assignment[default_dataset.index]
        assert np.all((a >= 0) & (a < grown_model.k))

    def test_ground_truth_start_is_a_fixed_point(self, default_dataset):
        init = default_dataset.region_true - 1
        m = anneal_split(default_dataset, 4, init=init)
        assert np.array_equal(m.assignment[default_dataset.index], init)

    def test_annealing_with_temperature_still_recovers(self, default_dataset):
        cfg = InferenceConfig(temperature0=1e-3, cooling_alpha=0.5)
        m = anneal_split(default_dataset, 4, cfg, init=default_dataset.region_true - 1)
        assert region_agreement(m, default_dataset) > 0.95


def _small_world(seed, n_steps=2000):
    return dataset_from_trajectory(simulate(WorldConfig(seed=seed, n_steps=n_steps)))


class TestSeeding:
    def test_seeds_concentrate_near_the_center(self, default_dataset):
        d = default_dataset
        # three sector laws fitted, the centre law missing
        sector_objects = [fit_object(d.X[d.region_true == r], d.Y[d.region_true == r]) for r in (2, 3, 4)]
        R = np.stack([o.sq_residuals(d.X, d.Y) for o in sector_objects], axis=1)
        model = system_from_parts(d, sector_objects, np.argmin(R, axis=1))
        seed = seed_hypotheses(model, d)[0]
        dist = np.hypot(*(d.pos - 0.5).T)
        assert np.median(dist[seed]) < 0.8 * np.median(dist)
        assert np.mean(d.region_true[seed] == 1) > 2 * np.mean(d.region_true == 1)

    def test_seed_size_is_the_seed_fraction(self, default_dataset, grown_model):
        for seed in seed_hypotheses(grown_model, default_dataset):
            assert seed.size == math.ceil(0.2 * default_dataset.m)

    def test_zero_residual_model_still_seeds_but_is_rejected(self):
        data = constant_fields_dataset([(0.0, 1.0)])
        one = anneal_split(data, 1)
        two = seed_new_object(one, data)
        assert two.k == 2
        assert np.sum(two.assignment == 1) == math.ceil(0.2 * data.m)
        assert relative_gain(one.loss, two.loss, InferenceConfig()) < 0.05

    def test_full_seed_fraction_is_a_restart(self, default_dataset):
        one = anneal_split(default_dataset, 1)
        restart = seed_new_object(one, default_dataset, InferenceConfig(seed_fraction=1.0))
        assert restart.k == 1
        assert relative_gain(one.loss, restart.loss, InferenceConfig()) < 0.05

    def test_residual_mode_returns_the_worst_samples(self, default_dataset, grown_model):
        cfg = InferenceConfig(seed_mode="residual")
        one = anneal_split(default_dataset, 1)
        (seed,) = seed_hypotheses(one, default_dataset, cfg)
        res = one.objects[0].sq_residuals(default_dataset.X, default_dataset.Y)
        assert res[seed].min() >= np.delete(res, seed).max()


class TestGrow:
    def test_default_world_has_four_objects(self, default_dataset, grown_model):
        assert grown_model.k == 4
        assert region_agreement(grown_model, default_dataset) >= 0.95

    def test_fifth_proposal_is_rejected(self, grown_model):
        last = grown_model.ledger[-1]
        assert last["k_from"] == 4 and last["k_proposed"] == 5
        assert not last["accepted"]

    def test_single_field_gives_one_object(self):
        assert grow(constant_fields_dataset([(0.0, 1.0)])).k == 1

    def test_two_opposite_fields(self):
        data = constant_fields_dataset([(0.0, 1.0), (0.0, -1.0)])
        m = grow(data)
        assert m.k == 2
        found = sorted(tuple(np.round(o.weights, 6).ravel()) for o in m.objects)
        expected = sorted(
            tuple(np.ravel(w)) for w in ([[0, 0, 0], [1, 0, 0]], [[0, 0, 0], [-1, 0, 0]])
        )
        assert np.allclose(found, expected, atol=1e-6)

    @pytest.mark.parametrize("seed", [3, 11])
    def test_never_worse_than_the_baseline(self, seed):
        data = _small_world(seed)
        m = grow(data, InferenceConfig(seed=seed))
        assert m.loss <= anneal_split(data, 1).loss * (1 + 1e-12)

    def test_cie_criterion_also_finds_four(self, default_dataset):
        assert grow(default_dataset, InferenceConfig(criterion="cie")).k == 4

    def test_max_objects_caps_growth(self, default_dataset):
        assert grow(default_dataset, InferenceConfig(max_objects=2)).k == 2


class TestUnify:
    def test_force_split_region_two_is_merged(self, default_dataset):
        d = default_dataset
        labels = d.region_true - 1
        split = np.where((d.region_true == 2) & (np.arange(d.m) % 2 == 1), 4, labels)
        five = model_from_labels(d, split)
        assert five.k == 5
        merged = try_unify(d, five)
        assert merged.k == 4
        assert region_agreement(merged, d) == 1.0

    def test_ground_truth_model_has_no_merge(self, default_dataset):
        four = model_from_labels(default_dataset, default_dataset.region_true - 1)
        ledger = []
        assert try_unify(default_dataset, four, ledger=ledger).k == 4
        assert ledger and not any(e["merged"] for e in ledger)

    def test_single_object_is_unchanged(self, default_dataset):
        one = anneal_split(default_dataset, 1)
        assert try_unify(default_dataset, one) is one


class TestStructureLearning:
    def test_four_objects(self, learned):
        model, report = learned
        assert model.k == 4
        assert len(report.per_object_H) == 4

    def test_transitions_match_region_hand_offs(self, learned, default_dataset):
        model, _ = learned
        d = default_dataset
        mapping = matched_labels(model, d)
        truth = transition_counts(d.t, d.region_true - 1, 4)
        order = [mapping[j] - 1 for j in range(4)]
        assert np.array_equal(model.transition_counts, truth[np.ix_(order, order)])

    def test_self_transitions_dominate(self, learned):
        model, _ = learned
        c = model.transition_counts
        diag = np.diag(c)
        assert np.all(diag > c.sum(axis=1) - diag)

    def test_ledger_keeps_the_rejected_candidate(self, learned):
        model, _ = learned
        rejected = [e for e in model.ledger if e["stage"] == "grow" and not e["accepted"]]
        assert any(e["k_proposed"] == 5 and "relative_gain" in e for e in rejected)
        assert any(e["stage"] == "pareto" for e in model.ledger)
        assert any(e["stage"] == "graph" for e in model.ledger)

    def test_single_law(self):
        model, _ = structure_learning_loop(constant_fields_dataset([(0.0, 1.0)]))
        assert model.k == 1
        assert affordance_graph(model) == {(0, 0): model.transition_counts[0, 0]}

    def test_zero_count_edges_are_pruned(self, learned):
        model, _ = learned
        graph = affordance_graph(model)
        assert all(v > 0 for v in graph.values())
        assert len(graph) == np.count_nonzero(model.transition_counts)

    def test_pareto_every_object_is_needed(self, learned, default_dataset):
        model, _ = learned
        cfg = InferenceConfig()
        rng = np.random.default_rng(0)
        for j in range(model.k):
            reduced = without_object(default_dataset, model, j, cfg, rng)
            assert relative_gain(reduced.loss, model.loss, cfg) > cfg.min_improvement


class TestCie:
    def test_exact_four_object_fit_is_degenerate(self, grown_model, default_dataset):
        rep = cie_of_model(grown_model, default_dataset)
        assert all(rep.degenerate)
        assert rep.total == -math.inf
        assert all(h > 0 for h in rep.affordance_H)
        assert math.isfinite(rep.resolved_total)

    def test_underfit_is_larger(self, grown_model, default_dataset):
        one = anneal_split(default_dataset, 1)
        r1 = cie_of_model(one, default_dataset)
        r4 = cie_of_model(grown_model, default_dataset)
        assert r1.total > r4.total
        assert r1.resolved_total > r4.resolved_total

    def test_zero_coefficients(self, grown_model, default_dataset):
        n_pairs = len(cie_of_model(grown_model, default_dataset).affordance_pairs)
        rep = cie_of_model(grown_model, default_dataset, c=[0] * 4, d=[0] * n_pairs)
        assert rep.total == 0.0

    def test_coefficient_count_is_checked(self, grown_model, default_dataset):
        with pytest.raises(ValueError):
            cie_of_model(grown_model, default_dataset, c=[1, 1])

    def test_affordance_entropy_of_a_known_table(self):
        counts = np.array([[2, 1], [1, 0]])
        ((pair, h),) = affordance_entropies(counts)
        assert pair == (0, 1)
        assert h == pytest.approx(2 * 0.25 * 2.0, abs=1e-15)

    def test_json_has_no_infinities(self, grown_model, default_dataset):
        doc = cie_of_model(grown_model, default_dataset).to_json()
        assert doc["total"] is None and doc["total_is_degenerate"]


class TestBellman:
    def test_no_improvement_means_stay(self):
        trace = [BellmanStep(0, 5.0, 5.0, "init")]
        move, value, _ = bellman_update(trace, [("a", 6.0), ("b", 5.0)], gamma=0.9)
        assert move == STAY
        assert value == pytest.approx(4.5)

    def test_single_candidate_with_unit_gamma(self):
        trace = [BellmanStep(0, 5.0, 5.0, "init")]
        move, value, c_after = bellman_update(trace, [("a", 3.0)], gamma=1.0)
        assert (move, value, c_after) == ("a", 3.0, 3.0)

    def test_best_candidate_wins(self):
        trace = [BellmanStep(0, 5.0, 5.0, "init")]
        assert bellman_update(trace, [("a", 4.0), ("b", 2.0), ("c", 2.0)], gamma=1.0)[0] == "b"

    @given(st.lists(st.floats(-50, 50), max_size=8), st.floats(-50, 50))
    def test_unit_gamma_value_never_rises(self, cands, c0):
        trace = [BellmanStep(0, c0, c0, "init")]
        _, value, _ = bellman_update(trace, [(str(i), c) for i, c in enumerate(cands)], 1.0)
        assert value <= c0

    def test_driver_values_are_non_increasing(self, default_dataset):
        cfg = InferenceConfig(driver="bellman", gamma=1.0)
        m = grow(default_dataset, cfg)
        assert m.k == 4
        runs = [rec["bellman"] for rec in m.trace if rec.get("stage") == "anneal"]
        assert runs
        for steps in runs:
            values = [s.value for s in steps]
            assert all(b <= a + 1e-9 for a, b in zip(values, values[1:]))
        rep = cie_of_model(m, default_dataset)
        assert rep.bellman_trace


def test_growth_config_is_frozen():
    cfg = InferenceConfig()
    with pytest.raises(AttributeError):
        cfg.min_improvement = 0.5
    assert replace(cfg, seed=3).seed == 3

import csv
import json
import math
from pathlib import Path

import numpy as np
import pytest

from ciebench import SPEC_VERSION, cli
from ciebench.graph import EdgeProbabilityGraph
from ciebench.world import WorldConfig, region_of

GOLDEN = Path(__file__).parent / "golden"


def invoke(*argv):
    return cli.main([str(a) for a in argv])


def load(path):
    return json.loads(Path(path).read_text())


@pytest.fixture(scope="module")
def simulated(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim")
    assert invoke("simulate", "--seed", 42, "--out", out) == 0
    return out


@pytest.fixture(scope="module")
def inferred(tmp_path_factory, simulated):
    out = tmp_path_factory.mktemp("infer")
    assert invoke("infer", simulated / "trajectory.csv", "--out", out) == 0
    return out


def single_law_csv(path, n=400):
    rng = np.random.default_rng(5)
    rows = ["t,x,y,vx,vy,ax,ay,region_true"]
    for t in range(n):
        x, y, ang = (float(v) for v in rng.random(3))
        ang *= 2 * math.pi
        rows.append(f"{t},{x!r},{y!r},{math.cos(ang)!r},{math.sin(ang)!r},0.0,1.0,2")
    path.write_text("\n".join(rows) + "\n")
    return path


class TestGraphDemo:
    def test_matches_golden(self, tmp_path):
        assert invoke("graph-demo", "--paper-example", "--blocks", "1-4,5-8", "--out", tmp_path) == 0
        assert load(tmp_path / "graph_report.json") == load(GOLDEN / "graph_demo_example.json")

    def test_golden_values(self):
        doc = load(GOLDEN / "graph_demo_example.json")
        assert [b["bits"] for b in doc["within_block"]] == [10.0, 10.0]
        assert doc["cross_block"][0]["bits"] == 16.0
        assert doc["total"] == 36.0
        assert doc["spec_version"] == SPEC_VERSION == "1.0"

    def test_single_block(self, tmp_path):
        assert invoke("graph-demo", "--paper-example", "--blocks", "all", "--out", tmp_path) == 0
        doc = load(tmp_path / "graph_report.json")
        assert doc["within_block"] == [{"block": 0, "bits": 36.0}]
        assert doc["total"] == 36.0

    def test_planted_file_bipartition(self, tmp_path):
        g = EdgeProbabilityGraph.planted([0, 0, 0, 1, 1, 1, 1, 0], 0.95, 0.02)
        path = tmp_path / "planted.json"
        path.write_text(json.dumps(g.to_json()))
        assert invoke("graph-demo", "--graph", path, "--find-bipartition", "--out", tmp_path) == 0
        doc = load(tmp_path / "graph_report.json")
        assert doc["bipartition"]["blocks"] == [[1, 2, 3, 8], [4, 5, 6, 7]]

    def test_svg_written(self, tmp_path):
        invoke("graph-demo", "--paper-example", "--out", tmp_path)
        assert (tmp_path / "adjacency.svg").read_text().startswith("<svg")

    @pytest.mark.parametrize(
        "content, field",
        [('{"n": 2, "p": [[0.5, 0.2], [0.1, 0.5]]}', "symmetric"), ('{"p": [[0.5]]}', "'n'")],
    )
    def test_malformed_graph(self, tmp_path, capsys, content, field):
        path = tmp_path / "g.json"
        path.write_text(content)
        assert invoke("graph-demo", "--graph", path, "--out", tmp_path) == 2
        assert field in capsys.readouterr().err

    def test_bad_blocks(self, tmp_path):
        assert invoke("graph-demo", "--paper-example", "--blocks", "1-4,5-9", "--out", tmp_path) == 2

    def test_needs_a_graph(self, tmp_path):
        assert invoke("graph-demo", "--out", tmp_path) == 2


class TestSimulate:
    def test_default_run(self, simulated):
        lines = (simulated / "trajectory.csv").read_text().splitlines()
        assert lines[0] == "t,x,y,vx,vy,ax,ay,region_true"
        assert len(lines) == 20_001

    def test_byte_identical(self, simulated, tmp_path):
        assert invoke("simulate", "--seed", 42, "--out", tmp_path) == 0
        for name in ("trajectory.csv", "trajectory.json", "simulate_report.json", "manifest.json"):
            assert (tmp_path / name).read_bytes() == (simulated / name).read_bytes()

    def test_regions_follow_the_rule(self, simulated):
        cfg = WorldConfig()
        with open(simulated / "trajectory.csv", newline="") as fh:
            for row in csv.DictReader(fh):
                assert region_of((float(row["x"]), float(row["y"])), cfg) == int(row["region_true"])

    def test_zero_steps(self, tmp_path):
        assert invoke("simulate", "--n-steps", 0, "--out", tmp_path) == 0
        assert (tmp_path / "trajectory.csv").read_text() == "t,x,y,vx,vy,ax,ay,region_true\n"

    def test_format_selection(self, tmp_path):
        assert invoke("--format", "csv", "simulate", "--n-steps", 10, "--out", tmp_path) == 0
        assert sorted(p.name for p in tmp_path.iterdir()) == ["manifest.json", "trajectory.csv"]

    def test_config_file(self, tmp_path):
        cfg = tmp_path / "world.json"
        cfg.write_text('{"n_steps": 5, "a_mag": 2.0}')
        assert invoke("simulate", "--config", cfg, "--out", tmp_path) == 0
        assert len((tmp_path / "trajectory.csv").read_text().splitlines()) == 6

    @pytest.mark.parametrize(
        "argv",
        [["--a-mag", "-1"], ["--r-center", "0.9"], ["--n-steps", "-2"]],
    )
    def test_invalid_config(self, tmp_path, argv):
        assert invoke("simulate", *argv, "--out", tmp_path) == 2

    def test_unknown_config_field(self, tmp_path, capsys):
        cfg = tmp_path / "world.json"
        cfg.write_text('{"gravity": 9.8}')
        assert invoke("simulate", "--config", cfg, "--out", tmp_path) == 2
        assert "gravity" in capsys.readouterr().err

    def test_svgs_differ_only_by_version(self, tmp_path, monkeypatch):
        a, b = tmp_path / "a", tmp_path / "b"
        original = cli.__version__
        invoke("simulate", "--n-steps", 300, "--out", a)
        monkeypatch.setattr(cli, "__version__", "9.9.9")
        invoke("simulate", "--n-steps", 300, "--out", b)
        sa = (a / "trajectory.svg").read_text()
        sb = (b / "trajectory.svg").read_text()
        assert sa != sb
        assert sa.replace(original, "VERSION") == sb.replace("9.9.9", "VERSION")

    def test_outputs_are_world_readable(self, simulated):
        assert (simulated / "trajectory.csv").stat().st_mode & 0o044 == 0o044


class TestInfer:
    def test_four_objects(self, inferred):
        doc = load(inferred / "model.json")
        assert doc["k"] == 4
        assert doc["recovery"]["agreement"] >= 0.95
        assert doc["spec_version"] == SPEC_VERSION
        assert {"activation.svg", "assignment_map.svg", "model.json"} <= {p.name for p in inferred.iterdir()}

    def test_trace_keeps_the_rejected_fifth(self, inferred):
        trace = load(inferred / "model.json")["trace"]
        assert any(e["stage"] == "grow" and e["k_proposed"] == 5 and not e["accepted"] for e in trace)

    def test_cie_criterion(self, simulated, tmp_path):
        assert invoke("infer", simulated / "trajectory.csv", "--criterion", "cie", "--out", tmp_path) == 0
        doc = load(tmp_path / "model.json")
        assert doc["k"] == 4
        assert doc["config"]["criterion"] == "cie"

    def test_single_law_file(self, tmp_path):
        path = single_law_csv(tmp_path / "one.csv")
        assert invoke("infer", path, "--out", tmp_path) == 0
        assert load(tmp_path / "model.json")["k"] == 1

    def test_manifest_rerun_is_identical(self, inferred, tmp_path):
        assert invoke("--manifest", inferred / "manifest.json", "--out", tmp_path) == 0
        assert (tmp_path / "model.json").read_bytes() == (inferred / "model.json").read_bytes()

    def test_manifest_records_the_resolved_config(self, inferred):
        man = load(inferred / "manifest.json")
        assert man["command"] == "infer"
        assert man["spec_version"] == SPEC_VERSION
        assert man["resolved"]["inference"]["min_improvement"] == 0.05
        assert "model.json" in man["outputs"]

    def test_schema_mismatch(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("time,x,y\n0,1,2\n")
        assert invoke("infer", bad, "--out", tmp_path) == 2

    def test_missing_file(self, tmp_path):
        assert invoke("infer", tmp_path / "nope.csv", "--out", tmp_path) == 2

    def test_bad_coefficients(self, tmp_path):
        path = single_law_csv(tmp_path / "one.csv")
        assert invoke("infer", path, "--c", "1,2,3", "--out", tmp_path) == 2

    def test_invariant_failure_exit_code(self, tmp_path, monkeypatch):
        path = single_law_csv(tmp_path / "one.csv")
        monkeypatch.setattr(cli, "is_one_hot", lambda model, data: False)
        assert invoke("infer", path, "--out", tmp_path) == 3


class TestLife:
    def test_glider_matches_golden(self, tmp_path):
        assert invoke("life", "--pattern", "glider", "--generations", 20, "--zizo", "--out", tmp_path) == 0
        assert load(tmp_path / "life_report.json") == load(GOLDEN / "life_glider_zizo.json")

    def test_golden_values(self):
        doc = load(GOLDEN / "life_glider_zizo.json")
        (obj,) = doc["objects"]
        assert (obj["kind"], obj["period"], obj["displacement"]) == ("mover", 4, [1, 1])
        assert doc["zizo"]["converged"] is True

    @pytest.mark.parametrize("pattern, kind", [("block", "still-life"), ("blinker", "oscillator")])
    def test_builtin_patterns(self, tmp_path, pattern, kind):
        assert invoke("life", "--pattern", pattern, "--offset", "5,5", "--out", tmp_path) == 0
        assert [o["kind"] for o in load(tmp_path / "life_report.json")["objects"]] == [kind]

    def test_pattern_file(self, tmp_path):
        path = tmp_path / "glider.rle"
        path.write_text("x = 3, y = 3\nbo$2bo$3o!\n")
        assert invoke("life", "--pattern", path, "--out", tmp_path) == 0
        assert load(tmp_path / "life_report.json")["objects"][0]["kind"] == "mover"

    def test_frames_dump(self, tmp_path):
        invoke("life", "--generations", 10, "--out", tmp_path)
        assert (tmp_path / "frames.txt").read_text().count("# t=") == 11

    def test_malformed_pattern(self, tmp_path):
        path = tmp_path / "bad.rle"
        path.write_text("x = 3, y = 3\nbo$2b%o!\n")
        assert invoke("life", "--pattern", path, "--out", tmp_path) == 2

    @pytest.mark.parametrize(
        "argv",
        [["--pattern", "nosuch"], ["--offset", "15,15"], ["--offset", "a,b"], ["--generations", "3"]],
    )
    def test_bad_arguments(self, tmp_path, argv):
        assert invoke("life", *argv, "--out", tmp_path) == 2

    def test_manifest_rerun(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        invoke("life", "--pattern", "blinker", "--zizo", "--seed", 3, "--out", a)
        assert invoke("--manifest", a / "manifest.json", "--out", b) == 0
        assert (a / "life_report.json").read_bytes() == (b / "life_report.json").read_bytes()
        assert load(b / "manifest.json")["seed"] == 3


class TestParser:
    def test_no_subcommand(self):
        assert invoke() == 2

    def test_unknown_format(self):
        assert invoke("--format", "png", "life") == 2

    def test_seed_range(self):
        assert invoke("--seed", str(2**64), "life") == 2

    def test_flags_after_the_subcommand(self, tmp_path):
        assert invoke("life", "--seed", 7, "--format", "json", "--out", tmp_path) == 0
        assert load(tmp_path / "manifest.json")["seed"] == 7
        assert not (tmp_path / "frames.svg").exists()

    def test_broken_manifest(self, tmp_path):
        bad = tmp_path / "m.json"
        bad.write_text("{}")
        assert invoke("--manifest", bad) == 2

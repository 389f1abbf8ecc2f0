"""``ciebench`` command line: graph-demo, simulate, infer, life.

Every run writes ``manifest.json`` into ``--out``; passing that file back via
``--manifest`` repeats the run. Exit codes: 0 success, 2 bad input,
3 an inference result that violates its invariants.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import SPEC_VERSION, __version__
from .graph import (
    GraphError,
    best_bipartition,
    block_entropies,
    conditional_block_entropy,
    example_graph,
    graph_entropy,
    load_graph,
    parse_blocks,
)
from .inference import (
    InferenceConfig,
    InferenceConfigError,
    cie_of_model,
    dataset_from_trajectory,
    is_one_hot,
    recovery_summary,
    structure_learning_loop,
)
from .inference.structure import affordance_graph
from .jsonio import atomic_write, dumps
from .multiscale import (
    PatternError,
    builtin_pattern,
    extract_objects,
    life_zizo,
    load_pattern,
    place,
)
from .multiscale import run as run_life
from .multiscale.life import BUILTIN_PATTERNS, TOPOLOGIES
from .svg import (
    activation_svg,
    adjacency_svg,
    assignment_map_svg,
    life_frames_svg,
    trajectory_svg,
)
from .world import (
    TrajectoryFormatError,
    WorldConfig,
    WorldConfigError,
    read_trajectory,
    region_of,
    simulate,
    trajectory_csv,
    trajectory_json,
)

log = logging.getLogger("ciebench")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INVARIANT = 3
FORMATS = ("json", "csv", "svg")


class InputError(Exception):
    """Bad user input; reported with exit code 2."""


class InvariantFailure(Exception):
    """A computed result broke a contract; reported with exit code 3."""


class Run:
    """Output bookkeeping for one command: the out dir, formats, and files written."""

    def __init__(self, out: Path, formats: set[str]):
        self.out = out
        self.formats = formats
        self.files: list[str] = []

    def wants(self, fmt: str) -> bool:
        return fmt in self.formats

    def write(self, name: str, text: str) -> None:
        atomic_write(self.out / name, text)
        self.files.append(name)

    def write_json(self, name: str, obj) -> None:
        self.write(name, dumps(obj))


def _report_header(command: str, seed) -> dict:
    return {"spec_version": SPEC_VERSION, "command": command, "seed": seed}


# -- graph-demo ----------------------------------------------------------------

def cmd_graph_demo(args, run: Run) -> dict:
    if args.paper_example:
        g = example_graph()
        source = "builtin:8-node p=0.5"
    elif args.graph:
        g = load_graph(args.graph)
        source = str(args.graph)
    else:
        raise InputError("graph-demo: give --paper-example or --graph FILE")
    part = parse_blocks(args.blocks, g.n)
    report = block_entropies(g, part)
    blocks = part.blocks()
    doc = {
        **_report_header("graph-demo", args.seed),
        "graph": {"source": source, "n": g.n, "slots": g.n_slots},
        "unit": "bits",
        "blocks": [[v + 1 for v in b] for b in blocks],
        **report.to_json(),
        "graph_entropy": graph_entropy(g),
        "conditional": [
            {"block": b, "bits": conditional_block_entropy(g, part, b)} for b in range(part.k)
        ],
    }
    shade = blocks
    if args.find_bipartition:
        best, best_rep = best_bipartition(g, objective=args.objective)
        doc["bipartition"] = {
            "objective": args.objective,
            "blocks": [[v + 1 for v in b] for b in best.blocks()],
            **best_rep.to_json(),
        }
        shade = best.blocks()
    if run.wants("json"):
        run.write_json("graph_report.json", doc)
    if run.wants("svg"):
        run.write("adjacency.svg", adjacency_svg(g.p, shade, __version__))
    print(f"H(G) = {doc['graph_entropy']:.6g} bits over {g.n_slots} slots")
    for b, h in report.within_block:
        print(f"  within block {b + 1}: {h:.6g}")
    for (a, b), h in report.cross_block:
        print(f"  cross {a + 1}-{b + 1}: {h:.6g}")
    if "bipartition" in doc:
        print(f"  best bipartition: {doc['bipartition']['blocks']}")
    return {"graph": source, "blocks": args.blocks, "find_bipartition": args.find_bipartition,
            "objective": args.objective}


# -- simulate ------------------------------------------------------------------

def _world_config(args) -> WorldConfig:
    doc = {}
    if args.config:
        try:
            doc = json.loads(Path(args.config).read_text())
        except json.JSONDecodeError as exc:
            raise InputError(f"{args.config}: invalid JSON ({exc})") from None
        if not isinstance(doc, dict):
            raise InputError(f"{args.config}: world config must be a JSON object")
    overrides = {
        "n_steps": args.n_steps,
        "dt": args.dt,
        "a_mag": args.a_mag,
        "v0_mag": args.v0,
        "r_center": args.r_center,
        "map_size": args.map_size,
        "seed": args.seed,
    }
    doc.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return WorldConfig.from_json(doc)
    except TypeError as exc:
        raise InputError(f"world config: {exc}") from None


def cmd_simulate(args, run: Run) -> dict:
    cfg = _world_config(args)
    traj = simulate(cfg)
    counts = np.bincount(traj.region_true, minlength=5)[1:] if len(traj) else np.zeros(4, dtype=int)
    changes = int(np.count_nonzero(np.diff(traj.region_true))) if len(traj) > 1 else 0
    summary = {
        **_report_header("simulate", cfg.seed),
        "config": cfg.to_json(),
        "n_samples": len(traj),
        "region_counts": {str(r): int(c) for r, c in zip(range(1, 5), counts)},
        "region_changes": changes,
        "bounds": None if not len(traj) else {
            "x": [float(traj.pos[:, 0].min()), float(traj.pos[:, 0].max())],
            "y": [float(traj.pos[:, 1].min()), float(traj.pos[:, 1].max())],
        },
    }
    mismatched = sum(region_of(p, cfg) != r for p, r in zip(traj.pos, traj.region_true))
    if mismatched:
        raise InvariantFailure(f"{mismatched} samples disagree with the region rule")
    if run.wants("csv"):
        run.write("trajectory.csv", trajectory_csv(traj))
    if run.wants("json"):
        run.write("trajectory.json", json.dumps(trajectory_json(traj)) + "\n")
        run.write_json("simulate_report.json", summary)
    if run.wants("svg"):
        run.write("trajectory.svg", trajectory_svg(traj, __version__))
    print(f"simulated {len(traj)} samples; region counts {summary['region_counts']}")
    return {"world": cfg.to_json()}


# -- infer ---------------------------------------------------------------------

def _inference_config(args) -> InferenceConfig:
    doc = {}
    if args.config:
        try:
            doc = json.loads(Path(args.config).read_text())
        except json.JSONDecodeError as exc:
            raise InputError(f"{args.config}: invalid JSON ({exc})") from None
        if not isinstance(doc, dict):
            raise InputError(f"{args.config}: inference config must be a JSON object")
    overrides = {
        "criterion": args.criterion,
        "driver": args.driver,
        "min_improvement": args.min_improvement,
        "max_objects": args.max_objects,
        "seed_mode": args.seed_mode,
        "temperature0": args.temperature0,
        "gamma": args.gamma,
        "seed": args.seed,
    }
    doc.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return InferenceConfig.from_json(doc)
    except TypeError as exc:
        raise InputError(f"inference config: {exc}") from None


def _coefficients(text: str | None, what: str):
    if text is None:
        return None
    try:
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise InputError(f"--{what}: expected comma-separated numbers, got {text!r}") from None


def cmd_infer(args, run: Run) -> dict:
    cfg = _inference_config(args)
    traj = read_trajectory(args.trajectory)
    if len(traj) < 2:
        raise InputError(f"{args.trajectory}: need at least 2 samples")
    try:
        data = dataset_from_trajectory(traj)
    except ValueError as exc:
        raise InputError(f"{args.trajectory}: {exc}") from None
    model, report = structure_learning_loop(data, cfg)
    c, d = _coefficients(args.c, "c"), _coefficients(args.d, "d")
    if c is not None or d is not None:
        try:
            report = cie_of_model(model, data, c=c, d=d, sigma_floor=cfg.sigma_floor)
        except ValueError as exc:
            raise InputError(str(exc)) from None
    if model.k < 1 or not is_one_hot(model, data):
        raise InvariantFailure("inferred model is empty or not one object per sample")
    doc = {
        **_report_header("infer", cfg.seed),
        "config": cfg.to_json(),
        "input": {"path": str(args.trajectory), "n_samples": data.n_total, "excluded": data.excluded.tolist()},
        "k": model.k,
        **model.to_json(),
        "affordance_graph": [{"from": i, "to": j, "count": n} for (i, j), n in affordance_graph(model).items()],
        "cie": report.to_json(),
        "trace": model.ledger,
        "anneal_trace": model.trace,
    }
    if data.region_true is not None and np.all(data.region_true > 0):
        doc["recovery"] = recovery_summary(model, data)
    if run.wants("json"):
        run.write_json("model.json", doc)
    if run.wants("svg"):
        assign = model.assignment
        run.write("activation.svg", activation_svg(assign, model.k, __version__))
        ok = assign >= 0
        run.write("assignment_map.svg",
                  assignment_map_svg(traj.pos[ok], assign[ok], model.k, traj.config.map_size, __version__))
    print(f"inferred {model.k} objects; loss {model.loss:.3g}; CIE total {report.total}")
    if "recovery" in doc:
        rec = doc["recovery"]
        print(f"  region agreement {rec['agreement']:.4f}, mean cosine {rec['mean_cosine']:.4f}")
    return {"inference": cfg.to_json(), "trajectory": str(args.trajectory), "c": args.c, "d": args.d}


# -- life ----------------------------------------------------------------------

def _offset(text: str):
    try:
        x, y = (int(v) for v in text.split(","))
    except ValueError:
        raise InputError(f"--offset: expected 'x,y', got {text!r}") from None
    return x, y


def cmd_life(args, run: Run) -> dict:
    if args.pattern in BUILTIN_PATTERNS:
        pattern = builtin_pattern(args.pattern)
    elif Path(args.pattern).exists():
        pattern = load_pattern(args.pattern)
    else:
        raise InputError(f"--pattern: {args.pattern!r} is neither a file nor one of {sorted(BUILTIN_PATTERNS)}")
    if args.generations < args.max_period:
        raise InputError("--generations must be at least --max-period")
    grid = place(pattern, args.width, args.height, _offset(args.offset), args.topology)
    frames = run_life(grid, args.generations)
    objects = extract_objects(frames, args.max_period)
    doc = {
        **_report_header("life", args.seed),
        "grid": {"width": args.width, "height": args.height, "topology": args.topology},
        "pattern": args.pattern,
        "generations": args.generations,
        "objects": [o.to_json() for o in objects],
    }
    if args.zizo:
        doc["zizo"] = life_zizo(frames, args.max_period, args.zizo_iters).to_json()
    if run.wants("json"):
        run.write_json("life_report.json", doc)
    run.write("frames.txt", "".join(f"# t={t}\n{g.to_plaintext()}" for t, g in enumerate(frames)))
    if run.wants("svg"):
        run.write("frames.svg", life_frames_svg(frames, __version__))
    for o in objects:
        print(f"{o.kind}: period {o.period}, displacement {tuple(o.displacement)}")
    if args.zizo:
        print(f"zizo converged: {doc['zizo']['converged']}")
    return {"pattern": args.pattern}


# -- parser ----------------------------------------------------------------------

def _formats(text: str) -> set[str]:
    chosen = {f.strip() for f in text.split(",") if f.strip()}
    bad = chosen - set(FORMATS)
    if bad:
        raise argparse.ArgumentTypeError(f"unknown format(s) {sorted(bad)}; choose from {FORMATS}")
    return chosen


def _u64(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _common(default) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=_u64, default=default, help="RNG seed (unsigned 64-bit)")
    p.add_argument("--out", type=Path, default=default, help="output directory (default: current)")
    p.add_argument("--format", type=_formats, default=default, dest="formats",
                   help="comma-separated subset of json,csv,svg (default: all)")
    p.add_argument("-v", "--verbose", action="count", default=default)
    return p


def build_parser() -> argparse.ArgumentParser:
    # global flags are accepted both before and after the subcommand
    parser = argparse.ArgumentParser(prog="ciebench", description=__doc__.splitlines()[0],
                                     parents=[_common(None)])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--manifest", type=Path, help="repeat the run recorded in this manifest")
    sub = parser.add_subparsers(dest="command")
    inner = _common(argparse.SUPPRESS)

    g = sub.add_parser("graph-demo", parents=[inner], help="block entropies of a random graph")
    src = g.add_mutually_exclusive_group()
    src.add_argument("--paper-example", action="store_true", help="built-in 8-node graph with p=0.5")
    src.add_argument("--graph", type=Path, help="graph JSON with 'p' (matrix) or 'n' and 'uniform_p'")
    g.add_argument("--blocks", default="all", help="1-based blocks, e.g. 1-4,5-8 (default: all)")
    g.add_argument("--find-bipartition", action="store_true", help="exhaustive two-block search")
    g.add_argument("--objective", default="cross_per_slot", choices=("cross_per_slot", "cross"))
    g.set_defaults(func=cmd_graph_demo)

    s = sub.add_parser("simulate", parents=[inner], help="run the ball world")
    s.add_argument("--config", type=Path, help="world config JSON")
    s.add_argument("--n-steps", type=int)
    s.add_argument("--dt", type=float)
    s.add_argument("--a-mag", type=float)
    s.add_argument("--v0", type=float)
    s.add_argument("--r-center", type=float)
    s.add_argument("--map-size", type=float)
    s.set_defaults(func=cmd_simulate)

    i = sub.add_parser("infer", parents=[inner], help="discover hidden objects in a trajectory")
    i.add_argument("trajectory", type=Path, help="trajectory CSV or JSON")
    i.add_argument("--config", type=Path, help="inference config JSON")
    i.add_argument("--criterion", choices=("loss", "cie"))
    i.add_argument("--driver", choices=("em", "bellman"))
    i.add_argument("--min-improvement", type=float)
    i.add_argument("--max-objects", type=int)
    i.add_argument("--seed-mode", choices=("spatial", "residual"))
    i.add_argument("--temperature0", type=float)
    i.add_argument("--gamma", type=float)
    i.add_argument("--c", help="comma-separated object coefficients for the reported CIE")
    i.add_argument("--d", help="comma-separated affordance coefficients for the reported CIE")
    i.set_defaults(func=cmd_infer)

    life = sub.add_parser("life", parents=[inner], help="Game of Life macro-objects")
    life.add_argument("--pattern", default="glider",
                      help=f"pattern file (.rle or '.'/'#' plaintext) or one of {', '.join(sorted(BUILTIN_PATTERNS))}")
    life.add_argument("--generations", type=int, default=20)
    life.add_argument("--width", type=int, default=16)
    life.add_argument("--height", type=int, default=16)
    life.add_argument("--topology", choices=TOPOLOGIES, default="torus")
    life.add_argument("--offset", default="1,1", help="top-left corner 'x,y' of the pattern")
    life.add_argument("--max-period", type=int, default=8)
    life.add_argument("--zizo", action="store_true", help="run the zoom-in/zoom-out fixed-point check")
    life.add_argument("--zizo-iters", type=int, default=10)
    life.set_defaults(func=cmd_life)
    return parser


def _args_to_json(args) -> dict:
    skip = {"func", "manifest", "out", "verbose"}
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in skip:
            continue
        if isinstance(v, Path):
            v = str(v)
        elif isinstance(v, set):
            v = sorted(v)
        out[k] = v
    return out


def _from_manifest(path: Path, parser: argparse.ArgumentParser, overrides) -> argparse.Namespace:
    try:
        doc = json.loads(path.read_text())
        command = doc["command"]
        recorded = doc["args"]
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise InputError(f"{path}: not a usable manifest ({exc})") from None
    if doc.get("spec_version") != SPEC_VERSION:
        log.warning("manifest spec_version %s differs from %s", doc.get("spec_version"), SPEC_VERSION)
    args = parser.parse_args([command] + (["--paper-example"] if command == "graph-demo" else [])
                             + (["placeholder"] if command == "infer" else []))
    for k, v in recorded.items():
        if k == "formats":
            v = set(v)
        elif k in ("graph", "config", "trajectory") and v is not None:
            v = Path(v)
        setattr(args, k, v)
    if overrides.out is not None:
        args.out = overrides.out
    return args


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose or 0, logging.DEBUG)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.manifest is not None:
            args = _from_manifest(args.manifest, parser, args)
        elif args.command is None:
            parser.print_usage(sys.stderr)
            print("ciebench: error: a subcommand or --manifest is required", file=sys.stderr)
            return EXIT_INPUT
        args.formats = args.formats or set(FORMATS)
        out = Path(args.out or ".")
        rec = Run(out, args.formats)
        resolved = args.func(args, rec)
        manifest = {
            **_report_header(args.command, args.seed),
            "tool_version": __version__,
            "args": _args_to_json(args),
            "resolved": resolved,
            "outputs": sorted(rec.files),
        }
        atomic_write(out / "manifest.json", dumps(manifest))
    except InvariantFailure as exc:
        print(f"ciebench: invariant failure: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (InputError, GraphError, WorldConfigError, TrajectoryFormatError, PatternError,
            InferenceConfigError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"ciebench: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

"""``szpan`` command line.

Every subcommand is reproducible from its arguments: seeds default to
``DEFAULT_SEED`` and ``--seed random`` draws one from the OS and reports it
on stderr. Randomness for each subsystem comes from its own stream of a
``numpy.random.SeedSequence`` rooted at the run seed (see ``STREAMS``).

Exit codes: 0 success, 1 domain error, 2 I/O or input-format error,
3 size guard or qubit cap exceeded.
"""

from __future__ import annotations

import argparse
import csv
import importlib.resources
import io
import json
import logging
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .graph import (
    MAX_BRUTE_VARIABLES,
    BipartiteGraph,
    GraphError,
    SizeGuardError,
    SplitError,
    format_bigraph,
    format_graph,
    read_bigraph_text,
    read_graph_text,
    random_split,
)
from .panning import StopRule, check_regularity, pan_all, pan_once, round_curve, stage_density_curve, to_csv
from .qsim import QubitCapError, classical_exists, quantum_exists_regularity
from .qubo import QuboFormatError, QuboProblem, build_regularity_qubo
from .sbm import SbmError, SbmParams, check_condition4, internal_densities, sample_sbm, write_labels
from .solvers import SOLVER_NAMES, SolverConfig, SolverError, get_solver

log = logging.getLogger("szpan")

DEFAULT_SEED = 20240917
STREAMS = {"sbm": 1, "split": 2, "solver": 3, "pan": 4, "bench": 5, "shots": 6}

EXIT_OK, EXIT_DOMAIN, EXIT_IO, EXIT_GUARD = 0, 1, 2, 3


class InputError(Exception):
    """Unreadable or malformed input file."""


def load_schema(name: str) -> dict:
    """Shipped JSON schema for an output kind: verdict, existence, solve, sbm_summary or qubo."""
    return json.loads(importlib.resources.files("szpan").joinpath(f"schemas/{name}.schema.json").read_text())


def stream_seed(seed: int, name: str) -> int:
    """31-bit seed for subsystem ``name`` derived from the run seed."""
    state = np.random.SeedSequence([seed, STREAMS[name]]).generate_state(1)[0]
    return int(state) & 0x7FFFFFFF


@dataclass
class RunConfig:
    """Everything a run depends on; serialisable to JSON."""

    subcommand: str
    input: Optional[str] = None
    output: Optional[str] = None
    seed: int = DEFAULT_SEED
    solver: str = "sa"
    inner: str = "exhaustive"
    endpoint: Optional[str] = None
    epsilon: Optional[float] = None
    solver_config: dict = field(default_factory=dict)
    gap: float = 0.5
    min_size: int = 3
    m: Optional[int] = None
    shots: Optional[int] = None
    sizes: list = field(default_factory=lambda: [8, 12, 16, 20, 24, 32])
    solvers: list = field(default_factory=lambda: ["exhaustive", "sa", "greedy", "decomposed"])
    time_budget: Optional[float] = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    def solver_cfg(self, stream: str = "solver") -> SolverConfig:
        try:
            cfg = SolverConfig(**self.solver_config)
        except TypeError as exc:
            raise ValueError(f"bad solver_config: {exc}") from exc
        return cfg.replace(seed=stream_seed(self.seed, stream))

    def make_solver(self):
        return get_solver(self.solver, endpoint=self.endpoint, inner=self.inner)


def _read_text(path: Optional[str]) -> str:
    if path is None or path == "-":
        return sys.stdin.read()
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from exc


def _write_text(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _load(parser, path):
    text = _read_text(path)
    try:
        return parser(text)
    except (GraphError, QuboFormatError, SbmError, json.JSONDecodeError) as exc:
        raise InputError(f"{path or 'stdin'}: {exc}") from exc


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _communities_text(communities) -> str:
    return "".join(" ".join(str(v) for v in c) + "\n" for c in communities)


def _side_comment(name: str, labels) -> str:
    return f"# {name}: " + " ".join(str(v) for v in labels) + "\n"


def cmd_gen_sbm(cfg: RunConfig) -> int:
    """Writes ``<output>.edges`` and ``<output>.labels``; prints a JSON summary."""
    params = _load(SbmParams.from_json, cfg.input)
    pg = sample_sbm(params, stream_seed(cfg.seed, "sbm"))
    prefix = cfg.output or "sbm"
    _write_text(prefix + ".edges", format_graph(pg.graph))
    _write_text(prefix + ".labels", write_labels(pg))
    c4 = check_condition4(pg)
    dens = internal_densities(pg.graph, pg.labels)
    summary = {
        "n": params.n,
        "k": params.k,
        "edges": pg.graph.num_edges,
        "graph_density": c4.graph_density,
        "community_sizes": {str(c): len(v) for c, v in pg.communities().items()},
        "internal_densities": {str(c): (None if math.isnan(v) else v) for c, v in dens.items()},
        "condition4_margins": {str(c): (None if math.isnan(v) else v) for c, v in c4.margins.items()},
        "condition4_holds": c4.holds,
    }
    sys.stdout.write(_dumps(summary))
    return EXIT_OK


def cmd_bipartize(cfg: RunConfig) -> int:
    g = _load(read_graph_text, cfg.input)
    split = random_split(g, stream_seed(cfg.seed, "split"))
    bg = split.graph
    text = _side_comment("A", bg.labels_a) + _side_comment("B", bg.labels_b) + format_bigraph(bg)
    _write_text(cfg.output, text)
    return EXIT_OK


def cmd_check_regularity(cfg: RunConfig) -> int:
    if cfg.epsilon is None:
        raise ValueError("--epsilon is required")
    g = _load(read_bigraph_text, cfg.input)
    verdict = check_regularity(g, cfg.epsilon, cfg.make_solver(), cfg.solver_cfg())
    _write_text(cfg.output, _dumps(verdict.to_dict()))
    return EXIT_OK


def cmd_solve_qubo(cfg: RunConfig) -> int:
    q = _load(QuboProblem.from_json, cfg.input)
    res = cfg.make_solver()(q, cfg.solver_cfg())
    out = {
        "solver": cfg.solver,
        "energy": res.energy,
        "assignment": [int(x) for x in res.assignment],
        "evaluations": int(res.evaluations),
    }
    _write_text(cfg.output, _dumps(out))
    return EXIT_OK


def _curve_path(cfg: RunConfig, suffix: str) -> Optional[str]:
    if cfg.output is None or cfg.output == "-":
        return None
    return cfg.output + suffix


def cmd_pan(cfg: RunConfig) -> int:
    """Community to ``--output``; stage curve to ``<output>.stages.csv``."""
    g = _load(read_graph_text, cfg.input)
    t = pan_once(g, cfg.make_solver(), seed=stream_seed(cfg.seed, "pan"), cfg=cfg.solver_cfg())
    if t.warning:
        log.warning(t.warning)
    _write_text(cfg.output, _communities_text([t.community]))
    path = _curve_path(cfg, ".stages.csv")
    if path:
        cols = ["stage", "density", "energy", "energy_per_node"]
        _write_text(path, to_csv(stage_density_curve(t), cols))
    return EXIT_OK


def cmd_pan_all(cfg: RunConfig) -> int:
    """Communities to ``--output``; round curve to ``<output>.rounds.csv``."""
    g = _load(read_graph_text, cfg.input)
    stop = StopRule(gap=cfg.gap, min_size=cfg.min_size)
    result = pan_all(g, cfg.make_solver(), seed=stream_seed(cfg.seed, "pan"), stop=stop, cfg=cfg.solver_cfg())
    log.info("pan-all stopped: %s", result.stop_reason)
    _write_text(cfg.output, _communities_text(result.communities))
    path = _curve_path(cfg, ".rounds.csv")
    if path:
        _write_text(path, to_csv(round_curve(result), ["round", "energy_per_node", "community_size"]))
    return EXIT_OK


def cmd_qexist(cfg: RunConfig) -> int:
    """Existence JSON to ``--output``; outcome distribution to ``<output>.dist.csv``."""
    if cfg.epsilon is None:
        raise ValueError("--epsilon is required")
    g = _load(read_bigraph_text, cfg.input)
    res = quantum_exists_regularity(
        g, cfg.epsilon, m=cfg.m, shots=cfg.shots, rng=stream_seed(cfg.seed, "shots")
    )
    report = res.to_dict()
    report["m"] = res.m
    if g.nA + g.nB <= MAX_BRUTE_VARIABLES:
        truth, M = classical_exists(g, cfg.epsilon)
        report.update(classical_exists=truth, M=M, agreement=truth == res.exists)
    _write_text(cfg.output, _dumps(report))
    path = _curve_path(cfg, ".dist.csv")
    if path:
        _write_text(path, res.estimate.to_csv())
    return EXIT_OK


BENCH_HEADER = ["size", "solver", "seconds", "best_energy"]


def bench_rows(cfg: RunConfig) -> list[dict]:
    """Time each solver on one random ``G(size/2, size/2, 0.5)`` regularity QUBO per size.

    Exhaustive search is skipped above its size guard. A row whose solver
    ran out of ``time_budget`` has ``:truncated`` appended to its solver name.
    """
    rows = []
    base = cfg.solver_cfg()
    if cfg.time_budget is not None:
        base = base.replace(time_budget=cfg.time_budget)
    for size in sorted(set(int(s) for s in cfg.sizes)):
        if size < 2:
            raise ValueError(f"bench sizes must be >= 2, got {size}")
        rng = np.random.default_rng([stream_seed(cfg.seed, "bench"), size])
        nA = size // 2
        g = BipartiteGraph((rng.random((nA, size - nA)) < 0.5).astype(np.uint8))
        q = build_regularity_qubo(g)
        for name in cfg.solvers:
            if name == "exhaustive" and size > MAX_BRUTE_VARIABLES:
                continue
            solver = get_solver(name, endpoint=cfg.endpoint, inner=cfg.inner)
            t0 = time.perf_counter()
            res = solver(q, base)
            seconds = time.perf_counter() - t0
            label = name + (":truncated" if res.info.get("truncated") else "")
            rows.append({"size": size, "solver": label, "seconds": seconds, "best_energy": res.energy})
    return rows


def cmd_bench(cfg: RunConfig) -> int:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=BENCH_HEADER, lineterminator="\n")
    w.writeheader()
    for row in bench_rows(cfg):
        w.writerow({**row, "seconds": f"{row['seconds']:.6f}", "best_energy": repr(row["best_energy"])})
    _write_text(cfg.output, buf.getvalue())
    return EXIT_OK


COMMANDS = {
    "gen-sbm": (cmd_gen_sbm, "sample a planted SBM graph from a JSON parameter file"),
    "bipartize": (cmd_bipartize, "split a graph at random into a bipartite graph"),
    "check-regularity": (cmd_check_regularity, "decide epsilon-regularity of a bipartite graph"),
    "solve-qubo": (cmd_solve_qubo, "minimise a QUBO given as JSON"),
    "pan": (cmd_pan, "extract one community by panning"),
    "pan-all": (cmd_pan_all, "pan repeatedly until the stop rule fires"),
    "qexist": (cmd_qexist, "quantum existence check of an irregular subset pair"),
    "bench": (cmd_bench, "time the solvers across graph sizes"),
}


def _seed(text: str) -> int:
    if text == "random":
        seed = int(np.random.SeedSequence().generate_state(1)[0]) & 0x7FFFFFFF
        print(f"seed: {seed}", file=sys.stderr)
        return seed
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer or 'random', got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="szpan", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="subcommand", required=True)
    for name, (_, help_text) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--input", "-i", help="input file (default: stdin)")
        sp.add_argument("--output", "-o", help="output file or prefix (default: stdout)")
        sp.add_argument("--seed", type=_seed, default=None, help=f"integer or 'random' (default {DEFAULT_SEED})")
        sp.add_argument("--solver", choices=SOLVER_NAMES, default=None)
        sp.add_argument("--inner", choices=("exhaustive", "sa", "greedy"), default=None,
                        help="inner solver of the decomposed solver")
        sp.add_argument("--epsilon", type=float, default=None)
        sp.add_argument("--config", help="JSON file with RunConfig fields")
        sp.add_argument("--endpoint", help="base URL of a remote solver")
        sp.add_argument("-v", "--verbose", action="store_true")
        if name in ("pan-all",):
            sp.add_argument("--gap", type=float, default=None)
            sp.add_argument("--min-size", type=int, default=None)
        if name == "qexist":
            sp.add_argument("--m", type=int, default=None, help="phase register width")
            sp.add_argument("--shots", type=int, default=None, help="decide from sampled outcomes")
        if name == "bench":
            sp.add_argument("--sizes", type=int, nargs="+", default=None)
            sp.add_argument("--solvers", nargs="+", choices=SOLVER_NAMES, default=None)
            sp.add_argument("--time-budget", type=float, default=None)
    return p


def config_from_args(args: argparse.Namespace) -> RunConfig:
    """Defaults, then the ``--config`` file, then explicit flags."""
    values: dict = {}
    if args.config:
        text = _read_text(args.config)
        try:
            values = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"{args.config}: {exc}") from exc
        if not isinstance(values, dict):
            raise InputError(f"{args.config}: expected a JSON object")
    values["subcommand"] = args.subcommand
    for key in ("input", "output", "seed", "solver", "inner", "epsilon", "endpoint",
                "gap", "min_size", "m", "shots", "sizes", "solvers", "time_budget"):
        val = getattr(args, key, None)
        if val is not None:
            values[key] = val
    if args.subcommand == "check-regularity" and "solver" not in values:
        values["solver"] = "exhaustive"
    try:
        return RunConfig(**values)
    except TypeError as exc:
        raise InputError(f"bad config: {exc}") from exc


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        cfg = config_from_args(args)
        return COMMANDS[cfg.subcommand][0](cfg)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (SizeGuardError, QubitCapError) as exc:
        print(f"guard: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (ValueError, SolverError, SplitError, ZeroDivisionError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())

"""Community panning and the epsilon-regularity verdict.

Panning splits a graph at random into a bipartite graph, then keeps
replacing the current bipartite block by the sub-block that minimises
``L``. Each refinement is scored by its energy per node,
``min L / (|V1| |V2|)``, and the loop stops as soon as that score fails to
drop. The block from the last improving step is returned as the community.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Optional

import numpy as np

from .graph import BipartiteGraph, Graph, SubsetPair, random_split, remove_nodes
from .qubo import build_regularity_qubo
from .solvers import SolveResult, SolverConfig, solve_exhaustive, solve_sa

log = logging.getLogger(__name__)

TAO_CONSTANT = 1.0
# rounding noise on an all-selected block is ~1e-17 per node pair
EPN_TOL = 1e-12
SPLIT_STREAM = 0x5917
SOLVER_STREAM = 0x501E


def _stage_seed(seed: int, *path: int) -> int:
    return int(np.random.SeedSequence([seed, SOLVER_STREAM, *path]).generate_state(1)[0])


@dataclass
class Stage:
    n1: int
    n2: int
    density: float
    energy: float
    energy_per_node: float
    accepted: bool = True


@dataclass
class PanTrajectory:
    """Stage 0 is the random split itself (energy 0). Later stages are refinements."""

    stages: list[Stage]
    community: list
    chosen_stage: int
    warning: Optional[str] = None
    blocks: list[tuple[tuple, tuple]] = field(default_factory=list, repr=False)

    @property
    def energies_per_node(self) -> list[float]:
        return [s.energy_per_node for s in self.stages]

    @property
    def min_energy_per_node(self) -> float:
        return self.stages[self.chosen_stage].energy_per_node


def pan_once(
    g: Graph,
    solver: Callable = solve_sa,
    seed: int = 0,
    cfg: Optional[SolverConfig] = None,
    max_stages: int = 64,
) -> PanTrajectory:
    """One panning run on ``g``; returns the trajectory and the community (original node ids)."""
    if g.n < 4:
        raise ValueError(f"panning needs at least 4 nodes, got {g.n}")
    cfg = cfg or SolverConfig()
    split = random_split(g, [seed, SPLIT_STREAM])
    block = split.graph
    stages = [Stage(block.nA, block.nB, block.density, 0.0, 0.0)]
    blocks = [(block.labels_a, block.labels_b)]
    chosen, prev_epn, warning = 0, 0.0, None
    for t in range(1, max_stages + 1):
        q = build_regularity_qubo(block)
        res: SolveResult = solver(q, cfg.replace(seed=_stage_seed(seed, t)))
        pair = SubsetPair.from_assignment(res.assignment, block.nA)
        n1, n2 = pair.sizes
        if n1 == 0 or n2 == 0:
            warning = f"stage {t}: solver returned an empty selection"
            log.info(warning)
            break
        sub = block.induced(pair)
        epn = res.energy / (n1 * n2)
        improved = epn < prev_epn - EPN_TOL
        stages.append(Stage(n1, n2, sub.density, res.energy, epn, improved))
        blocks.append((sub.labels_a, sub.labels_b))
        if not improved:
            break
        chosen, prev_epn, block = t, epn, sub
    else:
        warning = f"stopped after max_stages={max_stages}"
    labels_a, labels_b = blocks[chosen]
    return PanTrajectory(stages, list(labels_a) + list(labels_b), chosen, warning, blocks)


@dataclass
class PanRound:
    round: int
    energy_per_node: float
    community_size: int
    remaining: int
    trajectory: PanTrajectory = field(repr=False)


@dataclass
class PanAllResult:
    communities: list[list]
    rounds: list[PanRound]
    stop_reason: str


@dataclass(frozen=True)
class StopRule:
    """When :func:`pan_all` stops.

    ``gap``: stop once a round's energy per node rises by more than this
    fraction of the previous round's magnitude; that round's output is
    discarded and the remaining nodes form the last community.
    ``min_size``: stop when fewer nodes than this remain.
    """

    gap: float = 0.5
    min_size: int = 3
    max_rounds: int = 100


def relative_jump(prev: float, cur: float) -> float:
    """Increase from ``prev`` to ``cur`` relative to ``|prev|`` (inf if ``prev`` is 0)."""
    if prev == 0:
        return 0.0 if cur == prev else math.inf
    return (cur - prev) / abs(prev)


def pan_all(
    g: Graph,
    solver: Callable = solve_sa,
    seed: int = 0,
    stop: StopRule = StopRule(),
    cfg: Optional[SolverConfig] = None,
) -> PanAllResult:
    """Pan repeatedly, deleting each found community, until a stop rule fires."""
    if g.n == 0:
        raise ValueError("cannot pan an empty graph")
    communities, rounds = [], []
    rest = g
    reason = "max_rounds"
    for r in range(1, stop.max_rounds + 1):
        if rest.n < max(stop.min_size, 4):
            reason = "min_size"
            break
        traj = pan_once(rest, solver, seed=_stage_seed(seed, r, 0) % (1 << 31), cfg=cfg)
        epn = traj.min_energy_per_node
        rounds.append(PanRound(r, epn, len(traj.community), rest.n, traj))
        if len(rounds) > 1 and relative_jump(rounds[-2].energy_per_node, epn) > stop.gap:
            reason = "gap"
            break
        if len(traj.community) == rest.n:
            reason = "all_remaining"
            break
        communities.append(traj.community)
        rest = remove_nodes(rest, traj.community)
    if rest.n:
        communities.append(list(rest.node_ids))
    return PanAllResult(communities, rounds, reason)


@dataclass
class RegularityVerdict:
    epsilon: float
    min_L: float
    max_L: float
    is_regular: bool
    witness: SubsetPair
    exact: bool
    nA: int
    nB: int

    @property
    def label(self) -> str:
        if self.exact:
            return "exact"
        return "lower-bound witness"

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "min_L": self.min_L,
            "max_L": self.max_L,
            "threshold": self.epsilon * TAO_CONSTANT * self.nA * self.nB,
            "is_regular": self.is_regular,
            "verdict": self.label,
            "witness": {
                "X": np.flatnonzero(self.witness.X).tolist(),
                "Y": np.flatnonzero(self.witness.Y).tolist(),
            },
        }


def check_regularity(
    g: BipartiteGraph,
    epsilon: float,
    solver: Callable = solve_exhaustive,
    cfg: Optional[SolverConfig] = None,
) -> RegularityVerdict:
    """Decide ``max(|min L|, |max L|) <= epsilon |A||B|``.

    Both the minimising and the maximising QUBO are solved. With a
    heuristic solver a found violation is real but "regular" only means
    none was found, so the verdict is marked as a lower-bound witness.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    cfg = cfg or SolverConfig()
    lo = solver(build_regularity_qubo(g, "minimize"), cfg)
    hi = solver(build_regularity_qubo(g, "maximize"), cfg)
    min_L, max_L = lo.energy, -hi.energy
    if abs(min_L) >= abs(max_L):
        witness = SubsetPair.from_assignment(lo.assignment, g.nA)
    else:
        witness = SubsetPair.from_assignment(hi.assignment, g.nA)
    bound = epsilon * TAO_CONSTANT * g.nA * g.nB
    exact = _is_exact(solver)
    return RegularityVerdict(epsilon, min_L, max_L, max(abs(min_L), abs(max_L)) <= bound, witness, exact, g.nA, g.nB)


def _is_exact(solver) -> bool:
    base = solver.func if isinstance(solver, partial) else solver
    return base is solve_exhaustive


def stage_density_curve(t: PanTrajectory, include_rejected: bool = False) -> list[dict]:
    """Rows ``stage, density, energy, energy_per_node`` up to the chosen stage."""
    last = len(t.stages) - 1 if include_rejected else t.chosen_stage
    return [
        {"stage": i, "density": s.density, "energy": s.energy, "energy_per_node": s.energy_per_node}
        for i, s in enumerate(t.stages[: last + 1])
    ]


def round_curve(result: PanAllResult) -> list[dict]:
    return [
        {"round": r.round, "energy_per_node": r.energy_per_node, "community_size": r.community_size}
        for r in result.rounds
    ]


def to_csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({c: (repr(row[c]) if isinstance(row[c], float) else row[c]) for c in columns})
    return buf.getvalue()


def read_csv(text: str) -> list[dict]:
    rows = []
    for row in csv.DictReader(io.StringIO(text)):
        rows.append({k: (int(v) if v.lstrip("-").isdigit() else float(v)) for k, v in row.items()})
    return rows

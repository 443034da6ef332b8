"""Large-neighbourhood search that hands small clamped subproblems to an inner solver."""

from __future__ import annotations

import time

import numpy as np

from ..qubo import QuboProblem, flip_deltas
from .anneal import solve_greedy
from .base import SolveResult, Solver, SolverConfig, SolverError, checked_sample
from .exhaustive import solve_exhaustive

DECOMP_STREAM = 0xDEC0


def clamp(q: QuboProblem, s: np.ndarray, free: np.ndarray) -> QuboProblem:
    """Subproblem over the ``free`` variables with the rest fixed at ``s``.

    The subproblem's energy at ``t`` equals ``q``'s energy at ``s`` with
    ``s[free] = t``; the clamped part is absorbed into the offset.
    """
    free = np.sort(np.asarray(free))
    fixed = np.setdiff1d(np.arange(q.n), free)
    sf = s[fixed].astype(np.float64)
    W = q.couplings
    lin = q.linear[free] + W[np.ix_(free, fixed)] @ sf
    quad = q.quadratic[np.ix_(free, free)]
    offset = q.offset + q.linear[fixed] @ sf + sf @ q.quadratic[np.ix_(fixed, fixed)] @ sf
    return QuboProblem(lin, quad, offset)


def solve_decomposed(q: QuboProblem, cfg: SolverConfig | None = None, inner: Solver = solve_exhaustive) -> SolveResult:
    """qbsolv-style decomposition.

    Starts from the best greedy descent, then repeats passes: variables
    are ranked by ``|dE|`` of flipping them at the incumbent (ties broken
    by a seeded shuffle) and cut into consecutive blocks of
    ``cfg.subproblem_size``; each block is re-optimised by ``inner`` with
    everything else clamped and kept if it is strictly better. Stops after
    a pass without improvement, after ``cfg.max_passes`` passes, or when
    ``cfg.time_budget`` runs out. ``energy_history`` holds the incumbent
    energy at the start and after every pass.
    """
    cfg = cfg or SolverConfig()
    t0 = time.perf_counter()
    size = cfg.subproblem_size
    if q.n <= size:
        return inner(q, cfg)
    deadline = None if cfg.time_budget is None else t0 + cfg.time_budget
    start = solve_greedy(q, cfg)
    s = start.assignment.astype(np.int8).copy()
    current = start.energy
    history = [current]
    evaluations = start.evaluations
    rng = np.random.default_rng([cfg.seed, DECOMP_STREAM])
    truncated = False
    passes = 0
    while passes < cfg.max_passes:
        passes += 1
        impact = np.abs(flip_deltas(q, s))
        shuffled = rng.permutation(q.n)
        order = shuffled[np.argsort(-impact[shuffled], kind="stable")]
        improved = False
        for b0 in range(0, q.n, size):
            block = np.sort(order[b0:b0 + size])
            sub = clamp(q, s, block)
            try:
                res = inner(sub, cfg)
            except Exception as exc:
                raise SolverError(f"inner solver failed on pass {passes}: {exc}") from exc
            evaluations += res.evaluations
            if res.energy < current - 1e-9 * max(1.0, abs(current)):
                trial = s.copy()
                trial[block] = res.assignment
                s = trial
                current = checked_sample(q, s).energy
                improved = True
            if deadline is not None and time.perf_counter() > deadline:
                truncated = True
                break
        history.append(current)
        if truncated or not improved:
            break
    return SolveResult(
        checked_sample(q, s),
        energy_history=history,
        evaluations=evaluations,
        wall_time=time.perf_counter() - t0,
        info={"solver": "decomposed", "passes": passes, "truncated": truncated, "initial_energy": start.energy},
    )

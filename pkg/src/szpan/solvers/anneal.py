"""Single-bit-flip simulated annealing and steepest-descent baselines.

Both keep a vector of local fields ``f_i = h_i + sum_j W_ij s_j`` so that
the cost of flipping bit ``i`` is ``(1 - 2 s_i) f_i`` in O(1); an accepted
flip updates the fields in O(n).
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor

import numba
import numpy as np

from ..qubo import QuboProblem, flip_deltas
from .base import SolveResult, SolverConfig, SolverError, checked_sample, restart_rng

SWEEP_CHUNK = 100


@numba.njit(cache=True, nogil=True)
def _anneal_chunk(W, s, field, temps, uniforms, state, best_s):
    """Metropolis sweeps over ``temps``; ``state`` is ``[energy, best_energy]``."""
    n = s.shape[0]
    e = state[0]
    best_e = state[1]
    for k in range(temps.shape[0]):
        beta = 1.0 / temps[k]
        for i in range(n):
            de = (1 - 2 * s[i]) * field[i]
            if de <= 0.0 or uniforms[k, i] < math.exp(-beta * de):
                step = 1 - 2 * s[i]
                s[i] = 1 - s[i]
                for j in range(n):
                    field[j] += W[j, i] * step
                e += de
                if e < best_e:
                    best_e = e
                    best_s[:] = s
    state[0] = e
    state[1] = best_e


@numba.njit(cache=True, nogil=True)
def _steepest_descent(W, s, field, tol):
    n = s.shape[0]
    flips = 0
    while True:
        best_i = -1
        best_de = -tol
        for i in range(n):
            de = (1 - 2 * s[i]) * field[i]
            if de < best_de:
                best_de = de
                best_i = i
        if best_i < 0:
            return flips
        step = 1 - 2 * s[best_i]
        s[best_i] = 1 - s[best_i]
        for j in range(n):
            field[j] += W[j, best_i] * step
        flips += 1


def _fields(q: QuboProblem, W: np.ndarray, s: np.ndarray) -> np.ndarray:
    return q.linear + W @ s


def _anneal_restart(q: QuboProblem, W: np.ndarray, temps: np.ndarray, cfg: SolverConfig, r: int, deadline):
    rng = restart_rng(cfg.seed, r)
    s = rng.integers(0, 2, q.n).astype(np.float64)
    field = _fields(q, W, s)
    e0 = q.offset + q.linear @ s + s @ q.quadratic @ s
    state = np.array([e0, e0])
    best_s = s.copy()
    evaluations = 0
    truncated = False
    for k0 in range(0, temps.shape[0], SWEEP_CHUNK):
        k1 = min(temps.shape[0], k0 + SWEEP_CHUNK)
        uniforms = rng.random((k1 - k0, q.n))
        _anneal_chunk(W, s, field, temps[k0:k1], uniforms, state, best_s)
        evaluations += (k1 - k0) * q.n
        if cfg.debug:
            fresh = _fields(q, W, s)
            if not np.allclose(field, fresh, rtol=0.0, atol=1e-9 * max(1.0, np.abs(fresh).max(initial=0.0))):
                raise SolverError(f"local fields drifted in restart {r} after {k1} sweeps")
        if deadline is not None and time.perf_counter() > deadline and k1 < temps.shape[0]:
            truncated = True
            break
    return best_s.astype(np.int8), e0, evaluations, truncated


def _reduce(q: QuboProblem, runs, name: str, t0: float, **info) -> SolveResult:
    samples = [checked_sample(q, run[0]) for run in runs]
    history = [smp.energy for smp in samples]
    # lowest energy, earliest restart on ties
    best = min(range(len(samples)), key=lambda r: (history[r], r))
    return SolveResult(
        samples[best],
        energy_history=history,
        evaluations=sum(run[2] for run in runs),
        wall_time=time.perf_counter() - t0,
        info={
            "solver": name,
            "best_restart": best,
            "initial_energies": [float(run[1]) for run in runs],
            "truncated": any(run[3] for run in runs),
            **info,
        },
    )


def _run_restarts(fn, cfg: SolverConfig):
    if cfg.workers == 1:
        return [fn(r) for r in range(cfg.num_restarts)]
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        return list(pool.map(fn, range(cfg.num_restarts)))


def solve_sa(q: QuboProblem, cfg: SolverConfig | None = None) -> SolveResult:
    """Simulated annealing with geometric cooling and ``cfg.num_restarts`` restarts.

    Restart ``r`` draws its start state and acceptance uniforms from the
    stream seeded by ``(cfg.seed, r)``, so results do not depend on
    ``cfg.workers``.
    """
    cfg = cfg or SolverConfig()
    t0 = time.perf_counter()
    if q.n < 1:
        raise SolverError("simulated annealing needs at least one variable")
    temps = cfg.temperatures(q)
    W = np.ascontiguousarray(q.couplings)
    deadline = None if cfg.time_budget is None else t0 + cfg.time_budget
    runs = _run_restarts(lambda r: _anneal_restart(q, W, temps, cfg, r, deadline), cfg)
    return _reduce(q, runs, "sa", t0, t_start=float(temps[0]), t_end=float(temps[-1]))


def descend(q: QuboProblem, s0, W: np.ndarray | None = None) -> tuple[np.ndarray, int]:
    """Steepest single-flip descent from ``s0`` to a local minimum."""
    W = np.ascontiguousarray(q.couplings) if W is None else W
    s = np.asarray(s0, dtype=np.float64).copy()
    field = _fields(q, W, s)
    flips = _steepest_descent(W, s, field, 1e-12 * max(1.0, q.max_abs_coefficient()))
    return s.astype(np.int8), flips


def solve_greedy(q: QuboProblem, cfg: SolverConfig | None = None) -> SolveResult:
    """Steepest descent from ``cfg.num_restarts`` random starts.

    Each restart uses the same start state that :func:`solve_sa` would draw
    for that restart.
    """
    cfg = cfg or SolverConfig()
    t0 = time.perf_counter()
    W = np.ascontiguousarray(q.couplings)

    def run(r):
        rng = restart_rng(cfg.seed, r)
        s0 = rng.integers(0, 2, q.n)
        e0 = q.offset + q.linear @ s0 + s0 @ q.quadratic @ s0
        s, flips = descend(q, s0, W)
        return s, e0, (flips + 1) * q.n, False

    return _reduce(q, _run_restarts(run, cfg), "greedy", t0)


def is_local_minimum(q: QuboProblem, s, tol: float = 1e-9) -> bool:
    """True when no single flip lowers the energy by more than ``tol``."""
    return bool((flip_deltas(q, s) >= -tol * max(1.0, q.max_abs_coefficient())).all())

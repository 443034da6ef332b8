from __future__ import annotations

import time

import numpy as np

from ..graph import MAX_BRUTE_VARIABLES, SizeGuardError, beats, first_min, subset_bits
from ..qubo import QuboProblem
from .base import SolveResult, SolverConfig, checked_sample


def solve_exhaustive(q: QuboProblem, cfg: SolverConfig | None = None, chunk: int = 1 << 21) -> SolveResult:
    """Global minimum by enumerating all ``2**n`` assignments.

    Assignment ``k`` has bit ``i`` equal to ``s_i``. Energies within a
    relative 1e-9 of each other are treated as tied and the lowest ``k``
    wins. The low and high halves of the variables are enumerated
    separately and combined blockwise, so no ``2**n x n`` matrix is formed.
    """
    t0 = time.perf_counter()
    n = q.n
    if n > MAX_BRUTE_VARIABLES:
        raise SizeGuardError(f"exhaustive search over {n} variables exceeds {MAX_BRUTE_VARIABLES}")
    lo = min(n, 12)
    hi = n - lo
    J, h = q.quadratic, q.linear
    s_lo, s_hi = subset_bits(lo), subset_bits(hi)
    e_lo = q.offset + s_lo @ h[:lo] + np.einsum("ki,ij,kj->k", s_lo, J[:lo, :lo], s_lo)
    e_hi = s_hi @ h[lo:] + np.einsum("ki,ij,kj->k", s_hi, J[lo:, lo:], s_hi)
    cross = s_hi @ J[:lo, lo:].T  # (2**hi, lo)
    rows = max(1, chunk >> lo)
    best_val, best_idx = np.inf, 0
    for r0 in range(0, 1 << hi, rows):
        r1 = min(1 << hi, r0 + rows)
        block = e_hi[r0:r1, None] + e_lo[None, :] + cross[r0:r1] @ s_lo.T
        k = first_min(block)
        v = block.flat[k]
        if beats(v, best_val):
            best_val, best_idx = float(v), (r0 << lo) + k
    bits = (best_idx >> np.arange(n)) & 1
    best = checked_sample(q, bits)
    return SolveResult(
        best,
        energy_history=[best.energy],
        evaluations=1 << n,
        wall_time=time.perf_counter() - t0,
        info={"solver": "exhaustive", "index": best_idx},
    )

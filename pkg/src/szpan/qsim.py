"""Exact statevector simulation of Grover search, the QFT and phase estimation.

Basis index ``k`` of a ``q``-qubit register has qubit ``j`` equal to bit
``j`` of ``k`` (little endian). The QFT uses the kernel
``exp(+2 pi i a k / N) / sqrt(N)``; the inverse uses the conjugate.

Unitaries used by :func:`phase_estimate` are handles with
``apply(batch)`` acting on the last axis of a ``(rows, dim)`` array and
an optional ``power(batch, k)`` fast path.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Protocol

import numpy as np

from .graph import BipartiteGraph, all_L

QUBIT_CAP = 22
NORM_TOL = 1e-10


class QubitCapError(ValueError):
    """More qubits requested than the simulator cap allows."""


def _check_cap(q: int, cap: int = QUBIT_CAP) -> None:
    if q > cap:
        raise QubitCapError(f"{q} qubits exceeds the cap of {cap}")


@dataclass(frozen=True, eq=False)
class StateVector:
    q: int
    amplitudes: np.ndarray

    def __post_init__(self):
        _check_cap(self.q)
        amp = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        if amp.shape != (1 << self.q,):
            raise ValueError(f"{amp.size} amplitudes for {self.q} qubits")
        norm = float(np.vdot(amp, amp).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalised: sum |z|^2 = {norm!r}")
        amp.setflags(write=False)
        object.__setattr__(self, "amplitudes", amp)

    @classmethod
    def basis(cls, q: int, index: int) -> "StateVector":
        _check_cap(q)
        amp = np.zeros(1 << q, dtype=np.complex128)
        amp[index] = 1.0
        return cls(q, amp)

    @property
    def dim(self) -> int:
        return 1 << self.q

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def sample(self, shots: int, rng=None) -> np.ndarray:
        """Outcome counts from ``shots`` measurements in the computational basis."""
        p = self.probabilities()
        return np.random.default_rng(rng).multinomial(shots, p / p.sum())


def uniform_state(q: int) -> StateVector:
    _check_cap(q)
    n = 1 << q
    return StateVector(q, np.full(n, 1.0 / math.sqrt(n), dtype=np.complex128))


class Unitary(Protocol):
    dim: int

    def apply(self, batch: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True, eq=False)
class GroverInstance:
    """Search space of ``2**q`` items; ``marked`` is a bool mask, index list or predicate."""

    q: int
    marked: np.ndarray

    def __post_init__(self):
        _check_cap(self.q)
        n = 1 << self.q
        m = self.marked
        if callable(m):
            mask = np.fromiter((bool(m(k)) for k in range(n)), dtype=bool, count=n)
        else:
            arr = np.asarray(m)
            if arr.dtype == bool:
                mask = arr.reshape(-1).copy()
            else:
                mask = np.zeros(n, dtype=bool)
                mask[arr.astype(np.int64).reshape(-1)] = True
        if mask.shape != (n,):
            raise ValueError(f"mask of length {mask.size} for N = {n}")
        mask.setflags(write=False)
        object.__setattr__(self, "marked", mask)

    @property
    def N(self) -> int:
        return 1 << self.q

    @property
    def M(self) -> int:
        return int(self.marked.sum())

    @property
    def theta(self) -> float:
        """Rotation angle ``2 arcsin(sqrt(M / N))`` of one iterate."""
        return 2.0 * math.asin(math.sqrt(self.M / self.N))


class GroverOperator:
    """``U = R_D R_f``: negate marked amplitudes, then reflect about the uniform state."""

    def __init__(self, inst: GroverInstance):
        self.inst = inst
        self.dim = inst.N
        self.applications = 0

    def apply(self, batch: np.ndarray) -> np.ndarray:
        self.applications += 1
        out = np.array(batch, dtype=np.complex128)
        out[..., self.inst.marked] *= -1
        return 2.0 * out.mean(axis=-1, keepdims=True) - out

    def power(self, batch: np.ndarray, k: int) -> np.ndarray:
        """``U**k`` applied exactly without ``k`` sweeps.

        ``U`` rotates the plane spanned by the uniform superpositions of the
        marked and unmarked items. On zero-sum vectors supported on marked
        items it acts as ``+1``, and on those supported on unmarked items as ``-1``.
        """
        batch = np.asarray(batch, dtype=np.complex128)
        mask = self.inst.marked
        basis = [v for v in (mask, ~mask) if v.any()]
        vecs = np.stack([v / math.sqrt(v.sum()) for v in basis]).astype(np.complex128)
        step = np.array([vecs @ np.asarray(u) for u in GroverOperator(self.inst).apply(vecs)]).T
        coords = batch @ vecs.T
        rest = batch - coords @ vecs
        rest[..., ~mask] *= (-1) ** k
        return coords @ np.linalg.matrix_power(step, k).T @ vecs + rest


def grover_iterate(s: StateVector, inst: GroverInstance) -> StateVector:
    if s.q != inst.q:
        raise ValueError(f"state has {s.q} qubits, instance has {inst.q}")
    return StateVector(s.q, GroverOperator(inst).apply(s.amplitudes))


def marked_probability(s: StateVector, inst: GroverInstance) -> float:
    return float(s.probabilities()[inst.marked].sum())


def rotation_probability(inst: GroverInstance, t: int) -> float:
    """Closed form ``sin^2((2t + 1) theta / 2)`` of finding a marked item after ``t`` iterates."""
    return math.sin((2 * t + 1) * inst.theta / 2) ** 2


def default_iterations(N: int, M: int) -> int:
    if M < 1:
        raise ValueError("the default iteration count needs M >= 1")
    return int(math.floor(math.pi / 4 * math.sqrt(N / M)))


def grover_search(inst: GroverInstance, t: Optional[int] = None) -> tuple[np.ndarray, int]:
    """Exact outcome distribution after ``t`` iterates from the uniform state."""
    if t is None:
        if inst.M == 0:
            raise ValueError("no marked items: supply the iteration count explicitly")
        t = default_iterations(inst.N, inst.M)
    if t < 0:
        raise ValueError(f"iteration count must be >= 0, got {t}")
    op = GroverOperator(inst)
    amp = uniform_state(inst.q).amplitudes.copy()
    for _ in range(t):
        amp = op.apply(amp)
    return np.abs(amp) ** 2, t


def _qft_axis0(arr: np.ndarray, n: int, inverse: bool) -> np.ndarray:
    """QFT over axis 0 (length ``2**n``) built from H, controlled phases and a bit reversal."""
    rest = arr.shape[1:]
    t = np.array(arr, dtype=np.complex128).reshape((2,) * n + rest)
    sign = -1.0 if inverse else 1.0
    h = 1.0 / math.sqrt(2.0)
    # axis 0 of the tensor is the most significant bit
    for a in range(n):
        lo = t.take(0, axis=a)
        hi = t.take(1, axis=a)
        t = np.stack([(lo + hi) * h, (lo - hi) * h], axis=a)
        for b in range(a + 1, n):
            idx = [slice(None)] * t.ndim
            idx[a] = 1
            idx[b] = 1
            t[tuple(idx)] *= np.exp(sign * 2j * math.pi / (1 << (b - a + 1)))
    order = list(range(n - 1, -1, -1)) + list(range(n, t.ndim))
    return t.transpose(order).reshape((1 << n,) + rest)


def qft(s: StateVector) -> StateVector:
    return StateVector(s.q, _qft_axis0(s.amplitudes, s.q, inverse=False))


def iqft(s: StateVector) -> StateVector:
    return StateVector(s.q, _qft_axis0(s.amplitudes, s.q, inverse=True))


def dft_matrix(q: int) -> np.ndarray:
    """Explicit unitary DFT matrix with kernel ``exp(+2 pi i a k / N)``."""
    n = 1 << q
    a = np.arange(n)
    return np.exp(2j * np.pi * np.outer(a, a) / n) / math.sqrt(n)


class MatrixUnitary:
    """Any explicit unitary matrix as a phase-estimation handle."""

    def __init__(self, matrix, tol: float = 1e-9):
        U = np.asarray(matrix, dtype=np.complex128)
        if U.ndim != 2 or U.shape[0] != U.shape[1]:
            raise ValueError("unitary must be a square matrix")
        if not np.allclose(U.conj().T @ U, np.eye(U.shape[0]), atol=tol):
            raise ValueError("matrix is not unitary")
        self.matrix = U
        self.dim = U.shape[0]
        self.applications = 0

    def apply(self, batch: np.ndarray) -> np.ndarray:
        self.applications += 1
        return np.asarray(batch, dtype=np.complex128) @ self.matrix.T

    def power(self, batch: np.ndarray, k: int) -> np.ndarray:
        return np.asarray(batch, dtype=np.complex128) @ np.linalg.matrix_power(self.matrix, k).T


def phase_unitary(theta: float) -> MatrixUnitary:
    """``diag(1, exp(i theta))``; ``|1>`` is the eigenstate with phase ``theta``."""
    return MatrixUnitary(np.diag([1.0, np.exp(1j * theta)]))


@dataclass
class PhaseEstimate:
    m: int
    distribution: np.ndarray
    ops_count: int = 0

    def __post_init__(self):
        total = float(self.distribution.sum())
        if abs(total - 1.0) > NORM_TOL:
            raise ValueError(f"distribution sums to {total!r}")

    @property
    def modal(self) -> int:
        return int(np.argmax(self.distribution))

    @property
    def theta_hat(self) -> float:
        return 2.0 * math.pi * self.modal / (1 << self.m)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["outcome", "probability"])
        for a, p in enumerate(self.distribution):
            w.writerow([a, repr(float(p))])
        return buf.getvalue()


def read_distribution_csv(text: str) -> np.ndarray:
    rows = list(csv.DictReader(io.StringIO(text)))
    out = np.zeros(len(rows))
    for r in rows:
        out[int(r["outcome"])] = float(r["probability"])
    return out


def phase_estimate(unitary, state, m: int, fast: bool = False) -> PhaseEstimate:
    """Exact phase-estimation distribution over an ``m``-bit register.

    Row ``a`` of the joint ``(2**m, dim)`` state holds the system after the
    controlled powers selected by the bits of ``a``. Controlled ``U**(2**j)``
    is ``2**j`` applications of ``U`` unless ``fast`` uses ``unitary.power``;
    ``ops_count`` is ``2**m - 1`` either way.
    """
    if m < 1:
        raise ValueError(f"register width must be >= 1, got {m}")
    psi = state.amplitudes if isinstance(state, StateVector) else np.asarray(state, dtype=np.complex128)
    dim = psi.shape[0]
    if dim != unitary.dim:
        raise ValueError(f"state dimension {dim} does not match unitary dimension {unitary.dim}")
    _check_cap(m + max(0, (dim - 1).bit_length()))
    rows = np.tile(psi / math.sqrt(1 << m), (1 << m, 1))
    ops = 0
    for j in range(m):
        sel = (np.arange(1 << m) >> j) & 1 == 1
        block = rows[sel]
        if fast:
            block = unitary.power(block, 1 << j)
        else:
            for _ in range(1 << j):
                block = unitary.apply(block)
        rows[sel] = block
        ops += 1 << j
    rows = _qft_axis0(rows, m, inverse=True)
    dist = (np.abs(rows) ** 2).sum(axis=1)
    return PhaseEstimate(m, dist, ops)


def default_register_width(n: int) -> int:
    """``ceil(n / 2) + 1`` bits, so that ``P(a=0) < 1/2`` whenever ``M >= 1``."""
    return math.ceil(n / 2) + 1


def marked_pairs(g: BipartiteGraph, epsilon: float) -> np.ndarray:
    """Mask over subset-pair indices with ``|L| > epsilon nA nB``."""
    return np.abs(all_L(g)) > epsilon * g.nA * g.nB


@dataclass
class ExistenceResult:
    exists: bool
    M_estimate: float
    theta_hat: float
    ops_count: int
    p_zero: float
    m: int
    estimate: PhaseEstimate = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "exists": self.exists,
            "M_estimate": self.M_estimate,
            "theta_hat": self.theta_hat,
            "ops_count": self.ops_count,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def quantum_exists_regularity(
    g: BipartiteGraph,
    epsilon: float,
    m: Optional[int] = None,
    fast: bool = False,
    shots: Optional[int] = None,
    rng=None,
) -> ExistenceResult:
    """Decide whether some subset pair has ``|L| > epsilon nA nB`` by phase-estimating Grover's operator.

    No marked pair makes ``U`` act as the identity on the uniform state, so
    outcome 0 has probability 1; the decision is ``exists = not P(a=0) > 1/2``.
    With ``shots`` the probability is estimated from sampled outcomes.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    n = g.nA + g.nB
    m = default_register_width(n) if m is None else m
    _check_cap(n + m)
    inst = GroverInstance(n, marked_pairs(g, epsilon))
    est = phase_estimate(GroverOperator(inst), uniform_state(n), m, fast=fast)
    if shots is None:
        p_zero = float(est.distribution[0])
        modal = est.modal
    else:
        counts = np.random.default_rng(rng).multinomial(shots, est.distribution / est.distribution.sum())
        p_zero = counts[0] / shots
        modal = int(np.argmax(counts))
    theta = 2.0 * math.pi * modal / (1 << m)
    if theta > math.pi:
        theta = 2.0 * math.pi - theta
    return ExistenceResult(
        exists=not p_zero > 0.5,
        M_estimate=inst.N * math.sin(theta / 2) ** 2,
        theta_hat=theta,
        ops_count=est.ops_count,
        p_zero=p_zero,
        m=m,
        estimate=est,
    )


def classical_exists(g: BipartiteGraph, epsilon: float) -> tuple[bool, int]:
    """Brute-force truth: whether any pair is marked, and how many are."""
    M = int(marked_pairs(g, epsilon).sum())
    return M > 0, M

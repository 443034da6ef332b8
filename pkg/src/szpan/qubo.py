"""Binary quadratic models: the regularity QUBO and its Ising image.

A :class:`QuboProblem` over bits ``s`` has energy::

    offset + sum_i linear[i] s_i + sum_{i<j} quadratic[i, j] s_i s_j

``quadratic`` is kept as a dense strictly upper-triangular matrix, each
unordered pair stored once. Ising problems use the same layout over
spins ``sigma = 2 s - 1``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .graph import BipartiteGraph, GraphError

Sense = Literal["minimize", "maximize"]


class QuboFormatError(ValueError):
    """Bad coefficients, bad JSON, or an assignment of the wrong shape."""


def _upper(n: int, quadratic) -> np.ndarray:
    """Fold any square matrix into strictly-upper form; diagonal is returned separately."""
    m = np.array(quadratic, dtype=np.float64, copy=True)
    if m.shape != (n, n):
        raise QuboFormatError(f"quadratic must be {n}x{n}, got {m.shape}")
    diag = np.diagonal(m).copy()
    upper = np.triu(m, 1) + np.tril(m, -1).T
    return upper, diag


@dataclass(frozen=True, eq=False)
class _Quadratic:
    linear: np.ndarray
    quadratic: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        h = np.array(self.linear, dtype=np.float64, copy=True).reshape(-1)
        n = h.shape[0]
        J, diag = _upper(n, np.zeros((n, n)) if self.quadratic is None else self.quadratic)
        h = h + self._fold_diagonal(diag)
        if not (np.isfinite(h).all() and np.isfinite(J).all() and np.isfinite(self.offset)):
            raise QuboFormatError("coefficients must be finite")
        h.setflags(write=False)
        J.setflags(write=False)
        object.__setattr__(self, "linear", h)
        object.__setattr__(self, "quadratic", J)
        object.__setattr__(self, "offset", float(self.offset))

    def _fold_diagonal(self, diag):
        return diag

    @property
    def n(self) -> int:
        return self.linear.shape[0]

    @property
    def couplings(self) -> np.ndarray:
        """Symmetric coupling matrix with zero diagonal."""
        return self.quadratic + self.quadratic.T

    def max_abs_coefficient(self) -> float:
        vals = np.concatenate([np.abs(self.linear), np.abs(self.quadratic).ravel()])
        return float(vals.max()) if vals.size else 0.0

    def __eq__(self, other):
        return (
            type(self) is type(other)
            and np.array_equal(self.linear, other.linear)
            and np.array_equal(self.quadratic, other.quadratic)
            and self.offset == other.offset
        )

    __hash__ = None


class QuboProblem(_Quadratic):
    """Minimize ``offset + h.s + s^T J s`` over ``s`` in ``{0,1}^n``.

    A diagonal in ``quadratic`` is moved into ``linear`` since ``s_i**2 = s_i``.
    """

    @classmethod
    def zeros(cls, n: int) -> "QuboProblem":
        return cls(np.zeros(n), np.zeros((n, n)))

    def to_dict(self) -> dict:
        iu, ju = np.nonzero(self.quadratic)
        return {
            "n": self.n,
            "linear": self.linear.tolist(),
            "quadratic": [[int(i), int(j), float(self.quadratic[i, j])] for i, j in zip(iu, ju)],
            "offset": self.offset,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "QuboProblem":
        try:
            n = int(data["n"])
            linear = np.zeros(n) if data.get("linear") is None else np.asarray(data["linear"], float)
            if linear.shape != (n,):
                raise QuboFormatError(f"linear has {linear.size} entries, expected {n}")
            quad = np.zeros((n, n))
            for entry in data.get("quadratic", []):
                i, j, v = entry
                i, j = int(i), int(j)
                if not (0 <= i < n and 0 <= j < n):
                    raise QuboFormatError(f"quadratic index ({i}, {j}) out of range")
                quad[min(i, j), max(i, j)] += float(v)
            return cls(linear, quad, float(data.get("offset", 0.0)))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, QuboFormatError):
                raise
            raise QuboFormatError(f"malformed QUBO: {exc}") from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "QuboProblem":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise QuboFormatError(f"invalid JSON: {exc}") from exc


class IsingProblem(_Quadratic):
    """Minimize ``offset + h.sigma + sigma^T J sigma`` over spins ``sigma`` in ``{-1,+1}^n``."""

    def _fold_diagonal(self, diag):
        # sigma_i**2 == 1: a diagonal coupling is a constant, not a field
        object.__setattr__(self, "offset", float(self.offset) + float(np.sum(diag)))
        return np.zeros_like(diag)

    @property
    def h(self) -> np.ndarray:
        return self.linear

    @property
    def J(self) -> np.ndarray:
        return self.quadratic


@dataclass(frozen=True, eq=False)
class Sample:
    assignment: np.ndarray
    energy: float

    def __post_init__(self):
        a = np.asarray(self.assignment, dtype=np.int8).copy()
        a.setflags(write=False)
        object.__setattr__(self, "assignment", a)
        object.__setattr__(self, "energy", float(self.energy))

    def __eq__(self, other):
        if not isinstance(other, Sample):
            return NotImplemented
        return np.array_equal(self.assignment, other.assignment) and self.energy == other.energy

    __hash__ = None


def _bits(q: _Quadratic, s) -> np.ndarray:
    s = np.asarray(s)
    if s.shape != (q.n,):
        raise QuboFormatError(f"assignment has shape {s.shape}, expected ({q.n},)")
    if not np.isin(s, (0, 1)).all():
        raise QuboFormatError("assignment entries must be 0/1")
    return s.astype(np.float64)


def energy(q: QuboProblem, s: Sequence[int]) -> float:
    x = _bits(q, s)
    return float(q.offset + q.linear @ x + x @ q.quadratic @ x)


def energies(q: QuboProblem, S: np.ndarray) -> np.ndarray:
    """Energies of the rows of a ``(k, n)`` 0/1 matrix."""
    S = np.asarray(S, dtype=np.float64)
    return q.offset + S @ q.linear + np.einsum("ki,ij,kj->k", S, q.quadratic, S)


def flip_deltas(q: QuboProblem, s: Sequence[int]) -> np.ndarray:
    """Energy change of flipping each bit of ``s`` on its own.

    ``dE_i = (1 - 2 s_i) (h_i + sum_j W_ij s_j)`` with ``W`` the symmetric couplings.
    """
    x = _bits(q, s)
    return (1.0 - 2.0 * x) * (q.linear + q.couplings @ x)


def ising_energy(p: IsingProblem, spins: Sequence[int]) -> float:
    sig = np.asarray(spins)
    if sig.shape != (p.n,):
        raise QuboFormatError(f"spin vector has shape {sig.shape}, expected ({p.n},)")
    if not np.isin(sig, (-1, 1)).all():
        raise QuboFormatError("spins must be -1 or +1")
    sig = sig.astype(np.float64)
    return float(p.offset + p.h @ sig + sig @ p.J @ sig)


def qubo_to_ising(q: QuboProblem) -> IsingProblem:
    """Substitute ``s = (sigma + 1) / 2``; energies agree assignment by assignment."""
    J = q.quadratic / 4.0
    h = q.linear / 2.0 + q.couplings.sum(axis=1) / 4.0
    offset = q.offset + q.linear.sum() / 2.0 + q.quadratic.sum() / 4.0
    return IsingProblem(h, J, offset)


def ising_to_qubo(p: IsingProblem) -> QuboProblem:
    """Substitute ``sigma = 2 s - 1``; inverse of :func:`qubo_to_ising`."""
    quad = 4.0 * p.J
    lin = 2.0 * p.h - 2.0 * p.couplings.sum(axis=1)
    offset = p.offset - p.h.sum() + p.J.sum()
    return QuboProblem(lin, quad, offset)


def bits_to_spins(s) -> np.ndarray:
    return 2 * np.asarray(s, dtype=np.int8) - 1


def spins_to_bits(sig) -> np.ndarray:
    return ((np.asarray(sig, dtype=np.int8) + 1) // 2).astype(np.int8)


def build_regularity_qubo(g: BipartiteGraph, sense: Sense = "minimize") -> QuboProblem:
    """QUBO whose energy at ``s`` is ``L(X(s), Y(s))`` (or ``-L`` for ``maximize``).

    Variables ``0..nA-1`` select ``X`` in side A and ``nA..nA+nB-1`` select
    ``Y`` in side B. The only nonzero coefficients couple A to B and equal
    ``d(A, B) - a_ij``.
    """
    if g.nA < 1 or g.nB < 1:
        raise GraphError(f"regularity QUBO needs both sides nonempty, got {g.nA}x{g.nB}")
    if sense not in ("minimize", "maximize"):
        raise ValueError(f"sense must be 'minimize' or 'maximize', got {sense!r}")
    nA, n = g.nA, g.nA + g.nB
    quad = np.zeros((n, n))
    quad[:nA, nA:] = g.density - g.biadjacency
    if sense == "maximize":
        quad = -quad
    return QuboProblem(np.zeros(n), quad, 0.0)

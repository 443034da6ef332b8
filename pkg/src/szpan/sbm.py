"""Stochastic block models, the community-density condition, and the expected-L corner oracle."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .graph import Bipartition, Graph, SizeGuardError, first_min

MAX_CORNER_COMMUNITIES = 20


class SbmError(ValueError):
    """Invalid block-model parameters or label data."""


@dataclass(frozen=True, eq=False)
class SbmParams:
    """SBM(n, k, P, D): ``n`` nodes, labels drawn from ``P``, pair ``{u, v}`` linked with probability ``D[σu, σv]``."""

    n: int
    P: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        P = np.array(self.P, dtype=np.float64).reshape(-1)
        D = np.array(self.D, dtype=np.float64)
        k = P.shape[0]
        if self.n < 0:
            raise SbmError(f"n must be >= 0, got {self.n}")
        if k < 1:
            raise SbmError("need at least one community")
        if (P < 0).any() or abs(P.sum() - 1.0) > 1e-12:
            raise SbmError(f"P must be a probability vector, sums to {P.sum()!r}")
        if D.shape != (k, k):
            raise SbmError(f"D must be {k}x{k}, got {D.shape}")
        if not np.array_equal(D, D.T):
            raise SbmError("D must be symmetric")
        if (D < 0).any() or (D > 1).any():
            raise SbmError("D entries must lie in [0, 1]")
        P.setflags(write=False)
        D.setflags(write=False)
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "D", D)

    @property
    def k(self) -> int:
        return self.P.shape[0]

    @classmethod
    def planted(cls, n: int, k: int, p_in, p_out: float) -> "SbmParams":
        """Equal-weight communities; ``p_in`` may be a scalar or one value per community."""
        D = np.full((k, k), float(p_out))
        np.fill_diagonal(D, p_in)
        return cls(n, np.full(k, 1.0 / k), D)

    def to_dict(self) -> dict:
        return {"n": self.n, "k": self.k, "P": self.P.tolist(), "D": self.D.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "SbmParams":
        try:
            params = cls(int(data["n"]), data["P"], data["D"])
        except (KeyError, TypeError) as exc:
            raise SbmError(f"malformed SBM parameters: {exc}") from exc
        if "k" in data and int(data["k"]) != params.k:
            raise SbmError(f"k={data['k']} does not match len(P)={params.k}")
        return params

    @classmethod
    def from_json(cls, text: str) -> "SbmParams":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise SbmError(f"invalid JSON: {exc}") from exc


@dataclass(frozen=True, eq=False)
class PlantedGraph:
    graph: Graph
    labels: np.ndarray

    def __post_init__(self):
        labels = np.array(self.labels, dtype=np.int64).reshape(-1)
        if labels.shape != (self.graph.n,):
            raise SbmError(f"{labels.size} labels for {self.graph.n} nodes")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    def communities(self) -> dict[int, list]:
        """Label -> node ids, for labels that occur."""
        ids = self.graph.node_ids
        return {int(c): [ids[i] for i in np.flatnonzero(self.labels == c)] for c in np.unique(self.labels)}

    def label_of(self, node) -> int:
        return int(self.labels[self.graph.index_of[node]])

    def restrict(self, nodes: Iterable) -> "PlantedGraph":
        """Induced planted graph on ``nodes`` (external ids)."""
        idx = sorted(self.graph.index_of[v] for v in nodes)
        return PlantedGraph(self.graph.subgraph(idx), self.labels[idx])


def sample_sbm(params: SbmParams, seed=None) -> PlantedGraph:
    """Draw labels i.i.d. from ``P`` then every pair independently."""
    rng = np.random.default_rng(seed)
    n, k = params.n, params.k
    cdf = np.cumsum(params.P)
    cdf[-1] = 1.0
    labels = np.searchsorted(cdf, rng.random(n), side="right")
    labels = np.minimum(labels, k - 1)
    prob = params.D[labels][:, labels]
    upper = np.triu(rng.random((n, n)) < prob, 1)
    adj = (upper | upper.T).astype(np.uint8)
    return PlantedGraph(Graph(adj), labels)


def write_labels(pg: PlantedGraph) -> str:
    return "".join(f"{node} {int(lab)}\n" for node, lab in zip(pg.graph.node_ids, pg.labels))


def parse_labels(text: str, n: int) -> np.ndarray:
    labels = np.full(n, -1, dtype=np.int64)
    for k, ln in enumerate(text.splitlines()):
        ln = ln.split("#", 1)[0].strip()
        if not ln:
            continue
        try:
            node, lab = (int(x) for x in ln.split())
        except ValueError:
            raise SbmError(f"label line {k + 1}: expected 'node label', got {ln!r}") from None
        if not 0 <= node < n:
            raise SbmError(f"label line {k + 1}: node {node} out of range")
        labels[node] = lab
    if (labels < 0).any():
        raise SbmError("labels missing for some nodes")
    return labels


class Condition4(NamedTuple):
    holds: bool
    margins: dict[int, float]
    undefined: list[int]
    graph_density: float


def internal_densities(g: Graph, labels: Sequence[int]) -> dict[int, float]:
    """Empirical edge density inside each community; NaN for communities with < 2 nodes."""
    labels = np.asarray(labels)
    out = {}
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        pairs = idx.size * (idx.size - 1) // 2
        out[int(c)] = g.adjacency[np.ix_(idx, idx)].sum() / 2 / pairs if pairs else float("nan")
    return out


def condition4(g: Graph, labels: Sequence[int]) -> Condition4:
    """Does every community have internal density strictly above d(G)?

    ``margins[c] = d(G) - D_cc``; the condition holds iff every margin is
    negative. Communities with fewer than two nodes have no density and
    make the condition fail.
    """
    dg = g.density()
    dens = internal_densities(g, labels)
    margins = {c: dg - v for c, v in dens.items()}
    undefined = [c for c, v in dens.items() if np.isnan(v)]
    holds = not undefined and all(m < 0 for m in margins.values())
    return Condition4(holds, margins, undefined, dg)


def check_condition4(pg: PlantedGraph) -> Condition4:
    return condition4(pg.graph, pg.labels)


@dataclass(frozen=True, eq=False)
class ExpectedLInstance:
    """Split-community sizes ``a``, ``b`` with block matrix ``D`` and bipartite density ``d``."""

    a: np.ndarray
    b: np.ndarray
    D: np.ndarray
    d: float

    def __post_init__(self):
        a = np.asarray(self.a, dtype=np.float64)
        b = np.asarray(self.b, dtype=np.float64)
        D = np.asarray(self.D, dtype=np.float64)
        k = a.shape[0]
        if b.shape != (k,) or D.shape != (k, k):
            raise SbmError("a, b and D must have matching sizes")
        if (a < 0).any() or (b < 0).any():
            raise SbmError("community sizes must be nonnegative")
        if not 0.0 <= self.d <= 1.0:
            raise SbmError(f"d must lie in [0, 1], got {self.d}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "d", float(self.d))

    @property
    def k(self) -> int:
        return self.a.shape[0]

    @property
    def weights(self) -> np.ndarray:
        """``d - D``: the bilinear form of the expected L."""
        return self.d - self.D

    @classmethod
    def from_split(cls, split: Bipartition, labels: Sequence[int], D) -> "ExpectedLInstance":
        """Sizes of each community on either side, and the model-expected density of the split."""
        labels = np.asarray(labels)
        D = np.asarray(D, dtype=np.float64)
        k = D.shape[0]
        a = np.bincount(labels[split.a_index], minlength=k).astype(np.float64)
        b = np.bincount(labels[split.b_index], minlength=k).astype(np.float64)
        d = float(a @ D @ b / (a.sum() * b.sum()))
        return cls(a, b, D, d)

    def value(self, x, y) -> float:
        """Expected L at per-community counts ``x`` (side A) and ``y`` (side B)."""
        return float(np.asarray(x, float) @ self.weights @ np.asarray(y, float))

    def corner_value(self, subset: Iterable[int]) -> float:
        mask = np.zeros(self.k)
        mask[list(subset)] = 1.0
        return self.value(mask * self.a, mask * self.b)


def expected_L_corner_min(inst: ExpectedLInstance) -> tuple[frozenset, float]:
    """Minimum of the expected L over the box corners ``(x_i, y_i) in {(0,0), (a_i,b_i)}``.

    All ``2**k`` community subsets are scored; ties go to the lowest
    bitmask (bit ``i`` = community ``i``), so the empty set wins a tie at 0.
    """
    k = inst.k
    if k > MAX_CORNER_COMMUNITIES:
        raise SizeGuardError(f"k = {k} exceeds {MAX_CORNER_COMMUNITIES}")
    masks = ((np.arange(1 << k)[:, None] >> np.arange(k)) & 1).astype(np.float64)
    X, Y = masks * inst.a, masks * inst.b
    values = np.einsum("si,ij,sj->s", X, inst.weights, Y)
    best = first_min(values)
    return frozenset(np.flatnonzero(masks[best]).tolist()), float(values[best])


def community_overlap(found: Iterable, planted: Iterable) -> tuple[float, bool]:
    """Jaccard index of two node sets and whether they are equal."""
    f, p = set(found), set(planted)
    union = f | p
    if not union:
        return 1.0, True
    return len(f & p) / len(union), f == p

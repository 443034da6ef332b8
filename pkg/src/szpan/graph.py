"""Graphs, bipartite graphs and the link-deviation function L.

A :class:`BipartiteGraph` stores its biadjacency as a dense ``uint8``
matrix. Subsets of the two sides are boolean masks wrapped in a
:class:`SubsetPair`. ``L(X, Y) = |X||Y| d(A, B) - e(X, Y)`` is the
deviation of the edge count of the induced subgraph from what a random
bipartite graph with the same density would give.

Subset pairs are indexed by the integer whose bit ``i`` is the membership
of variable ``i``, side A first: ``index = xmask | (ymask << nA)``. This is
the same variable order the QUBO builder uses, so tie-breaking by lowest
index agrees between the brute-force oracle and the exhaustive solver.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Hashable, Iterable, NamedTuple, Sequence

import numpy as np

MAX_BRUTE_VARIABLES = 24
MAX_SPLIT_RETRIES = 16
TIE_TOL = 1e-9


class GraphError(ValueError):
    """Malformed graph data."""


class EmptySubsetError(ZeroDivisionError):
    """Density requested for a pair with an empty side."""


class SizeGuardError(ValueError):
    """Exhaustive enumeration requested on a problem that is too large."""


class SplitError(RuntimeError):
    """Random split kept producing an empty side."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.uint8)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Graph:
    """Simple undirected graph on ``n`` nodes."""

    adjacency: np.ndarray
    node_ids: tuple = None

    def __post_init__(self):
        a = np.asarray(self.adjacency)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise GraphError(f"adjacency must be square, got shape {a.shape}")
        if a.size and not np.isin(a, (0, 1)).all():
            raise GraphError("adjacency entries must be 0/1")
        if (a != a.T).any():
            raise GraphError("adjacency must be symmetric")
        if np.diagonal(a).any():
            raise GraphError("self-loops are not allowed")
        object.__setattr__(self, "adjacency", _frozen(a))
        ids = tuple(range(a.shape[0])) if self.node_ids is None else tuple(self.node_ids)
        if len(ids) != a.shape[0]:
            raise GraphError("node_ids length does not match adjacency")
        if len(set(ids)) != len(ids):
            raise GraphError("node_ids must be unique")
        object.__setattr__(self, "node_ids", ids)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]], node_ids=None) -> "Graph":
        a = np.zeros((n, n), dtype=np.uint8)
        for u, v in edges:
            if u == v:
                raise GraphError(f"self-loop at node {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"edge ({u}, {v}) out of range for n={n}")
            a[u, v] = a[v, u] = 1
        return cls(a, node_ids)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def num_edges(self) -> int:
        return int(self.adjacency.sum()) // 2

    def edges(self) -> list[tuple[int, int]]:
        u, v = np.nonzero(np.triu(self.adjacency, 1))
        return list(zip(u.tolist(), v.tolist()))

    def density(self) -> float:
        """Fraction of the n(n-1)/2 node pairs that are linked."""
        pairs = self.n * (self.n - 1) // 2
        if pairs == 0:
            raise EmptySubsetError("density of a graph with fewer than 2 nodes")
        return self.num_edges / pairs

    @functools.cached_property
    def index_of(self) -> dict:
        return {node: i for i, node in enumerate(self.node_ids)}

    def subgraph(self, indices: Sequence[int]) -> "Graph":
        idx = np.asarray(indices, dtype=np.intp)
        return Graph(self.adjacency[np.ix_(idx, idx)], [self.node_ids[i] for i in idx])


@dataclass(frozen=True)
class SubsetPair:
    """Boolean membership masks for ``X`` over side A and ``Y`` over side B."""

    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        for name in ("X", "Y"):
            m = np.asarray(getattr(self, name), dtype=bool).copy()
            m.setflags(write=False)
            object.__setattr__(self, name, m)

    def __eq__(self, other):
        if not isinstance(other, SubsetPair):
            return NotImplemented
        return np.array_equal(self.X, other.X) and np.array_equal(self.Y, other.Y)

    def __hash__(self):
        return hash((self.X.tobytes(), self.Y.tobytes()))

    @property
    def sizes(self) -> tuple[int, int]:
        return int(self.X.sum()), int(self.Y.sum())

    @classmethod
    def from_index(cls, index: int, nA: int, nB: int) -> "SubsetPair":
        bits = (index >> np.arange(nA + nB)) & 1
        return cls(bits[:nA].astype(bool), bits[nA:].astype(bool))

    @classmethod
    def from_assignment(cls, s: Sequence[int], nA: int) -> "SubsetPair":
        s = np.asarray(s)
        return cls(s[:nA] != 0, s[nA:] != 0)

    def to_assignment(self) -> np.ndarray:
        return np.concatenate([self.X, self.Y]).astype(np.int8)

    def to_index(self) -> int:
        bits = self.to_assignment()
        return int(sum(1 << i for i in np.flatnonzero(bits)))


@dataclass(frozen=True, eq=False)
class BipartiteGraph:
    """Bipartite graph ``G(A, B)`` given by its ``nA x nB`` biadjacency."""

    biadjacency: np.ndarray
    labels_a: tuple = None
    labels_b: tuple = None

    def __post_init__(self):
        b = np.asarray(self.biadjacency)
        if b.ndim != 2:
            raise GraphError(f"biadjacency must be 2-D, got shape {b.shape}")
        if b.size and not np.isin(b, (0, 1)).all():
            raise GraphError("biadjacency entries must be 0/1")
        object.__setattr__(self, "biadjacency", _frozen(b))
        for name, size in (("labels_a", b.shape[0]), ("labels_b", b.shape[1])):
            labels = getattr(self, name)
            labels = tuple(range(size)) if labels is None else tuple(labels)
            if len(labels) != size:
                raise GraphError(f"{name} has {len(labels)} entries, expected {size}")
            object.__setattr__(self, name, labels)

    @classmethod
    def from_edges(cls, nA: int, nB: int, edges: Iterable[tuple[int, int]]) -> "BipartiteGraph":
        b = np.zeros((nA, nB), dtype=np.uint8)
        for a, c in edges:
            if not (0 <= a < nA and 0 <= c < nB):
                raise GraphError(f"edge ({a}, {c}) out of range for {nA}x{nB}")
            b[a, c] = 1
        return cls(b)

    @property
    def nA(self) -> int:
        return self.biadjacency.shape[0]

    @property
    def nB(self) -> int:
        return self.biadjacency.shape[1]

    @functools.cached_property
    def num_edges(self) -> int:
        return int(self.biadjacency.sum())

    @functools.cached_property
    def density(self) -> float:
        """d(A, B); computed once per graph."""
        if self.nA == 0 or self.nB == 0:
            raise EmptySubsetError("density of a bipartite graph with an empty side")
        return self.num_edges / (self.nA * self.nB)

    def full_pair(self) -> SubsetPair:
        return SubsetPair(np.ones(self.nA, bool), np.ones(self.nB, bool))

    def induced(self, pair: SubsetPair) -> "BipartiteGraph":
        """Bipartite subgraph on ``X`` and ``Y``, labels carried along."""
        xi, yi = np.flatnonzero(pair.X), np.flatnonzero(pair.Y)
        return BipartiteGraph(
            self.biadjacency[np.ix_(xi, yi)],
            [self.labels_a[i] for i in xi],
            [self.labels_b[j] for j in yi],
        )


def _check_pair(g: BipartiteGraph, p: SubsetPair) -> None:
    if p.X.shape != (g.nA,) or p.Y.shape != (g.nB,):
        raise GraphError(
            f"subset pair shapes {p.X.shape}/{p.Y.shape} do not match graph {g.nA}x{g.nB}"
        )


def edge_count(g: BipartiteGraph, p: SubsetPair) -> int:
    """e(X, Y): number of edges between ``X`` and ``Y``."""
    _check_pair(g, p)
    return int(g.biadjacency[np.ix_(p.X, p.Y)].sum())


def link_density(g: BipartiteGraph, p: SubsetPair) -> float:
    """d(X, Y) = e(X, Y) / (|X||Y|). Raises :class:`EmptySubsetError` on an empty side."""
    nx, ny = p.sizes
    if nx == 0 or ny == 0:
        raise EmptySubsetError(f"density undefined for |X|={nx}, |Y|={ny}")
    return edge_count(g, p) / (nx * ny)


def deviation_L(g: BipartiteGraph, p: SubsetPair) -> float:
    nx, ny = p.sizes
    e = edge_count(g, p)
    if nx == 0 or ny == 0:
        return 0.0
    return nx * ny * g.density - e


def subset_bits(n: int) -> np.ndarray:
    """``(2**n, n)`` 0/1 matrix; row ``k`` holds the bits of ``k``, LSB first."""
    return ((np.arange(1 << n)[:, None] >> np.arange(n)) & 1).astype(np.float64)


def first_min(values: np.ndarray, tol: float = TIE_TOL) -> int:
    """Flat index of the first entry within a relative ``tol`` of the minimum."""
    flat = values.ravel()
    m = flat.min()
    return int(np.flatnonzero(flat <= m + tol * max(1.0, abs(m)))[0])


def beats(v: float, best: float, tol: float = TIE_TOL) -> bool:
    if not np.isfinite(best):
        return True
    return v < best - tol * max(1.0, abs(best))


class Extrema(NamedTuple):
    min_value: float
    argmin: SubsetPair
    max_value: float
    argmax: SubsetPair


def brute_min_max_L(g: BipartiteGraph, chunk: int = 1 << 20) -> Extrema:
    """Exact min and max of L over all ``2**(nA+nB)`` subset pairs.

    Ties go to the lowest pair index (see module docstring).
    """
    nA, nB = g.nA, g.nB
    if nA + nB > MAX_BRUTE_VARIABLES:
        raise SizeGuardError(f"nA + nB = {nA + nB} exceeds {MAX_BRUTE_VARIABLES}")
    if nA == 0 or nB == 0:
        empty = SubsetPair(np.zeros(nA, bool), np.zeros(nB, bool))
        return Extrema(0.0, empty, 0.0, empty)
    d = g.density
    sx, sy = subset_bits(nA), subset_bits(nB)
    size_x, size_y = sx.sum(1), sy.sum(1)
    # row y, column x -> flat order within a block is the pair index order
    ya = sy @ g.biadjacency.T.astype(np.float64)
    step = max(1, chunk >> nA)
    best_min, best_max = (np.inf, 0), (np.inf, 0)
    for y0 in range(0, 1 << nB, step):
        y1 = min(1 << nB, y0 + step)
        L = np.outer(size_y[y0:y1], size_x) * d - ya[y0:y1] @ sx.T
        k = first_min(L)
        if beats(L.flat[k], best_min[0]):
            best_min = (float(L.flat[k]), k + (y0 << nA))
        k = first_min(-L)
        if beats(-L.flat[k], best_max[0]):
            best_max = (float(-L.flat[k]), k + (y0 << nA))
    best_max = (-best_max[0], best_max[1])
    return Extrema(
        best_min[0],
        SubsetPair.from_index(best_min[1], nA, nB),
        best_max[0],
        SubsetPair.from_index(best_max[1], nA, nB),
    )


def all_L(g: BipartiteGraph) -> np.ndarray:
    """L at every subset pair, indexed by :meth:`SubsetPair.to_index`."""
    nA, nB = g.nA, g.nB
    if nA + nB > MAX_BRUTE_VARIABLES:
        raise SizeGuardError(f"nA + nB = {nA + nB} exceeds {MAX_BRUTE_VARIABLES}")
    if nA == 0 or nB == 0:
        return np.zeros(1 << (nA + nB))
    sx, sy = subset_bits(nA), subset_bits(nB)
    L = np.outer(sy.sum(1), sx.sum(1)) * g.density - (sy @ g.biadjacency.T.astype(np.float64)) @ sx.T
    return L.reshape(-1)


@dataclass(frozen=True, eq=False)
class Bipartition:
    """A bipartite graph cut out of a :class:`Graph`, with the way back.

    ``a_index``/``b_index`` are positions in the source graph; the
    bipartite labels are the source node ids.
    """

    graph: BipartiteGraph
    a_index: np.ndarray
    b_index: np.ndarray
    source: Graph = field(repr=False)

    def nodes_of(self, pair: SubsetPair) -> list:
        """Original node ids selected by ``pair``."""
        ids = self.source.node_ids
        return [ids[i] for i in self.a_index[pair.X]] + [ids[i] for i in self.b_index[pair.Y]]


def bipartize(g: Graph, side_a: Sequence[bool]) -> Bipartition:
    """Keep only the edges between ``side_a`` and its complement."""
    mask = np.asarray(side_a, dtype=bool)
    if mask.shape != (g.n,):
        raise GraphError(f"side mask has shape {mask.shape}, expected ({g.n},)")
    a_idx, b_idx = np.flatnonzero(mask), np.flatnonzero(~mask)
    bg = BipartiteGraph(
        g.adjacency[np.ix_(a_idx, b_idx)],
        [g.node_ids[i] for i in a_idx],
        [g.node_ids[i] for i in b_idx],
    )
    return Bipartition(bg, a_idx, b_idx, g)


def split_sides(n: int, rng_seed=None) -> np.ndarray:
    """Fair-coin side mask (``True`` = A) for ``n >= 2`` nodes with both sides nonempty.

    A draw with an empty side is redrawn, at most ``MAX_SPLIT_RETRIES``
    times in total.
    """
    if n < 2:
        raise SplitError(f"cannot split a graph with {n} node(s)")
    rng = np.random.default_rng(rng_seed)
    for _ in range(MAX_SPLIT_RETRIES):
        side = rng.random(n) < 0.5
        if 0 < side.sum() < n:
            return side
    raise SplitError(f"no non-degenerate split after {MAX_SPLIT_RETRIES} draws")


def random_split(g: Graph, rng_seed=None) -> Bipartition:
    """Bipartize ``g`` along :func:`split_sides`."""
    return bipartize(g, split_sides(g.n, rng_seed))


def remove_nodes(g: Graph, nodes: Iterable[Hashable]) -> Graph:
    """Induced subgraph on the nodes not listed. Unknown ids raise ``KeyError``."""
    drop = set()
    for node in nodes:
        if node not in g.index_of:
            raise KeyError(f"unknown node id {node!r}")
        drop.add(g.index_of[node])
    keep = [i for i in range(g.n) if i not in drop]
    return g.subgraph(keep)


# ---------------------------------------------------------------------------
# text formats


def _lines(text: str) -> list[str]:
    return [ln.split("#", 1)[0].strip() for ln in text.splitlines()]


def _pairs(lines: list[str], where: str) -> list[tuple[int, int]]:
    out = []
    for k, ln in enumerate(lines):
        if not ln:
            continue
        parts = ln.split()
        if len(parts) != 2:
            raise GraphError(f"{where}: line {k + 2}: expected two integers, got {ln!r}")
        try:
            out.append((int(parts[0]), int(parts[1])))
        except ValueError:
            raise GraphError(f"{where}: line {k + 2}: non-integer in {ln!r}") from None
    return out


def _header(lines: list[str], keyword: str, count: int) -> tuple[list[int], list[str]]:
    body = list(lines)
    while body and not body[0]:
        body.pop(0)
    if not body:
        raise GraphError("empty input")
    head = body[0].split()
    if len(head) != count + 1 or head[0] != keyword:
        raise GraphError(f"expected header '{keyword}' with {count} size(s), got {body[0]!r}")
    try:
        sizes = [int(x) for x in head[1:]]
    except ValueError:
        raise GraphError(f"bad header {body[0]!r}") from None
    return sizes, body[1:]


def parse_graph(text: str) -> Graph:
    """Parse ``graph <n>`` followed by ``u v`` lines (0-based)."""
    (n,), body = _header(_lines(text), "graph", 1)
    return Graph.from_edges(n, _pairs(body, "graph"))


def format_graph(g: Graph) -> str:
    rows = [f"graph {g.n}"] + [f"{u} {v}" for u, v in g.edges()]
    return "\n".join(rows) + "\n"


def parse_bigraph(text: str) -> BipartiteGraph:
    """Parse ``bigraph <nA> <nB>`` followed by ``a b`` lines."""
    (nA, nB), body = _header(_lines(text), "bigraph", 2)
    return BipartiteGraph.from_edges(nA, nB, _pairs(body, "bigraph"))


def format_bigraph(g: BipartiteGraph) -> str:
    a, b = np.nonzero(g.biadjacency)
    rows = [f"bigraph {g.nA} {g.nB}"] + [f"{i} {j}" for i, j in zip(a.tolist(), b.tolist())]
    return "\n".join(rows) + "\n"


def parse_dense(text: str) -> np.ndarray:
    """Rows of space-separated 0/1 values."""
    rows = [ln.split() for ln in _lines(text) if ln]
    if not rows:
        raise GraphError("empty matrix")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise GraphError("ragged dense matrix")
    try:
        m = np.array([[int(x) for x in r] for r in rows], dtype=np.int64)
    except ValueError:
        raise GraphError("non-integer entry in dense matrix") from None
    if not np.isin(m, (0, 1)).all():
        raise GraphError("dense matrix entries must be 0/1")
    return m.astype(np.uint8)


def format_dense(m: np.ndarray) -> str:
    return "".join(" ".join(str(int(x)) for x in row) + "\n" for row in np.asarray(m))


def _read(path) -> str:
    with open(path) as fh:
        return fh.read()


def read_graph_text(text: str) -> Graph:
    """Edge list (``graph`` header) or a square dense matrix."""
    lines = [ln for ln in _lines(text) if ln]
    if lines and lines[0].split()[0] == "graph":
        return parse_graph("\n".join(lines))
    return Graph(parse_dense("\n".join(lines)))


def read_bigraph_text(text: str) -> BipartiteGraph:
    """Edge list (``bigraph`` header) or a dense ``nA x nB`` matrix."""
    lines = [ln for ln in _lines(text) if ln]
    if lines and lines[0].split()[0] == "bigraph":
        return parse_bigraph("\n".join(lines))
    return BipartiteGraph(parse_dense("\n".join(lines)))


def load_graph(path) -> Graph:
    return read_graph_text(_read(path))


def load_bigraph(path) -> BipartiteGraph:
    return read_bigraph_text(_read(path))

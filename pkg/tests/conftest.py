import numpy as np
import pytest
from hypothesis import strategies as st

from szpan.graph import BipartiteGraph


def random_bigraph(rng, nA, nB, p=0.5) -> BipartiteGraph:
    return BipartiteGraph((rng.random((nA, nB)) < p).astype(np.uint8))


@st.composite
def bigraphs(draw, max_side=5, min_side=1):
    nA = draw(st.integers(min_side, max_side))
    nB = draw(st.integers(min_side, max_side))
    bits = draw(st.lists(st.integers(0, 1), min_size=nA * nB, max_size=nA * nB))
    return BipartiteGraph(np.array(bits, dtype=np.uint8).reshape(nA, nB))


def naive_min_max_L(g: BipartiteGraph):
    """Double loop over side subsets; independent of the vectorised code."""
    nA, nB = g.nA, g.nB
    d = g.biadjacency.sum() / (nA * nB)
    lo, hi = np.inf, -np.inf
    for x in range(1 << nA):
        xs = [i for i in range(nA) if x >> i & 1]
        for y in range(1 << nB):
            ys = [j for j in range(nB) if y >> j & 1]
            e = sum(int(g.biadjacency[i, j]) for i in xs for j in ys)
            L = len(xs) * len(ys) * d - e
            lo, hi = min(lo, L), max(hi, L)
    return lo, hi


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

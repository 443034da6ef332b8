import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from szpan.graph import (
    BipartiteGraph,
    EmptySubsetError,
    Graph,
    GraphError,
    SizeGuardError,
    SplitError,
    SubsetPair,
    all_L,
    bipartize,
    brute_min_max_L,
    deviation_L,
    edge_count,
    format_bigraph,
    format_dense,
    format_graph,
    link_density,
    load_bigraph,
    parse_bigraph,
    parse_graph,
    random_split,
    split_sides,
    read_bigraph_text,
    read_graph_text,
    remove_nodes,
)

from conftest import bigraphs, naive_min_max_L, random_bigraph


def single_edge():
    return BipartiteGraph([[1, 0], [0, 0]])


def pair(nA, nB, xs, ys):
    X, Y = np.zeros(nA, bool), np.zeros(nB, bool)
    X[list(xs)] = True
    Y[list(ys)] = True
    return SubsetPair(X, Y)


class TestGraph:
    def test_rejects_asymmetric(self):
        with pytest.raises(GraphError):
            Graph([[0, 1], [0, 0]])

    def test_rejects_self_loop(self):
        with pytest.raises(GraphError):
            Graph([[1, 0], [0, 0]])

    def test_from_edges_and_density(self):
        g = Graph.from_edges(4, [(0, 1), (1, 2), (2, 3)])
        assert g.num_edges == 3
        assert g.density() == pytest.approx(3 / 6)
        assert g.edges() == [(0, 1), (1, 2), (2, 3)]

    def test_adjacency_is_read_only(self):
        g = Graph.from_edges(3, [(0, 1)])
        with pytest.raises(ValueError):
            g.adjacency[0, 2] = 1


class TestEdgeCountAndDensity:
    def test_empty_x_counts_zero(self, rng):
        g = random_bigraph(rng, 4, 5)
        assert edge_count(g, pair(4, 5, [], range(5))) == 0

    def test_full_restriction_counts_all_edges(self):
        bi = np.zeros((3, 4), np.uint8)
        bi.flat[[0, 2, 5, 6, 7, 9, 11]] = 1
        g = BipartiteGraph(bi)
        assert edge_count(g, g.full_pair()) == 7

    def test_single_edge_pair(self):
        assert edge_count(single_edge(), pair(2, 2, [0], [0])) == 1

    def test_density_examples(self):
        assert link_density(BipartiteGraph(np.ones((3, 2))), pair(3, 2, [0, 2], [1])) == 1.0
        assert link_density(BipartiteGraph(np.zeros((3, 2))), pair(3, 2, [0], [0, 1])) == 0.0
        assert link_density(single_edge(), single_edge().full_pair()) == 0.25

    def test_empty_subset_density_is_an_error(self):
        with pytest.raises(EmptySubsetError):
            link_density(single_edge(), pair(2, 2, [], [0]))

    @given(bigraphs(), st.data())
    def test_edge_count_is_additive_over_y(self, g, data):
        X = np.array(data.draw(st.lists(st.booleans(), min_size=g.nA, max_size=g.nA)))
        Y = np.array(data.draw(st.lists(st.booleans(), min_size=g.nB, max_size=g.nB)))
        whole = edge_count(g, SubsetPair(X, np.ones(g.nB, bool)))
        assert edge_count(g, SubsetPair(X, Y)) + edge_count(g, SubsetPair(X, ~Y)) == whole


class TestDeviationL:
    def test_single_edge_example(self):
        assert deviation_L(single_edge(), pair(2, 2, [0], [0])) == pytest.approx(-0.75)

    @given(bigraphs())
    def test_empty_and_full_pairs_vanish(self, g):
        assert deviation_L(g, pair(g.nA, g.nB, [], range(g.nB))) == 0
        assert deviation_L(g, pair(g.nA, g.nB, range(g.nA), [])) == 0
        assert abs(deviation_L(g, g.full_pair())) < 1e-12

    @given(bigraphs(max_side=4))
    def test_all_L_matches_pointwise(self, g):
        L = all_L(g)
        for idx in range(0, L.size, max(1, L.size // 17)):
            assert L[idx] == pytest.approx(deviation_L(g, SubsetPair.from_index(idx, g.nA, g.nB)), abs=1e-12)


class TestBruteForce:
    def test_edgeless_and_complete(self):
        for bi in (np.zeros((3, 4)), np.ones((3, 4))):
            ext = brute_min_max_L(BipartiteGraph(bi))
            assert ext.min_value == 0 and ext.max_value == 0

    def test_ties_go_to_lowest_index(self):
        ext = brute_min_max_L(BipartiteGraph(np.ones((2, 2))))
        assert ext.argmin.to_index() == 0 and ext.argmax.to_index() == 0

    @settings(max_examples=60, deadline=None)
    @given(bigraphs(max_side=6))
    def test_matches_naive_double_loop(self, g):
        ext = brute_min_max_L(g)
        lo, hi = naive_min_max_L(g)
        assert ext.min_value == pytest.approx(lo, abs=1e-9)
        assert ext.max_value == pytest.approx(hi, abs=1e-9)
        assert ext.min_value <= 0 <= ext.max_value
        assert deviation_L(g, ext.argmin) == pytest.approx(ext.min_value, abs=1e-9)
        assert deviation_L(g, ext.argmax) == pytest.approx(ext.max_value, abs=1e-9)

    def test_small_chunks_agree(self, rng):
        g = random_bigraph(rng, 7, 6)
        a, b = brute_min_max_L(g), brute_min_max_L(g, chunk=1)
        assert a == b

    def test_size_guard(self):
        with pytest.raises(SizeGuardError):
            brute_min_max_L(BipartiteGraph(np.zeros((13, 12))))


class TestSubsetPair:
    @given(st.integers(1, 5), st.integers(1, 5), st.data())
    def test_index_round_trip(self, nA, nB, data):
        idx = data.draw(st.integers(0, (1 << (nA + nB)) - 1))
        p = SubsetPair.from_index(idx, nA, nB)
        assert p.to_index() == idx
        assert SubsetPair.from_assignment(p.to_assignment(), nA) == p


class TestSplit:
    def test_same_seed_same_split(self):
        g = Graph.from_edges(30, [(i, (i * 7 + 3) % 30) for i in range(30) if i != (i * 7 + 3) % 30])
        a, b = random_split(g, 5), random_split(g, 5)
        assert np.array_equal(a.a_index, b.a_index)
        assert np.array_equal(a.graph.biadjacency, b.graph.biadjacency)

    def test_triangle_keeps_crossing_edges(self):
        tri = Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)], node_ids=[1, 2, 3])
        split = bipartize(tri, [True, False, False])
        assert split.graph.labels_a == (1,) and split.graph.labels_b == (2, 3)
        assert split.graph.num_edges == 2
        assert split.nodes_of(split.graph.full_pair()) == [1, 2, 3]

    def test_sides_concentrate(self):
        n = 10000
        inside = sum(abs(split_sides(n, s).sum() - n / 2) <= 3 * np.sqrt(n) for s in range(1000))
        assert inside >= 990

    def test_split_uses_the_side_mask(self, rng):
        upper = np.triu(rng.random((40, 40)) < 0.3, 1)
        g = Graph((upper | upper.T).astype(np.uint8))
        side = split_sides(g.n, 9)
        split = random_split(g, 9)
        assert np.array_equal(split.a_index, np.flatnonzero(side))
        assert np.array_equal(split.graph.biadjacency, g.adjacency[np.ix_(side, ~side)])

    def test_too_small_to_split(self):
        with pytest.raises(SplitError):
            random_split(Graph(np.zeros((1, 1))), 0)

    def test_degenerate_splits_exhaust_retries(self, monkeypatch):
        import szpan.graph as graph_mod

        monkeypatch.setattr(graph_mod, "MAX_SPLIT_RETRIES", 1)
        outcomes = []
        for seed in range(20):
            try:
                random_split(Graph(np.zeros((2, 2))), seed)
                outcomes.append(True)
            except SplitError:
                outcomes.append(False)
        assert not all(outcomes) and any(outcomes)


class TestRemoveNodes:
    def test_remove_nothing_and_everything(self):
        g = Graph.from_edges(4, [(0, 1), (2, 3)], node_ids=list("abcd"))
        same = remove_nodes(g, [])
        assert np.array_equal(same.adjacency, g.adjacency) and same.node_ids == g.node_ids
        assert remove_nodes(g, "abcd").n == 0

    def test_path_loses_all_edges(self):
        p3 = Graph.from_edges(3, [(0, 1), (1, 2)])
        rest = remove_nodes(p3, [1])
        assert rest.num_edges == 0 and rest.node_ids == (0, 2)

    def test_unknown_node(self):
        with pytest.raises(KeyError):
            remove_nodes(Graph(np.zeros((2, 2))), [7])


class TestFormats:
    @given(bigraphs())
    def test_bigraph_round_trip(self, g):
        back = parse_bigraph(format_bigraph(g))
        assert np.array_equal(back.biadjacency, g.biadjacency)
        dense = read_bigraph_text(format_dense(g.biadjacency))
        assert np.array_equal(dense.biadjacency, g.biadjacency)

    def test_graph_round_trip(self, rng):
        upper = np.triu(rng.random((9, 9)) < 0.4, 1)
        g = Graph((upper | upper.T).astype(np.uint8))
        assert np.array_equal(parse_graph(format_graph(g)).adjacency, g.adjacency)
        assert np.array_equal(read_graph_text(format_dense(g.adjacency)).adjacency, g.adjacency)

    def test_comments_and_blank_lines(self):
        g = read_bigraph_text("# A: x y\n\nbigraph 2 3  # sizes\n0 2\n1 0\n")
        assert g.num_edges == 2 and g.biadjacency[0, 2] == 1

    @pytest.mark.parametrize(
        "text",
        ["", "graph x\n", "graph 3\n0 1 2\n", "graph 3\n0 5\n", "graph 2\n0 a\n", "0 1\n1 1\n"],
    )
    def test_bad_graph_text(self, text):
        with pytest.raises(GraphError):
            read_graph_text(text)

    def test_bad_bigraph_text(self):
        with pytest.raises(GraphError):
            parse_bigraph("bigraph 2 2\n0 3\n")
        with pytest.raises(GraphError):
            read_bigraph_text("0 1\n1\n")

    def test_load_from_path(self, tmp_path):
        p = tmp_path / "g.txt"
        p.write_text("bigraph 1 2\n0 1\n")
        assert load_bigraph(p).num_edges == 1

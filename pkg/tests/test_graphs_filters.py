import numpy as np
import pytest

from gcnbounds import build_filter, filter_norm, spectral_norm
from gcnbounds.errors import DataFormatError, DimensionError, FilterError
from gcnbounds.filters import FILTER_KINDS, SYMMETRIC_KINDS
from gcnbounds.graphs import Graph, load_edge_list, parse_edges, save_edge_list


class TestGraph:
    def test_canonical_dedup(self):
        g = Graph(4, ((1, 0), (0, 1), (2, 3)))
        assert g.edges == ((0, 1), (2, 3))
        assert g.num_edges == 2

    def test_rejects_out_of_range(self):
        with pytest.raises(DimensionError):
            Graph(2, ((0, 2),))

    def test_rejects_self_loop(self):
        with pytest.raises(DimensionError):
            Graph(3, ((1, 1),))

    def test_degrees(self):
        g = Graph(4, ((0, 1), (1, 2), (1, 3)))
        assert g.degrees().tolist() == [1, 3, 1, 1]

    def test_adjacency_dense_sparse_agree(self):
        g = Graph(5, ((0, 1), (2, 4), (1, 3)))
        assert np.array_equal(g.adjacency(), g.adjacency(sparse=True).toarray())


class TestEdgeListIO:
    def test_roundtrip(self, tmp_path):
        g = Graph(5, ((0, 3), (1, 2), (3, 4)))
        path = tmp_path / "g.edges"
        save_edge_list(g, path)
        assert load_edge_list(path).edges == g.edges

    def test_comments_and_blank_lines(self):
        max_node, edges = parse_edges(["# header", "", "0 1  # trailing", "2 3"])
        assert max_node == 3
        assert edges == [(0, 1), (2, 3)]

    def test_malformed_line_names_position(self):
        with pytest.raises(DataFormatError, match=r"edges:2"):
            parse_edges(["0 1", "3 x"], source="edges")

    def test_wrong_token_count(self):
        with pytest.raises(DataFormatError, match="expected 'u v'"):
            parse_edges(["0 1 2"])

    def test_explicit_num_nodes(self, tmp_path):
        path = tmp_path / "g.edges"
        path.write_text("0 1\n")
        assert load_edge_list(path, num_nodes=10).num_nodes == 10


class TestBuildFilter:
    def test_triangle_adj_plus_id(self, triangle):
        f = build_filter(triangle, "adj_plus_id")
        assert np.array_equal(f.matrix, np.ones((3, 3)))
        # oracle: eigendecomposition of the realized 3x3 matrix
        oracle = float(np.abs(np.linalg.eigvalsh(np.ones((3, 3)))).max())
        assert oracle == pytest.approx(3.0, abs=1e-12)
        assert f.c_g == pytest.approx(oracle, rel=1e-9)

    def test_sym_selfloop_norm_is_one(self):
        # dominant eigenvector deg^(1/2) pins the norm at 1 for any connected graph
        for seed in range(5):
            rng = np.random.default_rng(seed)
            n = int(rng.integers(4, 30))
            extra = {(int(rng.integers(0, i)), i) for i in range(1, n)}
            g = Graph(n, tuple(extra))
            f = build_filter(g, "sym_selfloop")
            assert f.c_g == pytest.approx(1.0, abs=1e-9)

    def test_empty_edge_graph_adj_plus_id_is_identity(self):
        g = Graph(3, ())
        f = build_filter(g, "adj_plus_id")
        assert np.array_equal(f.matrix, np.eye(3))
        assert filter_norm(f) == pytest.approx(1.0, rel=1e-12)

    def test_sym_selfloop_on_path2(self):
        f = build_filter(Graph(2, ((0, 1),)), "sym_selfloop")
        assert filter_norm(f) == pytest.approx(1.0, abs=1e-9)

    def test_rw_row_sums_and_norm_floor(self):
        # row sums of D^-1 A + I are exactly 2, so the true norm is >= 2;
        # power iteration converges from below, hence the tiny slack
        for seed in range(5):
            rng = np.random.default_rng(100 + seed)
            n = int(rng.integers(3, 25))
            g = Graph(n, tuple({(int(rng.integers(0, i)), i) for i in range(1, n)}))
            f = build_filter(g, "rw_plus_id")
            assert np.allclose(np.asarray(f.matrix).sum(axis=1), 2.0, atol=1e-12)
            assert f.c_g >= 2.0 - 1e-9

    def test_adj_plus_id_gershgorin(self):
        for seed in range(5):
            rng = np.random.default_rng(200 + seed)
            n = int(rng.integers(3, 25))
            edges = {(int(rng.integers(0, i)), i) for i in range(1, n)}
            for u, v in rng.integers(0, n, size=(2 * n, 2)):
                if u != v:
                    edges.add((min(int(u), int(v)), max(int(u), int(v))))
            g = Graph(n, tuple(edges))
            f = build_filter(g, "adj_plus_id")
            assert f.c_g <= 1.0 + g.degrees().max() + 1e-9

    def test_symmetric_kinds_are_symmetric(self, triangle):
        g = Graph(5, ((0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (1, 3)))
        for kind in SYMMETRIC_KINDS:
            m = np.asarray(build_filter(g, kind).matrix)
            assert np.abs(m - m.T).max() <= 1e-12

    def test_isolated_node_rejected_for_normalized_kinds(self):
        g = Graph(3, ((0, 1),))  # node 2 isolated
        for kind in ("sym_plus_id", "rw_plus_id"):
            with pytest.raises(FilterError, match="node 2"):
                build_filter(g, kind)
        # self-loop kinds tolerate isolated nodes, unnormalized kind too
        build_filter(g, "sym_selfloop")
        build_filter(g, "adj_plus_id")

    def test_unknown_kind(self, triangle):
        with pytest.raises(FilterError, match="unknown filter kind"):
            build_filter(triangle, "chebyshev")

    def test_sparse_dense_same_norm(self):
        rng = np.random.default_rng(42)
        n = 40
        edges = {(int(rng.integers(0, i)), i) for i in range(1, n)}
        g = Graph(n, tuple(edges))
        for kind in FILTER_KINDS:
            dense = build_filter(g, kind, sparse=False)
            sparse = build_filter(g, kind, sparse=True)
            assert sparse.is_sparse and not dense.is_sparse
            assert np.allclose(sparse.matrix.toarray(), dense.matrix, atol=1e-15)
            assert dense.c_g == pytest.approx(sparse.c_g, rel=1e-10)

    def test_filter_norm_recompute_tighter_tol_agrees(self, triangle):
        f = build_filter(triangle, "rw_plus_id", tol=1e-8)
        tight = spectral_norm(f.matrix, tol=1e-12)
        assert abs(tight - filter_norm(f)) <= 1e-8 * max(1.0, tight)

import numpy as np
import pytest

from lggan import baselines as bl
from lggan import stats
from lggan.graphs import GraphDataset, LabeledGraph


def make(n, edges, labels=None, cls=0):
    return LabeledGraph.make(n, edges, labels or [0] * n, cls)


def er_graph(rng, n, p, labels=1):
    edges = [(u, v) for u in range(n) for v in range(u + 1, n)
             if rng.random() < p]
    return make(n, edges, list(rng.integers(0, labels, n)))


class TestErdosRenyi:
    def test_fit_mixed_densities(self):
        # K3 has density 1, P3 has density 2/3: mean 5/6
        k3 = make(3, [(0, 1), (1, 2), (0, 2)])
        p3 = make(3, [(0, 1), (1, 2)])
        params = bl.er_fit(GraphDataset([k3, p3], 1, 1, "x"))
        assert params.p == pytest.approx(5 / 6)
        assert sorted(params.n_dist) == [3, 3]

    def test_fit_needs_nontrivial_graph(self):
        data = GraphDataset([make(1, [])], 1, 1, "x")
        with pytest.raises(ValueError):
            bl.er_fit(data)

    def test_round_trip_density(self):
        rng = np.random.default_rng(0)
        data = GraphDataset([er_graph(rng, 20, 0.35) for _ in range(30)],
                            1, 1, "x")
        params = bl.er_fit(data)
        samples = [bl.er_sample(params, rng) for _ in range(200)]
        density = np.mean([2 * len(g.edges) / (g.n * (g.n - 1))
                           for g in samples])
        assert abs(density - params.p) < 0.02

    def test_sample_sizes_from_training(self):
        rng = np.random.default_rng(1)
        params = bl.ErParams([5, 9], 0.5)
        sizes = {bl.er_sample(params, rng).n for _ in range(50)}
        assert sizes <= {5, 9} and len(sizes) == 2

    def test_labels_and_classes_in_range(self):
        rng = np.random.default_rng(2)
        params = bl.ErParams([6], 0.5, num_node_labels=3, num_graph_classes=2)
        for _ in range(20):
            g = bl.er_sample(params, rng)
            assert all(0 <= lab < 3 for lab in g.node_labels)
            assert 0 <= g.graph_class < 2


class TestBarabasiAlbert:
    def test_m1_yields_tree(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            g = bl.ba_sample(bl.BaParams([12], 1), rng)
            assert len(g.edges) == g.n - 1
            # connected: every node after 0 attaches to an earlier node
            nbrs = g.neighbors()
            assert all(any(u < v for u in nbrs[v]) for v in range(1, g.n))

    def test_edge_count_formula(self):
        rng = np.random.default_rng(4)
        m = 3
        g = bl.ba_sample(bl.BaParams([20], m), rng)
        # seed clique m+1 nodes plus m edges for each later arrival
        assert len(g.edges) == m * (m + 1) // 2 + m * (20 - m - 1)

    def test_heavier_tail_than_er(self):
        # preferential attachment produces larger hubs than a density-matched
        # Erdos-Renyi model, comparing max degree across paired samples
        rng = np.random.default_rng(5)
        n, m = 40, 2
        ba_max, er_max = [], []
        for _ in range(30):
            g = bl.ba_sample(bl.BaParams([n], m), rng)
            ba_max.append(max(g.degree_sequence()))
            p = 2 * len(g.edges) / (n * (n - 1))
            h = er_graph(rng, n, p)
            er_max.append(max(h.degree_sequence()))
        assert np.mean(ba_max) > np.mean(er_max) + 2

    def test_invalid_sizes(self):
        rng = np.random.default_rng(6)
        with pytest.raises(ValueError, match="n > m"):
            bl.ba_sample(bl.BaParams([3], 5), rng)
        with pytest.raises(ValueError, match="m must be"):
            bl.ba_sample(bl.BaParams([5], 0), rng)


class TestMmsb:
    def test_k1_recovers_er_density(self):
        rng = np.random.default_rng(7)
        data = GraphDataset([er_graph(rng, 12, 0.4) for _ in range(10)],
                            1, 1, "x")
        params = bl.mmsb_fit(data, k=1, iters=20, rng=rng)
        total_dyads = sum(g.n * (g.n - 1) // 2 for g in data.graphs)
        total_edges = sum(len(g.edges) for g in data.graphs)
        want = (total_edges + 1.0) / (total_dyads + 2.0)
        assert params.b[0, 0] == pytest.approx(want, abs=1e-12)

    def test_k1_samples_match_er_distribution(self):
        # with one block the model degenerates to Erdos-Renyi: its samples
        # should sit no farther from the data than a density-matched E-R draw
        rng = np.random.default_rng(8)
        data = GraphDataset([er_graph(rng, 14, 0.35) for _ in range(25)],
                            1, 1, "x")
        params = bl.mmsb_fit(data, k=1, iters=20, rng=rng)
        samples = GraphDataset([bl.mmsb_sample(params, rng) for _ in range(25)],
                               1, 1, "s")
        er_ref = GraphDataset(
            [er_graph(rng, 14, params.b[0, 0]) for _ in range(25)], 1, 1, "e")
        mmsb_mmd = stats.evaluate(samples, data).degree
        er_mmd = stats.evaluate(er_ref, data).degree
        assert mmsb_mmd < 2.0 * er_mmd + 0.05

    def test_planted_two_cliques_recovered(self):
        # two 6-cliques joined by nothing: fitted block rates split into a
        # dense within-block rate and a sparse across-block rate
        rng = np.random.default_rng(9)
        edges = [(u, v) for u in range(6) for v in range(u + 1, 6)]
        edges += [(u, v) for u in range(6, 12) for v in range(u + 1, 12)]
        g = make(12, edges, labels=[0] * 6 + [1] * 6)
        data = GraphDataset([g] * 3, 2, 1, "x")
        params = bl.mmsb_fit(data, k=2, iters=150, rng=rng)
        rates = sorted([params.b[0, 0], params.b[1, 1], params.b[0, 1]])
        assert rates[0] < 0.15          # across blocks
        assert rates[-1] > 0.85         # within a block
        # blocks carry distinct label distributions
        assert params.label_dist_per_block.argmax(axis=1).tolist() in (
            [0, 1], [1, 0])

    def test_empty_graph_posterior(self):
        data = GraphDataset([make(5, [])], 1, 1, "x")
        params = bl.mmsb_fit(data, k=1, iters=10)
        # Beta(1,1) posterior mean with 10 dyads, 0 edges
        assert params.b[0, 0] == pytest.approx(1.0 / 12.0)

    def test_invalid_k(self):
        data = GraphDataset([make(3, [(0, 1)])], 1, 1, "x")
        with pytest.raises(ValueError, match="K"):
            bl.mmsb_fit(data, k=0)

    def test_sample_label_validity(self):
        rng = np.random.default_rng(10)
        data = GraphDataset(
            [er_graph(rng, 10, 0.3, labels=3) for _ in range(5)], 3, 2, "x")
        params = bl.mmsb_fit(data, k=2, iters=10, rng=rng)
        for _ in range(10):
            g = bl.mmsb_sample(params, rng)
            assert all(0 <= lab < 3 for lab in g.node_labels)
            assert 0 <= g.graph_class < 2


class TestParamFiles:
    def test_er_round_trip(self, tmp_path):
        p = tmp_path / "er.txt"
        params = bl.ErParams([4, 7], 0.123456789012345, 3, 2)
        bl.save_params(params, p)
        back = bl.load_params(p)
        assert isinstance(back, bl.ErParams)
        assert back == params

    def test_ba_round_trip(self, tmp_path):
        p = tmp_path / "ba.txt"
        params = bl.BaParams([10], 2, 1, 1)
        bl.save_params(params, p)
        assert bl.load_params(p) == params

    def test_mmsb_round_trip(self, tmp_path):
        rng = np.random.default_rng(11)
        p = tmp_path / "mmsb.txt"
        params = bl.MmsbParams(2, np.array([0.5, 0.5]),
                               rng.random((2, 2)), rng.dirichlet([1, 1], 2),
                               [5, 6], 2, 1)
        bl.save_params(params, p)
        back = bl.load_params(p)
        assert back.k == 2 and back.n_dist == [5, 6]
        np.testing.assert_array_equal(back.b, params.b)
        np.testing.assert_array_equal(back.label_dist_per_block,
                                      params.label_dist_per_block)
        np.testing.assert_array_equal(back.alpha, params.alpha)

    def test_bad_header(self, tmp_path):
        p = tmp_path / "x.txt"
        p.write_text("something else\n")
        with pytest.raises(ValueError, match="baseline parameter"):
            bl.load_params(p)

    def test_unknown_kind(self, tmp_path):
        p = tmp_path / "x.txt"
        p.write_text("lggan-baseline banana\nnum_node_labels 1\n"
                     "num_graph_classes 1\nn_dist 3\n")
        with pytest.raises(ValueError, match="banana"):
            bl.load_params(p)

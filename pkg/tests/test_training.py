import math

import numpy as np
import pytest

from lggan import autodiff as ad
from lggan import model as m
from lggan import training as tr
from lggan.autodiff import Tensor, grad
from lggan.graphs import GraphDataset, LabeledGraph


def scalars(values):
    return [Tensor(float(v)) for v in values]


def tiny_dataset(rng, count=12, n=5, classes=2, labels=2):
    graphs = []
    for i in range(count):
        edges = [(u, v) for u in range(n) for v in range(u + 1, n)
                 if rng.random() < 0.4]
        graphs.append(LabeledGraph.make(
            n, edges, list(rng.integers(0, labels, n)), i % classes))
    return GraphDataset(graphs, labels, classes, "tiny")


class TestAdversarialLosses:
    def test_vanilla_at_zero_logits(self):
        # sigmoid(0)=1/2 on both sides: loss_d = 2 log 2, loss_g = log 2
        loss_d, loss_g = tr.loss_gan(scalars([0, 0]), scalars([0, 0]))
        assert abs(loss_d.item() - 2 * math.log(2)) < 1e-12
        assert abs(loss_g.item() - math.log(2)) < 1e-12

    def test_vanilla_perfect_discriminator(self):
        loss_d, loss_g = tr.loss_gan(scalars([50.0]), scalars([-50.0]))
        assert loss_d.item() < 1e-9
        assert loss_g.item() > 10.0

    def test_minimax_value_at_zero(self):
        v = tr.loss_gan_minimax(scalars([0, 0]), scalars([0]))
        assert abs(v.item() + 2 * math.log(2)) < 1e-12

    def test_wasserstein_means(self):
        loss_d, loss_g = tr.loss_wasserstein(scalars([1.0, 3.0]),
                                             scalars([0.5, 0.5]))
        assert abs(loss_d.item() - (0.5 - 2.0)) < 1e-12
        assert abs(loss_g.item() + 0.5) < 1e-12

    def test_vanilla_gradient_direction(self):
        d_fake = [Tensor(0.0)]
        _, loss_g = tr.loss_gan([Tensor(0.0)], d_fake)
        g = grad(loss_g, d_fake)[0]
        # non-saturating generator loss pushes fake scores upward
        assert g.item() == pytest.approx(-0.5)


class TestCrossEntropy:
    def test_uniform_logits(self):
        assert abs(tr.cross_entropy(Tensor([0.0, 0.0, 0.0]), 1).item()
                   - math.log(3)) < 1e-12

    def test_hand_case(self):
        logits = np.array([1.0, 2.0, 3.0])
        want = math.log(np.exp(logits).sum()) - 3.0
        assert abs(tr.cross_entropy(Tensor(logits), 2).item() - want) < 1e-12

    def test_out_of_range(self):
        with pytest.raises(IndexError):
            tr.cross_entropy(Tensor([0.0, 0.0]), 5)

    def test_gradient_is_softmax_minus_onehot(self):
        logits = Tensor([0.2, -1.0, 0.5])
        g = grad(tr.cross_entropy(logits, 0), [logits])[0].data
        p = np.exp(logits.data) / np.exp(logits.data).sum()
        np.testing.assert_allclose(g, p - np.array([1.0, 0.0, 0.0]), atol=1e-12)


def small_disc(rng, n=3, variant_classes=0):
    return m.init_discriminator(rng, n, 2, 2, hidden=3, n_layers=2,
                                cond_classes=variant_classes)


def random_pair(rng, n=3, labels=2):
    a = rng.random((n, n))
    a = np.triu(a, 1)
    a = a + a.T
    l = rng.random((n, labels))
    l = l / l.sum(axis=1, keepdims=True)
    return a, l


class TestGradientPenalty:
    def test_constant_critic_pays_full_penalty(self):
        rng = np.random.default_rng(0)
        disc = small_disc(rng)
        for t in disc.tensors():
            t.data = np.zeros_like(t.data)
        real = [random_pair(rng)]
        fake = [random_pair(rng)]
        gp = tr.gradient_penalty(disc, real, fake, rng, lambda_gp=10.0)
        # zero critic gradient: (0 - 1)^2 * lambda
        assert abs(gp.item() - 10.0) < 1e-4

    def test_swap_with_mirrored_eps_is_identical(self):
        rng = np.random.default_rng(1)
        disc = small_disc(rng)
        real = [random_pair(rng) for _ in range(3)]
        fake = [random_pair(rng) for _ in range(3)]
        eps = [0.2, 0.7, 0.9]
        a = tr.gradient_penalty(disc, real, fake, rng, 10.0, eps_values=eps)
        b = tr.gradient_penalty(disc, fake, real, rng, 10.0,
                                eps_values=[1 - e for e in eps])
        assert abs(a.item() - b.item()) < 1e-12

    def test_matches_finite_differences_through_critic_weights(self):
        rng = np.random.default_rng(2)
        disc = small_disc(rng)
        real = [random_pair(rng) for _ in range(2)]
        fake = [random_pair(rng) for _ in range(2)]
        eps = [0.3, 0.8]
        w = disc.gcn_weights[1]

        def value(wv):
            saved = w.data.copy()
            w.data = wv
            out = tr.gradient_penalty(disc, real, fake, rng, 10.0,
                                      eps_values=eps).item()
            w.data = saved
            return out

        gp = tr.gradient_penalty(disc, real, fake, rng, 10.0, eps_values=eps)
        g = grad(gp, [w])[0].data
        w0 = w.data.copy()
        h = 1e-5
        for idx in [(0, 0), (1, 2), (2, 1)]:
            bump = np.zeros_like(w0)
            bump[idx] = h
            fd = (value(w0 + bump) - value(w0 - bump)) / (2 * h)
            assert abs(g[idx] - fd) <= 1e-4 * max(abs(fd), 1.0)

    def test_zero_lambda(self):
        rng = np.random.default_rng(3)
        disc = small_disc(rng)
        gp = tr.gradient_penalty(disc, [random_pair(rng)], [random_pair(rng)],
                                 rng, 0.0)
        assert gp.item() == 0.0


class TestConsistencyTerm:
    def test_zero_noise_inside_margin(self):
        rng = np.random.default_rng(4)
        disc = small_disc(rng)
        ct = tr.consistency_term(disc, [random_pair(rng)], rng,
                                 lambda_ct=2.0, margin=0.2, noise=0.0)
        assert ct.item() < 1e-5

    def test_noise_keeps_inputs_symmetric(self):
        rng = np.random.default_rng(5)
        disc = small_disc(rng)
        seen = []
        orig = m.discriminator_forward

        def spy(params, a, l, cls=None):
            seen.append(np.asarray(a.data if isinstance(a, Tensor) else a))
            return orig(params, a, l, cls)

        m.discriminator_forward, saved = spy, m.discriminator_forward
        try:
            tr.consistency_term(disc, [random_pair(rng)], rng, 2.0, 0.2,
                                noise=0.3)
        finally:
            m.discriminator_forward = saved
        assert seen
        for a in seen:
            np.testing.assert_allclose(a, a.T, atol=1e-12)
            np.testing.assert_allclose(np.diagonal(a), 0.0, atol=1e-12)

    def test_margin_hinge(self):
        # huge margin swallows any gap
        rng = np.random.default_rng(6)
        disc = small_disc(rng)
        ct = tr.consistency_term(disc, [random_pair(rng)], rng, 2.0,
                                 margin=1e6, noise=0.1)
        assert ct.item() == 0.0

    def test_differentiable_wrt_weights(self):
        rng = np.random.default_rng(7)
        disc = small_disc(rng)
        ct = tr.consistency_term(disc, [random_pair(rng)], rng, 2.0,
                                 margin=0.0, noise=0.2)
        grads = grad(ct, disc.tensors())
        assert any(np.abs(g.data).sum() > 0 for g in grads)


class TestFeatureMatching:
    def test_identical_features_zero(self):
        feats = [Tensor([1.0, 2.0]), Tensor([3.0, 4.0])]
        fm = tr.feature_matching(feats, list(feats), 1.0)
        assert fm.item() == 0.0

    def test_hand_case(self):
        real = [Tensor([1.0, 0.0]), Tensor([3.0, 0.0])]
        fake = [Tensor([0.0, 1.0]), Tensor([0.0, 3.0])]
        # mean diff = (2, -2): squared norm 8, scaled by lambda
        fm = tr.feature_matching(real, fake, 0.5)
        assert abs(fm.item() - 4.0) < 1e-12


class TestAdam:
    def test_first_step_is_signed_lr(self):
        p = Tensor(np.array([1.0, -2.0]))
        g = np.array([0.3, -4.0])
        state = tr.adam_init([p])
        tr.adam_step([p], [Tensor(g)], state, lr=0.1, beta1=0.5, beta2=0.9)
        # first Adam step moves each coordinate by ~lr against the gradient sign
        expected = np.array([1.0, -2.0]) - 0.1 * g / (np.abs(g) + 1e-8 * np.sqrt(0.1))
        np.testing.assert_allclose(p.data, expected, rtol=1e-6)

    def test_matches_reference_sequence(self):
        # independent re-implementation of Adam, run 5 steps
        p = Tensor(np.array([0.5]))
        ref = 0.5
        m_, v_ = 0.0, 0.0
        lr, b1, b2, eps = 0.01, 0.5, 0.9, 1e-8
        state = tr.adam_init([p])
        for t in range(1, 6):
            g = 2 * ref  # gradient of x^2 at the reference point
            m_ = b1 * m_ + (1 - b1) * g
            v_ = b2 * v_ + (1 - b2) * g * g
            ref = ref - lr * (m_ / (1 - b1 ** t)) / (
                np.sqrt(v_ / (1 - b2 ** t)) + eps)
            tr.adam_step([p], [Tensor(np.array([2 * p.data[0]]))], state,
                         lr, b1, b2)
            assert abs(p.data[0] - ref) < 1e-12


class TestConditionalInputs:
    def test_gan_passthrough(self):
        z = tr.conditional_inputs("gan", Tensor([1.0, 2.0]), None)
        np.testing.assert_array_equal(z.data, [1.0, 2.0])

    def test_cgan_concatenates(self):
        z = tr.conditional_inputs("cgan", Tensor([1.0]), np.array([0.0, 1.0]))
        np.testing.assert_array_equal(z.data, [1.0, 0.0, 1.0])

    def test_missing_class_rejected(self):
        with pytest.raises(ValueError):
            tr.conditional_inputs("acgan", Tensor([1.0]), None)


class TestConfig:
    def test_bad_variant(self):
        with pytest.raises(ValueError, match="variant"):
            tr.TrainConfig(variant="wgan").check()

    def test_negative_lambda(self):
        with pytest.raises(ValueError, match="lambda_gp"):
            tr.TrainConfig(lambda_gp=-1.0).check()

    def test_tiny_batch(self):
        with pytest.raises(ValueError, match="batch_size"):
            tr.TrainConfig(batch_size=1).check()


def fast_config(**kw):
    base = dict(variant="acgan", batch_size=2, d_steps_per_g_step=1,
                epochs=1, d_z=4, gen_hidden=(8,), disc_hidden=4,
                disc_layers=2, seed=0)
    base.update(kw)
    return tr.TrainConfig(**base)


class TestTrainLoop:
    @pytest.mark.parametrize("variant", ["gan", "cgan", "acgan"])
    def test_smoke_all_variants(self, variant):
        rng = np.random.default_rng(8)
        data = tiny_dataset(rng, count=4)
        state = tr.train(fast_config(variant=variant), data)
        assert state.step == 2
        for line in state.loss_lines:
            fields = line.split()
            assert len(fields) == 7
            assert all(np.isfinite(float(f)) for f in fields)

    def test_updates_change_weights(self):
        rng = np.random.default_rng(9)
        data = tiny_dataset(rng, count=4)
        config = fast_config()
        state = tr.init_state(config, data)
        before = [t.data.copy() for t in state.gen.tensors()]
        tr.train(config, data, state=state)
        after = [t.data for t in state.gen.tensors()]
        assert any(not np.array_equal(b, a) for b, a in zip(before, after))

    def test_seed_determinism(self):
        rng = np.random.default_rng(10)
        data = tiny_dataset(rng, count=4)
        s1 = tr.train(fast_config(), data)
        s2 = tr.train(fast_config(), data)
        for a, b in zip(s1.gen.tensors() + s1.disc.tensors(),
                        s2.gen.tensors() + s2.disc.tensors()):
            np.testing.assert_array_equal(a.data, b.data)
        assert s1.loss_lines == s2.loss_lines

    def test_different_seeds_diverge(self):
        rng = np.random.default_rng(11)
        data = tiny_dataset(rng, count=4)
        s1 = tr.train(fast_config(seed=1), data)
        s2 = tr.train(fast_config(seed=2), data)
        assert any(not np.array_equal(a.data, b.data)
                   for a, b in zip(s1.gen.tensors(), s2.gen.tensors()))

    def test_vanilla_reduction_zeroes_extra_terms(self):
        rng = np.random.default_rng(12)
        data = tiny_dataset(rng, count=4)
        config = fast_config(variant="gan", vanilla_gan=True, lambda_gp=0.0,
                             lambda_ct=0.0, lambda_fm=0.0)
        state = tr.train(config, data)
        for line in state.loss_lines:
            _step, loss_d, loss_g, gp, ct, l_c, fm = line.split()
            assert float(gp) == 0.0 and float(ct) == 0.0
            assert float(l_c) == 0.0 and float(fm) == 0.0
            assert float(loss_d) > 0.0 and float(loss_g) > 0.0

    def test_loss_sink_receives_lines(self):
        rng = np.random.default_rng(13)
        data = tiny_dataset(rng, count=4)
        lines = []
        state = tr.train(fast_config(), data, loss_sink=lines.append)
        assert lines == state.loss_lines

    def test_checkpoint_sink_cadence(self):
        rng = np.random.default_rng(14)
        data = tiny_dataset(rng, count=8)
        hits = []
        tr.train(fast_config(epochs=1, checkpoint_every=2),
                 data, checkpoint_sink=lambda s: hits.append(s.step))
        assert hits == [2, 4]

    def test_empty_dataset_rejected(self):
        data = GraphDataset([], 1, 1, "empty")
        with pytest.raises(ValueError, match="empty"):
            tr.train(fast_config(), data)

    def test_oversized_graph_rejected(self):
        rng = np.random.default_rng(15)
        data = tiny_dataset(rng, count=4, n=6)
        with pytest.raises(ValueError, match="N_max"):
            tr.train(fast_config(n_max=4), data)

"""Adversarial objectives (vanilla, conditional, auxiliary-classifier),
Wasserstein gradient penalty, consistency term, stabilization terms, and the
alternating training loop."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor, grad
from . import model as m
from .graphs import canonicalize, to_dense
from .rngtools import split_rng

LOG_CLAMP = 1e-12


class DivergenceError(RuntimeError):
    def __init__(self, step, message="non-finite loss"):
        super().__init__(f"{message} at step {step}")
        self.step = step


@dataclass
class TrainConfig:
    variant: str = "acgan"            # gan | cgan | acgan
    batch_size: int = 8
    d_steps_per_g_step: int = 5
    lr: float = 1e-4
    beta1: float = 0.5
    beta2: float = 0.9
    lambda_gp: float = 10.0
    lambda_ct: float = 2.0
    ct_margin: float = 0.2
    ct_noise: float = 0.05
    lambda_fm: float = 1.0
    epochs: int = 10
    seed: int = 0
    d_z: int = 16
    n_max: int = 0                    # 0: use max training-graph size
    gen_hidden: tuple = (64, 64)
    disc_hidden: int = 32
    disc_layers: int = 3
    aggregation: str = "maxpool"
    residual: bool = True
    vanilla_gan: bool = False         # use Eq.-1-style loss instead of Wasserstein
    uniform_class_prior: bool = False
    checkpoint_every: int = 0         # generator steps; 0 disables periodic dumps

    def check(self):
        if self.variant not in ("gan", "cgan", "acgan"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.batch_size < 2:
            raise ValueError("batch_size must be >= 2")
        for name in ("lambda_gp", "lambda_ct", "lambda_fm", "ct_margin"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


@dataclass
class TrainState:
    gen: m.GeneratorParams
    disc: m.DiscriminatorParams
    adam_gen: dict
    adam_disc: dict
    step: int = 0
    loss_lines: list = field(default_factory=list)


def _stack_scalars(values):
    return ad.concat([ad.reshape(v, (1,)) for v in values])


def _clamped_log(t):
    return ad.tlog(ad.maximum(t, LOG_CLAMP))


def loss_gan(d_real, d_fake):
    """Eq.-1-style objective on sigmoid-squashed critic values; the generator
    term is the non-saturating form."""
    pr = ad.sigmoid(_stack_scalars(d_real))
    pf = ad.sigmoid(_stack_scalars(d_fake))
    loss_d = -tmean(_clamped_log(pr)) - tmean(_clamped_log(1.0 - pf))
    loss_g = -tmean(_clamped_log(pf))
    return loss_d, loss_g


def loss_gan_minimax(d_real, d_fake):
    """The literal minimax value V(D, G): discriminator ascends it, the
    generator of the saturating form descends it."""
    pr = ad.sigmoid(_stack_scalars(d_real))
    pf = ad.sigmoid(_stack_scalars(d_fake))
    return tmean(_clamped_log(pr)) + tmean(_clamped_log(1.0 - pf))


def loss_wasserstein(d_real, d_fake):
    loss_d = tmean(_stack_scalars(d_fake)) - tmean(_stack_scalars(d_real))
    loss_g = -tmean(_stack_scalars(d_fake))
    return loss_d, loss_g


def tmean(t):
    return ad.tmean(t)


def conditional_inputs(variant, z, class_onehot):
    """Generator input per variant: conditional variants concatenate the
    class one-hot to the latent vector."""
    z = ad.as_tensor(z)
    if variant == "gan":
        return z
    if class_onehot is None:
        raise ValueError(f"variant {variant!r} needs a class one-hot")
    return ad.concat([z, ad.as_tensor(class_onehot)])


def cross_entropy(logits, class_index):
    """-log softmax(logits)[class], via a numerically safe log-sum-exp."""
    n = logits.shape[0]
    if not (0 <= class_index < n):
        raise IndexError(f"class {class_index} out of range [0,{n})")
    shift = float(logits.data.max())
    lse = ad.tlog(ad.tsum(ad.texp(logits - shift))) + shift
    picked = ad.reshape(ad.narrow(logits, 0, class_index, 1), ())
    return lse - picked


def loss_acgan_class(class_logits_real, true_classes,
                     class_logits_fake, sampled_classes):
    terms = [cross_entropy(lg, c) for lg, c in zip(class_logits_real, true_classes)]
    terms += [cross_entropy(lg, c) for lg, c in zip(class_logits_fake, sampled_classes)]
    return tmean(_stack_scalars(terms))


def gradient_penalty(disc, real_pairs, fake_pairs, rng, lambda_gp,
                     variant="gan", classes=None, eps_values=None):
    """WGAN-GP term on (A, L) interpolates; differentiable wrt critic weights.

    real_pairs / fake_pairs: lists of (A, L) numpy arrays. eps_values allows
    tests to pin the interpolation coefficients.
    """
    terms = []
    for i, ((ra, rl), (fa, fl)) in enumerate(zip(real_pairs, fake_pairs)):
        eps = float(rng.random()) if eps_values is None else float(eps_values[i])
        a_hat = Tensor(eps * ra + (1.0 - eps) * fa)
        l_hat = Tensor(eps * rl + (1.0 - eps) * fl)
        cls = None
        if variant == "cgan":
            cls = np.zeros(disc.cond_classes)
            cls[classes[i]] = 1.0
        out = m.discriminator_forward(disc, a_hat, l_hat, cls)
        ga, gl = grad(out.realness, [a_hat, l_hat])
        norm = ad.tsqrt(ad.tsum(ga * ga) + ad.tsum(gl * gl) + ad.NORM_EPS)
        terms.append((norm - 1.0) ** 2.0)
    return lambda_gp * tmean(_stack_scalars(terms))


def consistency_term(disc, real_pairs, rng, lambda_ct, margin, noise=0.05,
                     variant="gan", classes=None):
    """CT-GAN term: critic evaluated on two perturbed copies of each real
    sample (additive uniform input noise stands in for dropout)."""
    terms = []
    for i, (ra, rl) in enumerate(real_pairs):
        cls = None
        if variant == "cgan":
            cls = np.zeros(disc.cond_classes)
            cls[classes[i]] = 1.0
        outs = []
        for _ in range(2):
            na = rng.uniform(-noise, noise, size=ra.shape)
            na = np.triu(na, 1)
            na = na + na.T
            nl = rng.uniform(-noise, noise, size=rl.shape)
            outs.append(m.discriminator_forward(disc, Tensor(ra + na),
                                                Tensor(rl + nl), cls))
        d_gap = ad.tsqrt((outs[0].realness - outs[1].realness) ** 2.0 + ad.NORM_EPS)
        f_gap = ad.l2norm(outs[0].features - outs[1].features)
        terms.append(ad.relu(d_gap + 0.1 * f_gap - margin))
    return lambda_ct * tmean(_stack_scalars(terms))


def feature_matching(real_features, fake_features, lambda_fm):
    rf = tmean_rows(real_features)
    ff = tmean_rows(fake_features)
    diff = rf - ff
    return lambda_fm * ad.tsum(diff * diff)


def tmean_rows(feature_list):
    stacked = ad.concat([ad.reshape(f, (1, f.shape[0])) for f in feature_list], axis=0)
    return ad.tmean(stacked, axis=0)


# optimizer ----------------------------------------------------------

def adam_init(tensors):
    return {"t": 0,
            "m": [np.zeros(t.data.shape) for t in tensors],
            "v": [np.zeros(t.data.shape) for t in tensors]}


def adam_step(tensors, grads, state, lr, beta1, beta2, eps=1e-8):
    state["t"] += 1
    t = state["t"]
    for i, (p, g) in enumerate(zip(tensors, grads)):
        gd = g.data if isinstance(g, Tensor) else g
        state["m"][i] = beta1 * state["m"][i] + (1 - beta1) * gd
        state["v"][i] = beta2 * state["v"][i] + (1 - beta2) * gd * gd
        mhat = state["m"][i] / (1 - beta1 ** t)
        vhat = state["v"][i] / (1 - beta2 ** t)
        p.data = p.data - lr * mhat / (np.sqrt(vhat) + eps)


# training loop ------------------------------------------------------

def _class_onehot(n_classes, c):
    v = np.zeros(n_classes)
    v[c] = 1.0
    return v


def init_state(config: TrainConfig, data, rng=None) -> TrainState:
    config.check()
    n_max = config.n_max or max(g.n for g in data.graphs)
    rng = rng if rng is not None else split_rng(config.seed, "init")
    cond = data.num_graph_classes if config.variant in ("cgan", "acgan") else 0
    gen = m.init_generator(rng, n_max, data.num_node_labels, config.d_z,
                           cond_classes=cond, hidden=tuple(config.gen_hidden))
    disc_cond = data.num_graph_classes if config.variant == "cgan" else 0
    disc = m.init_discriminator(rng, n_max, data.num_node_labels,
                                data.num_graph_classes,
                                hidden=config.disc_hidden,
                                n_layers=config.disc_layers,
                                aggregation=config.aggregation,
                                residual=config.residual,
                                cond_classes=disc_cond)
    return TrainState(gen, disc, adam_init(gen.tensors()),
                      adam_init(disc.tensors()))


def _sample_class(rng, prior):
    return int(rng.choice(len(prior), p=prior))


def _generate_fake(config, state, rng, prior, detach):
    z = rng.standard_normal(config.d_z)
    c = _sample_class(rng, prior)
    onehot = (_class_onehot(len(prior), c)
              if config.variant in ("cgan", "acgan") else None)
    a, l = m.generator_forward(state.gen, Tensor(z), onehot)
    if detach:
        a, l = Tensor(a.data.copy()), Tensor(l.data.copy())
    return a, l, c


def _adversarial_losses(config, d_real, d_fake):
    if config.vanilla_gan:
        return loss_gan(d_real, d_fake)
    return loss_wasserstein(d_real, d_fake)


def train(config: TrainConfig, data, loss_sink=None, checkpoint_sink=None,
          state: TrainState | None = None) -> TrainState:
    """Alternating critic/generator optimization; deterministic given seed.

    loss_sink: optional callable receiving one formatted loss-curve line per
    generator step. checkpoint_sink: optional callable(state) invoked every
    config.checkpoint_every generator steps.
    """
    config.check()
    if not data.graphs:
        raise ValueError("empty training dataset")
    n_max = config.n_max or max(g.n for g in data.graphs)
    if any(g.n > n_max for g in data.graphs):
        raise ValueError(f"training graph exceeds N_max={n_max}")
    if state is None:
        state = init_state(config, data)

    rng = split_rng(config.seed, f"train-loop-{state.step}")
    counts = np.bincount([g.graph_class for g in data.graphs],
                         minlength=data.num_graph_classes).astype(float)
    if config.uniform_class_prior or counts.sum() == 0:
        prior = np.full(data.num_graph_classes, 1.0 / data.num_graph_classes)
    else:
        prior = counts / counts.sum()

    steps_per_epoch = max(1, len(data.graphs) // config.batch_size)
    for _epoch in range(config.epochs):
        ordered = [canonicalize(g, rng) for g in data.graphs]
        dense = [to_dense(g, n_max, data.num_node_labels) for g in ordered]
        for _it in range(steps_per_epoch):
            last = {}
            for _d in range(config.d_steps_per_g_step):
                last = _critic_step(config, state, data, dense, prior, rng)
            gen_losses = _generator_step(config, state, data, dense, prior, rng)
            state.step += 1
            line = ("%d %.6g %.6g %.6g %.6g %.6g %.6g"
                    % (state.step, last.get("loss_d", 0.0),
                       gen_losses["loss_g"], last.get("gp", 0.0),
                       last.get("ct", 0.0),
                       last.get("l_c", 0.0) + gen_losses.get("l_c", 0.0),
                       gen_losses.get("fm", 0.0)))
            state.loss_lines.append(line)
            if loss_sink:
                loss_sink(line)
            if not all(np.isfinite(v) for v in
                       list(last.values()) + list(gen_losses.values())):
                raise DivergenceError(state.step)
            if (config.checkpoint_every and checkpoint_sink
                    and state.step % config.checkpoint_every == 0):
                checkpoint_sink(state)
    return state


def _critic_step(config, state, data, dense, prior, rng):
    idx = rng.integers(len(dense), size=config.batch_size)
    real = [dense[i] for i in idx]
    d_real, real_logits, real_classes, real_pairs = [], [], [], []
    for dg in real:
        cls = (_class_onehot(data.num_graph_classes, dg.graph_class)
               if config.variant == "cgan" else None)
        out = m.discriminator_forward(state.disc, dg.adj, dg.labels, cls)
        d_real.append(out.realness)
        real_logits.append(out.class_logits)
        real_classes.append(dg.graph_class)
        real_pairs.append((dg.adj, dg.labels))

    d_fake, fake_logits, fake_classes, fake_pairs = [], [], [], []
    for _ in range(config.batch_size):
        a, l, c = _generate_fake(config, state, rng, prior, detach=True)
        cls = (_class_onehot(data.num_graph_classes, c)
               if config.variant == "cgan" else None)
        out = m.discriminator_forward(state.disc, a, l, cls)
        d_fake.append(out.realness)
        fake_logits.append(out.class_logits)
        fake_classes.append(c)
        fake_pairs.append((a.data, l.data))

    loss_d, _ = _adversarial_losses(config, d_real, d_fake)
    gp = gradient_penalty(state.disc, real_pairs, fake_pairs, rng,
                          config.lambda_gp, config.variant, real_classes)
    ct = consistency_term(state.disc, real_pairs, rng, config.lambda_ct,
                          config.ct_margin, config.ct_noise,
                          config.variant, real_classes)
    total = loss_d + gp + ct
    scalars = {"loss_d": loss_d.item(), "gp": gp.item(), "ct": ct.item()}
    if config.variant == "acgan":
        l_c = loss_acgan_class(real_logits, real_classes,
                               fake_logits, fake_classes)
        total = total + l_c
        scalars["l_c"] = l_c.item()
    grads = grad(total, state.disc.tensors())
    adam_step(state.disc.tensors(), grads, state.adam_disc,
              config.lr, config.beta1, config.beta2)
    return scalars


def _generator_step(config, state, data, dense, prior, rng):
    d_fake, fake_logits, fake_classes, fake_features = [], [], [], []
    for _ in range(config.batch_size):
        a, l, c = _generate_fake(config, state, rng, prior, detach=False)
        cls = (_class_onehot(data.num_graph_classes, c)
               if config.variant == "cgan" else None)
        out = m.discriminator_forward(state.disc, a, l, cls)
        d_fake.append(out.realness)
        fake_logits.append(out.class_logits)
        fake_classes.append(c)
        fake_features.append(out.features)

    idx = rng.integers(len(dense), size=config.batch_size)
    real_features = []
    for i in idx:
        dg = dense[i]
        cls = (_class_onehot(data.num_graph_classes, dg.graph_class)
               if config.variant == "cgan" else None)
        out = m.discriminator_forward(state.disc, dg.adj, dg.labels, cls)
        real_features.append(Tensor(out.features.data.copy()))

    if config.vanilla_gan:
        _, loss_g = loss_gan([Tensor(0.0)] * len(d_fake), d_fake)
    else:
        _, loss_g = loss_wasserstein(d_fake, d_fake)
    scalars = {"loss_g": loss_g.item()}
    total = loss_g
    if config.lambda_fm > 0:
        fm = feature_matching(real_features, fake_features, config.lambda_fm)
        total = total + fm
        scalars["fm"] = fm.item()
    if config.variant == "acgan":
        l_c = tmean(_stack_scalars(
            [cross_entropy(lg, c) for lg, c in zip(fake_logits, fake_classes)]))
        total = total + l_c
        scalars["l_c"] = l_c.item()
    grads = grad(total, state.gen.tensors())
    adam_step(state.gen.tensors(), grads, state.adam_gen,
              config.lr, config.beta1, config.beta2)
    return scalars

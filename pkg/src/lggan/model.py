"""LGGAN generator (MLP latent -> dense labeled graph) and residual-GCN
discriminator, both written over the autodiff primitives."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .graphs import DenseGraph, LabeledGraph, prune_isolated


@dataclass
class GeneratorParams:
    n_max: int
    num_node_labels: int
    d_z: int
    cond_classes: int            # 0 for the unconditional variant
    weights: list = field(default_factory=list)   # alternating W, b Tensors

    def tensors(self):
        return self.weights

    def tensor_dict(self):
        out = {}
        for i in range(0, len(self.weights), 2):
            out[f"gen.W{i // 2}"] = self.weights[i]
            out[f"gen.b{i // 2}"] = self.weights[i + 1]
        return out


@dataclass
class DiscriminatorParams:
    n_max: int
    num_node_labels: int
    num_graph_classes: int
    hidden: int
    n_layers: int
    aggregation: str = "maxpool"   # maxpool | concat
    residual: bool = True
    cond_classes: int = 0          # appended to readout for the C-GAN variant
    gcn_weights: list = field(default_factory=list)       # W^(l)
    score_w: Tensor = None
    score_b: Tensor = None
    class_w: Tensor = None
    class_b: Tensor = None

    def tensors(self):
        return list(self.gcn_weights) + [self.score_w, self.score_b,
                                         self.class_w, self.class_b]

    def tensor_dict(self):
        out = {f"disc.W{i}": w for i, w in enumerate(self.gcn_weights)}
        out.update({"disc.score_w": self.score_w, "disc.score_b": self.score_b,
                    "disc.class_w": self.class_w, "disc.class_b": self.class_b})
        return out


@dataclass
class DiscriminatorOutput:
    realness: Tensor       # scalar critic value
    class_logits: Tensor   # (G_classes,)
    features: Tensor       # graph-level representation fed to the heads


def _glorot(rng, shape):
    scale = np.sqrt(2.0 / sum(shape))
    return Tensor(rng.normal(0.0, scale, size=shape))


def init_generator(rng, n_max, num_node_labels, d_z, cond_classes=0,
                   hidden=(64, 64)) -> GeneratorParams:
    n_pairs = n_max * (n_max - 1) // 2
    dims = [d_z + cond_classes, *hidden, n_pairs + n_max * num_node_labels]
    weights = []
    for din, dout in zip(dims[:-1], dims[1:]):
        weights.append(_glorot(rng, (din, dout)))
        weights.append(Tensor(np.zeros(dout)))
    return GeneratorParams(n_max, num_node_labels, d_z, cond_classes, weights)


def init_discriminator(rng, n_max, num_node_labels, num_graph_classes,
                       hidden=32, n_layers=3, aggregation="maxpool",
                       residual=True, cond_classes=0) -> DiscriminatorParams:
    # first-layer weight has tied rows (shape (1, hidden)): identity input
    # features times a row-tied weight equal constant node features, which
    # keeps the whole network exactly permutation-invariant
    gcn = [_glorot(rng, (1, hidden))]
    for _ in range(n_layers - 1):
        gcn.append(_glorot(rng, (hidden, hidden)))
    agg_dim = hidden if aggregation == "maxpool" else hidden * n_layers
    feat_dim = agg_dim + num_node_labels + cond_classes
    return DiscriminatorParams(
        n_max, num_node_labels, num_graph_classes, hidden, n_layers,
        aggregation, residual, cond_classes,
        gcn_weights=gcn,
        score_w=_glorot(rng, (feat_dim, 1)),
        score_b=Tensor(np.zeros(1)),
        class_w=_glorot(rng, (feat_dim, num_graph_classes)),
        class_b=Tensor(np.zeros(num_graph_classes)),
    )


def _pair_scatter(n):
    """Constant (n*n, n_pairs) matrix mapping upper-triangle logits to a
    flattened symmetric matrix with zero diagonal."""
    n_pairs = n * (n - 1) // 2
    m = np.zeros((n * n, n_pairs))
    k = 0
    for i in range(n):
        for j in range(i + 1, n):
            m[i * n + j, k] = 1.0
            m[j * n + i, k] = 1.0
            k += 1
    return m


_SCATTER_CACHE = {}


def pair_scatter(n):
    if n not in _SCATTER_CACHE:
        _SCATTER_CACHE[n] = Tensor(_pair_scatter(n))
    return _SCATTER_CACHE[n]


def generator_forward(params: GeneratorParams, z, class_onehot=None):
    """Latent vector -> (A_cont (N,N) symmetric in (0,1), L_cont (N,C) row-softmax)."""
    z = ad.as_tensor(z)
    if z.shape != (params.d_z,):
        raise ad.ShapeError(f"latent shape {z.shape}, expected ({params.d_z},)")
    if params.cond_classes:
        if class_onehot is None:
            raise ValueError("conditional generator needs a class one-hot")
        h = ad.concat([z, ad.as_tensor(class_onehot)])
    else:
        h = z
    h = ad.reshape(h, (1, h.shape[0]))
    nw = len(params.weights) // 2
    for i in range(nw):
        w, b = params.weights[2 * i], params.weights[2 * i + 1]
        h = h @ w + ad.reshape(b, (1, b.shape[0]))
        if i < nw - 1:
            h = ad.relu(h)
    n, c = params.n_max, params.num_node_labels
    n_pairs = n * (n - 1) // 2
    pair_logits = ad.reshape(ad.narrow(h, 1, 0, n_pairs), (n_pairs, 1))
    label_logits = ad.reshape(ad.narrow(h, 1, n_pairs, n * c), (n, c))
    a_flat = pair_scatter(n) @ pair_logits
    a_cont = ad.sigmoid(ad.reshape(a_flat, (n, n)))
    # zero diagonal: sigmoid(0)=0.5 on unscattered slots, mask it out
    off_diag = Tensor(1.0 - np.eye(n))
    a_cont = a_cont * off_diag
    l_cont = ad.softmax_rows(label_logits)
    return a_cont, l_cont


def discretize(a_cont, l_cont, threshold=0.5, graph_class=0) -> LabeledGraph:
    """Threshold edges, argmax labels, then drop isolated nodes."""
    a = a_cont.data if isinstance(a_cont, Tensor) else np.asarray(a_cont)
    l = l_cont.data if isinstance(l_cont, Tensor) else np.asarray(l_cont)
    n = a.shape[0]
    adj = (a > threshold).astype(float)
    np.fill_diagonal(adj, 0.0)
    adj = np.maximum(adj, adj.T)
    labels = np.zeros_like(l)
    labels[np.arange(n), l.argmax(axis=1)] = 1.0
    dense = DenseGraph(adj, labels, np.ones(n, dtype=bool), graph_class)
    return prune_isolated(dense)


def normalized_operator(a_dense):
    """D̃^{-1/2} (A + I) D̃^{-1/2} as a differentiable tensor."""
    a = ad.as_tensor(a_dense)
    n = a.shape[0]
    a_tilde = a + Tensor(np.eye(n))
    d = ad.tsum(a_tilde, axis=1)
    d_inv_sqrt = ad.power(d, -0.5)
    col = ad.reshape(d_inv_sqrt, (n, 1))
    row = ad.reshape(d_inv_sqrt, (1, n))
    return a_tilde * col * row


def gcn_layer(h, a_hat, w):
    """One propagation step: relu(Â H W), with Â precomputed."""
    return ad.relu(a_hat @ h @ w)


def discriminator_forward(params: DiscriminatorParams, a_dense, l_dense,
                          class_onehot=None) -> DiscriminatorOutput:
    a = ad.as_tensor(a_dense)
    l = ad.as_tensor(l_dense)
    n = params.n_max
    if a.shape != (n, n):
        raise ad.ShapeError(f"adjacency shape {a.shape}, expected ({n},{n})")
    if l.shape != (n, params.num_node_labels):
        raise ad.ShapeError(
            f"label shape {l.shape}, expected ({n},{params.num_node_labels})")
    a_hat = normalized_operator(a)
    h = Tensor(np.ones((n, 1)))   # identity features times row-tied W^(1)
    layer_outputs = []
    for li, w in enumerate(params.gcn_weights):
        out = gcn_layer(h, a_hat, w)
        if params.residual and li > 0:
            out = out + h
        layer_outputs.append(out)
        h = out
    if params.aggregation == "maxpool":
        agg = ad.maxpool(layer_outputs)
    elif params.aggregation == "concat":
        agg = ad.concat(layer_outputs, axis=1)
    else:
        raise ValueError(f"unknown aggregation {params.aggregation!r}")
    z_g = ad.concat([agg, l], axis=1)
    graph_vec = ad.tsum(z_g, axis=0)
    if params.cond_classes:
        if class_onehot is None:
            raise ValueError("conditional discriminator needs a class one-hot")
        graph_vec = ad.concat([graph_vec, ad.as_tensor(class_onehot)])
    gv = ad.reshape(graph_vec, (1, graph_vec.shape[0]))
    realness = ad.reshape(gv @ params.score_w + ad.reshape(params.score_b, (1, 1)), ())
    logits = ad.reshape(gv @ params.class_w +
                        ad.reshape(params.class_b, (1, params.num_graph_classes)),
                        (params.num_graph_classes,))
    return DiscriminatorOutput(realness, logits, graph_vec)

"""Classical baseline generators: Erdos-Renyi, Barabasi-Albert, and a
mixed-membership stochastic block model fitted by collapsed Gibbs sampling
(the only baseline that also produces node labels)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graphs import GraphDataset, LabeledGraph

MMSB_DEFAULT_ITERS = 500
MMSB_DEFAULT_ALPHA = 0.5


@dataclass
class ErParams:
    n_dist: list               # empirical training sizes
    p: float
    num_node_labels: int = 1
    num_graph_classes: int = 1


@dataclass
class BaParams:
    n_dist: list
    m: int
    num_node_labels: int = 1
    num_graph_classes: int = 1


@dataclass
class MmsbParams:
    k: int
    alpha: np.ndarray                  # (K,) Dirichlet concentration
    b: np.ndarray                      # (K, K) block connection probabilities
    label_dist_per_block: np.ndarray   # (K, C) row-stochastic
    n_dist: list = field(default_factory=list)
    num_node_labels: int = 1
    num_graph_classes: int = 1


def _draw_n(n_dist, rng):
    return int(n_dist[int(rng.integers(len(n_dist)))])


def er_fit(data: GraphDataset) -> ErParams:
    densities = [2 * len(g.edges) / (g.n * (g.n - 1))
                 for g in data.graphs if g.n > 1]
    if not densities:
        raise ValueError("er_fit needs at least one graph with n >= 2")
    return ErParams([g.n for g in data.graphs], float(np.mean(densities)),
                    data.num_node_labels, data.num_graph_classes)


def er_sample(params: ErParams, rng) -> LabeledGraph:
    n = _draw_n(params.n_dist, rng)
    edges = [(u, v) for u in range(n) for v in range(u + 1, n)
             if rng.random() < params.p]
    labels = rng.integers(params.num_node_labels, size=n)
    klass = int(rng.integers(params.num_graph_classes))
    return LabeledGraph.make(n, edges, [int(x) for x in labels], klass)


def ba_sample(params: BaParams, rng) -> LabeledGraph:
    n = _draw_n(params.n_dist, rng)
    m = params.m
    if m < 1:
        raise ValueError("m must be >= 1")
    if n <= m:
        raise ValueError(f"need n > m, got n={n}, m={m}")
    edges = [(u, v) for u in range(m + 1) for v in range(u + 1, m + 1)]
    degree = np.zeros(n)
    degree[:m + 1] = m
    for v in range(m + 1, n):
        weights = degree[:v] / degree[:v].sum()
        targets = rng.choice(v, size=m, replace=False, p=weights)
        for u in targets:
            edges.append((int(u), v))
            degree[u] += 1
        degree[v] = m
    labels = rng.integers(params.num_node_labels, size=n)
    klass = int(rng.integers(params.num_graph_classes))
    return LabeledGraph.make(n, edges, [int(x) for x in labels], klass)


# MMSB ---------------------------------------------------------------

def mmsb_fit(data: GraphDataset, k: int, iters: int = MMSB_DEFAULT_ITERS,
             rng=None, alpha: float = MMSB_DEFAULT_ALPHA) -> MmsbParams:
    """Collapsed Gibbs over per-edge-slot block memberships with Beta(1,1)
    priors on block connection probabilities and fixed symmetric alpha."""
    if k < 1:
        raise ValueError("K must be >= 1")
    rng = rng if rng is not None else np.random.default_rng(0)

    # dyad list: (graph, i, j, edge?) for i < j, with per-node global ids
    offsets = []
    total_nodes = 0
    for g in data.graphs:
        offsets.append(total_nodes)
        total_nodes += g.n
    dyads = []
    for gi, g in enumerate(data.graphs):
        edge_set = set(g.edges)
        base = offsets[gi]
        for i in range(g.n):
            for j in range(i + 1, g.n):
                dyads.append((base + i, base + j, (i, j) in edge_set))

    node_counts = np.zeros((total_nodes, k))       # membership usage
    edge_counts = np.zeros((k, k))                 # edges per block pair
    pair_counts = np.zeros((k, k))                 # dyads per block pair
    z = np.zeros((len(dyads), 2), dtype=int)

    def block_pair(a, b):
        return (min(a, b), max(a, b))

    # init
    for t, (u, v, is_edge) in enumerate(dyads):
        zu, zv = rng.integers(k), rng.integers(k)
        z[t] = (zu, zv)
        node_counts[u, zu] += 1
        node_counts[v, zv] += 1
        bp = block_pair(zu, zv)
        pair_counts[bp] += 1
        if is_edge:
            edge_counts[bp] += 1

    for _ in range(iters):
        for t, (u, v, is_edge) in enumerate(dyads):
            for side, node, other_side in ((0, u, 1), (1, v, 0)):
                old = z[t, side]
                fixed = z[t, other_side]
                bp = block_pair(old, fixed)
                node_counts[node, old] -= 1
                pair_counts[bp] -= 1
                if is_edge:
                    edge_counts[bp] -= 1
                probs = np.empty(k)
                for cand in range(k):
                    cbp = block_pair(cand, fixed)
                    e, p = edge_counts[cbp], pair_counts[cbp]
                    rate = (e + 1.0) / (p + 2.0) if is_edge \
                        else (p - e + 1.0) / (p + 2.0)
                    probs[cand] = (node_counts[node, cand] + alpha) * rate
                probs /= probs.sum()
                new = int(rng.choice(k, p=probs))
                z[t, side] = new
                nbp = block_pair(new, fixed)
                node_counts[node, new] += 1
                pair_counts[nbp] += 1
                if is_edge:
                    edge_counts[nbp] += 1

    b = np.zeros((k, k))
    for a in range(k):
        for c in range(a, k):
            b[a, c] = b[c, a] = (edge_counts[a, c] + 1.0) / (pair_counts[a, c] + 2.0)

    c_labels = data.num_node_labels
    label_dist = np.zeros((k, c_labels))
    for gi, g in enumerate(data.graphs):
        base = offsets[gi]
        for i in range(g.n):
            weights = node_counts[base + i]
            total = weights.sum()
            if total > 0:
                label_dist[:, g.node_labels[i]] += weights / total
    label_dist += 1e-9                      # keep rows defined for empty blocks
    label_dist /= label_dist.sum(axis=1, keepdims=True)

    return MmsbParams(k, np.full(k, alpha), b, label_dist,
                      [g.n for g in data.graphs],
                      data.num_node_labels, data.num_graph_classes)


def mmsb_sample(params: MmsbParams, rng) -> LabeledGraph:
    n = _draw_n(params.n_dist, rng)
    memberships = rng.dirichlet(params.alpha, size=n)
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            ki = int(rng.choice(params.k, p=memberships[i]))
            kj = int(rng.choice(params.k, p=memberships[j]))
            if rng.random() < params.b[ki, kj]:
                edges.append((i, j))
    labels = []
    for i in range(n):
        block = int(memberships[i].argmax())
        labels.append(int(rng.choice(params.num_node_labels,
                                     p=params.label_dist_per_block[block])))
    klass = int(rng.integers(params.num_graph_classes))
    return LabeledGraph.make(n, edges, labels, klass)


# parameter files ----------------------------------------------------

def save_params(params, path):
    import os
    lines = []
    if isinstance(params, ErParams):
        lines += ["lggan-baseline er", f"p {params.p:.17g}"]
    elif isinstance(params, BaParams):
        lines += ["lggan-baseline ba", f"m {params.m}"]
    elif isinstance(params, MmsbParams):
        lines += ["lggan-baseline mmsb", f"k {params.k}",
                  "alpha " + " ".join(f"{a:.17g}" for a in params.alpha)]
        for row in params.b:
            lines.append("b " + " ".join(f"{v:.17g}" for v in row))
        for row in params.label_dist_per_block:
            lines.append("label_dist " + " ".join(f"{v:.17g}" for v in row))
    else:
        raise TypeError(f"unknown params type {type(params)}")
    lines.append(f"num_node_labels {params.num_node_labels}")
    lines.append(f"num_graph_classes {params.num_graph_classes}")
    lines.append("n_dist " + " ".join(str(n) for n in params.n_dist))
    tmp = str(path) + ".tmp"
    with open(tmp, "w") as f:
        f.write("\n".join(lines) + "\n")
    os.replace(tmp, path)


def load_params(path):
    with open(path) as f:
        lines = [ln.split() for ln in f if ln.strip()]
    if not lines or lines[0][0] != "lggan-baseline":
        raise ValueError("not a baseline parameter file")
    kind = lines[0][1]
    fields = {}
    b_rows, label_rows = [], []
    for parts in lines[1:]:
        if parts[0] == "b":
            b_rows.append([float(x) for x in parts[1:]])
        elif parts[0] == "label_dist":
            label_rows.append([float(x) for x in parts[1:]])
        else:
            fields[parts[0]] = parts[1:]
    c = int(fields["num_node_labels"][0])
    gc = int(fields["num_graph_classes"][0])
    n_dist = [int(x) for x in fields["n_dist"]]
    if kind == "er":
        return ErParams(n_dist, float(fields["p"][0]), c, gc)
    if kind == "ba":
        return BaParams(n_dist, int(fields["m"][0]), c, gc)
    if kind == "mmsb":
        return MmsbParams(int(fields["k"][0]),
                          np.array([float(x) for x in fields["alpha"]]),
                          np.array(b_rows), np.array(label_rows),
                          n_dist, c, gc)
    raise ValueError(f"unknown baseline kind {kind!r}")

"""WL subtree, shortest-path, and graphlet kernels; kernel SVM; kernel
distance and diversity histograms over generated vs training graphs."""

from __future__ import annotations

import hashlib
from collections import Counter, deque
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .graphs import GraphDataset, LabeledGraph

WL_DEFAULT_H = 3
SP_DISTANCE_CAP = 10
KERNEL_CHOICES = ("wl", "sp", "gk")


@dataclass
class KernelMatrix:
    values: np.ndarray
    graph_ids: list

    def check_psd(self, tol_factor=1e-8):
        eig = np.linalg.eigvalsh(self.values)
        return eig.min() >= -tol_factor * max(eig.max(), 1.0)


@dataclass
class SvmModel:
    classes: list            # class values, one-vs-rest order
    alphas: list             # per class: (n_train,) box-constrained duals
    biases: list
    ys: list                 # per class: +-1 targets used in training
    c_svm: float


# feature maps -------------------------------------------------------

def wl_features(g: LabeledGraph, h: int = WL_DEFAULT_H) -> Counter:
    """Subtree-pattern counts over refinement rounds 0..h. Signatures are
    canonical strings, so features are comparable across any graph set."""
    nbrs = g.neighbors()
    labels = [str(lab) for lab in g.node_labels]
    feats = Counter()
    for v in range(g.n):
        feats[(0, labels[v])] += 1
    for round_no in range(1, h + 1):
        new = []
        for v in range(g.n):
            sig = labels[v] + "|" + ",".join(sorted(labels[u] for u in nbrs[v]))
            # digest keeps labels short while staying canonical across graphs
            new.append(hashlib.blake2b(sig.encode(), digest_size=12).hexdigest())
        labels = new
        for v in range(g.n):
            feats[(round_no, labels[v])] += 1
    return feats


def _bfs_distances(nbrs, source):
    dist = {source: 0}
    q = deque([source])
    while q:
        u = q.popleft()
        for v in nbrs[u]:
            if v not in dist:
                dist[v] = dist[u] + 1
                q.append(v)
    return dist


def sp_features(g: LabeledGraph, cap: int = SP_DISTANCE_CAP) -> Counter:
    """Counts of (label_u, label_v, distance) triples with unordered endpoint
    labels; finite distances only, capped into a tail bin."""
    nbrs = g.neighbors()
    feats = Counter()
    for u in range(g.n):
        for v, d in _bfs_distances(nbrs, u).items():
            if v <= u:
                continue
            lu, lv = sorted((g.node_labels[u], g.node_labels[v]))
            feats[(lu, lv, min(d, cap))] += 1
    return feats


def _graphlet_type(sub, nbr_sets):
    deg = tuple(sorted(sum(1 for u in sub if u != v and u in nbr_sets[v])
                       for v in sub))
    m = sum(deg) // 2
    return (m, deg)


def graphlet_features(g: LabeledGraph, k_size: int = 3) -> Counter:
    """Frequencies of induced (possibly disconnected) k-node subgraph types,
    ignoring node labels. Empty when the graph has fewer than k_size nodes."""
    if k_size not in (3, 4):
        raise ValueError("k_size must be 3 or 4")
    if g.n < k_size:
        return Counter()
    nbr_sets = [set(x) for x in g.neighbors()]
    counts = Counter()
    for sub in combinations(range(g.n), k_size):
        counts[_graphlet_type(sub, nbr_sets)] += 1
    total = sum(counts.values())
    return Counter({t: c / total for t, c in counts.items()})


_FEATURE_FN = {"wl": wl_features, "sp": sp_features, "gk": graphlet_features}


def feature_map(kernel: str, g: LabeledGraph, **kw) -> Counter:
    if kernel not in _FEATURE_FN:
        raise ValueError(f"unknown kernel {kernel!r}; choose from {KERNEL_CHOICES}")
    return _FEATURE_FN[kernel](g, **kw)


def dot(fa: Counter, fb: Counter) -> float:
    if len(fb) < len(fa):
        fa, fb = fb, fa
    return float(sum(v * fb.get(k, 0) for k, v in fa.items()))


def wl_kernel(a, b, h: int = WL_DEFAULT_H) -> float:
    return dot(wl_features(a, h), wl_features(b, h))


def sp_kernel(a, b, cap: int = SP_DISTANCE_CAP) -> float:
    return dot(sp_features(a, cap), sp_features(b, cap))


def graphlet_kernel(a, b, k_size: int = 3) -> float:
    return dot(graphlet_features(a, k_size), graphlet_features(b, k_size))


def gram_matrix(graphs, kernel="wl", **kw) -> KernelMatrix:
    feats = [feature_map(kernel, g, **kw) for g in graphs]
    n = len(feats)
    k = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            k[i, j] = k[j, i] = dot(feats[i], feats[j])
    return KernelMatrix(k, list(range(n)))


def cross_gram(graphs_a, graphs_b, kernel="wl", **kw) -> np.ndarray:
    fa = [feature_map(kernel, g, **kw) for g in graphs_a]
    fb = [feature_map(kernel, g, **kw) for g in graphs_b]
    out = np.zeros((len(fa), len(fb)))
    for i, x in enumerate(fa):
        for j, y in enumerate(fb):
            out[i, j] = dot(x, y)
    return out


def kernel_distance(k: KernelMatrix, i: int, j: int) -> float:
    v = k.values
    n = v.shape[0]
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"indices ({i},{j}) out of range for {n}x{n} Gram")
    return float(np.sqrt(max(v[i, i] + v[j, j] - 2.0 * v[i, j], 0.0)))


def _normalized_kernel(values: np.ndarray) -> np.ndarray:
    d = np.sqrt(np.maximum(np.diag(values), 1e-300))
    return values / np.outer(d, d)


def diversity_histogram(generated: GraphDataset, training: GraphDataset,
                        kernel: str = "wl", bins: int = 20):
    """Minimum kernel distances (normalized kernel, so distances live in
    [0, sqrt(2)]): training graph to other training graphs, and generated
    graph to training graphs. Returns (edges, train_counts, gen_counts)."""
    feats_t = [feature_map(kernel, g) for g in training.graphs]
    feats_g = [feature_map(kernel, g) for g in generated.graphs]
    allf = feats_t + feats_g
    n = len(allf)
    k = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            k[i, j] = k[j, i] = dot(allf[i], allf[j])
    k = _normalized_kernel(k)
    nt = len(feats_t)
    dist = np.sqrt(np.maximum(
        k.diagonal()[:, None] + k.diagonal()[None, :] - 2.0 * k, 0.0))
    train_min = []
    for i in range(nt):
        others = [dist[i, j] for j in range(nt) if j != i]
        train_min.append(min(others) if others else 0.0)
    gen_min = [dist[nt + i, :nt].min() for i in range(len(feats_g))]
    edges = np.linspace(0.0, np.sqrt(2.0), bins + 1)
    tc, _ = np.histogram(train_min, bins=edges)
    gc, _ = np.histogram(gen_min, bins=edges)
    return edges, tc, gc, np.array(train_min), np.array(gen_min)


# kernel SVM ---------------------------------------------------------

def smo_solve(k: np.ndarray, y: np.ndarray, c_svm: float,
              tol: float = 1e-4, max_passes: int = 200):
    """Pairwise (SMO-style) coordinate optimization of the dual soft-margin
    SVM with bias; deterministic given input order."""
    n = len(y)
    alpha = np.zeros(n)
    b = 0.0

    def decision(i):
        return float((alpha * y) @ k[:, i] + b)

    def try_pair(i, j, e_i):
        nonlocal b
        e_j = decision(j) - y[j]
        ai_old, aj_old = alpha[i], alpha[j]
        if y[i] != y[j]:
            lo = max(0.0, aj_old - ai_old)
            hi = min(c_svm, c_svm + aj_old - ai_old)
        else:
            lo = max(0.0, ai_old + aj_old - c_svm)
            hi = min(c_svm, ai_old + aj_old)
        if hi - lo < 1e-12:
            return False
        eta = 2.0 * k[i, j] - k[i, i] - k[j, j]
        if eta >= -1e-12:
            return False
        aj = np.clip(aj_old - y[j] * (e_i - e_j) / eta, lo, hi)
        if abs(aj - aj_old) < 1e-7:
            return False
        ai = ai_old + y[i] * y[j] * (aj_old - aj)
        alpha[i], alpha[j] = ai, aj
        b1 = b - e_i - y[i] * (ai - ai_old) * k[i, i] \
            - y[j] * (aj - aj_old) * k[i, j]
        b2 = b - e_j - y[i] * (ai - ai_old) * k[i, j] \
            - y[j] * (aj - aj_old) * k[j, j]
        if 0 < ai < c_svm:
            b = b1
        elif 0 < aj < c_svm:
            b = b2
        else:
            b = (b1 + b2) / 2.0
        return True

    passes = 0
    while passes < max_passes:
        changed = 0
        for i in range(n):
            e_i = decision(i) - y[i]
            if not ((y[i] * e_i < -tol and alpha[i] < c_svm)
                    or (y[i] * e_i > tol and alpha[i] > 0)):
                continue
            errs = np.array([decision(t) - y[t] for t in range(n)])
            # best partner first, then the rest, so a blocked pair does not
            # strand a KKT violation
            order = np.argsort(-np.abs(errs - e_i))
            for j in order:
                if j != i and try_pair(i, int(j), e_i):
                    changed += 1
                    break
        if changed == 0:
            break
        passes += 1
    return alpha, b


def svm_train(k: KernelMatrix, classes, c_svm: float = 1.0) -> SvmModel:
    classes = list(classes)
    uniq = sorted(set(classes))
    if len(uniq) < 2:
        raise ValueError("svm_train needs at least 2 classes")
    alphas, biases, ys = [], [], []
    for c in uniq:
        y = np.array([1.0 if cl == c else -1.0 for cl in classes])
        alpha, b = smo_solve(k.values, y, c_svm)
        alphas.append(alpha)
        biases.append(b)
        ys.append(y)
    return SvmModel(uniq, alphas, biases, ys, c_svm)


def svm_decision(model: SvmModel, cross: np.ndarray) -> np.ndarray:
    """Decision values, one row per test sample, one column per class.
    cross[i, j] = kernel(test_i, train_j)."""
    out = np.zeros((cross.shape[0], len(model.classes)))
    for ci in range(len(model.classes)):
        out[:, ci] = cross @ (model.alphas[ci] * model.ys[ci]) + model.biases[ci]
    return out


def svm_predict(model: SvmModel, cross: np.ndarray) -> list:
    dec = svm_decision(model, cross)
    return [model.classes[i] for i in dec.argmax(axis=1)]


def downstream_eval(train_set: GraphDataset, test_set: GraphDataset,
                    kernel: str = "wl", c_svm: float = 1.0, **kw) -> float:
    """Train a kernel SVM on train_set graphs, report accuracy on test_set
    (supports the train-on-generated / test-on-real protocol)."""
    train_classes = {g.graph_class for g in train_set.graphs}
    missing = {g.graph_class for g in test_set.graphs} - train_classes
    if missing:
        raise ValueError(f"test classes {sorted(missing)} absent from training set")
    gram = gram_matrix(train_set.graphs, kernel, **kw)
    model = svm_train(gram, [g.graph_class for g in train_set.graphs], c_svm)
    cross = cross_gram(test_set.graphs, train_set.graphs, kernel, **kw)
    pred = svm_predict(model, cross)
    truth = [g.graph_class for g in test_set.graphs]
    return sum(p == t for p, t in zip(pred, truth)) / len(truth)

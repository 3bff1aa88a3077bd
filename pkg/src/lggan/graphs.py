"""Labeled-graph representation, BFS canonicalization, ego-network extraction,
dense padding, and the line-oriented dataset file format."""

from __future__ import annotations

from dataclasses import dataclass, field
from collections import deque

import numpy as np


class GraphError(ValueError):
    pass


class DatasetFormatError(ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


@dataclass(frozen=True)
class LabeledGraph:
    """Undirected graph with per-node categorical labels and one class label.

    Edges are stored as sorted (u, v) pairs with u < v.
    """

    n: int
    edges: tuple
    node_labels: tuple
    graph_class: int = 0

    @staticmethod
    def make(n, edges, node_labels, graph_class=0):
        norm = tuple(sorted((min(u, v), max(u, v)) for u, v in edges))
        return LabeledGraph(n, norm, tuple(node_labels), graph_class)

    def adjacency(self):
        a = np.zeros((self.n, self.n))
        for u, v in self.edges:
            a[u, v] = a[v, u] = 1.0
        return a

    def neighbors(self):
        nbrs = [[] for _ in range(self.n)]
        for u, v in self.edges:
            nbrs[u].append(v)
            nbrs[v].append(u)
        return [sorted(x) for x in nbrs]

    def degree_sequence(self):
        deg = [0] * self.n
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg


@dataclass
class DenseGraph:
    """Fixed-size padded form: adjacency, one-hot labels, and a node mask."""

    adj: np.ndarray       # (N_max, N_max) in {0, 1}
    labels: np.ndarray    # (N_max, C) one-hot, zero rows for padding
    mask: np.ndarray      # (N_max,) bool
    graph_class: int = 0


@dataclass
class GraphDataset:
    graphs: list = field(default_factory=list)
    num_node_labels: int = 1
    num_graph_classes: int = 1
    name: str = "dataset"


def validate(graph: LabeledGraph, num_node_labels=None, num_graph_classes=None):
    """Raise GraphError on the first violated invariant."""
    if graph.n < 1:
        raise GraphError(f"node count must be >= 1, got {graph.n}")
    if len(graph.node_labels) != graph.n:
        raise GraphError(
            f"node_labels length {len(graph.node_labels)} != node count {graph.n}")
    seen = set()
    for u, v in graph.edges:
        if u == v:
            raise GraphError(f"self-loop at node {u}")
        if not (0 <= u < graph.n and 0 <= v < graph.n):
            raise GraphError(f"edge ({u},{v}) endpoint out of range [0,{graph.n})")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise GraphError(f"duplicate edge ({u},{v})")
        seen.add(key)
    for i, lab in enumerate(graph.node_labels):
        if lab < 0 or (num_node_labels is not None and lab >= num_node_labels):
            raise GraphError(f"node {i} label {lab} out of range [0,{num_node_labels})")
    if num_graph_classes is not None and not (0 <= graph.graph_class < num_graph_classes):
        raise GraphError(
            f"graph class {graph.graph_class} out of range [0,{num_graph_classes})")


def validate_dataset(data: GraphDataset):
    for i, g in enumerate(data.graphs):
        try:
            validate(g, data.num_node_labels, data.num_graph_classes)
        except GraphError as e:
            raise GraphError(f"graph {i}: {e}") from e


def bfs_order(graph: LabeledGraph, start: int, input_perm) -> list:
    """BFS visit order (original node ids), layers expanded in ascending
    relabeled index under input_perm. Unreached components restart from the
    lowest-index unvisited node."""
    n = graph.n
    if not (0 <= start < n):
        raise GraphError(f"start node {start} out of range [0,{n})")
    perm = list(input_perm)
    nbrs = graph.neighbors()
    visited = [False] * n
    order = []

    def run(root):
        visited[root] = True
        q = deque([root])
        while q:
            u = q.popleft()
            order.append(u)
            for v in sorted(nbrs[u], key=lambda x: perm[x]):
                if not visited[v]:
                    visited[v] = True
                    q.append(v)

    run(start)
    while len(order) < n:
        rest = [v for v in range(n) if not visited[v]]
        run(min(rest, key=lambda x: perm[x]))
    return order


def relabel(graph: LabeledGraph, order) -> LabeledGraph:
    """Relabel so the node at position i of `order` becomes node i."""
    pos = {node: i for i, node in enumerate(order)}
    edges = [(pos[u], pos[v]) for u, v in graph.edges]
    labels = [graph.node_labels[node] for node in order]
    return LabeledGraph.make(graph.n, edges, labels, graph.graph_class)


def canonicalize(graph: LabeledGraph, rng) -> LabeledGraph:
    """Random permutation + random start, then BFS reorder (training-time
    node-ordering canonicalization)."""
    perm = rng.permutation(graph.n)
    start = int(rng.integers(graph.n))
    order = bfs_order(graph, start, perm)
    return relabel(graph, order)


def extract_ego_network(host: LabeledGraph, center: int, hops: int,
                        min_n: int, max_n: int):
    """Induced subgraph within `hops` of center; class = center's node label.
    Returns None when the node count falls outside [min_n, max_n]."""
    if not (0 <= center < host.n):
        raise GraphError(f"center {center} out of range [0,{host.n})")
    nbrs = host.neighbors()
    dist = {center: 0}
    frontier = [center]
    for d in range(1, hops + 1):
        nxt = []
        for u in frontier:
            for v in nbrs[u]:
                if v not in dist:
                    dist[v] = d
                    nxt.append(v)
        frontier = nxt
    nodes = sorted(dist)
    if not (min_n <= len(nodes) <= max_n):
        return None
    pos = {v: i for i, v in enumerate(nodes)}
    inset = set(nodes)
    edges = [(pos[u], pos[v]) for u, v in host.edges if u in inset and v in inset]
    labels = [host.node_labels[v] for v in nodes]
    return LabeledGraph.make(len(nodes), edges, labels,
                             host.node_labels[center])


def to_dense(graph: LabeledGraph, n_max: int, num_node_labels: int) -> DenseGraph:
    if graph.n > n_max:
        raise GraphError(f"graph with {graph.n} nodes exceeds N_max={n_max}")
    adj = np.zeros((n_max, n_max))
    for u, v in graph.edges:
        adj[u, v] = adj[v, u] = 1.0
    labels = np.zeros((n_max, num_node_labels))
    for i, lab in enumerate(graph.node_labels):
        labels[i, lab] = 1.0
    mask = np.zeros(n_max, dtype=bool)
    mask[:graph.n] = True
    return DenseGraph(adj, labels, mask, graph.graph_class)


def prune_isolated(dense: DenseGraph) -> LabeledGraph:
    """Drop degree-0 slots, compacting in order. If everything is isolated,
    keep slot 0 so downstream statistics stay defined."""
    deg = dense.adj.sum(axis=1)
    keep = [i for i in range(dense.adj.shape[0]) if deg[i] > 0 and dense.mask[i]]
    if not keep:
        keep = [0]
    pos = {v: i for i, v in enumerate(keep)}
    edges = []
    for a, i in pos.items():
        for b, j in pos.items():
            if a < b and dense.adj[a, b] > 0:
                edges.append((i, j))
    labels = [int(np.argmax(dense.labels[v])) for v in keep]
    return LabeledGraph.make(len(keep), edges, labels, dense.graph_class)


# dataset file format ------------------------------------------------

def write_dataset(data: GraphDataset, path):
    lines = [f"dataset {data.name} {len(data.graphs)} "
             f"{data.num_node_labels} {data.num_graph_classes}"]
    for gid, g in enumerate(data.graphs):
        lines.append(f"graph {gid} {g.n} {g.graph_class}")
        lines.append("labels " + " ".join(str(x) for x in g.node_labels))
        for u, v in g.edges:
            lines.append(f"edge {u} {v}")
        lines.append("end")
    _atomic_write(path, "\n".join(lines) + "\n")


def _atomic_write(path, text):
    import os
    tmp = str(path) + ".tmp"
    with open(tmp, "w") as f:
        f.write(text)
    os.replace(tmp, path)


def read_dataset(path) -> GraphDataset:
    with open(path) as f:
        raw = f.readlines()
    tokens = []  # (lineno, fields)
    for i, line in enumerate(raw, start=1):
        body = line.split("#", 1)[0].strip()
        if body:
            tokens.append((i, body.split()))
    if not tokens:
        raise DatasetFormatError("empty dataset file")
    ln, head = tokens[0]
    if head[0] != "dataset" or len(head) != 5:
        raise DatasetFormatError("expected 'dataset <name> <num> <C> <G>'", ln)
    try:
        count, c, gc = int(head[2]), int(head[3]), int(head[4])
    except ValueError:
        raise DatasetFormatError("non-integer dataset header field", ln)
    data = GraphDataset([], c, gc, head[1])
    idx = 1
    while idx < len(tokens):
        ln, fields = tokens[idx]
        if fields[0] != "graph" or len(fields) != 4:
            raise DatasetFormatError("expected 'graph <id> <n> <class>'", ln)
        n, klass = int(fields[2]), int(fields[3])
        idx += 1
        ln, fields = tokens[idx]
        if fields[0] != "labels" or len(fields) != n + 1:
            raise DatasetFormatError(f"expected 'labels' with {n} entries", ln)
        labels = [int(x) for x in fields[1:]]
        idx += 1
        edges = []
        while idx < len(tokens) and tokens[idx][1][0] == "edge":
            ln, fields = tokens[idx]
            if len(fields) != 3:
                raise DatasetFormatError("expected 'edge <u> <v>'", ln)
            u, v = int(fields[1]), int(fields[2])
            if not u < v:
                raise DatasetFormatError(f"edge endpoints must satisfy u < v, got {u} {v}", ln)
            edges.append((u, v))
            idx += 1
        if idx >= len(tokens) or tokens[idx][1][0] != "end":
            ln = tokens[idx][0] if idx < len(tokens) else len(raw)
            raise DatasetFormatError("expected 'end'", ln)
        g = LabeledGraph.make(n, edges, labels, klass)
        try:
            validate(g, c, gc)
        except GraphError as e:
            raise DatasetFormatError(str(e), tokens[idx][0])
        data.graphs.append(g)
        idx += 1
    if len(data.graphs) != count:
        raise DatasetFormatError(
            f"header declares {count} graphs, file contains {len(data.graphs)}")
    return data

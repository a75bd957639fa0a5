"""Seeded generators for the synthetic benchmarks and analytic constructions.

Every generator is deterministic given its seed: the same seed yields a
bit-identical dataset. Ground-truth explanations are always bound to their
graphs (motif edges only; bridge edges are excluded).

Node-classification tasks are materialized as one entry per node: each
entry is the K-hop ego subgraph centered on that node, labeled with the
node's label, with the motif edges (remapped into ego ids) as ground truth
for motif nodes and an empty explanation otherwise.
"""

from __future__ import annotations

from collections import deque

import numpy as np

from .errors import InvalidArgumentError
from .graphs import Edge, Explanation, Graph, LabeledGraph, canonical_edge
from .io import GRAPH_TASK, NODE_TASK, Dataset
from .rng import DOMAIN_DATASET, substream

BA_BASE_NODES = 20
MOTIF_OFFSET = BA_BASE_NODES  # motif occupies ids 20..24 in every BA-2motifs graph
TREE_DEPTH = 8
CYCLE_MOTIF_LEN = 6
GRID_SIDE = 3


def house_motif_edges(offset: int = 0) -> frozenset[Edge]:
    """Five-node house: 4-cycle 0-1-2-3 with roof node 4 joined to 2 and 3."""
    o = offset
    return frozenset({(o, o + 1), (o + 1, o + 2), (o + 2, o + 3), (o, o + 3),
                      (o + 2, o + 4), (o + 3, o + 4)})


def cycle_motif_edges(length: int, offset: int = 0) -> frozenset[Edge]:
    if length < 3:
        raise InvalidArgumentError("cycle length must be at least 3")
    return frozenset(canonical_edge(offset + i, offset + (i + 1) % length)
                     for i in range(length))


def grid_motif_edges(side: int = GRID_SIDE, offset: int = 0) -> frozenset[Edge]:
    """side x side lattice, row-major node ids."""
    edges = set()
    for r in range(side):
        for c in range(side):
            v = offset + r * side + c
            if c + 1 < side:
                edges.add((v, v + 1))
            if r + 1 < side:
                edges.add((v, v + side))
    return frozenset(edges)


def balanced_binary_tree_edges(depth: int) -> tuple[int, frozenset[Edge]]:
    """Balanced binary tree with levels 0..depth; returns (num_nodes, edges)."""
    n = 2 ** (depth + 1) - 1
    edges = set()
    for v in range((n - 1) // 2):
        edges.add((v, 2 * v + 1))
        edges.add((v, 2 * v + 2))
    return n, frozenset(edges)


def barabasi_albert_edges(n: int, rng: np.random.Generator) -> frozenset[Edge]:
    """Preferential-attachment tree (one edge per new node, m=1)."""
    if n < 2:
        raise InvalidArgumentError("BA graph needs at least 2 nodes")
    edges = {(0, 1)}
    repeated = [0, 1]
    for v in range(2, n):
        target = repeated[int(rng.integers(len(repeated)))]
        edges.add(canonical_edge(v, target))
        repeated.extend((v, target))
    return frozenset(edges)


def er_edges(n: int, p: float, rng: np.random.Generator) -> frozenset[Edge]:
    if not 0.0 <= p <= 1.0:
        raise InvalidArgumentError(f"edge probability must be in [0, 1], got {p}")
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    if not pairs:
        return frozenset()
    keep = rng.random(len(pairs)) < p
    return frozenset(e for e, k in zip(pairs, keep) if k)


def gen_er(n: int, p: float, seed: int) -> Graph:
    """One Erdos-Renyi graph: each possible edge present independently with prob p."""
    return Graph.build(n, er_edges(n, p, substream(seed, DOMAIN_DATASET)))


def gen_ba2motifs(count: int, seed: int) -> Dataset:
    """BA-2motifs: house motif (label 1) or 5-cycle motif (label 0) bridged to a
    20-node Barabasi-Albert base; labels alternate with graph index."""
    if count < 2 or count % 2:
        raise InvalidArgumentError("count must be an even integer >= 2")
    total_nodes = BA_BASE_NODES + 5
    graphs: list[LabeledGraph] = []
    gts: list[Explanation] = []
    for i in range(count):
        rng = substream(seed, DOMAIN_DATASET, i)
        label = i % 2
        motif = house_motif_edges(MOTIF_OFFSET) if label == 1 else \
            cycle_motif_edges(5, MOTIF_OFFSET)
        base = barabasi_albert_edges(BA_BASE_NODES, rng)
        bridge = canonical_edge(int(rng.integers(BA_BASE_NODES)), MOTIF_OFFSET)
        g = Graph.build(total_nodes, base | {bridge} | motif)
        graphs.append(LabeledGraph(g, label))
        gts.append(Explanation(motif, total_nodes))
    return Dataset(tuple(graphs), tuple(gts), num_classes=2, task=GRAPH_TASK,
                   name="ba2motifs")


def build_tree_motif_graph(
    num_motifs: int,
    seed: int,
    motif_edges_fn,
    motif_size: int,
    depth: int = TREE_DEPTH,
) -> tuple[Graph, list[int], list[frozenset[Edge]]]:
    """Assemble the tree-plus-motifs graph behind the node-classification tasks.

    Returns the full graph, per-node labels (1 for motif nodes), and the
    per-node motif edge set (empty for tree nodes).
    """
    if num_motifs < 1:
        raise InvalidArgumentError("num_motifs must be >= 1")
    base_n, tree = balanced_binary_tree_edges(depth)
    rng = substream(seed, DOMAIN_DATASET)
    total = base_n + num_motifs * motif_size
    edges = set(tree)
    labels = [0] * total
    node_motifs: list[frozenset[Edge]] = [frozenset()] * total
    for m in range(num_motifs):
        offset = base_n + m * motif_size
        motif = motif_edges_fn(offset)
        attach = int(rng.integers(base_n))
        edges |= motif
        edges.add(canonical_edge(attach, offset))
        for v in range(offset, offset + motif_size):
            labels[v] = 1
            node_motifs[v] = motif
    return Graph.build(total, edges), labels, node_motifs


def _tree_dataset(name: str, num_motifs: int, seed: int, motif_edges_fn,
                  motif_size: int, ego_hops: int) -> Dataset:
    full, labels, node_motifs = build_tree_motif_graph(
        num_motifs, seed, motif_edges_fn, motif_size)
    graphs: list[LabeledGraph] = []
    gts: list[Explanation] = []
    for v in range(full.num_nodes):
        ego, mapping = ego_subgraph(full, v, ego_hops)
        remap = {orig: new for new, orig in enumerate(mapping)}
        gt_edges = frozenset(
            canonical_edge(remap[u], remap[w]) for u, w in node_motifs[v])
        graphs.append(LabeledGraph(ego, labels[v]))
        gts.append(Explanation(gt_edges, ego.num_nodes))
    return Dataset(tuple(graphs), tuple(gts), num_classes=2, task=NODE_TASK, name=name)


def gen_tree_cycles(num_motifs: int = 80, seed: int = 0, ego_hops: int = 3) -> Dataset:
    """Tree-Cycles: 6-node cycles bridged onto a depth-8 balanced binary tree.

    The default 3-hop ego radius covers the whole cycle from any of its
    nodes (cycle diameter 3).
    """
    return _tree_dataset("tree-cycles", num_motifs, seed,
                         lambda o: cycle_motif_edges(CYCLE_MOTIF_LEN, o),
                         CYCLE_MOTIF_LEN, ego_hops)


def gen_tree_grid(num_motifs: int = 80, seed: int = 0, ego_hops: int = 4) -> Dataset:
    """Tree-Grid: 3x3 grids bridged onto a depth-8 balanced binary tree.

    Default radius is 4, not 3: the grid's corner-to-corner distance is 4,
    and a smaller radius would leave corner-node entries with unbound
    ground truth.
    """
    return _tree_dataset("tree-grid", num_motifs, seed,
                         lambda o: grid_motif_edges(GRID_SIDE, o),
                         GRID_SIDE * GRID_SIDE, ego_hops)


def appendix_b_cycle_edges(n: int) -> frozenset[Edge]:
    return cycle_motif_edges(n, 0)


def gen_appendix_b(n: int, p: float, q: float, count: int, seed: int) -> Dataset:
    """The analytical-example distribution: ER base, cycle planted with prob q.

    Label is 1 iff the cycle was planted and the graph is typical (at least
    n^2 p / 4 edges). Ground truth is the cycle when planted, else empty.
    """
    if n < 3:
        raise InvalidArgumentError("appendix-b needs n >= 3")
    cycle = appendix_b_cycle_edges(n)
    threshold = n * n * p / 4.0
    graphs: list[LabeledGraph] = []
    gts: list[Explanation] = []
    for i in range(count):
        rng = substream(seed, DOMAIN_DATASET, i)
        edges = set(er_edges(n, p, rng))
        planted = bool(rng.random() < q)
        if planted:
            edges |= cycle
        label = int(planted and len(edges) >= threshold)
        graphs.append(LabeledGraph(Graph.build(n, edges), label))
        gts.append(Explanation(cycle if planted else frozenset(), n))
    return Dataset(tuple(graphs), tuple(gts), num_classes=2, task=GRAPH_TASK,
                   name="appendix-b")


def ego_subgraph(g: Graph, center: int, k: int) -> tuple[Graph, list[int]]:
    """Induced subgraph on vertices within k hops of ``center``.

    Returns the subgraph (vertex ids relabeled in increasing original-id
    order) and the list mapping new ids to original ids.
    """
    if not 0 <= center < g.num_nodes:
        raise InvalidArgumentError(f"center {center} out of range")
    if k < 0:
        raise InvalidArgumentError("hop count must be non-negative")
    adj = g.adjacency()
    dist = {center: 0}
    queue = deque([center])
    while queue:
        v = queue.popleft()
        if dist[v] == k:
            continue
        for u in adj[v]:
            if u not in dist:
                dist[u] = dist[v] + 1
                queue.append(u)
    mapping = sorted(dist)
    remap = {orig: new for new, orig in enumerate(mapping)}
    kept = frozenset(
        (remap[u], remap[v]) for u, v in g.edges if u in dist and v in dist)
    return Graph(len(mapping), kept, np.ascontiguousarray(g.features[mapping])), mapping


def split_indices(n: int, seed: int, ratios: tuple[int, int, int] = (8, 1, 1)
                  ) -> tuple[list[int], list[int], list[int]]:
    """Seeded train/validation/test index split (default 8:1:1).

    Sizes are floored shares of ``n``; leftover examples go to train.
    """
    total = sum(ratios)
    perm = [int(i) for i in substream(seed, DOMAIN_DATASET, 0xA11).permutation(n)]
    n_val = n * ratios[1] // total
    n_test = n * ratios[2] // total
    n_train = n - n_val - n_test
    return (perm[:n_train], perm[n_train:n_train + n_val], perm[n_train + n_val:])

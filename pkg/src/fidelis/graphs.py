"""Graph representation, subgraph algebra, and edge edit distance.

Graphs are simple and undirected: edges are unordered vertex pairs stored
canonically as ``(u, v)`` with ``u < v``. Node features are carried but never
consulted by the built-in classifiers. All types are immutable and safe to
share across workers; every operation is a pure function.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import InvalidArgumentError

Edge = tuple[int, int]

DEFAULT_FEATURE_DIM = 10


def canonical_edge(u: int, v: int) -> Edge:
    """Return the pair ordered with the smaller vertex id first."""
    if u == v:
        raise InvalidArgumentError(f"self-loop ({u},{v}) is not allowed")
    return (u, v) if u < v else (v, u)


def canonical_edges(edges) -> frozenset[Edge]:
    """Canonicalize an iterable of vertex pairs into a frozen edge set."""
    return frozenset(canonical_edge(int(u), int(v)) for u, v in edges)


@lru_cache(maxsize=None)
def _ones_features(num_nodes: int, dim: int) -> np.ndarray:
    feats = np.ones((num_nodes, dim), dtype=float)
    feats.setflags(write=False)
    return feats


@lru_cache(maxsize=None)
def _empty_features(num_nodes: int) -> np.ndarray:
    feats = np.zeros((num_nodes, 0), dtype=float)
    feats.setflags(write=False)
    return feats


@dataclass(frozen=True)
class Graph:
    """An undirected simple graph with per-node feature vectors.

    ``edges`` must be canonical (``u < v``, no self-loops, endpoints in
    range). Use :meth:`build` to construct from arbitrary pair iterables.
    """

    num_nodes: int
    edges: frozenset[Edge]
    features: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.num_nodes < 0:
            raise InvalidArgumentError("num_nodes must be non-negative")
        for u, v in self.edges:
            if not (0 <= u < v < self.num_nodes):
                raise InvalidArgumentError(
                    f"edge ({u},{v}) is not canonical within {self.num_nodes} nodes"
                )
        if self.features.shape[0] != self.num_nodes:
            raise InvalidArgumentError(
                f"features have {self.features.shape[0]} rows for {self.num_nodes} nodes"
            )

    @classmethod
    def build(cls, num_nodes: int, edges=(), features: np.ndarray | None = None,
              feature_dim: int | None = None) -> "Graph":
        """Construct a graph, canonicalizing edges.

        Without explicit features the graph gets the all-ones
        ``num_nodes x 10`` matrix used by the synthetic benchmarks; pass
        ``feature_dim=0`` for featureless graphs (cheap for enumeration).
        """
        if features is None:
            dim = DEFAULT_FEATURE_DIM if feature_dim is None else feature_dim
            features = _ones_features(num_nodes, dim) if dim else _empty_features(num_nodes)
        else:
            features = np.asarray(features, dtype=float)
        return cls(num_nodes, canonical_edges(edges), features)

    def replace_edges(self, edges: frozenset[Edge]) -> "Graph":
        """Same vertices and features, different (already canonical) edge set."""
        g = object.__new__(Graph)
        object.__setattr__(g, "num_nodes", self.num_nodes)
        object.__setattr__(g, "edges", edges)
        object.__setattr__(g, "features", self.features)
        return g

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def degree(self, v: int) -> int:
        return sum(1 for e in self.edges if v in e)

    def neighbors(self, v: int) -> set[int]:
        return {u + w - v for u, w in self.edges if v in (u, w)}

    def adjacency(self) -> dict[int, set[int]]:
        adj: dict[int, set[int]] = {v: set() for v in range(self.num_nodes)}
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return adj

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.num_nodes == other.num_nodes
            and self.edges == other.edges
            and self.features.shape == other.features.shape
            and np.array_equal(self.features, other.features)
        )

    def __hash__(self) -> int:
        return hash((self.num_nodes, self.edges, self.features.tobytes()))


@dataclass(frozen=True)
class LabeledGraph:
    """A graph together with its class label."""

    graph: Graph
    label: int

    def __post_init__(self):
        if self.label < 0:
            raise InvalidArgumentError("label must be a non-negative class index")


@dataclass(frozen=True)
class Explanation:
    """An edge subset proposed as the explanation of a specific host graph.

    The explained vertex set is implicit: it is the set of endpoints of
    ``edges``. ``host_num_nodes`` records the id space the edges live in.
    """

    edges: frozenset[Edge]
    host_num_nodes: int

    def __post_init__(self):
        for u, v in self.edges:
            if not (0 <= u < v < self.host_num_nodes):
                raise InvalidArgumentError(
                    f"explanation edge ({u},{v}) outside host with {self.host_num_nodes} nodes"
                )

    @classmethod
    def build(cls, edges, host_num_nodes: int) -> "Explanation":
        return cls(canonical_edges(edges), host_num_nodes)

    @classmethod
    def empty(cls, host_num_nodes: int) -> "Explanation":
        return cls(frozenset(), host_num_nodes)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def vertices(self) -> frozenset[int]:
        return frozenset(v for e in self.edges for v in e)

    def is_bound_to(self, g: Graph) -> bool:
        return self.host_num_nodes == g.num_nodes and self.edges <= g.edges

    def check_bound(self, g: Graph) -> None:
        if not self.is_bound_to(g):
            raise InvalidArgumentError(
                "explanation is not bound to the host graph "
                f"(host nodes {g.num_nodes} vs {self.host_num_nodes}, "
                f"{len(self.edges - g.edges)} foreign edges)"
            )


def contains_subgraph(host: Graph, motif: Graph, mode: str = "fixed-ids") -> bool:
    """Whether ``motif`` occurs in ``host``.

    ``fixed-ids`` interprets motif vertex ids in the host's id space and
    checks plain edge-set inclusion. ``isomorphism`` searches for an
    injective vertex map sending every motif edge onto a host edge
    (features ignored, occurrence need not be induced).
    """
    if mode == "fixed-ids":
        if motif.num_nodes > host.num_nodes:
            raise InvalidArgumentError(
                f"fixed-ids motif has {motif.num_nodes} nodes but host only {host.num_nodes}"
            )
        return motif.edges <= host.edges
    if mode == "isomorphism":
        return _find_monomorphism(host, motif)
    raise InvalidArgumentError(f"unknown containment mode {mode!r}")


def _find_monomorphism(host: Graph, motif: Graph) -> bool:
    """Backtracking search for an injective edge-preserving vertex map.

    Only vertices incident to motif edges constrain the search; isolated
    motif vertices merely require enough spare host vertices.
    """
    if not motif.edges:
        return motif.num_nodes <= host.num_nodes
    motif_adj = motif.adjacency()
    host_adj = host.adjacency()
    active = [v for v in range(motif.num_nodes) if motif_adj[v]]
    if motif.num_nodes > host.num_nodes:
        return False

    # Order active vertices by decreasing degree, keeping the frontier
    # connected where possible so the neighbor-consistency prune bites early.
    order: list[int] = []
    seen: set[int] = set()
    remaining = sorted(active, key=lambda v: -len(motif_adj[v]))
    while remaining:
        pick = next((v for v in remaining if motif_adj[v] & seen), remaining[0])
        order.append(pick)
        seen.add(pick)
        remaining.remove(pick)

    host_degree = {v: len(host_adj[v]) for v in range(host.num_nodes)}
    mapping: dict[int, int] = {}
    used: set[int] = set()

    def extend(i: int) -> bool:
        if i == len(order):
            return True
        mv = order[i]
        needed = len(motif_adj[mv])
        mapped_neighbors = [mapping[u] for u in motif_adj[mv] if u in mapping]
        if mapped_neighbors:
            candidates = set.intersection(*(host_adj[h] for h in mapped_neighbors))
        else:
            candidates = set(range(host.num_nodes))
        for hv in sorted(candidates):
            if hv in used or host_degree[hv] < needed:
                continue
            mapping[mv] = hv
            used.add(hv)
            if extend(i + 1):
                return True
            del mapping[mv]
            used.remove(hv)
        return False

    return extend(0)


def remove_edges(g: Graph, e: Explanation) -> Graph:
    """Graph with the explanation's edges deleted; vertices are kept."""
    e.check_bound(g)
    return g.replace_edges(g.edges - e.edges)


def union_edges(g_base: Graph, extra) -> Graph:
    """Graph with ``extra`` edges added within the original vertex set."""
    extra = canonical_edges(extra)
    for u, v in extra:
        if v >= g_base.num_nodes:
            raise InvalidArgumentError(
                f"edge ({u},{v}) endpoint outside graph with {g_base.num_nodes} nodes"
            )
    return g_base.replace_edges(g_base.edges | extra)


def explanation_only_graph(g: Graph, e: Explanation) -> Graph:
    """The host restricted to the explanation's edges (same vertex set)."""
    e.check_bound(g)
    return g.replace_edges(e.edges)


def edit_distance(a, b) -> int:
    """Edge edit distance: cardinality of the symmetric difference."""
    fa = a if isinstance(a, frozenset) else canonical_edges(a)
    fb = b if isinstance(b, frozenset) else canonical_edges(b)
    return len(fa ^ fb)



"""Built-in conformance models.

The conformance model mirrors the motif Bayes rule: one-hot on the class
whose motif edge set occurs in the graph when exactly one does, otherwise
one-hot on the prior argmax with ties broken toward the lowest class index.
Motif occurrence is plain edge-set inclusion in the shared vertex id space.
"""

from __future__ import annotations


def _canonical(edges) -> frozenset:
    out = set()
    for u, v in edges:
        u, v = int(u), int(v)
        if u == v:
            raise ValueError(f"self-loop ({u},{v})")
        out.add((u, v) if u < v else (v, u))
    return frozenset(out)


def conformance_model(motifs: dict, priors: list, feature_dim: int = 10):
    """Build a model callable from per-class motif edge lists and priors.

    ``motifs`` maps every class index 0..k-1 to an edge list; ``priors``
    is a length-k probability vector.
    """
    k = len(priors)
    if sorted(motifs) != list(range(k)):
        raise ValueError("need one motif per class")
    if abs(sum(priors) - 1.0) > 1e-9 or any(p < 0 for p in priors):
        raise ValueError("priors must form a probability vector")
    motif_sets = {y: _canonical(motifs[y]) for y in motifs}
    best_prior = max(range(k), key=lambda y: (priors[y], -y))

    def model(graph: dict) -> list:
        edges = _canonical(graph["edges"])
        present = [y for y in range(k) if motif_sets[y] <= edges]
        winner = present[0] if len(present) == 1 else best_prior
        return [1.0 if y == winner else 0.0 for y in range(k)]

    model.num_classes = k
    model.feature_dim = feature_dim
    return model


def _house_edges(offset: int) -> list:
    o = offset
    return [[o, o + 1], [o + 1, o + 2], [o + 2, o + 3], [o, o + 3],
            [o + 2, o + 4], [o + 3, o + 4]]


def _cycle_edges(length: int, offset: int) -> list:
    return [[offset + i, offset + (i + 1) % length] for i in range(length)]


def ba2motifs_conformance():
    """The reference rule for the BA-2motifs benchmark: 5-cycle (class 0)
    and house (class 1) on vertex ids 20..24, uniform priors."""
    return conformance_model(
        motifs={0: _cycle_edges(5, 20), 1: _house_edges(20)},
        priors=[0.5, 0.5],
        feature_dim=10)

"""Stochastic edge sampling and explanation perturbation.

Two sampling semantics are exposed. ``bernoulli`` keeps each edge
independently with probability alpha (the theoretical definition of the
edge sampler). ``ratio`` keeps a uniformly random subset of exactly
``round(alpha * len(edges))`` edges, which is what the evaluation
algorithms use in practice. Fractional counts round half away from zero.

Edges are put in canonical sorted order before any draw, so sampling is a
pure function of (edge set, alpha, generator state) independent of set
iteration order.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidArgumentError
from .graphs import Edge, Explanation, Graph

BERNOULLI = "bernoulli"
RATIO = "ratio"
SAMPLE_MODES = (BERNOULLI, RATIO)


def round_half_away(x: float) -> int:
    """Round to nearest integer, halves away from zero (2.5 -> 3)."""
    return int(math.floor(x + 0.5)) if x >= 0 else -int(math.floor(-x + 0.5))


def _check_alpha(alpha: float) -> None:
    if not 0.0 <= alpha <= 1.0:
        raise InvalidArgumentError(f"alpha must be in [0, 1], got {alpha}")


def sample_edges(edges, alpha: float, mode: str, rng: np.random.Generator) -> frozenset[Edge]:
    """A random subset of ``edges``: per-edge Bernoulli(alpha) or a fixed ratio."""
    _check_alpha(alpha)
    ordered = sorted(edges)
    n = len(ordered)
    if mode == BERNOULLI:
        if n == 0:
            return frozenset()
        keep = rng.random(n) < alpha
        return frozenset(e for e, k in zip(ordered, keep) if k)
    if mode == RATIO:
        k = round_half_away(alpha * n)
        if k == 0:
            return frozenset()
        if k >= n:
            return frozenset(ordered)
        idx = rng.choice(n, size=k, replace=False)
        return frozenset(ordered[i] for i in idx)
    raise InvalidArgumentError(f"unknown sample mode {mode!r}")


def perturb_explanation(
    g: Graph,
    gt: Explanation,
    beta1: float,
    beta2: float,
    rng: np.random.Generator,
) -> Explanation:
    """Degrade a ground-truth explanation by edge removal and addition.

    Removes a uniform subset of ``round(beta1 * |gt|)`` ground-truth edges
    and adds a uniform subset of ``round(beta2 * |non-gt|)`` edges drawn
    from the host's remaining edges. The result is bound to ``g``; its edit
    distance to ``gt`` is exactly removed + added.
    """
    _check_alpha(beta1)
    _check_alpha(beta2)
    gt.check_bound(g)
    gt_edges = sorted(gt.edges)
    other_edges = sorted(g.edges - gt.edges)

    removed = _draw_exact(gt_edges, round_half_away(beta1 * len(gt_edges)), rng)
    added = _draw_exact(other_edges, round_half_away(beta2 * len(other_edges)), rng)
    return Explanation((gt.edges - removed) | added, g.num_nodes)


def _draw_exact(ordered: list[Edge], k: int, rng: np.random.Generator) -> frozenset[Edge]:
    if k <= 0:
        return frozenset()
    if k >= len(ordered):
        return frozenset(ordered)
    idx = rng.choice(len(ordered), size=k, replace=False)
    return frozenset(ordered[i] for i in idx)

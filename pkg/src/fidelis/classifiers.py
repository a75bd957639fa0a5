"""Classifier abstraction and the built-in classifier families.

A classifier maps a graph to a probability distribution over classes. The
built-ins cover: a constant classifier, the motif conditional rule and its
Bayes-optimal counterpart, a distance-noised version modeling
out-of-distribution misclassification, the analytic-example classifier,
and a plain motif indicator. Built-ins ignore node features.

Every classifier object exposes ``num_classes``, ``deterministic``, and
``classify(g, rng=None)``; stochastic classifiers require an explicit
generator. The module-level :func:`classify` is the validating dispatch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .graphs import Graph, contains_subgraph, edit_distance

PROB_TOLERANCE = 1e-9


@dataclass(frozen=True)
class ClassDistribution:
    """A probability distribution over class indices."""

    probs: tuple[float, ...]

    def __post_init__(self):
        if any(p < 0 for p in self.probs):
            raise InvalidArgumentError("class probabilities must be non-negative")
        total = sum(self.probs)
        if abs(total - 1.0) > PROB_TOLERANCE:
            raise InvalidArgumentError(f"class probabilities sum to {total}, not 1")

    def __len__(self) -> int:
        return len(self.probs)

    def __getitem__(self, y: int) -> float:
        return self.probs[y]

    @property
    def argmax_class(self) -> int:
        """Most probable class; ties break to the lowest index."""
        best = max(self.probs)
        return next(i for i, p in enumerate(self.probs) if p == best)


def one_hot(y: int, num_classes: int) -> ClassDistribution:
    if not 0 <= y < num_classes:
        raise InvalidArgumentError(f"class {y} out of range for {num_classes} classes")
    return ClassDistribution(tuple(1.0 if i == y else 0.0 for i in range(num_classes)))


def uniform(num_classes: int) -> ClassDistribution:
    return ClassDistribution((1.0 / num_classes,) * num_classes)


@dataclass(frozen=True)
class MotifRule:
    """One characteristic motif per class plus class priors.

    ``mode`` selects how motif occurrence is tested ("fixed-ids" for the
    synthetic benchmarks where motif positions are known, "isomorphism"
    for position-free matching).
    """

    motifs: dict[int, Graph]
    priors: ClassDistribution
    mode: str = "fixed-ids"

    def __post_init__(self):
        if sorted(self.motifs) != list(range(len(self.priors))):
            raise InvalidArgumentError("need exactly one motif per class")

    @property
    def num_classes(self) -> int:
        return len(self.priors)

    def present_classes(self, g: Graph) -> list[int]:
        return [y for y in sorted(self.motifs)
                if contains_subgraph(g, self.motifs[y], self.mode)]


def motif_conditional(rule: MotifRule, g: Graph) -> ClassDistribution:
    """The motif-task conditional label distribution.

    Probability one on class y when exactly motif y occurs; uniform when no
    motif or several motifs occur.
    """
    present = rule.present_classes(g)
    if len(present) == 1:
        return one_hot(present[0], rule.num_classes)
    return uniform(rule.num_classes)


def bayes_classify(rule: MotifRule, g: Graph) -> ClassDistribution:
    """Bayes-optimal deterministic classifier for the motif task.

    One-hot on the unique occurring motif's class; otherwise one-hot on the
    prior argmax (ties to the lowest class index).
    """
    present = rule.present_classes(g)
    if len(present) == 1:
        return one_hot(present[0], rule.num_classes)
    return one_hot(rule.priors.argmax_class, rule.num_classes)


@dataclass(frozen=True)
class TypicalSet:
    """An explicit finite set of reference graphs on a shared vertex count."""

    members: tuple[Graph, ...]

    def __post_init__(self):
        if not self.members:
            raise InvalidArgumentError("typical set must be non-empty")
        n = self.members[0].num_nodes
        if any(m.num_nodes != n for m in self.members):
            raise InvalidArgumentError("typical set members must share num_nodes")

    @property
    def num_nodes(self) -> int:
        return self.members[0].num_nodes


def typical_distance(ts: TypicalSet, g: Graph) -> int:
    """Edge edit distance from ``g`` to the nearest typical-set member."""
    if g.num_nodes != ts.num_nodes:
        raise InvalidArgumentError(
            f"graph has {g.num_nodes} nodes, typical set {ts.num_nodes}")
    return min(edit_distance(m.edges, g.edges) for m in ts.members)


def noisy_classify(rule: MotifRule, ts: TypicalSet, delta: float, g: Graph,
                   rng: np.random.Generator) -> ClassDistribution:
    """Bayes output corrupted at a rate growing with distance from typicality.

    Agrees with :func:`bayes_classify` with probability
    ``(1 / (d + 1)) ** delta`` where d is the typical-set distance;
    otherwise outputs a uniformly random other class.
    """
    if delta < 0:
        raise InvalidArgumentError("delta must be non-negative")
    base = bayes_classify(rule, g)
    d = typical_distance(ts, g)
    agree_prob = (1.0 / (d + 1)) ** delta
    if rng.random() < agree_prob:
        return base
    others = [y for y in range(rule.num_classes) if y != base.argmax_class]
    if not others:
        return base
    return one_hot(others[int(rng.integers(len(others)))], rule.num_classes)


def appendix_b_classify(n: int, p: float, g: Graph) -> ClassDistribution:
    """Class 1 iff the planted n-cycle is present and the graph is typical
    (at least n^2 p / 4 edges); class 0 otherwise."""
    if g.num_nodes != n:
        raise InvalidArgumentError(f"graph has {g.num_nodes} nodes, expected {n}")
    from .datasets import appendix_b_cycle_edges

    has_cycle = appendix_b_cycle_edges(n) <= g.edges
    typical = len(g.edges) >= n * n * p / 4.0
    return one_hot(1 if (has_cycle and typical) else 0, 2)


# --- classifier objects -----------------------------------------------------


@dataclass(frozen=True)
class ConstantClassifier:
    output: ClassDistribution
    deterministic: bool = True

    @property
    def num_classes(self) -> int:
        return len(self.output)

    def classify(self, g: Graph, rng=None) -> ClassDistribution:
        return self.output


@dataclass(frozen=True)
class BayesMotifClassifier:
    rule: MotifRule
    deterministic: bool = True

    @property
    def num_classes(self) -> int:
        return self.rule.num_classes

    def classify(self, g: Graph, rng=None) -> ClassDistribution:
        return bayes_classify(self.rule, g)


@dataclass(frozen=True)
class MotifConditionalClassifier:
    rule: MotifRule
    deterministic: bool = True

    @property
    def num_classes(self) -> int:
        return self.rule.num_classes

    def classify(self, g: Graph, rng=None) -> ClassDistribution:
        return motif_conditional(self.rule, g)


@dataclass(frozen=True)
class NoisyMotifClassifier:
    rule: MotifRule
    typical_set: TypicalSet
    delta: float
    deterministic: bool = False

    @property
    def num_classes(self) -> int:
        return self.rule.num_classes

    def classify(self, g: Graph, rng=None) -> ClassDistribution:
        if rng is None:
            raise InvalidArgumentError("stochastic classifier needs an explicit rng")
        return noisy_classify(self.rule, self.typical_set, self.delta, g, rng)


@dataclass(frozen=True)
class AppendixBClassifier:
    n: int
    p: float
    deterministic: bool = True
    num_classes: int = 2

    def classify(self, g: Graph, rng=None) -> ClassDistribution:
        return appendix_b_classify(self.n, self.p, g)


@dataclass(frozen=True)
class IndicatorClassifier:
    """One-hot on class 1 iff the motif occurs (the deterministic-task classifier)."""

    motif: Graph
    mode: str = "fixed-ids"
    deterministic: bool = True
    num_classes: int = 2

    def classify(self, g: Graph, rng=None) -> ClassDistribution:
        return one_hot(int(contains_subgraph(g, self.motif, self.mode)), 2)


def classify(classifier, g: Graph, rng=None) -> ClassDistribution:
    """Validated dispatch: returns the classifier's distribution for ``g``."""
    dist = classifier.classify(g, rng)
    if len(dist) != classifier.num_classes:
        raise InvalidArgumentError(
            f"classifier returned {len(dist)} probabilities for "
            f"{classifier.num_classes} classes")
    return dist

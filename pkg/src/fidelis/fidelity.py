"""Fidelity estimators for subgraph explanations.

Covers the classical measures (prediction-probability drop when the
explanation is removed / kept alone), their sampled generalizations that
only remove or re-add a sampled fraction of edges so perturbed inputs stay
near the data distribution, the accuracy-based variants, and an exact
enumeration oracle the Monte Carlo estimators can be checked against.

Reproducibility: each (side, graph) pair gets its own counter-keyed
substream, with the per-sample draws made sequentially inside it. Results
are therefore independent of worker count and scheduling, and the plus and
minus sides of a combined run match standalone runs bit for bit.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .classifiers import ClassDistribution, classify
from .errors import InvalidArgumentError, TooLargeError
from .graphs import Explanation, LabeledGraph, explanation_only_graph, remove_edges
from .rng import DOMAIN_CLASSIFIER, DOMAIN_MINUS, DOMAIN_PLUS, substream
from .sampling import RATIO, SAMPLE_MODES, round_half_away, sample_edges

PROBABILITY = "probability"
ACCURACY = "accuracy"
METRICS = (PROBABILITY, ACCURACY)

PLUS = "plus"
MINUS = "minus"

Pair = tuple[LabeledGraph, Explanation]


TRUE_LABEL = "true"
PREDICTED_LABEL = "predicted"


@dataclass(frozen=True)
class FidelityConfig:
    """Hyperparameters of the sampled estimators.

    ``label_source`` picks the coordinate the probability metric reads:
    the dataset's true label (default) or the label the classifier
    predicts on the unperturbed graph.
    """

    alpha1: float = 0.1
    alpha2: float = 0.9
    samples: int = 50
    mode: str = RATIO
    metric: str = PROBABILITY
    seed: int = 0
    label_source: str = TRUE_LABEL

    def __post_init__(self):
        if not (0.0 <= self.alpha1 <= 1.0 and 0.0 <= self.alpha2 <= 1.0):
            raise InvalidArgumentError("alpha1 and alpha2 must be in [0, 1]")
        if self.samples < 1:
            raise InvalidArgumentError("samples must be >= 1")
        if self.mode not in SAMPLE_MODES:
            raise InvalidArgumentError(f"unknown sample mode {self.mode!r}")
        if self.metric not in METRICS:
            raise InvalidArgumentError(f"unknown metric {self.metric!r}")
        if self.label_source not in (TRUE_LABEL, PREDICTED_LABEL):
            raise InvalidArgumentError(f"unknown label source {self.label_source!r}")

    def to_dict(self) -> dict:
        return {"alpha1": self.alpha1, "alpha2": self.alpha2, "samples": self.samples,
                "mode": self.mode, "metric": self.metric, "seed": self.seed,
                "label_source": self.label_source}


@dataclass(frozen=True)
class SideEstimate:
    """One side's estimate: overall mean, per-graph means, per-graph sample stds."""

    value: float
    per_graph: tuple[float, ...]
    per_graph_std: tuple[float, ...]


@dataclass(frozen=True)
class FidelityReport:
    """Plus/minus/delta values with per-graph breakdown and config echo."""

    fid_plus: float
    fid_minus: float
    fid_delta: float
    per_graph_plus: tuple[float, ...]
    per_graph_minus: tuple[float, ...]
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "fid_plus": self.fid_plus,
            "fid_minus": self.fid_minus,
            "fid_delta": self.fid_delta,
            "per_graph_plus": list(self.per_graph_plus),
            "per_graph_minus": list(self.per_graph_minus),
            "config": self.config,
        }


def _score(orig: ClassDistribution, modified: ClassDistribution, y: int,
           metric: str) -> float:
    if metric == PROBABILITY:
        return orig[y] - modified[y]
    return abs(float(orig.argmax_class == y) - float(modified.argmax_class == y))


def _mean(values) -> float:
    values = list(values)
    return sum(values) / len(values) if values else 0.0


def _check_pairs(data: list[Pair]) -> None:
    if not data:
        raise InvalidArgumentError("need at least one (graph, explanation) pair")
    for lg, expl in data:
        expl.check_bound(lg.graph)


def fid_original(f, data: list[Pair], metric: str = PROBABILITY,
                 seed: int = 0, label_source: str = TRUE_LABEL) -> FidelityReport:
    """Classical fidelity: compare f on the full graph against f on the
    explanation-removed graph (plus) and the explanation-only graph (minus)."""
    if metric not in METRICS:
        raise InvalidArgumentError(f"unknown metric {metric!r}")
    _check_pairs(data)
    plus_scores: list[float] = []
    minus_scores: list[float] = []
    for i, (lg, expl) in enumerate(data):
        g = lg.graph
        rng = None if f.deterministic else substream(seed, DOMAIN_CLASSIFIER, i)
        orig = classify(f, g, rng)
        y = lg.label if label_source == TRUE_LABEL else orig.argmax_class
        plus_dist = classify(f, remove_edges(g, expl), rng)
        minus_dist = classify(f, explanation_only_graph(g, expl), rng)
        plus_scores.append(_score(orig, plus_dist, y, metric))
        minus_scores.append(_score(orig, minus_dist, y, metric))
    fid_plus = _mean(plus_scores)
    fid_minus = _mean(minus_scores)
    return FidelityReport(
        fid_plus, fid_minus, fid_plus - fid_minus,
        tuple(plus_scores), tuple(minus_scores),
        {"estimator": "original", "metric": metric, "seed": seed,
         "label_source": label_source},
    )


def _graph_side_samples(f, lg: LabeledGraph, expl: Explanation, cfg: FidelityConfig,
                        side: str, graph_index: int) -> list[float]:
    """The M per-sample scores for one graph on one side."""
    g = lg.graph
    if side == PLUS and not expl.edges:
        # Nothing to remove: the contribution is zero by definition.
        return [0.0] * cfg.samples
    domain = DOMAIN_PLUS if side == PLUS else DOMAIN_MINUS
    rng = substream(cfg.seed, domain, graph_index)
    rest = sorted(g.edges - expl.edges) if side == MINUS else None
    orig = classify(f, g) if f.deterministic else None
    scores: list[float] = []
    for _ in range(cfg.samples):
        if side == PLUS:
            removed = sample_edges(expl.edges, cfg.alpha1, cfg.mode, rng)
            modified = g.replace_edges(g.edges - removed)
        else:
            kept = sample_edges(rest, cfg.alpha2, cfg.mode, rng)
            modified = g.replace_edges(kept | expl.edges)
        sample_orig = orig if orig is not None else classify(f, g, rng)
        y = lg.label if cfg.label_source == TRUE_LABEL else sample_orig.argmax_class
        scores.append(_score(sample_orig, classify(f, modified, rng), y, cfg.metric))
    return scores


def _summarize(samples: list[float]) -> tuple[float, float]:
    mean = _mean(samples)
    if len(samples) < 2:
        return mean, 0.0
    return mean, float(np.std(samples, ddof=1))


def _side_chunk(args) -> list[tuple[float, float]]:
    f, chunk, cfg, side, start = args
    return [_summarize(_graph_side_samples(f, lg, expl, cfg, side, start + j))
            for j, (lg, expl) in enumerate(chunk)]


def _estimate_side(f, data: list[Pair], cfg: FidelityConfig, side: str,
                   workers: int = 1) -> SideEstimate:
    _check_pairs(data)
    if workers > 1:
        chunks = _split_chunks(data, workers)
        tasks = []
        start = 0
        for chunk in chunks:
            tasks.append((f, chunk, cfg, side, start))
            start += len(chunk)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = [r for part in pool.map(_side_chunk, tasks) for r in part]
    else:
        results = _side_chunk((f, data, cfg, side, 0))
    means = tuple(m for m, _ in results)
    stds = tuple(s for _, s in results)
    return SideEstimate(_mean(means), means, stds)


def _split_chunks(data: list[Pair], workers: int) -> list[list[Pair]]:
    n = len(data)
    workers = max(1, min(workers, n))
    bounds = np.linspace(0, n, workers + 1).astype(int)
    return [data[bounds[i]:bounds[i + 1]] for i in range(workers)
            if bounds[i] < bounds[i + 1]]


def fid_alpha_plus(f, data: list[Pair], cfg: FidelityConfig,
                   workers: int = 1) -> SideEstimate:
    """Sampled plus-side fidelity: remove only a sampled alpha1 fraction of
    each explanation's edges (per-graph average over M samples)."""
    return _estimate_side(f, data, cfg, PLUS, workers)


def fid_alpha_minus(f, data: list[Pair], cfg: FidelityConfig,
                    workers: int = 1) -> SideEstimate:
    """Sampled minus-side fidelity: keep the explanation plus a sampled
    alpha2 fraction of the remaining edges."""
    return _estimate_side(f, data, cfg, MINUS, workers)


def fid_alpha_delta(f, data: list[Pair], cfg: FidelityConfig,
                    workers: int = 1) -> FidelityReport:
    """Sampled delta: plus-side minus minus-side, on per-side substreams that
    match standalone runs exactly."""
    plus = fid_alpha_plus(f, data, cfg, workers)
    minus = fid_alpha_minus(f, data, cfg, workers)
    return FidelityReport(
        plus.value, minus.value, plus.value - minus.value,
        plus.per_graph, minus.per_graph,
        {"estimator": "alpha", **cfg.to_dict()},
    )


def fid_accuracy_variants(f, data: list[Pair], cfg: FidelityConfig,
                          workers: int = 1) -> FidelityReport:
    """The accuracy-based counterparts (indicator agreement instead of
    probability difference) of the sampled estimators."""
    acc_cfg = FidelityConfig(cfg.alpha1, cfg.alpha2, cfg.samples, cfg.mode,
                             ACCURACY, cfg.seed, cfg.label_source)
    return fid_alpha_delta(f, data, acc_cfg, workers)


def fid_alpha_exact(f, lg: LabeledGraph, expl: Explanation, alpha: float,
                    side: str, epsilon: float = 0.0, max_enumeration: int = 20,
                    metric: str = PROBABILITY) -> float:
    """Exact enumeration oracle for the sampled estimators.

    Averages the per-subset score uniformly over every subset whose size k
    satisfies ``l*(alpha - epsilon) <= k <= l*(alpha + epsilon)`` (the
    typical-size window; the count of typical sequences equals the count of
    such subsets, so uniform-over-subsets is the definition's own
    normalization). With ``epsilon = 0`` and a non-integral ``alpha * l``
    the window is empty and the rounded size is used, which makes the
    oracle the exact expectation of ratio-mode Monte Carlo for any alpha.
    """
    if side not in (PLUS, MINUS):
        raise InvalidArgumentError(f"side must be 'plus' or 'minus', got {side!r}")
    if epsilon < 0:
        raise InvalidArgumentError("epsilon must be non-negative")
    if not f.deterministic:
        raise InvalidArgumentError("exact oracle requires a deterministic classifier")
    g, y = lg.graph, lg.label
    expl.check_bound(g)
    universe = sorted(expl.edges) if side == PLUS else sorted(g.edges - expl.edges)
    ell = len(universe)
    if ell > max_enumeration:
        raise TooLargeError(
            f"{ell} candidate edges exceed the enumeration cap {max_enumeration}")
    guard = 1e-12
    lo = ell * (alpha - epsilon) - guard
    hi = ell * (alpha + epsilon) + guard
    sizes = [k for k in range(ell + 1) if lo <= k <= hi]
    if not sizes:
        sizes = [min(ell, max(0, round_half_away(alpha * ell)))]
    orig = classify(f, g)
    total = 0.0
    count = 0
    for k in sizes:
        for combo in itertools.combinations(universe, k):
            subset = frozenset(combo)
            if side == PLUS:
                modified = g.replace_edges(g.edges - subset)
            else:
                modified = g.replace_edges(subset | expl.edges)
            total += _score(orig, classify(f, modified), y, metric)
            count += 1
    return total / count


def report_csv_header() -> str:
    return "dataset,metric,alpha1,alpha2,samples,seed,fid_plus,fid_minus,fid_delta"


def report_csv_row(dataset_name: str, report: FidelityReport) -> str:
    cfg = report.config
    cells = [dataset_name, str(cfg.get("metric", "")),
             repr(cfg.get("alpha1", "")), repr(cfg.get("alpha2", "")),
             str(cfg.get("samples", "")), str(cfg.get("seed", "")),
             repr(report.fid_plus), repr(report.fid_minus), repr(report.fid_delta)]
    return ",".join(cells)

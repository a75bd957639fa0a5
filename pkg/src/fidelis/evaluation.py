"""The perturbation-sweep experiment harness.

Builds degraded candidate explanations over a grid of removal/addition
ratios, scores them with all six fidelity metrics plus the edge-AUC, and
correlates each metric against the gold-standard edit distance: one
Spearman coefficient per addition-ratio row (across removal ratios), then
the rows are averaged. Rows on which a metric is constant have no defined
rank correlation and are excluded from the average.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError, UndefinedAUCError, UndefinedCorrelationError
from .fidelity import FidelityConfig, fid_alpha_delta, fid_original
from .graphs import edit_distance
from .io import NODE_TASK, Dataset
from .rng import DOMAIN_SWEEP, derive_seed, substream
from .sampling import perturb_explanation

DEFAULT_BETA_GRID = (0.0, 0.1, 0.3, 0.5, 0.7, 0.9)

METRIC_NAMES = ("fid_plus", "fid_minus", "fid_delta",
                "fid_alpha_plus", "fid_alpha_minus", "fid_alpha_delta", "auc")

_KEY_PERTURB = 0
_KEY_FID = 1
_KEY_SUBSAMPLE = 2


def average_ranks(values) -> np.ndarray:
    """1-based ranks with ties assigned their mean rank."""
    arr = np.asarray(values, dtype=float)
    order = np.argsort(arr, kind="stable")
    ranks = np.empty(len(arr), dtype=float)
    i = 0
    while i < len(arr):
        j = i
        while j + 1 < len(arr) and arr[order[j + 1]] == arr[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman(xs, ys) -> float:
    """Spearman rank correlation: Pearson correlation of mean-tied ranks."""
    xs = list(xs)
    ys = list(ys)
    if len(xs) != len(ys):
        raise InvalidArgumentError("spearman needs equal-length sequences")
    if len(xs) < 2:
        raise InvalidArgumentError("spearman needs at least two observations")
    if len(set(xs)) == 1 or len(set(ys)) == 1:
        raise UndefinedCorrelationError("correlation undefined for constant input")
    rx = average_ranks(xs)
    ry = average_ranks(ys)
    rx -= rx.mean()
    ry -= ry.mean()
    return float((rx @ ry) / np.sqrt((rx @ rx) * (ry @ ry)))


def auc_edges(scores: dict, positives, universe) -> float:
    """Probability a random positive edge outscores a random negative one,
    ties counted one half (the rank-sum form)."""
    universe = set(universe)
    positives = set(positives)
    if not positives <= universe:
        raise InvalidArgumentError("positives must be a subset of the universe")
    negatives = universe - positives
    if not positives or not negatives:
        raise UndefinedAUCError("AUC needs both positive and negative edges")
    pos = np.asarray([scores.get(e, 0.0) for e in sorted(positives)], dtype=float)
    neg = np.asarray([scores.get(e, 0.0) for e in sorted(negatives)], dtype=float)
    wins = (pos[:, None] > neg[None, :]).sum()
    ties = (pos[:, None] == neg[None, :]).sum()
    return float((wins + 0.5 * ties) / (len(pos) * len(neg)))


@dataclass(frozen=True)
class SweepConfig:
    beta_grid: tuple[float, ...] = DEFAULT_BETA_GRID
    candidates_per_cell: int = 10
    fidelity: FidelityConfig = field(default_factory=FidelityConfig)
    seed: int = 0
    node_subsample: int = 100

    def __post_init__(self):
        if any(not 0.0 <= b <= 1.0 for b in self.beta_grid):
            raise InvalidArgumentError("beta grid values must be in [0, 1]")
        if self.candidates_per_cell < 1:
            raise InvalidArgumentError("candidates_per_cell must be >= 1")

    def to_dict(self) -> dict:
        return {"beta_grid": list(self.beta_grid),
                "candidates_per_cell": self.candidates_per_cell,
                "fidelity": self.fidelity.to_dict(),
                "seed": self.seed,
                "node_subsample": self.node_subsample}


@dataclass(frozen=True)
class SweepResult:
    beta_grid: tuple[float, ...]
    grids: dict  # metric name -> grid[beta1 index][beta2 index]
    edit_grid: tuple[tuple[float, ...], ...]
    row_spearman: dict  # metric name -> per-beta2 coefficient (None if undefined)
    avg_spearman: dict  # metric name -> averaged coefficient (None if no valid row)
    config: dict


def _candidate_metrics(f, pairs, cfg: SweepConfig, i1: int, i2: int, c: int) -> dict:
    """All metric values for one perturbation candidate of one grid cell."""
    b1 = cfg.beta_grid[i1]
    b2 = cfg.beta_grid[i2]
    perturbed = []
    for j, (lg, gt) in enumerate(pairs):
        rng = substream(cfg.seed, DOMAIN_SWEEP, _KEY_PERTURB, i1, i2, c, j)
        perturbed.append((lg, perturb_explanation(lg.graph, gt, b1, b2, rng)))

    fid_seed = derive_seed(cfg.seed, DOMAIN_SWEEP, _KEY_FID, i1, i2, c)
    base = cfg.fidelity
    run_cfg = FidelityConfig(base.alpha1, base.alpha2, base.samples, base.mode,
                             base.metric, fid_seed, base.label_source)
    original = fid_original(f, perturbed, metric=base.metric, seed=fid_seed,
                            label_source=base.label_source)
    sampled = fid_alpha_delta(f, perturbed, run_cfg)

    edits = []
    aucs = []
    for (lg, gt), (_, cand) in zip(pairs, perturbed):
        edits.append(edit_distance(cand.edges, gt.edges))
        scores = {e: 1.0 for e in cand.edges}
        aucs.append(auc_edges(scores, gt.edges, lg.graph.edges))
    m = float(np.mean(edits))
    return {"fid_plus": original.fid_plus, "fid_minus": original.fid_minus,
            "fid_delta": original.fid_delta, "fid_alpha_plus": sampled.fid_plus,
            "fid_alpha_minus": sampled.fid_minus,
            "fid_alpha_delta": sampled.fid_delta,
            "auc": float(np.mean(aucs)), "edit": m}


def _sweep_chunk(args) -> list[tuple[tuple[int, int, int], dict]]:
    f, pairs, cfg, cells = args
    return [((i1, i2, c), _candidate_metrics(f, pairs, cfg, i1, i2, c))
            for i1, i2, c in cells]


def _select_pairs(data: Dataset, cfg: SweepConfig):
    pairs = [(lg, gt) for lg, gt in data.pairs() if gt.edges]
    if not pairs:
        raise InvalidArgumentError("sweep needs ground-truth explanations")
    if data.task == NODE_TASK and len(pairs) > cfg.node_subsample:
        rng = substream(cfg.seed, DOMAIN_SWEEP, _KEY_SUBSAMPLE)
        idx = sorted(rng.choice(len(pairs), size=cfg.node_subsample, replace=False))
        pairs = [pairs[i] for i in idx]
    return pairs


def run_sweep(data: Dataset, f, cfg: SweepConfig, workers: int = 1) -> SweepResult:
    """Full perturbation sweep: metric grids, edit-distance grid, and the
    per-row and averaged Spearman coefficients against edit distance."""
    pairs = _select_pairs(data, cfg)
    grid_n = len(cfg.beta_grid)
    cells = [(i1, i2, c)
             for i1 in range(grid_n) for i2 in range(grid_n)
             for c in range(cfg.candidates_per_cell)]
    if workers > 1:
        bounds = np.linspace(0, len(cells), min(workers, len(cells)) + 1).astype(int)
        chunks = [(f, pairs, cfg, cells[bounds[i]:bounds[i + 1]])
                  for i in range(len(bounds) - 1) if bounds[i] < bounds[i + 1]]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            raw = [item for part in pool.map(_sweep_chunk, chunks) for item in part]
    else:
        raw = _sweep_chunk((f, pairs, cfg, cells))
    by_cell = dict(raw)

    grids = {name: [[0.0] * grid_n for _ in range(grid_n)] for name in METRIC_NAMES}
    edit_grid = [[0.0] * grid_n for _ in range(grid_n)]
    for i1 in range(grid_n):
        for i2 in range(grid_n):
            cands = [by_cell[(i1, i2, c)] for c in range(cfg.candidates_per_cell)]
            for name in METRIC_NAMES:
                grids[name][i1][i2] = float(np.mean([cd[name] for cd in cands]))
            edit_grid[i1][i2] = float(np.mean([cd["edit"] for cd in cands]))

    row_spearman: dict = {}
    avg_spearman: dict = {}
    for name in METRIC_NAMES:
        rows: list = []
        for i2 in range(grid_n):
            series = [grids[name][i1][i2] for i1 in range(grid_n)]
            edits = [edit_grid[i1][i2] for i1 in range(grid_n)]
            try:
                rows.append(spearman(series, edits))
            except UndefinedCorrelationError:
                rows.append(None)
        valid = [r for r in rows if r is not None]
        row_spearman[name] = rows
        avg_spearman[name] = float(np.mean(valid)) if valid else None

    return SweepResult(
        beta_grid=cfg.beta_grid,
        grids={name: tuple(tuple(row) for row in grid)
               for name, grid in grids.items()},
        edit_grid=tuple(tuple(row) for row in edit_grid),
        row_spearman=row_spearman,
        avg_spearman=avg_spearman,
        config=cfg.to_dict(),
    )


def emit_heatmap(result: SweepResult, metric: str) -> str:
    """Grid CSV for one metric: removal ratios as rows, addition ratios as
    columns; parses back to the emitted values exactly."""
    if metric == "edit":
        grid = result.edit_grid
    elif metric in result.grids:
        grid = result.grids[metric]
    else:
        raise InvalidArgumentError(f"unknown metric {metric!r}")
    header = "beta1/beta2," + ",".join(repr(b) for b in result.beta_grid)
    lines = [header]
    for i1, b1 in enumerate(result.beta_grid):
        cells = ",".join(repr(v) for v in grid[i1])
        lines.append(f"{b1!r},{cells}")
    return "\n".join(lines) + "\n"


def summary_csv(result: SweepResult, dataset_name: str) -> str:
    """One-row summary: averaged Spearman coefficient per metric."""
    header = "dataset," + ",".join(METRIC_NAMES)
    cells = [dataset_name]
    for name in METRIC_NAMES:
        v = result.avg_spearman[name]
        cells.append("" if v is None else repr(v))
    return header + "\n" + ",".join(cells) + "\n"

"""JSON-Lines serialization for graphs, datasets, explanations, and reports.

Graph object schema (one JSON object per line):

    {"num_nodes": n, "edges": [[u, v], ...],      # u < v, sorted
     "features": [[...], ...],                    # omitted if all-ones, d=10
     "label": y | null, "gt_explanation": [[u, v], ...] | null}

A dataset file starts with a header line {"name": ..., "num_classes": ...,
"task": ...} followed by one graph line per example. Explanation files are
JSONL of {"graph_index": i, "edges": [[u, v], ...]}; indices missing from
the file are treated as empty explanations (a warning is emitted).

Emission is deterministic: fixed key order, sorted edge lists, and
shortest-roundtrip float formatting, so identical inputs give byte-identical
files.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .graphs import DEFAULT_FEATURE_DIM, Explanation, Graph, LabeledGraph

GRAPH_TASK = "graph-classification"
NODE_TASK = "node-classification"


@dataclass(frozen=True)
class Dataset:
    """A list of labeled graphs with parallel ground-truth explanations."""

    graphs: tuple[LabeledGraph, ...]
    gt_explanations: tuple[Explanation, ...]
    num_classes: int
    task: str
    name: str

    def __post_init__(self):
        if len(self.graphs) != len(self.gt_explanations):
            raise InvalidArgumentError("graphs and gt_explanations must be parallel lists")
        if self.task not in (GRAPH_TASK, NODE_TASK):
            raise InvalidArgumentError(f"unknown task {self.task!r}")
        for lg, gt in zip(self.graphs, self.gt_explanations):
            if lg.label >= self.num_classes:
                raise InvalidArgumentError(
                    f"label {lg.label} out of range for {self.num_classes} classes"
                )
            gt.check_bound(lg.graph)

    def __len__(self) -> int:
        return len(self.graphs)

    def pairs(self) -> list[tuple[LabeledGraph, Explanation]]:
        return list(zip(self.graphs, self.gt_explanations))


def _edges_list(edges) -> list[list[int]]:
    return [[u, v] for u, v in sorted(edges)]


def _is_default_features(features: np.ndarray) -> bool:
    return features.shape[1] == DEFAULT_FEATURE_DIM and bool(np.all(features == 1.0))


def graph_to_dict(g: Graph, label: int | None = None,
                  gt: Explanation | None = None) -> dict:
    d: dict = {"num_nodes": g.num_nodes, "edges": _edges_list(g.edges)}
    if not _is_default_features(g.features):
        d["features"] = g.features.tolist()
    d["label"] = label
    d["gt_explanation"] = None if gt is None else _edges_list(gt.edges)
    return d


def graph_from_dict(d: dict) -> tuple[Graph, int | None, Explanation | None]:
    try:
        num_nodes = int(d["num_nodes"])
        edges = [(int(u), int(v)) for u, v in d["edges"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidArgumentError(f"malformed graph object: {exc}") from exc
    features = d.get("features")
    g = Graph.build(num_nodes, edges,
                    None if features is None else np.asarray(features, dtype=float))
    label = d.get("label")
    label = None if label is None else int(label)
    gt_raw = d.get("gt_explanation")
    gt = None if gt_raw is None else Explanation.build(
        [(int(u), int(v)) for u, v in gt_raw], num_nodes)
    return g, label, gt


def dumps_compact(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), allow_nan=False)


def write_dataset_jsonl(dataset: Dataset, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        header = {"name": dataset.name, "num_classes": dataset.num_classes,
                  "task": dataset.task}
        fh.write(dumps_compact(header) + "\n")
        for lg, gt in zip(dataset.graphs, dataset.gt_explanations):
            gt_out = gt if gt.edges else None
            fh.write(dumps_compact(graph_to_dict(lg.graph, lg.label, gt_out)) + "\n")


def read_dataset_jsonl(path) -> Dataset:
    with open(path, encoding="utf-8") as fh:
        lines = [line for line in (raw.strip() for raw in fh) if line]
    if not lines:
        raise InvalidArgumentError(f"dataset file {path} is empty")
    header = json.loads(lines[0])
    if not isinstance(header, dict) or "num_classes" not in header:
        raise InvalidArgumentError("dataset file must start with a metadata header line")
    graphs: list[LabeledGraph] = []
    gts: list[Explanation] = []
    for line in lines[1:]:
        g, label, gt = graph_from_dict(json.loads(line))
        if label is None:
            raise InvalidArgumentError("dataset graph line is missing a label")
        graphs.append(LabeledGraph(g, label))
        gts.append(gt if gt is not None else Explanation.empty(g.num_nodes))
    return Dataset(
        graphs=tuple(graphs),
        gt_explanations=tuple(gts),
        num_classes=int(header["num_classes"]),
        task=header.get("task", GRAPH_TASK),
        name=header.get("name", "unnamed"),
    )


def write_explanations_jsonl(explanations: list[Explanation], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for i, expl in enumerate(explanations):
            fh.write(dumps_compact({"graph_index": i, "edges": _edges_list(expl.edges)}) + "\n")


def read_explanations_jsonl(path, dataset: Dataset) -> list[Explanation]:
    """Explanations parallel to ``dataset``; missing indices become empty."""
    by_index: dict[int, Explanation] = {}
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            d = json.loads(line)
            idx = int(d["graph_index"])
            if not 0 <= idx < len(dataset):
                raise InvalidArgumentError(
                    f"explanation graph_index {idx} out of range for {len(dataset)} graphs")
            host = dataset.graphs[idx].graph
            by_index[idx] = Explanation.build(
                [(int(u), int(v)) for u, v in d["edges"]], host.num_nodes)
    out: list[Explanation] = []
    missing = 0
    for i, lg in enumerate(dataset.graphs):
        if i in by_index:
            out.append(by_index[i])
        else:
            missing += 1
            out.append(Explanation.empty(lg.graph.num_nodes))
    if missing:
        warnings.warn(f"{missing} graphs had no explanation entry; treated as empty",
                      stacklevel=2)
    return out

"""Command-line entry point.

Subcommands: ``generate`` (synthetic datasets), ``fidelity`` (sampled
estimators over a dataset), ``sweep`` (the perturbation-grid experiment),
``theory`` (enumeration and bound checks), ``bridge-check`` (wire-protocol
conformance). Every run writes a ``<out>.manifest.json`` capturing the full
configuration and seed; rerunning with the same manifest reproduces all
outputs byte for byte at any ``--workers`` value.

Exit codes: 0 ok (or PASS), 1 a theory verdict failed, 2 usage, 3 data,
4 bridge, 5 domain or size errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from .bridge import BridgeClassifier
from .classifiers import (AppendixBClassifier, BayesMotifClassifier,
                          ClassDistribution, ConstantClassifier, MotifRule,
                          NoisyMotifClassifier, TypicalSet, classify, uniform)
from .datasets import (MOTIF_OFFSET, cycle_motif_edges, er_edges, gen_appendix_b,
                       gen_ba2motifs, gen_tree_cycles, gen_tree_grid,
                       house_motif_edges)
from .errors import (BridgeError, DomainError, InvalidArgumentError, TooLargeError)
from .evaluation import METRIC_NAMES, SweepConfig, emit_heatmap, run_sweep, summary_csv
from .fidelity import (FidelityConfig, fid_alpha_delta, report_csv_header,
                       report_csv_row)
from .graphs import Graph, LabeledGraph
from .io import (Dataset, GRAPH_TASK, graph_from_dict, read_dataset_jsonl,
                 read_explanations_jsonl, write_dataset_jsonl)
from .rng import DOMAIN_MISC, substream
from .theory import (appendix_b_experiment, appendix_b_mi,
                     appendix_b_reduced_instance_p, e_max, prop3_enumerate,
                     prop4_monotonicity, reverse_fano, theorem1_eta,
                     theorem1_kappa)

EXIT_OK = 0
EXIT_VERDICT_FAIL = 1
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_BRIDGE = 4
EXIT_DOMAIN = 5


def _default_seed() -> int:
    return int(os.environ.get("FIDELIS_SEED", "0"))


def _out_file(stem, suffix: str) -> Path:
    return Path(str(stem) + suffix)


def _write_manifest(out_stem, command: str, config: dict) -> None:
    manifest = {"command": command, "config": config, "version": __version__}
    _out_file(out_stem, ".manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8")


# --- classifier specs ---------------------------------------------------------


def ba2motifs_rule() -> MotifRule:
    total = MOTIF_OFFSET + 5
    return MotifRule(
        motifs={0: Graph.build(total, cycle_motif_edges(5, MOTIF_OFFSET)),
                1: Graph.build(total, house_motif_edges(MOTIF_OFFSET))},
        priors=uniform(2), mode="fixed-ids")


def _rule_from_file(path: str) -> MotifRule:
    with open(path, encoding="utf-8") as fh:
        spec = json.load(fh)
    motifs = {}
    for key, gd in spec["motifs"].items():
        g, _, _ = graph_from_dict(gd)
        motifs[int(key)] = g
    return MotifRule(motifs=motifs,
                     priors=ClassDistribution(tuple(spec["priors"])),
                     mode=spec.get("mode", "fixed-ids"))


def _parse_kv(body: str) -> dict:
    out = {}
    for part in body.split(","):
        if "=" not in part:
            raise InvalidArgumentError(f"expected key=value, got {part!r}")
        key, value = part.split("=", 1)
        out[key] = value
    return out


def build_classifier(spec: str):
    """Resolve a --classifier spec string into a classifier object."""
    parts = spec.split(":", 2)
    if parts[0] == "builtin":
        if len(parts) < 2:
            raise InvalidArgumentError(f"incomplete builtin spec {spec!r}")
        kind = parts[1]
        rest = parts[2] if len(parts) > 2 else ""
        if kind == "constant":
            k = int(rest) if rest else 2
            return ConstantClassifier(uniform(k))
        if kind == "motif":
            if rest == "ba2motifs":
                return BayesMotifClassifier(ba2motifs_rule())
            kv = _parse_kv(rest)
            return BayesMotifClassifier(_rule_from_file(kv["file"]))
        if kind == "noisy":
            kv = _parse_kv(rest)
            rule = ba2motifs_rule() if kv.get("rule") == "ba2motifs" \
                else _rule_from_file(kv["file"])
            members = read_dataset_jsonl(kv["typical"]).graphs
            ts = TypicalSet(tuple(lg.graph for lg in members))
            return NoisyMotifClassifier(rule, ts, float(kv["delta"]))
        if kind == "appendix-b":
            kv = _parse_kv(rest)
            return AppendixBClassifier(int(kv["n"]), float(kv["p"]))
        raise InvalidArgumentError(f"unknown builtin classifier {kind!r}")
    if parts[0] == "bridge":
        if len(parts) < 2 or "=" not in ":".join(parts[1:]):
            raise InvalidArgumentError(f"malformed bridge spec {spec!r}")
        body = spec[len("bridge:"):]
        key, value = body.split("=", 1)
        if key == "cmd":
            return BridgeClassifier.spawn(value)
        if key == "tcp":
            host, port = value.rsplit(":", 1)
            return BridgeClassifier.connect_tcp(host, int(port))
        raise InvalidArgumentError(f"unknown bridge transport {key!r}")
    raise InvalidArgumentError(f"unknown classifier spec {spec!r}")


# --- subcommands ---------------------------------------------------------------


def cmd_generate(args) -> int:
    out = Path(args.out)
    if args.dataset == "ba2motifs":
        data = gen_ba2motifs(args.count, args.seed)
        config = {"dataset": args.dataset, "count": args.count, "seed": args.seed}
    elif args.dataset == "tree-cycles":
        kwargs = {} if args.ego_hops is None else {"ego_hops": args.ego_hops}
        data = gen_tree_cycles(args.motifs, args.seed, **kwargs)
        config = {"dataset": args.dataset, "motifs": args.motifs,
                  "seed": args.seed, "ego_hops": args.ego_hops}
    elif args.dataset == "tree-grid":
        kwargs = {} if args.ego_hops is None else {"ego_hops": args.ego_hops}
        data = gen_tree_grid(args.motifs, args.seed, **kwargs)
        config = {"dataset": args.dataset, "motifs": args.motifs,
                  "seed": args.seed, "ego_hops": args.ego_hops}
    elif args.dataset == "appendix-b":
        data = gen_appendix_b(args.n, args.p, args.q, args.count, args.seed)
        config = {"dataset": args.dataset, "n": args.n, "p": args.p,
                  "q": args.q, "count": args.count, "seed": args.seed}
    elif args.dataset == "er":
        graphs = []
        for i in range(args.count):
            rng = substream(args.seed, DOMAIN_MISC, i)
            graphs.append(LabeledGraph(Graph.build(args.n, er_edges(args.n, args.p, rng)), 0))
        from .graphs import Explanation
        data = Dataset(tuple(graphs),
                       tuple(Explanation.empty(args.n) for _ in graphs),
                       num_classes=2, task=GRAPH_TASK, name="er")
        config = {"dataset": args.dataset, "n": args.n, "p": args.p,
                  "count": args.count, "seed": args.seed}
    else:
        raise InvalidArgumentError(f"unknown dataset {args.dataset!r}")
    write_dataset_jsonl(data, out)
    _write_manifest(out, "generate", config)
    print(f"wrote {len(data)} graphs to {out}")
    return EXIT_OK


def cmd_fidelity(args) -> int:
    data = read_dataset_jsonl(args.data)
    f = build_classifier(args.classifier)
    if args.explanations:
        expls = read_explanations_jsonl(args.explanations, data)
        pairs = list(zip(data.graphs, expls))
    else:
        pairs = data.pairs()
    cfg = FidelityConfig(alpha1=args.alpha1, alpha2=args.alpha2,
                         samples=args.samples, mode=args.mode,
                         metric=args.metric, seed=args.seed)
    workers = args.workers
    if isinstance(f, BridgeClassifier) and workers > 1:
        print("bridge classifier: forcing --workers 1", file=sys.stderr)
        workers = 1
    report = fid_alpha_delta(f, pairs, cfg, workers=workers)
    out = args.out
    _out_file(out, ".json").write_text(
        json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n",
        encoding="utf-8")
    _out_file(out, ".csv").write_text(
        report_csv_header() + "\n" + report_csv_row(data.name, report) + "\n",
        encoding="utf-8")
    _write_manifest(out, "fidelity", {
        "data": str(args.data), "explanations": args.explanations,
        "classifier": args.classifier, **cfg.to_dict()})
    print(f"fid_plus={report.fid_plus!r} fid_minus={report.fid_minus!r} "
          f"fid_delta={report.fid_delta!r}")
    if isinstance(f, BridgeClassifier):
        f.close()
    return EXIT_OK


def cmd_sweep(args) -> int:
    data = read_dataset_jsonl(args.data)
    f = build_classifier(args.classifier)
    beta_grid = tuple(float(b) for b in args.beta_grid.split(","))
    fid_cfg = FidelityConfig(alpha1=args.alpha1, alpha2=args.alpha2,
                             samples=args.samples, mode=args.mode,
                             metric=args.metric, seed=args.seed)
    cfg = SweepConfig(beta_grid=beta_grid, candidates_per_cell=args.candidates,
                      fidelity=fid_cfg, seed=args.seed,
                      node_subsample=args.node_subsample)
    workers = args.workers
    if isinstance(f, BridgeClassifier) and workers > 1:
        print("bridge classifier: forcing --workers 1", file=sys.stderr)
        workers = 1
    result = run_sweep(data, f, cfg, workers=workers)
    out = args.out
    _out_file(out, ".summary.csv").write_text(summary_csv(result, data.name),
                                              encoding="utf-8")
    for name in (*METRIC_NAMES, "edit"):
        _out_file(out, f".heatmap.{name}.csv").write_text(
            emit_heatmap(result, name), encoding="utf-8")
    payload = {"beta_grid": list(result.beta_grid),
               "grids": {k: [list(r) for r in v] for k, v in result.grids.items()},
               "edit_grid": [list(r) for r in result.edit_grid],
               "row_spearman": result.row_spearman,
               "avg_spearman": result.avg_spearman,
               "config": result.config}
    _out_file(out, ".json").write_text(
        json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    _write_manifest(out, "sweep", {
        "data": str(args.data), "classifier": args.classifier, **cfg.to_dict()})
    for name in METRIC_NAMES:
        print(f"avg_spearman[{name}] = {result.avg_spearman[name]}")
    if isinstance(f, BridgeClassifier):
        f.close()
    return EXIT_OK


def _triangle_motif(n: int) -> Graph:
    return Graph.build(n, [(0, 1), (1, 2), (0, 2)], feature_dim=0)


def cmd_theory(args) -> int:
    out = args.out
    lines: list[str] = []
    verdict = True
    if args.subcheck == "prop3":
        p_grid = tuple(float(p) for p in args.p_grid.split(","))
        result = prop3_enumerate(args.n, args.edge_prob, _triangle_motif(args.n), p_grid)
        lines.append("parameter,fid_plus,fid_minus,fid_delta,mi,verdict")
        for row in result.rows:
            lines.append(f"{row.p!r},{row.fid_plus!r},{row.fid_minus!r},"
                         f"{row.fid_delta!r},{row.mi!r},{result.well_behaved}")
        row1 = next((r for r in result.rows if r.p == 1.0), None)
        exact_ok = row1 is None or (
            abs(row1.fid_plus - result.prob_label_one) <= 1e-12
            and abs(row1.fid_minus) <= 1e-12)
        verdict = result.well_behaved and exact_ok
        config = {"subcheck": "prop3", "n": args.n, "edge_prob": args.edge_prob,
                  "p_grid": list(p_grid)}
    elif args.subcheck == "prop4":
        p_grid = tuple(float(p) for p in args.p_grid.split(","))
        rule = ba2motifs_rule_at(args.n)
        ts = prop4_typical_set(rule, args.n, args.edge_prob, args.seed)
        result = prop4_monotonicity(rule, ts, args.delta, args.n, args.k,
                                    p_grid, args.trials, args.seed,
                                    edge_prob=args.edge_prob)
        lines.append("parameter,estimate,isotonic_fit,verdict")
        ok = result.max_violation <= args.tolerance
        for p, est, fit in zip(result.p_grid, result.estimates, result.fitted):
            lines.append(f"{p!r},{est!r},{fit!r},{ok}")
        lines.append(f"max_violation,{result.max_violation!r},,{ok}")
        verdict = ok
        config = {"subcheck": "prop4", "n": args.n, "k": args.k,
                  "delta": args.delta, "p_grid": list(p_grid),
                  "trials": args.trials, "edge_prob": args.edge_prob,
                  "tolerance": args.tolerance, "seed": args.seed}
    elif args.subcheck == "appendix-b":
        result = appendix_b_experiment(args.n, args.p, args.q, args.graphs, args.seed)
        mi_p = appendix_b_reduced_instance_p(args.mi_n, args.p)
        mi1, mi2 = appendix_b_mi(args.mi_n, mi_p, args.q)
        ok = result.fid_delta_psi2 > result.fid_delta_psi1 + args.margin \
            and mi1 < mi2
        lines.append("quantity,psi1,psi2,verdict")
        lines.append(f"fid_delta,{result.fid_delta_psi1!r},"
                     f"{result.fid_delta_psi2!r},{ok}")
        lines.append(f"conditional_mi_n{args.mi_n}_p{mi_p!r},{mi1!r},{mi2!r},{ok}")
        verdict = ok
        config = {"subcheck": "appendix-b", "n": args.n, "p": args.p,
                  "q": args.q, "graphs": args.graphs, "mi_n": args.mi_n,
                  "mi_p": mi_p, "margin": args.margin, "seed": args.seed}
    elif args.subcheck == "bounds":
        lines.append("quantity,input,value")
        if args.erf is not None:
            lines.append(f"reverse_fano,{args.erf!r},{reverse_fano(args.erf)!r}")
        if args.emax is not None:
            x, y = (float(v) for v in args.emax.split(","))
            res = e_max(x, y)
            lines.append(f"e_max,\"{args.emax}\",{res.value!r}")
        if args.eta is not None:
            es, ka, de = (float(v) for v in args.eta.split(","))
            res = theorem1_eta(es, ka, de)
            lines.append(f"theorem1_eta,\"{args.eta}\",{res.eta!r}")
        if args.kappa is not None:
            ze, ep = (float(v) for v in args.kappa.split(","))
            lines.append(f"theorem1_kappa,\"{args.kappa}\","
                         f"{theorem1_kappa(ze, ep, 2)!r}")
        config = {"subcheck": "bounds", "erf": args.erf, "emax": args.emax,
                  "eta": args.eta, "kappa": args.kappa}
    else:
        raise InvalidArgumentError(f"unknown theory subcheck {args.subcheck!r}")

    table = "\n".join(lines) + "\n"
    sys.stdout.write(table)
    print("PASS" if verdict else "FAIL")
    if out is not None:
        _out_file(out, ".csv").write_text(table, encoding="utf-8")
        _write_manifest(out, f"theory {args.subcheck}", config)
    return EXIT_OK if verdict else EXIT_VERDICT_FAIL


def ba2motifs_rule_at(n: int) -> MotifRule:
    """House/cycle motif rule placed on the last five of n vertex ids."""
    offset = n - 5
    if offset < 0:
        raise InvalidArgumentError("need at least 5 nodes for the motif rule")
    return MotifRule(
        motifs={0: Graph.build(n, cycle_motif_edges(5, offset), feature_dim=0),
                1: Graph.build(n, house_motif_edges(offset), feature_dim=0)},
        priors=uniform(2), mode="fixed-ids")


def prop4_typical_set(rule: MotifRule, n: int, edge_prob: float, seed: int,
                      members: int = 64) -> TypicalSet:
    """Reference graphs drawn from the same planted-motif distribution."""
    out = []
    for i in range(members):
        rng = substream(seed, DOMAIN_MISC, 900, i)
        planted = int(rng.random() < 0.5)
        edges = er_edges(n, edge_prob, rng) | rule.motifs[planted].edges
        out.append(Graph.build(n, edges, feature_dim=0))
    return TypicalSet(tuple(out))


def cmd_bridge_check(args) -> int:
    f = build_classifier(args.classifier)
    if not isinstance(f, BridgeClassifier):
        raise InvalidArgumentError("bridge-check needs a bridge: classifier spec")
    expect = build_classifier(args.expect) if args.expect else None
    feature_dim = f.feature_dim if f.feature_dim >= 0 else None
    graphs = []
    for i in range(args.count):
        rng = substream(args.seed, DOMAIN_MISC, i)
        edges = er_edges(25, 0.15, rng)
        if i % 2:
            edges = edges | house_motif_edges(MOTIF_OFFSET)
        graphs.append(Graph.build(25, edges, feature_dim=feature_dim))
    sequential = [classify(f, g) for g in graphs]
    pipelined = f.classify_many(graphs)
    worst = 0.0
    for a, b in zip(sequential, pipelined):
        worst = max(worst, max(abs(x - y) for x, y in zip(a.probs, b.probs)))
    if worst > 1e-9:
        raise BridgeError(f"pipelined responses diverge from sequential by {worst}")
    if expect is not None:
        for g, got in zip(graphs, sequential):
            want = classify(expect, g)
            diff = max(abs(x - y) for x, y in zip(got.probs, want.probs))
            if diff > 1e-9:
                raise BridgeError(f"bridge disagrees with expectation by {diff}")
    f.close()
    print(f"bridge-check OK: {args.count} graphs, pipelined batch matched")
    return EXIT_OK


# --- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fidelis",
        description="OOD-robust fidelity measures for subgraph explanations")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic dataset as JSONL")
    g.add_argument("dataset", choices=["ba2motifs", "tree-cycles", "tree-grid",
                                       "appendix-b", "er"])
    g.add_argument("--count", type=int, default=1000)
    g.add_argument("--motifs", type=int, default=80)
    g.add_argument("--n", type=int, default=30)
    g.add_argument("--p", type=float, default=0.3)
    g.add_argument("--q", type=float, default=0.75)
    g.add_argument("--ego-hops", type=int, default=None)
    g.add_argument("--seed", type=int, default=_default_seed())
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    fi = sub.add_parser("fidelity", help="sampled fidelity estimates for a dataset")
    fi.add_argument("--data", required=True)
    fi.add_argument("--explanations", default=None,
                    help="JSONL explanations; defaults to the ground truth")
    fi.add_argument("--classifier", required=True)
    fi.add_argument("--alpha1", type=float, default=0.1)
    fi.add_argument("--alpha2", type=float, default=0.9)
    fi.add_argument("--samples", type=int, default=50)
    fi.add_argument("--mode", choices=["ratio", "bernoulli"], default="ratio")
    fi.add_argument("--metric", choices=["probability", "accuracy"],
                    default="probability")
    fi.add_argument("--seed", type=int, default=_default_seed())
    fi.add_argument("--workers", type=int, default=1)
    fi.add_argument("--out", required=True)
    fi.set_defaults(func=cmd_fidelity)

    sw = sub.add_parser("sweep", help="perturbation sweep with rank statistics")
    sw.add_argument("--data", required=True)
    sw.add_argument("--classifier", required=True)
    sw.add_argument("--alpha1", type=float, default=0.1)
    sw.add_argument("--alpha2", type=float, default=0.9)
    sw.add_argument("--samples", type=int, default=50)
    sw.add_argument("--mode", choices=["ratio", "bernoulli"], default="ratio")
    sw.add_argument("--metric", choices=["probability", "accuracy"],
                    default="probability")
    sw.add_argument("--candidates", type=int, default=10)
    sw.add_argument("--beta-grid", default="0,0.1,0.3,0.5,0.7,0.9")
    sw.add_argument("--node-subsample", type=int, default=100)
    sw.add_argument("--seed", type=int, default=_default_seed())
    sw.add_argument("--workers", type=int, default=1)
    sw.add_argument("--out", required=True)
    sw.set_defaults(func=cmd_sweep)

    th = sub.add_parser("theory", help="enumeration and bound checks")
    th.add_argument("subcheck", choices=["prop3", "prop4", "appendix-b", "bounds"])
    th.add_argument("--n", type=int, default=4)
    th.add_argument("--edge-prob", type=float, default=0.5)
    th.add_argument("--p-grid", default="0,0.2,0.4,0.6,0.8,1")
    th.add_argument("--k", type=int, default=4)
    th.add_argument("--delta", type=float, default=0.01)
    th.add_argument("--trials", type=int, default=20000)
    th.add_argument("--tolerance", type=float, default=0.01)
    th.add_argument("--p", type=float, default=0.3)
    th.add_argument("--q", type=float, default=0.75)
    th.add_argument("--graphs", type=int, default=5000)
    th.add_argument("--mi-n", type=int, default=6)
    th.add_argument("--margin", type=float, default=0.01)
    th.add_argument("--erf", type=float, default=None)
    th.add_argument("--emax", default=None, help="x,y")
    th.add_argument("--eta", default=None, help="eps_star,kappa,delta")
    th.add_argument("--kappa", default=None, help="zeta,eps")
    th.add_argument("--seed", type=int, default=_default_seed())
    th.add_argument("--out", default=None)
    th.set_defaults(func=cmd_theory)

    bc = sub.add_parser("bridge-check", help="validate a wire-protocol server")
    bc.add_argument("--classifier", required=True)
    bc.add_argument("--expect", default=None,
                    help="builtin spec the bridge must agree with to 1e-9")
    bc.add_argument("--count", type=int, default=100)
    bc.add_argument("--seed", type=int, default=_default_seed())
    bc.set_defaults(func=cmd_bridge_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BridgeError as exc:
        print(f"bridge error: {exc}", file=sys.stderr)
        return EXIT_BRIDGE
    except (DomainError, TooLargeError) as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (InvalidArgumentError, OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

"""Command-line shell: data ingestion, simulation, estimation, experiments.

File formats (all CSV with headers):

* edges:      ``target,source``  -- 0-based integer ids; the source node's
  period-0 outcome influences the target node's period-1 outcome.  Mind the
  order: reversing it flips every causal arrow (see ``--reversed``).
* outcomes:   ``id,y0,y1``       -- binary outcomes per node.
* covariates: ``id,x1,...,xp``   -- float covariates per node.

Exit codes: 0 success, 2 invalid inputs/usage, 1 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .dgp import (
    BENCHMARK_BETA0,
    BENCHMARK_GAMMA0,
    DgpSpec,
    Panel,
    highdim_beta0,
    simulate_panel,
    true_diffusion,
)
from .errors import (
    EmptyPanelError,
    NetdiffError,
    OrphanNodeError,
    SchemaError,
    ValidationError,
)
from .graph import DirectedGraph, barabasi_albert, degree_stats, erdos_renyi, from_edge_list
from .inference import EstimateOptions, estimate_diffusion
from .meanfit import MeanModel
from .montecarlo import McConfig, run_mc

log = logging.getLogger("netdiff")

# Lossless float round-trip for CSV output.
FLOAT_FMT = "%.17g"


@dataclass
class IngestManifest:
    """Where the panel lives on disk and how to read it.

    ``direction="reversed"`` transposes every edge on ingest (for
    robustness runs against the opposite causal-direction reading).
    ``missing="drop"`` drops nodes with any missing field and logs the
    count; ``missing="error"`` refuses instead.
    """

    edges_path: str
    outcomes_path: str
    covariates_path: str
    direction: str = "as-is"          # "as-is" | "reversed"
    missing: str = "drop"             # "drop" | "error"
    columns: dict = field(default_factory=dict)

    def column(self, table, name):
        return self.columns.get(table, {}).get(name, name)


def _read_rows(path, required):
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            missing = [c for c in required if c not in header]
            if missing:
                raise SchemaError(f"{path}: missing columns {missing}")
            return header, list(reader)
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc


def _parse_int(text):
    if text is None or text.strip() == "":
        return None
    return int(text)


def _parse_float(text):
    if text is None or text.strip() == "":
        return None
    value = float(text)
    return value if np.isfinite(value) else None


def ingest_panel(manifest: IngestManifest):
    """Validated (Panel, DirectedGraph) from the three CSV files.

    Nodes must appear in both the outcomes and the covariates file with all
    fields present; incomplete nodes are dropped (or refused, per the
    missing-data policy).  Edge endpoints must be known node ids; edges
    touching dropped nodes are pruned with a log message.  Node ids are
    re-indexed to 0..n-1 in increasing id order.

    Returns
    -------
    (panel, graph, ids) where ids maps new index -> original id.
    """
    if manifest.direction not in ("as-is", "reversed"):
        raise SchemaError(f"unknown direction {manifest.direction!r}")
    col_id = manifest.column("outcomes", "id")
    col_y0 = manifest.column("outcomes", "y0")
    col_y1 = manifest.column("outcomes", "y1")
    _, out_rows = _read_rows(manifest.outcomes_path, [col_id, col_y0, col_y1])
    xid = manifest.column("covariates", "id")
    x_header, x_rows = _read_rows(manifest.covariates_path, [xid])
    x_cols = [c for c in x_header if c != xid]
    if not x_cols:
        raise SchemaError(f"{manifest.covariates_path}: no covariate columns")
    col_t = manifest.column("edges", "target")
    col_s = manifest.column("edges", "source")
    _, edge_rows = _read_rows(manifest.edges_path, [col_t, col_s])

    outcomes = {}
    for row in out_rows:
        i = _parse_int(row[col_id])
        if i is None:
            raise SchemaError(f"{manifest.outcomes_path}: row with missing id")
        outcomes[i] = (_parse_int(row[col_y0]), _parse_int(row[col_y1]))
    covariates = {}
    for row in x_rows:
        i = _parse_int(row[xid])
        if i is None:
            raise SchemaError(f"{manifest.covariates_path}: row with missing id")
        covariates[i] = [_parse_float(row[c]) for c in x_cols]

    known = set(outcomes) | set(covariates)
    complete, dropped = [], []
    for i in sorted(known):
        y = outcomes.get(i)
        xv = covariates.get(i)
        ok = (y is not None and xv is not None
              and y[0] in (0, 1) and y[1] in (0, 1)
              and all(v is not None for v in xv))
        (complete if ok else dropped).append(i)
    if dropped:
        if manifest.missing == "error":
            raise SchemaError(f"{len(dropped)} node(s) have missing fields: {dropped[:10]}")
        log.warning("dropping %d node(s) with missing fields", len(dropped))
    if not complete:
        raise EmptyPanelError("no complete node rows remain")

    index = {i: k for k, i in enumerate(complete)}
    dropped_set = set(dropped)
    targets, sources, pruned = [], [], 0
    for row in edge_rows:
        t = _parse_int(row[col_t])
        s = _parse_int(row[col_s])
        if t is None or s is None:
            raise SchemaError(f"{manifest.edges_path}: edge row with missing endpoint")
        if manifest.direction == "reversed":
            t, s = s, t
        if t not in index or s not in index:
            if t in dropped_set or s in dropped_set:
                pruned += 1
                continue
            raise OrphanNodeError(f"edge ({t},{s}) references unknown node id")
        targets.append(index[t])
        sources.append(index[s])
    if pruned:
        log.warning("pruning %d edge(s) touching dropped nodes", pruned)

    panel = Panel(
        y0=np.array([outcomes[i][0] for i in complete], dtype=np.int64),
        y1=np.array([outcomes[i][1] for i in complete], dtype=np.int64),
        x=np.array([covariates[i] for i in complete], dtype=np.float64),
    )
    graph = DirectedGraph(len(complete), np.array(targets, dtype=np.int64),
                          np.array(sources, dtype=np.int64))
    return panel, graph, complete


def write_edges_csv(path, g: DirectedGraph):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["target", "source"])
        for t, s in zip(g.targets, g.sources):
            writer.writerow([int(t), int(s)])


def write_outcomes_csv(path, panel: Panel):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "y0", "y1"])
        for i in range(panel.n):
            writer.writerow([i, int(panel.y0[i]), int(panel.y1[i])])


def write_covariates_csv(path, panel: Panel):
    p = panel.x.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id"] + [f"x{k+1}" for k in range(p)])
        for i in range(panel.n):
            writer.writerow([i] + [FLOAT_FMT % v for v in panel.x[i]])


def _emit_json(payload, out):
    text = json.dumps(payload, indent=2)
    if out and out != "-":
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


# ----------------------------------------------------------------------
# subcommands

def _cmd_gen_graph(args):
    g = _generate_graph(args.model, args.n, args)
    write_edges_csv(args.out, g)
    log.info("wrote %d edges to %s", g.n_edges, args.out)
    return 0


def _generate_graph(model, n, args):
    if model == "er":
        if args.lam is None:
            raise SchemaError("--lambda is required for the er model")
        return erdos_renyi(n, args.lam, args.seed)
    if model == "ba":
        if args.m is None:
            raise SchemaError("--m is required for the ba model")
        return barabasi_albert(n, args.m, args.seed)
    raise SchemaError(f"unknown graph model {model!r}")


def _cmd_graph_stats(args):
    _, rows = _read_rows(args.edges, ["target", "source"])
    pairs = [(int(r["target"]), int(r["source"])) for r in rows]
    n = args.n
    if n is None:
        n = 1 + max((max(t, s) for t, s in pairs), default=-1)
    g = from_edge_list(pairs, n)
    stats = degree_stats(g)
    _emit_json({"n": g.n, **stats.to_dict()}, args.out)
    return 0


def _build_spec(args) -> DgpSpec:
    if args.design == "lowdim":
        gamma0, beta0 = BENCHMARK_GAMMA0, BENCHMARK_BETA0
        if args.p != 5:
            raise SchemaError("the lowdim design fixes p=5")
    elif args.design == "highdim":
        gamma0, beta0 = np.zeros(args.p), highdim_beta0(args.p)
    else:
        raise SchemaError(f"unknown design {args.design!r}")
    return DgpSpec(gamma0=gamma0, delta0=args.delta0, beta0=beta0,
                   y0_mode=args.y0_mode, pi0=args.pi0,
                   irreversible=not args.reversible)


def _cmd_simulate(args):
    g = _generate_graph(args.model, args.n, args)
    spec = _build_spec(args)
    ss = np.random.SeedSequence(args.seed)
    s_panel, s_truth = ss.spawn(2)
    panel = simulate_panel(g, spec, s_panel)
    td = true_diffusion(g, panel.x, spec, sims=args.true_sims, seed=s_truth)
    prefix = args.out_prefix
    write_edges_csv(prefix + "-edges.csv", g)
    write_outcomes_csv(prefix + "-outcomes.csv", panel)
    write_covariates_csv(prefix + "-covariates.csv", panel)
    sidecar = {
        "n": g.n,
        "model": args.model,
        "seed": args.seed,
        "spec": {
            "gamma0": spec.gamma0.tolist(),
            "delta0": spec.delta0,
            "beta0": spec.beta0.tolist(),
            "y0_mode": spec.y0_mode,
            "pi0": spec.pi0,
            "irreversible": spec.irreversible,
        },
        "true_d": td.d,
        "true_d_irr": td.d_irr,
        "true_d_se": td.se_d,
        "true_d_irr_se": td.se_d_irr,
        "true_sims": td.sims,
        "edge_convention": "target,source: source's period-0 outcome feeds target's period-1 outcome",
    }
    _emit_json(sidecar, prefix + "-truth.json")
    log.info("wrote %s-{edges,outcomes,covariates}.csv and %s-truth.json", prefix, prefix)
    return 0


def _cmd_estimate(args):
    manifest = IngestManifest(
        edges_path=args.edges,
        outcomes_path=args.outcomes,
        covariates_path=args.covariates,
        direction="reversed" if args.reversed else "as-is",
        missing=args.missing,
    )
    panel, g, _ = ingest_panel(manifest)
    options = EstimateOptions(
        fit=args.fit, variant=args.variant, alpha=args.alpha,
        draws=args.draws, seed=args.seed, folds=args.folds,
        y0_fit=args.y0_fit,
    )
    model = None
    if args.model:
        with open(args.model) as fh:
            model = MeanModel.from_json(fh.read())
    report = estimate_diffusion(panel, g, options, model=model)
    if args.save_model:
        with open(args.save_model, "w") as fh:
            fh.write(report.model.to_json() + "\n")
    _emit_json(report.to_json_dict(), args.out)
    print(report.summary(), file=sys.stderr)
    return 0


def _load_mc_cells(path):
    if path.endswith(".toml"):
        try:
            import tomllib
        except ModuleNotFoundError:
            import tomli as tomllib
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    else:
        with open(path) as fh:
            raw = json.load(fh)
    defaults = raw.get("defaults", {})
    cells = raw.get("cells", [])
    if not cells:
        raise SchemaError(f"{path}: no cells defined")
    configs = []
    for cell in cells:
        merged = {**defaults, **cell}
        design = merged.pop("design", "lowdim")
        delta0 = float(merged.pop("delta0", 0.0))
        p = int(merged.pop("p", 5 if design == "lowdim" else 500))
        if design == "lowdim":
            spec = DgpSpec.benchmark_lowdim(delta0)
        elif design == "highdim":
            spec = DgpSpec.benchmark_highdim(delta0, p=p)
        else:
            raise SchemaError(f"unknown design {design!r}")
        merged["alphas"] = tuple(merged.get("alphas", (0.05,)))
        known = {f.name for f in McConfig.__dataclass_fields__.values()}
        extra = set(merged) - known
        if extra:
            raise SchemaError(f"unknown mc config keys: {sorted(extra)}")
        try:
            configs.append(McConfig(dgp=spec, **merged))
        except TypeError as exc:
            raise SchemaError(f"{path}: bad cell definition: {exc}") from exc
    return configs


def _cmd_mc(args):
    configs = _load_mc_cells(args.config)
    os.makedirs(args.out, exist_ok=True)
    rows = []
    for config in configs:
        log.info("running cell %s (%d reps)", config.name, config.reps)
        report = run_mc(config, out_dir=args.out, workers=args.workers)
        _emit_json(report.to_json_dict(),
                   os.path.join(args.out, f"cell-{config.name}.json"))
        row = {
            "cell": config.name,
            "model": config.graph_model,
            "param": config.graph_param,
            "n": config.n,
            "delta0": config.dgp.delta0,
            "fit": config.fit,
            "pairing": config.pairing,
            "reps": report.reps_done,
            "failures": report.failures,
            "true_d": report.true_d,
            "true_d_irr": report.true_d_irr,
            "mean_estimate": report.mean_estimate,
            "max_deg": report.degree["max_deg"],
            "avg_deg": report.degree["avg_deg"],
        }
        for key in sorted(report.coverage):
            row[f"coverage@{key}"] = report.coverage[key]
            row[f"mean_length@{key}"] = report.mean_length[key]
            row[f"mean_clb@{key}"] = report.mean_clb[key]
        rows.append(row)
    merged = os.path.join(args.out, "cells.csv")
    fieldnames = list(dict.fromkeys(k for row in rows for k in row))
    with open(merged, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)
    log.info("wrote %s", merged)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="netdiff",
        description="Diffusion estimation over sparse directed graphs.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    pg = sub.add_parser("gen-graph", help="write a random graph as an edge CSV")
    pg.add_argument("--model", required=True, choices=["er", "ba"])
    pg.add_argument("--n", type=int, required=True)
    pg.add_argument("--lambda", dest="lam", type=float, default=None,
                    help="expected degree (er)")
    pg.add_argument("--m", type=int, default=None, help="edges per new vertex (ba)")
    pg.add_argument("--seed", type=int, default=0)
    pg.add_argument("--out", required=True)
    pg.set_defaults(func=_cmd_gen_graph)

    ps = sub.add_parser("graph-stats", help="degree statistics of an edge CSV")
    ps.add_argument("--edges", required=True)
    ps.add_argument("--n", type=int, default=None,
                    help="node count (default: 1 + max id)")
    ps.add_argument("--out", default=None)
    ps.set_defaults(func=_cmd_graph_stats)

    pm = sub.add_parser("simulate", help="simulate a panel and write CSVs")
    pm.add_argument("--model", required=True, choices=["er", "ba"])
    pm.add_argument("--n", type=int, required=True)
    pm.add_argument("--lambda", dest="lam", type=float, default=None)
    pm.add_argument("--m", type=int, default=None)
    pm.add_argument("--design", choices=["lowdim", "highdim"], default="lowdim")
    pm.add_argument("--p", type=int, default=5)
    pm.add_argument("--delta0", type=float, default=1.0)
    pm.add_argument("--y0-mode", choices=["probit", "bernoulli"], default="probit")
    pm.add_argument("--pi0", type=float, default=0.3)
    pm.add_argument("--reversible", action="store_true",
                    help="allow switched nodes to switch back")
    pm.add_argument("--true-sims", type=int, default=20000)
    pm.add_argument("--seed", type=int, default=0)
    pm.add_argument("--out-prefix", required=True)
    pm.set_defaults(func=_cmd_simulate)

    pe = sub.add_parser("estimate", help="estimate diffusion from panel CSVs")
    pe.add_argument("--edges", required=True)
    pe.add_argument("--outcomes", required=True)
    pe.add_argument("--covariates", required=True)
    pe.add_argument("--variant", choices=["plain", "irr"], default="irr")
    pe.add_argument("--fit", choices=["mle", "lasso"], default="mle")
    pe.add_argument("--alpha", type=float, default=0.05)
    pe.add_argument("--draws", type=int, default=None)
    pe.add_argument("--seed", type=int, default=0)
    pe.add_argument("--folds", type=int, default=10)
    pe.add_argument("--y0-fit", choices=["mle", "lasso", "intercept"], default=None)
    pe.add_argument("--reversed", action="store_true",
                    help="transpose every edge on ingest")
    pe.add_argument("--missing", choices=["drop", "error"], default="drop")
    pe.add_argument("--model", default=None,
                    help="reuse a fitted mean model from JSON instead of fitting")
    pe.add_argument("--save-model", default=None,
                    help="write the fitted mean model as JSON")
    pe.add_argument("--out", default=None, help="report JSON path (default stdout)")
    pe.set_defaults(func=_cmd_estimate)

    pc = sub.add_parser("mc", help="run Monte Carlo cells from a config file")
    pc.add_argument("--config", required=True, help="TOML or JSON cell grid")
    pc.add_argument("--out", required=True, help="output directory")
    pc.add_argument("--workers", type=int, default=None,
                    help="parallel workers (default: NETDIFF_THREADS or all cores)")
    pc.set_defaults(func=_cmd_mc)
    return parser


def run_cli(argv=None) -> int:
    """Parse and dispatch; returns the process exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NetdiffError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main():
    raise SystemExit(run_cli())

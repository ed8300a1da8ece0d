"""Seeded, resumable coverage experiments on random graphs.

A cell fixes one (graph, covariates) realization, computes the simulated
truth once, then repeatedly redraws the outcome shocks, runs the full
estimation pipeline, and records whether each confidence interval covers
the cell's target.  Replications derive independent RNG streams from
(master seed, replication index), so reruns and parallel runs agree
bit-for-bit; checkpoints are written atomically and allow resuming.
"""

from __future__ import annotations

import json
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._rng import as_seed_sequence, replication_seed
from .dgp import DgpSpec, Panel, gen_covariates, gen_y0, gen_y1, true_diffusion
from .errors import NetdiffError
from .graph import DirectedGraph, barabasi_albert, degree_stats, erdos_renyi, overlap_pairs
from .inference import EstimateOptions, confidence_interval, confidence_lower_bound, estimate_diffusion

__all__ = ["McConfig", "McReport", "CellState", "build_cell",
           "run_replication", "run_mc", "worker_count"]

CHECKPOINT_EVERY = 100


def worker_count(requested=None) -> int:
    """Parallelism cap: explicit argument, else NETDIFF_THREADS, else all cores."""
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get("NETDIFF_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass(frozen=True)
class McConfig:
    """One experiment cell.

    ``pairing`` names which estimator variant is run and which simulated
    truth its intervals are checked against: "irr" pairs the untreated-
    conditional estimator with the untreated-conditional target, "plain"
    the unscaled pair.
    """

    name: str
    graph_model: str            # "er" | "ba"
    graph_param: float          # expected degree (er) or edges per vertex (ba)
    n: int
    dgp: DgpSpec
    fit: str = "mle"            # "mle" | "lasso"
    y0_fit: Optional[str] = None
    reps: int = 1000
    true_sims: int = 100_000
    alphas: tuple = (0.05,)
    draws: Optional[int] = None
    seed: int = 0
    pairing: str = "irr"
    folds: int = 10
    proxy_keep: float = 1.0     # fraction of causal edges exposed to the estimator

    def cell_key(self) -> str:
        spec = self.dgp
        parts = [self.name, self.graph_model, f"{self.graph_param:g}", str(self.n),
                 f"{spec.delta0:g}", spec.y0_mode, str(spec.p), self.fit,
                 str(self.reps), str(self.true_sims), str(self.seed),
                 self.pairing, f"{self.proxy_keep:g}"]
        return "-".join(parts)


@dataclass
class McReport:
    """Aggregated cell results."""

    name: str
    n: int
    reps_done: int
    failures: int
    true_d: float
    true_d_irr: float
    true_d_se: float
    true_d_irr_se: float
    coverage: dict
    mean_length: dict
    mean_clb: dict
    clb_valid_rate: dict
    mean_estimate: float
    sd_estimate: float
    degree: dict
    pairing: str
    config_key: str = ""

    def to_json_dict(self) -> dict:
        out = dict(self.__dict__)
        return out


@dataclass
class CellState:
    """Fixed per-cell data shared by every replication."""

    config: McConfig
    graph: DirectedGraph          # graph handed to the estimator
    causal_graph: DirectedGraph   # graph that generates the outcomes
    x: np.ndarray
    truth: tuple                  # (d, d_irr, se_d, se_d_irr)
    pairs: np.ndarray


def _make_graph(config: McConfig, seed) -> DirectedGraph:
    if config.graph_model == "er":
        return erdos_renyi(config.n, config.graph_param, seed)
    if config.graph_model == "ba":
        return barabasi_albert(config.n, int(config.graph_param), seed)
    raise ValueError(f"unknown graph model {config.graph_model!r}")


def build_cell(config: McConfig) -> CellState:
    """Generate the cell's fixed graph, covariates, and simulated truth.

    Only the outcome shocks are redrawn across replications; the graph and
    covariates stay fixed, matching a design conditioned on both.  With
    ``proxy_keep < 1`` the estimator sees a uniformly thinned subgraph of
    the causal graph.
    """
    ss = as_seed_sequence(config.seed)
    s_graph, s_x, s_truth, s_proxy = ss.spawn(4)
    causal = _make_graph(config, s_graph)
    x = gen_covariates(config.n, config.dgp.p, s_x)
    td = true_diffusion(causal, x, config.dgp, sims=config.true_sims, seed=s_truth)
    if config.proxy_keep < 1.0:
        rng = np.random.default_rng(s_proxy)
        keep = rng.random(causal.n_edges) < config.proxy_keep
        observed = DirectedGraph(causal.n, causal.targets[keep], causal.sources[keep])
    else:
        observed = causal
    return CellState(
        config=config,
        graph=observed,
        causal_graph=causal,
        x=x,
        truth=(td.d, td.d_irr, td.se_d, td.se_d_irr),
        pairs=overlap_pairs(observed),
    )


def run_replication(cell: CellState, rep_index: int) -> dict:
    """One panel draw and estimation pass.

    Returns a record with the estimate, per-alpha interval endpoints and
    coverage flags, or a failure marker when the pipeline raises a
    package error (non-convergence, degeneracy); failures are recorded,
    not fatal.
    """
    config = cell.config
    rss = replication_seed(config.seed, rep_index)
    s_y0, s_y1, s_est = rss.spawn(3)
    y0 = gen_y0(cell.x, config.dgp, s_y0)
    y1 = gen_y1(cell.causal_graph, y0, cell.x, config.dgp, s_y1)
    panel = Panel(y0=y0, y1=y1, x=cell.x)
    target = cell.truth[1] if config.pairing == "irr" else cell.truth[0]
    options = EstimateOptions(
        fit=config.fit, variant=config.pairing, alpha=config.alphas[0],
        draws=config.draws, seed=s_est, folds=config.folds,
        y0_fit=config.y0_fit, irreversible=config.dgp.irreversible,
    )
    try:
        report = estimate_diffusion(panel, cell.graph, options, pairs=cell.pairs)
    except NetdiffError as exc:
        return {"rep": rep_index, "failed": type(exc).__name__}
    rec = {
        "rep": rep_index,
        "failed": None,
        "estimate": report.estimate,
        "sigma_plus": report.sigma_plus,
        "fallback_used": report.fallback_used,
    }
    for alpha in config.alphas:
        lo, hi = confidence_interval(report.estimate, report.sigma_plus,
                                     report.n, alpha)
        clb = confidence_lower_bound(report.estimate, report.sigma_plus,
                                     report.n, alpha)
        key = f"{alpha:g}"
        rec[f"cover@{key}"] = bool(lo <= target <= hi)
        rec[f"length@{key}"] = hi - lo
        rec[f"clb@{key}"] = clb
        rec[f"clb_valid@{key}"] = bool(target >= clb)
    return rec


def _rep_worker(args):
    cell, indices = args
    return [run_replication(cell, r) for r in indices]


def run_mc(config: McConfig, out_dir=None, workers=None) -> McReport:
    """Run (or resume) every replication of a cell and aggregate.

    Writes an atomic JSON checkpoint every 100 finished replications when
    ``out_dir`` is given; rerunning with the same config resumes from it.
    Aborts if more than 10% of replications fail.
    """
    cell = build_cell(config)
    records: dict[int, dict] = {}
    ckpt_path = None
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        ckpt_path = os.path.join(out_dir, f"ckpt-{config.cell_key()}.json")
        if os.path.exists(ckpt_path):
            with open(ckpt_path) as fh:
                saved = json.load(fh)
            if saved.get("config_key") == config.cell_key():
                records = {int(r["rep"]): r for r in saved["records"]}

    todo = [r for r in range(config.reps) if r not in records]
    n_workers = min(worker_count(workers), max(1, len(todo)))
    since_ckpt = 0
    if todo:
        if n_workers == 1:
            for r in todo:
                records[r] = run_replication(cell, r)
                since_ckpt += 1
                if ckpt_path and since_ckpt >= CHECKPOINT_EVERY:
                    _write_checkpoint(ckpt_path, config, records)
                    since_ckpt = 0
        else:
            batches = [(cell, chunk.tolist())
                       for chunk in np.array_split(np.array(todo), n_workers * 4)
                       if chunk.size]
            with ProcessPoolExecutor(max_workers=n_workers) as pool:
                for recs in pool.map(_rep_worker, batches):
                    for rec in recs:
                        records[rec["rep"]] = rec
                    since_ckpt += len(recs)
                    if ckpt_path and since_ckpt >= CHECKPOINT_EVERY:
                        _write_checkpoint(ckpt_path, config, records)
                        since_ckpt = 0
        if ckpt_path:
            _write_checkpoint(ckpt_path, config, records)

    ordered = [records[r] for r in sorted(records)]
    ok = [r for r in ordered if r["failed"] is None]
    failures = len(ordered) - len(ok)
    if failures > 0.10 * max(len(ordered), 1):
        raise NetdiffError(
            f"cell {config.name}: {failures}/{len(ordered)} replications failed"
        )
    coverage, mean_length, mean_clb, clb_valid = {}, {}, {}, {}
    for alpha in config.alphas:
        key = f"{alpha:g}"
        coverage[key] = float(np.mean([r[f"cover@{key}"] for r in ok])) if ok else np.nan
        mean_length[key] = float(np.mean([r[f"length@{key}"] for r in ok])) if ok else np.nan
        mean_clb[key] = float(np.mean([r[f"clb@{key}"] for r in ok])) if ok else np.nan
        clb_valid[key] = float(np.mean([r[f"clb_valid@{key}"] for r in ok])) if ok else np.nan
    estimates = np.array([r["estimate"] for r in ok]) if ok else np.array([np.nan])
    return McReport(
        name=config.name,
        n=config.n,
        reps_done=len(ordered),
        failures=failures,
        true_d=cell.truth[0],
        true_d_irr=cell.truth[1],
        true_d_se=cell.truth[2],
        true_d_irr_se=cell.truth[3],
        coverage=coverage,
        mean_length=mean_length,
        mean_clb=mean_clb,
        clb_valid_rate=clb_valid,
        mean_estimate=float(estimates.mean()),
        sd_estimate=float(estimates.std(ddof=1)) if estimates.size > 1 else 0.0,
        degree=degree_stats(cell.graph).to_dict(),
        pairing=config.pairing,
        config_key=config.cell_key(),
    )


def _write_checkpoint(path, config, records):
    payload = {
        "config_key": config.cell_key(),
        "records": [records[r] for r in sorted(records)],
    }
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".",
                               prefix=".ckpt-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(payload, fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise

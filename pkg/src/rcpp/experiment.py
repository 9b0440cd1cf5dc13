"""Turn an ExperimentConfig into runnable objects and execute (algorithm, seed) jobs."""

from __future__ import annotations

import csv
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .compressors import ScalingSchedule, make_compressor
from .config import ExperimentConfig, parse_config_text
from .core import RunConfig, check_step_sizes, run
from .digraph import Digraph, build_mixing, make_ring
from .errors import DivergenceError, FitUnavailable
from .harness import fit_rate, write_csv
from .objectives import make_ridge

SUMMARY_COLUMNS = (
    "algorithm", "seed", "status", "iterations", "final_residual", "c_hat", "r2",
    "bits_total", "reached_target", "plateau",
)


@dataclass
class Experiment:
    problem: object
    mixing: object
    run_config: RunConfig


def build_graph(g) -> Digraph:
    if g.topology == "edgelist":
        with open(g.path) as fh:
            return Digraph.from_edgelist(fh.read())
    return make_ring(g.n, g.extra_edges, seed=g.seed)


def build_experiment(cfg: ExperimentConfig) -> Experiment:
    graph = build_graph(cfg.graph)
    mixing = build_mixing(graph, seed=cfg.graph.seed if cfg.graph.random_weights else None)
    pr = cfg.problem
    problem = make_ridge(mixing.n, pr.p, pr.rho, pr.noise, seed=pr.seed)
    cm = cfg.compressor
    comp = make_compressor(cm.kind, pr.p, b=cm.b, k=cm.k or None, level=cm.level)
    a = cfg.algorithm
    rc = RunConfig(
        lam=a.lambda_, alpha_x=a.alpha_x, alpha_y=a.alpha_y, gamma_x=a.gamma_x, gamma_y=a.gamma_y,
        schedule=ScalingSchedule(a.c0, a.c), K=a.K, compressor=comp, mixing=mixing,
    )
    return Experiment(problem, mixing, rc)


def csv_name(algorithm, seed) -> str:
    return f"{algorithm}_seed{seed}.csv"


def run_job(config_text, algorithm, seed, out_dir):
    """Run one (algorithm, seed) pair, write its CSV, return a summary row."""
    cfg = parse_config_text(config_text)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        exp = build_experiment(cfg)
    status = "ok"
    try:
        trace = run(exp.run_config, exp.problem, algorithm, seed=seed)
    except DivergenceError as err:
        trace, status = err.trace, f"diverged@{err.k}"
    write_csv(trace, os.path.join(out_dir, csv_name(algorithm, seed)))
    last = trace[-1]
    try:
        fit = fit_rate([r.residual for r in trace], burn_in=cfg.output.burn_in)
        c_hat, r2 = f"{fit.c_hat:.17g}", f"{fit.r2:.17g}"
    except FitUnavailable:
        c_hat = r2 = "no fit"
    return {
        "algorithm": algorithm,
        "seed": seed,
        "status": status,
        "iterations": last.k,
        "final_residual": f"{last.residual:.17g}",
        "c_hat": c_hat,
        "r2": r2,
        "bits_total": last.bits_cum,
        "reached_target": str(status == "ok" and last.residual < cfg.output.target_residual).lower(),
        "plateau": str(last.residual > cfg.output.plateau_residual).lower(),
    }


def run_experiment(cfg: ExperimentConfig, out_dir=None, workers=None):
    """Run every (algorithm, seed) pair; write CSVs, ``summary.csv`` and ``config.ini``."""
    out_dir = out_dir or cfg.output.directory
    workers = workers or cfg.output.workers
    os.makedirs(out_dir, exist_ok=True)
    text = cfg.to_text()
    with open(os.path.join(out_dir, "config.ini"), "w") as fh:
        fh.write(text)
    exp = build_experiment(cfg)
    check_step_sizes(exp.run_config, exp.problem.L)
    jobs = [(text, algo, seed, out_dir) for algo in cfg.algorithm.name for seed in cfg.output.seeds]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run_job, *zip(*jobs)))
    else:
        rows = [run_job(*j) for j in jobs]
    with open(os.path.join(out_dir, "summary.csv"), "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SUMMARY_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    return rows

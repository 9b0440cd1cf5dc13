"""Command line entry point: ``rcpp run | certify | graph | defaults``."""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .compressors import KINDS, certify_compressor, make_compressor
from .config import OUT_DIR_ENV, default_config, parse_config, parse_config_text, reference_page
from .digraph import Digraph, build_mixing, is_strongly_connected, make_ring, root_set
from .errors import AssumptionViolation, ConfigError
from .experiment import run_experiment


def cmd_run(config_path=None, overrides=(), seeds=None, out=None, workers=None) -> int:
    """Run every configured (algorithm, seed); nonzero exit iff some run diverged."""
    try:
        if config_path:
            cfg = parse_config(config_path, overrides)
        else:
            cfg = parse_config_text("", overrides)
    except ConfigError as err:
        for e in err.errors:
            print(f"config error: {e}", file=sys.stderr)
        return 2
    if seeds:
        cfg = cfg.with_overrides(output={"seeds": tuple(seeds)})
    out_dir = out or cfg.output.directory
    rows = run_experiment(cfg, out_dir=out_dir, workers=workers)
    header = f"{'algorithm':<12} {'seed':>4} {'status':<12} {'final_residual':>14} {'c_hat':>10} {'r2':>8} {'bits':>12}"
    print(header)
    for r in rows:
        c_hat = r["c_hat"] if r["c_hat"] == "no fit" else f"{float(r['c_hat']):.6f}"
        r2 = r["r2"] if r["r2"] == "no fit" else f"{float(r['r2']):.4f}"
        flag = " PLATEAU" if r["plateau"] == "true" else ""
        flag += " PASS" if r["reached_target"] == "true" else " FAIL"
        print(f"{r['algorithm']:<12} {r['seed']:>4} {r['status']:<12} {float(r['final_residual']):>14.3e} "
              f"{c_hat:>10} {r2:>8} {r['bits_total']:>12}{flag}")
    print(f"wrote {len(rows)} trace(s) and summary.csv to {out_dir}")
    return 1 if any(r["status"] != "ok" for r in rows) else 0


def cmd_certify(kind, d, samples, seed, b=2, k=None, level=1.0) -> int:
    spec = make_compressor(kind, d, b=b, k=k, level=level)
    rep = certify_compressor(spec, d, samples, np.random.default_rng(seed))
    print(f"compressor {kind} (d={d}, N={samples}, seed={seed})")
    print(f"declared: C={spec.C_rel:.6g} sigma2={spec.sigma2:.6g} r={spec.r:.6g} "
          f"delta={spec.delta:.6g} sigma2_r={spec.sigma2_r:.6g}"
          + (" (empirical)" if spec.certified else ""))
    for line in rep.lines():
        print(line)
    return 0 if rep.passed else 1


def cmd_graph_emit(n, extra_edges, seed, out=None) -> int:
    text = make_ring(n, extra_edges, seed=seed).to_edgelist()
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_graph_check(path) -> int:
    with open(path) as fh:
        g = Digraph.from_edgelist(fh.read())
    print(f"nodes: {g.n}  edges: {len(g.edges)}")
    print(f"strongly connected: {is_strongly_connected(g)}")
    print(f"root set: {sorted(root_set(g))}")
    try:
        mix = build_mixing(g)
    except AssumptionViolation as err:
        print(f"mixing: FAIL ({err})")
        return 1
    problems = mix.check()
    print("mixing: " + ("OK" if not problems else "FAIL (" + "; ".join(problems) + ")"))
    return 0 if not problems else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rcpp", description="Robust compressed push-pull experiments")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run the configured experiment")
    r.add_argument("--config", help="INI config file (defaults used when omitted)")
    r.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE")
    r.add_argument("--seed", dest="seeds", type=int, action="append", help="run seed (repeatable)")
    r.add_argument("--out", help=f"output directory (overrides output.directory and ${OUT_DIR_ENV})")
    r.add_argument("--workers", type=int, help="parallel worker processes")

    c = sub.add_parser("certify", help="estimate compression contract constants")
    c.add_argument("--kind", choices=KINDS, required=True)
    c.add_argument("--d", type=int, default=16)
    c.add_argument("--samples", type=int, default=100_000)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--b", type=int, default=2)
    c.add_argument("--k", type=int)
    c.add_argument("--level", type=float, default=1.0)

    g = sub.add_parser("graph", help="emit or validate edge lists")
    gs = g.add_subparsers(dest="graph_command", required=True)
    ge = gs.add_parser("emit")
    ge.add_argument("--n", type=int, default=20)
    ge.add_argument("--extra-edges", type=int, default=20)
    ge.add_argument("--seed", type=int, default=0)
    ge.add_argument("--out")
    gc = gs.add_parser("check")
    gc.add_argument("path")

    d = sub.add_parser("defaults", help="print the default config or the reference page")
    d.add_argument("--markdown", action="store_true", help="print the key reference as markdown")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "run":
        return cmd_run(args.config, args.overrides, args.seeds, args.out, args.workers)
    if args.command == "certify":
        return cmd_certify(args.kind, args.d, args.samples, args.seed, args.b, args.k, args.level)
    if args.command == "graph":
        if args.graph_command == "emit":
            return cmd_graph_emit(args.n, args.extra_edges, args.seed, args.out)
        return cmd_graph_check(args.path)
    if args.command == "defaults":
        print(reference_page() if args.markdown else default_config().to_text())
        return 0
    return 2


if __name__ == "__main__":
    sys.exit(main())

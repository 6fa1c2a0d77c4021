"""Command-line front end.

Single run on a curve file::

    funoclust --input curves.csv --clusters 2 --impute --out-dir out/

Simulated benchmark with truth-based scoring::

    funoclust --simulate --replicates 10 --seed 1 --out-dir bench/
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .basis import RankDeficientBasisError, eval_basis, fit_coefficients, make_knots, reconstruct
from .evaluate import ari, outlier_rates, trimmed_kmeans
from .io import (CurveFileError, fmt, ingest, write_curves, write_rows, write_text)
from .mixture import DegenerateFitError
from .oclust import OUTLIER, derive_seed, run_oclust
from .simgen import SimConfig, generate

logger = logging.getLogger("funoclust")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="funoclust",
                description="Cluster curves and trim outliers on B-spline coefficients.")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", type=Path, help="curve CSV (first row = time grid)")
    src.add_argument("--simulate", action="store_true",
                     help="use simulated sine/log curve families with uniform outliers")
    p.add_argument("--knots", type=int, default=8, help="interior knots K (default 8)")
    p.add_argument("--clusters", type=int, default=2, help="number of clusters G")
    p.add_argument("--max-outliers", type=int, default=50, help="outlier cap F (default 50)")
    p.add_argument("--bins", type=int, default=10, help="KL histogram bins (default 10)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--replicates", type=int, default=1,
                   help="simulated replicates (benchmark mode when > 1)")
    p.add_argument("--impute", action="store_true",
                   help="replace missing cells by their column mean")
    p.add_argument("--out-dir", type=Path, default=Path("funoclust-out"))
    p.add_argument("--trim", type=int, default=25,
                   help="points trimmed by the trimmed k-means baseline (simulation only)")
    p.add_argument("--sim-per-class", type=int, default=250)
    p.add_argument("--sim-outliers", type=int, default=15)
    p.add_argument("-v", "--verbose", action="count", default=0)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def _config_echo(args) -> dict:
    out = {}
    for k, v in sorted(vars(args).items()):
        if k == "verbose":
            continue
        out[k] = str(v) if isinstance(v, Path) else v
    return out


def _label_text(lab) -> str:
    return "OUTLIER" if lab == OUTLIER else str(int(lab))


def run_single(curves, args, out_dir: Path, truth=None, seed=None) -> dict:
    """Run the pipeline on one curve set and write its artifacts to ``out_dir``."""
    seed = args.seed if seed is None else seed
    out_dir.mkdir(parents=True, exist_ok=True)
    knots = make_knots(curves.grid[0], curves.grid[-1], args.knots)
    basis = eval_basis(knots, curves.grid)
    coefs = fit_coefficients(basis, curves)
    res = run_oclust(coefs, args.clusters, args.max_outliers, seed=seed, bins=args.bins,
                     n_interior=args.knots)

    write_rows(out_dir / "labels.csv", ["curve", "label"],
               ([i, _label_text(lab)] for i, lab in enumerate(res.final_labels)))
    removed = list(res.removal_sequence) + [""]
    write_rows(out_dir / "kl_trace.csv", ["iteration", "kl", "removed"],
               ([i, fmt(kl), removed[i]] for i, kl in enumerate(res.kl_trace)))
    write_rows(out_dir / "coefficients.csv",
               [f"b{k + 1}" for k in range(coefs.shape[1])],
               ([fmt(v) for v in row] for row in coefs))
    write_curves(out_dir / "fitted_curves.csv", curves.grid, reconstruct(basis, coefs))

    summary = {
        "best_iteration": res.best_iteration,
        "n_outliers": res.n_outliers,
        "outliers": sorted(int(i) for i in res.outliers),
        "final_loglik": float(fmt(res.final_loglik)),
        "cluster_sizes": [int(s) for s in res.cluster_sizes],
        "n_curves": int(curves.n_curves),
        "seed": int(seed),
    }
    if truth is not None:
        rates = outlier_rates(truth, res.final_labels)
        good = truth != OUTLIER
        tk = trimmed_kmeans(coefs, args.clusters, args.trim, seed=seed)
        summary["truth"] = {
            "ari": ari(truth, res.final_labels),
            "ari_good": ari(truth[good], res.final_labels[good]),
            "false_positive_rate": rates.false_positive_rate,
            "false_negative_rate": rates.false_negative_rate,
            "tkmeans_ari": ari(truth, tk),
            "tkmeans_ari_good": ari(truth[good], tk[good]),
        }
    return summary


def _write_summary(path: Path, summary: dict, args) -> None:
    summary = dict(summary, config=_config_echo(args),
                   timestamp=_dt.datetime.now(_dt.timezone.utc).isoformat())
    write_text(path, json.dumps(summary, indent=2, sort_keys=True) + "\n")


BENCH_COLS = ["ari", "ari_good", "false_positive_rate", "false_negative_rate",
              "n_outliers", "tkmeans_ari", "tkmeans_ari_good"]


def run_benchmark(args) -> dict:
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for r in range(args.replicates):
        seed = derive_seed(args.seed, r)
        cfg = SimConfig(n_per_class=args.sim_per_class, n_outliers=args.sim_outliers,
                        seed=seed)
        data = generate(cfg)
        rep_dir = out / f"replicate_{r:03d}"
        s = run_single(data.curves, args, rep_dir, truth=data.labels, seed=seed)
        _write_summary(rep_dir / "summary.json", s, args)
        row = dict(s["truth"], n_outliers=s["n_outliers"])
        rows.append(row)
        logger.info("replicate %d: ARI %.3f, %d outliers", r, row["ari"], row["n_outliers"])
    table = np.array([[row[c] for c in BENCH_COLS] for row in rows], dtype=float)
    mean = table.mean(axis=0)
    sd = table.std(axis=0, ddof=1) if len(rows) > 1 else np.zeros(len(BENCH_COLS))
    body = [[str(r)] + [fmt(v) for v in row] for r, row in enumerate(table)]
    body += [["mean"] + [fmt(v) for v in mean], ["sd"] + [fmt(v) for v in sd]]
    write_rows(out / "benchmark.csv", ["replicate"] + BENCH_COLS, body)
    return {"replicates": args.replicates,
            "mean": dict(zip(BENCH_COLS, map(float, mean))),
            "sd": dict(zip(BENCH_COLS, map(float, sd)))}


def run(args) -> int:
    if args.knots < 0 or args.clusters < 1 or args.max_outliers < 0 or args.bins < 2 \
            or args.replicates < 1:
        logger.error("invalid numeric option")
        return EXIT_CONFIG
    try:
        if args.simulate and args.replicates > 1:
            summary = run_benchmark(args)
        elif args.simulate:
            cfg = SimConfig(n_per_class=args.sim_per_class, n_outliers=args.sim_outliers,
                            seed=args.seed)
            data = generate(cfg)
            args.out_dir.mkdir(parents=True, exist_ok=True)
            write_curves(args.out_dir / "curves.csv", data.curves.grid, data.curves.values)
            write_rows(args.out_dir / "truth.csv", ["curve", "label"],
                       ([i, _label_text(l)] for i, l in enumerate(data.labels)))
            summary = run_single(data.curves, args, args.out_dir, truth=data.labels)
        else:
            curves, n_imputed = ingest(args.input, impute_missing=args.impute)
            summary = run_single(curves, args, args.out_dir)
            summary["n_imputed"] = n_imputed
    except (CurveFileError, OSError) as exc:
        logger.error("%s", exc)
        return EXIT_CONFIG
    except (DegenerateFitError, RankDeficientBasisError, np.linalg.LinAlgError) as exc:
        logger.error("numeric failure: %s", exc)
        return EXIT_NUMERIC
    except ValueError as exc:
        logger.error("%s", exc)
        return EXIT_CONFIG
    _write_summary(args.out_dir / "summary.json", summary, args)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = [logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    return run(args)


if __name__ == "__main__":
    sys.exit(main())

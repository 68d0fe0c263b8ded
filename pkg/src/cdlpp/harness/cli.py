"""``bench`` command line entry point.

Usage::

    bench <cv|dim-sweep|beta-sweep|scatter|bases|timing> --config exp.ini
          [--method NAME ...] [--d D] [--beta B] [--protocol P] [--out DIR]

``--d`` and ``--beta`` take comma-separated lists in ``dim-sweep`` and
``beta-sweep`` (they replace the sweep ranges); elsewhere they set the
learner value for every method. The effective configuration, overrides
included, is written to ``<out>/config.ini``.
"""

from __future__ import annotations

import argparse
import configparser
import sys
from pathlib import Path

from .. import subspace
from ..dataset import DatasetError
from . import experiment as E
from .config import ConfigError, read_config, spec_from_config

COMMANDS = ("cv", "dim-sweep", "beta-sweep", "scatter", "bases", "timing")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bench", description="Subspace learning benchmarks.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="INI experiment file")
    ap.add_argument("--method", action="append",
                    help="method name; repeat or comma-separate to list several")
    ap.add_argument("--d", help="retained dimension (list for dim-sweep)")
    ap.add_argument("--beta", help="CDLPP beta (list for beta-sweep)")
    ap.add_argument("--protocol", help="kfold:k, loo or first:n")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--bases", type=int, default=5, help="bases exported by 'bases'")
    return ap


def _set_learner(cp, key, value):
    if not cp.has_section("learner"):
        cp.add_section("learner")
    cp["learner"][key] = value
    for name in cp.sections():
        if name.startswith("learner.") and key in cp[name]:
            cp[name][key] = value


def apply_overrides(cp: configparser.ConfigParser, args) -> None:
    if not cp.has_section("experiment"):
        cp.add_section("experiment")
    ex = cp["experiment"]
    if args.method:
        ex["methods"] = ",".join(args.method)
    if args.protocol:
        ex["protocol"] = args.protocol
    if args.out:
        ex["out"] = args.out
    if args.d is not None:
        if args.command == "dim-sweep":
            ex["dims"] = args.d
        else:
            _set_learner(cp, "d", args.d)
    if args.beta is not None:
        if args.command == "beta-sweep":
            ex["betas"] = args.beta
        else:
            _set_learner(cp, "beta", args.beta)


def _save_config(cp, out):
    out.mkdir(parents=True, exist_ok=True)
    with (out / "config.ini").open("w", encoding="utf-8") as fh:
        cp.write(fh)


def _cv_rows(report):
    return [{"method": r.method, "mean": f"{r.mean:.17g}", "std": f"{r.std:.17g}",
             "d": r.d, "folds": r.n_folds, "train_seconds": f"{r.train_seconds:.6f}"}
            for r in report.results]


def run(args) -> str:
    """Execute one command; returns the text printed on success."""
    cp = read_config(args.config)
    apply_overrides(cp, args)
    spec = spec_from_config(cp)
    out = Path(spec.out_dir or "bench-out")
    ds = E.load_data(spec)
    _save_config(cp, out)

    if args.command == "cv":
        report = E.run_cv(spec, ds)
        E.write_csv(out / "results.csv", _cv_rows(report),
                    ["method", "mean", "std", "d", "folds", "train_seconds"])
        text = E.summary_table(report)
    elif args.command == "timing":
        report = E.run_cv(spec, ds)
        rows = E.timing_report(report)
        E.write_csv(out / "timing.csv", rows, ["method", "seconds", "folds"])
        text = "".join(f"{r['method']:<12}{r['seconds']:>12.4f} s over {r['folds']} folds\n"
                       for r in rows)
    elif args.command == "dim-sweep":
        report = E.run_dim_sweep(spec, ds)
        E.write_csv(out / "dim_sweep.csv", report.curve,
                    ["method", "d", "accuracy", "status", "is_max"])
        text = "".join(f"{r['method']:<8}d={r['d']:<4}"
                       + (f"{r['accuracy']:.4f}" if r["accuracy"] is not None else r["status"])
                       + (" *" if r.get("is_max") else "") + "\n" for r in report.curve)
    elif args.command == "beta-sweep":
        report = E.run_beta_sweep(spec, ds)
        E.write_csv(out / "beta_sweep.csv", report.curve, ["beta", "accuracy", "std"])
        text = "".join(f"beta={r['beta']:<10g}{r['accuracy']:.4f} +- {r['std']:.4f}\n"
                       for r in report.curve)
    elif args.command == "scatter":
        text = ""
        for m in spec.methods:
            rows = E.export_class_scatter(spec, m, ds, out)
            text += f"{m}: {len(rows)} centres, min distance {E.min_center_distance(rows):.6g}\n"
    else:
        shape = ds.image_shape or spec.image_shape
        if shape is None:
            raise ValueError("basis export needs image data or an image_shape setting")
        if spec.features != "raw":
            raise ValueError("basis export needs raw pixel features")
        text = ""
        for m in spec.methods:
            if m not in E.SUBSPACE_METHODS:
                raise ValueError(f"basis export needs a subspace method, got {m!r}")
            basis = subspace.fit(m, ds.data, ds.labels, spec.learner(m))
            subspace.save_basis(basis, out / f"basis_{m}.txt")
            _, mags = E.export_bases(basis, shape, args.bases, out, prefix=f"basis_{m}")
            text += f"{m}: {mags.shape[1]} bases, Gini of first {E.gini_index(mags[:, 0]):.4f}\n"
    return text + f"outputs written to {out}\n"


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        sys.stdout.write(run(args))
    except (ConfigError, DatasetError, E.ExperimentError, ValueError, OSError) as exc:
        print(f"bench: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point ``rufmine``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .features import make_synthetic
from .metrics import behrens_fisher
from .pipeline import (EXIT_CODES, PHASES, PhaseError, load_config, run_phase, run_pipeline,
                       run_repeated, summarize, write_manifest)
from .table import write_table


def _config(args):
    return load_config(args.config, seed=args.seed, model=getattr(args, "model", None))


def _add_common(p):
    p.add_argument("--config", help="flat key = value configuration file")
    p.add_argument("--seed", type=int, help="override the configured seed")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--model", choices=["S", "F", "O", "R", "FM"], help="model variant")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rufmine", description="Rough-fuzzy MLP rule mining")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    _add_common(sub.add_parser("pipeline", help="run every phase"))
    for name in PHASES:
        _add_common(sub.add_parser(name, help="run the %s phase only" % name))

    p = sub.add_parser("repeat", help="run the pipeline over several seeds and summarize")
    _add_common(p)
    p.add_argument("--runs", type=int, default=10)

    p = sub.add_parser("synth", help="write a synthetic decision table")
    p.add_argument("--classes", type=int, default=6)
    p.add_argument("--per-class", type=int, default=100)
    p.add_argument("--sep", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-", help="CSV path or - for stdout")

    p = sub.add_parser("bf", help="Behrens-Fisher statistic from two summaries")
    for side in ("1", "2"):
        p.add_argument("--mean" + side, type=float, required=True)
        p.add_argument("--sd" + side, type=float, required=True)
        p.add_argument("--n" + side, type=int, required=True)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = [logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")

    if args.command == "synth":
        t = make_synthetic(args.per_class, args.classes, args.sep, args.seed)
        write_table(t, sys.stdout if args.out == "-" else args.out, fmt="%.17g")
        return 0
    if args.command == "bf":
        v = behrens_fisher(args.mean1, args.sd1, args.n1, args.mean2, args.sd2, args.n2)
        print("%.4f" % v)
        return 0

    try:
        cfg = _config(args)
    except (ValueError, OSError) as exc:
        print("rufmine: [config] %s" % exc, file=sys.stderr)
        return EXIT_CODES["config"]

    try:
        if args.command == "pipeline":
            st = run_pipeline(cfg, args.out)
            print(json.dumps({k: getattr(st.cache["report"], k) for k in
                              ("model", "accuracy", "network_accuracy", "fidelity", "rules", "links")}))
        elif args.command == "repeat":
            reports = run_repeated(cfg, range(cfg.seed, cfg.seed + args.runs), args.out)
            summary = summarize(reports)
            Path(args.out, "summary.json").write_text(json.dumps(summary, indent=1) + "\n")
            for k, v in summary.items():
                print("%-18s %8.3f +- %.3f" % (k, v["mean"], v["sd"]))
        else:
            run_phase(args.command, cfg, args.out)
            if args.command == "evaluate":
                write_manifest(cfg, Path(args.out))
    except PhaseError as err:
        print("rufmine: %s" % err, file=sys.stderr)
        return err.exit_code
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

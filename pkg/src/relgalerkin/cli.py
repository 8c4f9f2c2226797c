"""Command-line entry point: ``relgalerkin <kind> [options]``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import RelGalerkinError
from .experiments import KINDS, ConfigError, load_config_file, merge, run_experiment
from .report import dumps, write_outputs

EXIT_OK, EXIT_ASSERT, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="relgalerkin", description=__doc__)
    sub = ap.add_subparsers(dest="kind", required=True)
    for kind in KINDS:
        sp = sub.add_parser(kind)
        sp.add_argument("--config", help="JSON experiment config")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--threads", type=int, help="BLAS thread cap")
        sp.add_argument("--n", type=int)
        sp.add_argument("--side-lengths", type=_floats, dest="side_lengths")
        sp.add_argument("--p", type=float)
        sp.add_argument("--m", type=float)
        sp.add_argument("--m-list", type=_floats, dest="m_list")
        sp.add_argument("--N", type=int)
        sp.add_argument("--N-list", type=_ints, dest="N_list")
        sp.add_argument("--tol", type=float)
        sp.add_argument("--max-iter", type=int, dest="max_iter")
        sp.add_argument("--lambda-scales", type=_floats, dest="lambda_scales")
        sp.add_argument("--k-max", type=int, dest="k_max")
        sp.add_argument("--control-p", type=float, dest="control_p")
        sp.add_argument("--no-figures", action="store_false", dest="figures", default=None)
        sp.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    flags = {k: v for k, v in vars(args).items() if k not in ("kind", "config", "verbose")}
    try:
        file_data = load_config_file(args.config) if args.config else None
        cfg = merge(args.kind, file_data, flags)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(cfg.out)
    try:
        if cfg.threads:
            from threadpoolctl import threadpool_limits
            with threadpool_limits(limits=cfg.threads):
                report = run_experiment(cfg)
        else:
            report = run_experiment(cfg)
    except (RelGalerkinError, FloatingPointError, ArithmeticError) as exc:
        out.mkdir(parents=True, exist_ok=True)
        record = {"kind": cfg.kind, "error": type(exc).__name__, "message": str(exc)}
        (out / "error.json").write_text(dumps(record))
        print(json.dumps(record), file=sys.stderr)
        return EXIT_NUMERIC
    figures = []
    if cfg.figures:
        from .plotting import render_figures
        figures = render_figures(report, out)
    write_outputs(report, cfg.to_dict(), out, figures)
    sys.stdout.write((out / "summary.txt").read_text())
    return EXIT_OK if report.passed else EXIT_ASSERT


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point.

    mdnvar ingest   --config exp.json
    mdnvar fit      nnet2 garch --config exp.json
    mdnvar forecast --config exp.json            # all configured models
    mdnvar backtest --config exp.json
    mdnvar report   --config exp.json            # or --output-dir DIR
    mdnvar run      --config exp.json            # all of the above

Exit codes: 0 success, 2 I/O, 3 data validation, 4 numeric/training failure,
64 usage.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .. import __version__
from ..errors import MdnVarError
from . import config as cfgmod
from . import pipeline
from .config import MODELS, UsageError
from .report import cmd_report

EXIT_IO = 2
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="experiment config JSON")
    p.add_argument("--source", help="price CSV path or http(s) URL")
    p.add_argument("--eval-start", help="first evaluation date (YYYY-MM-DD)")
    p.add_argument("--eval-end", help="last evaluation date (YYYY-MM-DD)")
    p.add_argument("--alpha", type=float)
    p.add_argument("--models", help="comma-separated model ids")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--mc-samples", type=int)
    p.add_argument("--max-epochs", type=int)
    p.add_argument("--output-dir")
    p.add_argument("--svg", action=argparse.BooleanOptionalAction, default=None,
                   help="also render an SVG chart during backtest")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mdnvar", description="One-day VaR forecasting and backtesting.")
    parser.add_argument("--version", action="version", version=f"mdnvar {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    common = _common()
    sub.add_parser("ingest", parents=[common], help="parse prices, repair gaps, write returns.csv")
    fit = sub.add_parser("fit", parents=[common], help="fit one or more models")
    fit.add_argument("model_ids", nargs="+", metavar="MODEL", help=f"one of {', '.join(MODELS)}, or all")
    fc = sub.add_parser("forecast", parents=[common], help="write one-day VaR forecasts")
    fc.add_argument("model_ids", nargs="*", metavar="MODEL", help="default: configured models")
    sub.add_parser("backtest", parents=[common], help="coverage and independence tests")
    sub.add_parser("report", parents=[common], help="markdown summary from the manifest")
    sub.add_parser("run", parents=[common], help="ingest, fit, forecast, backtest and report")
    return parser


def resolve_config(args) -> cfgmod.ExperimentConfig:
    overrides = {
        "source": args.source,
        "eval_start": args.eval_start,
        "eval_end": args.eval_end,
        "alpha": args.alpha,
        "seed": args.seed,
        "mc_samples": args.mc_samples,
        "max_epochs": args.max_epochs,
        "output_dir": args.output_dir,
        "svg": args.svg,
        "models": tuple(m.strip() for m in args.models.split(",") if m.strip()) if args.models else None,
    }
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise UsageError(f"config file not found: {path}")
        return cfgmod.load(path).override(**overrides)
    doc = {k: v for k, v in overrides.items() if v is not None}
    return cfgmod.from_dict(doc)


def _model_list(ids, config) -> list[str]:
    if not ids or ids == ["all"]:
        return list(config.models)
    for m in ids:
        if m not in MODELS:
            raise UsageError(f"unknown model id {m!r}; choose from {', '.join(MODELS)}")
    return ids


def _print_ingest(summary: dict) -> None:
    print(f"prices: {summary['prices']}  missing: {summary['missing_prices']}  "
          f"returns: {summary['returns']}  dropped after eval_end: {summary['dropped_after_eval_end']}")
    print(f"{'period':<11}{'n':>6}  {'start':<11}{'end':<11}{'mean':>12}{'std':>12}")
    for name in ("train", "validation", "test"):
        s = summary[name]
        print(f"{name:<11}{s['n']:>6}  {s['start']:<11}{s['end']:<11}{s['mean']:>12.6f}{s['std']:>12.6f}")


def dispatch(args) -> None:
    if args.command == "report" and not args.config and not args.source:
        out = Path(args.output_dir or "out")
        cmd_report(out)
        print(out / "report.md")
        return
    config = resolve_config(args)
    if args.command == "ingest":
        _print_ingest(pipeline.cmd_ingest(config))
    elif args.command == "fit":
        for m in _model_list(args.model_ids, config):
            print(json.dumps(pipeline.cmd_fit(config, m), sort_keys=True))
    elif args.command == "forecast":
        for m in _model_list(args.model_ids, config):
            fc = pipeline.cmd_forecast(config, m)
            print(f"{m}: {len(fc)} forecasts written")
    elif args.command == "backtest":
        from ..backtest import results_table_csv
        print(results_table_csv(pipeline.cmd_backtest(config)), end="")
    elif args.command == "report":
        cmd_report(config.output_dir)
        print(Path(config.output_dir) / "report.md")
    elif args.command == "run":
        pipeline.run_all(config)
        print(Path(config.output_dir) / "report.md")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        dispatch(args)
    except MdnVarError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"error: source not found: {exc.filename or exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())

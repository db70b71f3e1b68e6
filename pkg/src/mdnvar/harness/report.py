"""Manifest validation and the markdown run summary.

The summary is a pure function of the manifest and the artifacts it lists,
so regenerating it without rerunning anything reproduces the same file.
"""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path

from ..backtest import BacktestReport
from ..errors import DataError
from ..mdn_forecast import ForecastSeries
from ..neuralnet import serialize
from . import artifacts as art

REPORT = "report.md"


def _check_forecast(text: str) -> None:
    ForecastSeries.from_csv(text)


def _check_report(text: str) -> None:
    try:
        BacktestReport.from_dict(json.loads(text))
    except (json.JSONDecodeError, TypeError) as exc:
        raise DataError(f"malformed backtest report: {exc}") from None


def _check_json(text: str) -> None:
    try:
        json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"malformed JSON artifact: {exc}") from None


def _check_weights(text: str) -> None:
    serialize.loads(text)


def _check_csv(text: str) -> None:
    rows = list(csv.reader(io.StringIO(text)))
    if len(rows) < 2:
        raise DataError("CSV artifact has no data rows")


def _check_returns(text: str) -> None:
    art.returns_from_csv(text)


_MODEL_CHECKS = {
    "fit": _check_json,
    "weights": _check_weights,
    "history": _check_json,
    "forecast": _check_forecast,
    "report": _check_report,
}
_SHARED_CHECKS = {
    "returns": _check_returns,
    "results_table": _check_csv,
    "reactivity": _check_csv,
    "plot_data": _check_csv,
    "svg": lambda text: None,
}


def validate(out_dir: Path, manifest: dict) -> None:
    """Every listed artifact must exist and parse against its schema."""
    art.validate_manifest_shape(manifest)
    listed = []
    for key, rel in manifest["artifacts"].items():
        if key == "models":
            continue
        if key not in _SHARED_CHECKS:
            raise DataError(f"manifest lists unknown artifact {key!r}")
        listed.append((key, rel, _SHARED_CHECKS[key]))
    for model, kinds in manifest["artifacts"]["models"].items():
        for kind, rel in kinds.items():
            if kind not in _MODEL_CHECKS:
                raise DataError(f"manifest lists unknown artifact {model}.{kind}")
            listed.append((f"{model}.{kind}", rel, _MODEL_CHECKS[kind]))
    for what, rel, check in listed:
        text = art.read_text(Path(out_dir) / rel, f"artifact {what}")
        try:
            check(text)
        except DataError as exc:
            raise DataError(f"artifact {what} ({rel}) is invalid: {exc}") from None


def _fmt_p(p: float) -> str:
    return f"{p:.3f}"


def _verdict(ok: bool) -> str:
    return "pass" if ok else "FAIL"


def render(out_dir: Path, manifest: dict) -> str:
    out_dir = Path(out_dir)
    cfg = manifest["config"]
    models = manifest["artifacts"]["models"]
    lines = [
        "# VaR backtest summary",
        "",
        f"- engine version: {manifest['engine_version']}",
        f"- config hash: `{manifest['config_hash']}`",
        f"- evaluation period: {cfg['eval_start']} to {cfg['eval_end']}",
        f"- confidence level: {cfg['alpha']}",
        "",
        "## Backtests (5% significance)",
        "",
        "| model | T | breaches | overshoot % | UC p | Ind p | CC p | UC | Ind | CC |",
        "|---|---|---|---|---|---|---|---|---|---|",
    ]
    for model in cfg["models"]:
        rel = models.get(model, {}).get("report")
        if rel is None:
            lines.append(f"| {model} | - | - | - | - | - | - | not run | not run | not run |")
            continue
        rep = BacktestReport.from_dict(json.loads((out_dir / rel).read_text(encoding="utf-8")))
        lines.append(
            f"| {model} | {rep.T} | {rep.breaches} | {100 * rep.overshoot:.3f} | "
            f"{_fmt_p(rep.p_pof)} | {_fmt_p(rep.p_ind)} | {_fmt_p(rep.p_cc)} | "
            f"{_verdict(rep.pass_pof)} | {_verdict(rep.pass_ind)} | {_verdict(rep.pass_cc)} |"
        )
    react_rel = manifest["artifacts"].get("reactivity")
    if react_rel:
        rows = list(csv.reader(io.StringIO((out_dir / react_rel).read_text(encoding="utf-8"))))[1:]
        lines += ["", f"## Reactivity (Pearson r with {cfg['rolling_window']}-day rolling volatility)",
                  "", "| model | r |", "|---|---|"]
        lines += [f"| {m} | {r or 'undefined'} |" for m, r in rows]
    lines += ["", "## Timings (seconds)", "", "| step | seconds |", "|---|---|"]
    lines += [f"| {step} | {secs:.3f} |" for step, secs in sorted(manifest["timings"].items())]
    lines += ["", "## Configuration", "", "```json",
              json.dumps(cfg, indent=2, sort_keys=True), "```", ""]
    return "\n".join(lines)


def cmd_report(out_dir: str | Path) -> str:
    out_dir = Path(out_dir)
    manifest = art.load_manifest(out_dir)
    validate(out_dir, manifest)
    text = render(out_dir, manifest)
    art.write_atomic(out_dir / REPORT, text)
    return text

"""The five pipeline steps. Each reads its inputs from and writes its outputs to
``config.output_dir`` and records them in the run manifest.

Layout of the output directory::

    returns.csv                  ingest
    models/<id>.json             fit (benchmark echo / GARCH innovation choice)
    models/<id>.weights.json     fit (networks)
    models/<id>.history.json     fit (networks)
    forecasts/<id>.csv           forecast
    reports/<id>.json            backtest
    reports/results_table.csv    backtest
    reports/reactivity.csv       backtest
    reports/plot_data.csv        backtest
    reports/var.svg              backtest (optional)
    report.md                    report
    manifest.json                every step
"""
from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from ..backtest import (
    BacktestReport,
    pearson_correlation,
    results_table_csv,
    rolling_volatility,
    run_backtest,
)
from ..classic_var import VaRConfig, rolling_var
from ..errors import AlignmentError, DomainError, InsufficientDataError, TrainingError
from ..garch import rolling_garch_var, select_innovation
from ..mdn_forecast import ForecastSeries, MonteCarloConfig, forecast_series
from ..neuralnet import ARCHITECTURES, TrainConfig, TrainedNetwork, train_best_of
from ..neuralnet import serialize
from ..series import SplitSpec, ingest as ingest_source, interpolate_missing, rolling_windows, \
    sample_stats, split, to_returns
from . import artifacts as art
from .config import BENCHMARKS, NETWORKS, ExperimentConfig, UsageError, derived_seed
from .svg import line_chart

RETURNS = "returns.csv"


def _out(config: ExperimentConfig) -> Path:
    return Path(config.output_dir)


class _Step:
    """Context manager that times one step and persists the manifest on success."""

    def __init__(self, config: ExperimentConfig, name: str):
        self.config, self.name = config, name

    def __enter__(self):
        self.manifest = art.load_manifest(_out(self.config), self.config)
        self.t0 = time.perf_counter()
        return self.manifest

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            self.manifest["timings"][self.name] = round(time.perf_counter() - self.t0, 3)
            art.save_manifest(_out(self.config), self.manifest)
        return False


def load_returns(config: ExperimentConfig):
    return art.returns_from_csv(art.read_text(_out(config) / RETURNS, "returns file (run ingest first)"))


def _split(config: ExperimentConfig, returns):
    return split(returns, SplitSpec(config.start_date, config.end_date))


# -- ingest -------------------------------------------------------------------


def cmd_ingest(config: ExperimentConfig) -> dict:
    with _Step(config, "ingest") as manifest:
        src = config.source
        if not src.startswith(("http://", "https://")) and not Path(src).is_file():
            raise art.ArtifactMissingError(f"source not found: {src}")
        prices = ingest_source(src)
        n_missing = int(np.sum(prices.missing))
        returns = to_returns(interpolate_missing(prices))
        parts = _split(config, returns)
        art.write_atomic(_out(config) / RETURNS, art.returns_to_csv(returns))
        manifest["artifacts"]["returns"] = RETURNS
        summary = {"prices": len(prices), "missing_prices": n_missing, "returns": len(returns),
                   "dropped_after_eval_end": parts.dropped}
        for name in ("train", "validation", "test"):
            part = getattr(parts, name)
            mu, sd = sample_stats(part.returns)
            summary[name] = {"n": len(part), "start": part.dates[0].isoformat(),
                             "end": part.dates[-1].isoformat(), "mean": mu, "std": sd}
        manifest["ingest_summary"] = summary
    return summary


# -- fit ----------------------------------------------------------------------


def _model_path(model: str, suffix: str) -> str:
    return f"models/{model}{suffix}"


def fit_benchmark(config: ExperimentConfig, model: str, manifest: dict) -> dict:
    doc = {"model": model, "alpha": config.alpha, "window": config.benchmark_window}
    rel = _model_path(model, ".json")
    art.write_json(_out(config) / rel, doc)
    art.record_model_artifact(manifest, model, "fit", rel)
    return doc


def fit_garch(config: ExperimentConfig, manifest: dict) -> dict:
    returns = load_returns(config)
    lo = _split(config, returns).test_range[0]
    kind, fits = select_innovation(returns.returns[:lo])
    doc = {
        "model": "garch",
        "alpha": config.alpha,
        "window": config.benchmark_window,
        "innovation": kind,
        "selection_sample": [returns.dates[0].isoformat(), returns.dates[lo - 1].isoformat()],
        "aic": {k: f.aic for k, f in fits.items()},
        "params": {k: asdict(f.params) for k, f in fits.items()},
    }
    rel = _model_path("garch", ".json")
    art.write_json(_out(config) / rel, doc)
    art.record_model_artifact(manifest, "garch", "fit", rel)
    return doc


def network_datasets(config: ExperimentConfig, returns):
    """Windowed training and validation sets, assigned by the target's position.

    Input windows of the first validation targets reach back into the
    training period; no window ever reaches the evaluation period.
    """
    parts = _split(config, returns)
    ds = rolling_windows(returns.slice(0, parts.validation_range[1]), config.lookback)
    t0, t1 = parts.train_range
    train_set = ds.subset((ds.target_index >= t0) & (ds.target_index < t1))
    val_set = ds.subset(ds.target_index >= parts.validation_range[0])
    if len(train_set) == 0 or len(val_set) == 0:
        raise InsufficientDataError("not enough pre-evaluation data for the network lookback")
    return parts, train_set, val_set


def fit_network(config: ExperimentConfig, model: str, manifest: dict) -> dict:
    returns = load_returns(config)
    parts, train_set, val_set = network_datasets(config, returns)
    scale = sample_stats(parts.train.returns)[1]
    net_config = replace(ARCHITECTURES[model], lookback=config.lookback,
                         input_scale=scale if scale > 0 else 1.0)
    train_config = TrainConfig(max_epochs=config.max_epochs, patience=config.patience,
                               batch_size=config.batch_size, seeds=config.train_seeds)
    hist_rel = _model_path(model, ".history.json")
    try:
        best, runs = train_best_of(train_set, val_set, net_config, train_config)
    except TrainingError as exc:
        art.write_json(_out(config) / hist_rel, {"model": model, "error": str(exc),
                                                 "history": exc.history})
        art.record_model_artifact(manifest, model, "history", hist_rel)
        art.save_manifest(_out(config), manifest)
        raise
    history = {
        "model": model,
        "selected_seed": best.seed,
        "runs": [
            {"seed": r.seed, "best_epoch": r.best_epoch, "stopped_epoch": r.stopped_epoch,
             "best_val_loss": r.best_val_loss, "history": r.history}
            for r in runs
        ],
    }
    w_rel = _model_path(model, ".weights.json")
    art.write_atomic(_out(config) / w_rel,
                     serialize.dumps(TrainedNetwork(best.config, best.params, best.seed)))
    art.write_json(_out(config) / hist_rel, history)
    art.record_model_artifact(manifest, model, "weights", w_rel)
    art.record_model_artifact(manifest, model, "history", hist_rel)
    return {"model": model, "selected_seed": best.seed, "best_val_loss": best.best_val_loss,
            "best_epoch": best.best_epoch}


def cmd_fit(config: ExperimentConfig, model: str) -> dict:
    if model not in BENCHMARKS + NETWORKS:
        raise UsageError(f"unknown model id {model!r}")
    with _Step(config, f"fit:{model}") as manifest:
        if model in ("hs", "cmm"):
            return fit_benchmark(config, model, manifest)
        if model == "garch":
            return fit_garch(config, manifest)
        return fit_network(config, model, manifest)


# -- forecast -----------------------------------------------------------------


def _forecast_values(config: ExperimentConfig, model: str, returns, test_range) -> np.ndarray:
    var_config = VaRConfig(alpha=config.alpha, window=config.benchmark_window)
    if model in ("hs", "cmm"):
        return rolling_var(model, returns.returns, test_range, var_config)
    if model == "garch":
        fit = art.read_json(_out(config) / _model_path("garch", ".json"),
                            "garch fit (run `fit garch` first)")
        return rolling_garch_var(returns.returns, test_range, fit["innovation"], var_config)
    text = art.read_text(_out(config) / _model_path(model, ".weights.json"),
                         f"{model} weights (run `fit {model}` first)")
    net = serialize.loads(text)
    mc = MonteCarloConfig(n_samples=config.mc_samples, alpha=config.alpha,
                          seed=derived_seed(config.seed, "mc", model))
    return forecast_series(net, returns, test_range, mc, model).values


def cmd_forecast(config: ExperimentConfig, model: str) -> ForecastSeries:
    if model not in BENCHMARKS + NETWORKS:
        raise UsageError(f"unknown model id {model!r}")
    with _Step(config, f"forecast:{model}") as manifest:
        returns = load_returns(config)
        lo, hi = _split(config, returns).test_range
        values = _forecast_values(config, model, returns, (lo, hi))
        fc = ForecastSeries(returns.dates[lo:hi], values, model, config.alpha)
        rel = f"forecasts/{model}.csv"
        art.write_atomic(_out(config) / rel, fc.to_csv())
        art.record_model_artifact(manifest, model, "forecast", rel)
    return fc


# -- backtest -----------------------------------------------------------------


def load_forecast(config: ExperimentConfig, model: str) -> ForecastSeries:
    path = _out(config) / f"forecasts/{model}.csv"
    if not path.is_file():
        raise art.ArtifactMissingError(f"missing forecasts for model {model!r}: {path}")
    return ForecastSeries.from_csv(path.read_text(encoding="utf-8"))


def reactivity(config: ExperimentConfig, returns, test_range, forecasts: dict) -> dict:
    """Pearson r between each VaR series and the trailing rolling volatility of losses."""
    d = config.rolling_window
    lo, hi = test_range
    if lo < d - 1:
        raise InsufficientDataError(f"rolling volatility needs {d - 1} losses before the test period")
    vol = rolling_volatility(returns.losses, d, returns.dates).values[lo - (d - 1):hi - (d - 1)]
    out = {}
    for model, fc in forecasts.items():
        try:
            out[model] = pearson_correlation(fc.values, vol)
        except DomainError:
            out[model] = None
    return out


def _plot_data_csv(dates, losses, forecasts: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["date", "loss", *forecasts])
    for i, d in enumerate(dates):
        w.writerow([d.isoformat(), repr(float(losses[i])),
                    *(repr(float(fc.values[i])) for fc in forecasts.values())])
    return buf.getvalue()


def _reactivity_csv(table: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["model", "pearson_r"])
    for model, r in table.items():
        w.writerow([model, "" if r is None else f"{r:.6f}"])
    return buf.getvalue()


def cmd_backtest(config: ExperimentConfig) -> dict[str, BacktestReport]:
    with _Step(config, "backtest") as manifest:
        returns = load_returns(config)
        lo, hi = _split(config, returns).test_range
        dates = returns.dates[lo:hi]
        losses = returns.losses[lo:hi]
        forecasts = {m: load_forecast(config, m) for m in config.models}
        for m, fc in forecasts.items():
            if fc.dates != dates:
                raise AlignmentError(f"forecasts for {m!r} do not cover the evaluation period")
            if not math.isclose(fc.alpha, config.alpha):
                raise AlignmentError(f"forecasts for {m!r} were made at alpha={fc.alpha}")
        reports = run_backtest(forecasts, losses, config.alpha, dates)
        out = _out(config)
        for m, rep in reports.items():
            rel = f"reports/{m}.json"
            art.write_atomic(out / rel, rep.to_json())
            art.record_model_artifact(manifest, m, "report", rel)
        shared = manifest["artifacts"]
        art.write_atomic(out / "reports/results_table.csv", results_table_csv(reports))
        shared["results_table"] = "reports/results_table.csv"
        react = reactivity(config, returns, (lo, hi), forecasts)
        art.write_atomic(out / "reports/reactivity.csv", _reactivity_csv(react))
        shared["reactivity"] = "reports/reactivity.csv"
        art.write_atomic(out / "reports/plot_data.csv", _plot_data_csv(dates, losses, forecasts))
        shared["plot_data"] = "reports/plot_data.csv"
        if config.svg:
            svg = line_chart(dates, losses, {m: fc.values for m, fc in forecasts.items()},
                             title=f"Daily losses and {config.alpha:g} VaR forecasts")
            art.write_atomic(out / "reports/var.svg", svg)
            shared["svg"] = "reports/var.svg"
    return reports


def run_all(config: ExperimentConfig) -> dict[str, BacktestReport]:
    from .report import cmd_report

    cmd_ingest(config)
    for m in config.models:
        cmd_fit(config, m)
    for m in config.models:
        cmd_forecast(config, m)
    reports = cmd_backtest(config)
    cmd_report(_out(config))
    return reports

"""VaR backtesting: breach indicators, coverage and independence tests, and
the rolling-volatility reactivity analysis.

Likelihood-ratio statistics use the limits 0*ln(0) = 0 and 0**0 = 1, so
boundary count patterns (no breaches, no breach pairs) stay finite.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass
from datetime import date

import numpy as np
from scipy.special import xlogy

from .errors import AlignmentError, DomainError, InsufficientDataError
from .stats_dist import chi2_sf

SIGNIFICANCE = 0.05


@dataclass(frozen=True)
class IndicatorSeries:
    dates: tuple[date, ...] | None
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if not np.all((v == 0) | (v == 1)):
            raise DomainError("indicator values must be 0 or 1")
        v = v.astype(np.int8)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if self.dates is not None and len(self.dates) != v.size:
            raise AlignmentError("indicator dates and values differ in length")

    def __len__(self) -> int:
        return self.values.size

    @property
    def breaches(self) -> int:
        return int(self.values.sum())


def indicator_series(losses, forecasts, dates=None, forecast_dates=None) -> IndicatorSeries:
    """I_t = 1 iff loss_t > VaR_t (ties are not breaches)."""
    l = np.asarray(losses, dtype=float)
    v = np.asarray(forecasts, dtype=float)
    if l.shape != v.shape:
        raise AlignmentError(f"{l.size} losses against {v.size} forecasts")
    if dates is not None and forecast_dates is not None and tuple(dates) != tuple(forecast_dates):
        first = next(i for i, (a, b) in enumerate(zip(dates, forecast_dates)) if a != b) \
            if len(dates) == len(forecast_dates) else 0
        raise AlignmentError(f"loss and forecast dates disagree at position {first}")
    return IndicatorSeries(tuple(dates) if dates is not None else None, (l > v).astype(np.int8))


def _values(ind) -> np.ndarray:
    return ind.values if isinstance(ind, IndicatorSeries) else np.asarray(ind, dtype=np.int8)


# -- unconditional coverage ---------------------------------------------------


@dataclass(frozen=True)
class PofResult:
    lr: float
    p_value: float
    T: int
    breaches: int
    overshoot: float


def pof_test(ind, alpha: float) -> PofResult:
    """Kupiec proportion-of-failures likelihood ratio, chi-square(1)."""
    x = _values(ind)
    T = int(x.size)
    if T < 1:
        raise InsufficientDataError("POF test needs at least one observation")
    if not 0 < alpha < 1:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    I = int(x.sum())
    ahat = I / T
    expected = 1.0 - alpha
    if abs(ahat - expected) <= 1e-12:
        lr = 0.0
    else:
        lr = 2.0 * (
            xlogy(T - I, 1.0 - ahat) - (T - I) * math.log(alpha)
            + xlogy(I, ahat) - I * math.log(expected)
        )
        lr = max(float(lr), 0.0)
    return PofResult(lr, chi2_sf(lr, 1), T, I, ahat)


# -- independence -------------------------------------------------------------


@dataclass(frozen=True)
class IndependenceResult:
    lr: float
    p_value: float
    n00: int
    n01: int
    n10: int
    n11: int
    pi: float
    pi0: float
    pi1: float


def transition_counts(x) -> tuple[int, int, int, int]:
    x = _values(x)
    prev, nxt = x[:-1], x[1:]
    n00 = int(np.sum((prev == 0) & (nxt == 0)))
    n01 = int(np.sum((prev == 0) & (nxt == 1)))
    n10 = int(np.sum((prev == 1) & (nxt == 0)))
    n11 = int(np.sum((prev == 1) & (nxt == 1)))
    return n00, n01, n10, n11


def independence_test(ind) -> IndependenceResult:
    """Christoffersen first-order Markov independence test, chi-square(1).

    With no breaches, or no day following a breach (n10 + n11 = 0), the
    statistic is taken to be 0 (p = 1).
    """
    x = _values(ind)
    if x.size < 2:
        raise InsufficientDataError("independence test needs at least two observations")
    n00, n01, n10, n11 = transition_counts(x)
    n = n00 + n01 + n10 + n11
    pi = (n01 + n11) / n
    pi0 = n01 / (n00 + n01) if n00 + n01 else 0.0
    pi1 = n11 / (n10 + n11) if n10 + n11 else 0.0
    if x.sum() == 0 or n10 + n11 == 0:
        return IndependenceResult(0.0, 1.0, n00, n01, n10, n11, pi, pi0, pi1)
    log_null = xlogy(n00 + n10, 1.0 - pi) + xlogy(n01 + n11, pi)
    log_alt = (xlogy(n00, 1.0 - pi0) + xlogy(n01, pi0)
               + xlogy(n10, 1.0 - pi1) + xlogy(n11, pi1))
    lr = max(float(-2.0 * (log_null - log_alt)), 0.0)
    if abs(pi0 - pi1) <= 1e-12:
        lr = 0.0
    return IndependenceResult(lr, chi2_sf(lr, 1), n00, n01, n10, n11, pi, pi0, pi1)


def cc_test(lr_pof: float, lr_ind: float) -> tuple[float, float]:
    """Joint conditional-coverage statistic and its chi-square(2) p-value."""
    if lr_pof < 0 or lr_ind < 0:
        raise DomainError("likelihood-ratio statistics must be non-negative")
    lr = lr_pof + lr_ind
    return lr, chi2_sf(lr, 2)


# -- reactivity ---------------------------------------------------------------


@dataclass(frozen=True)
class RollingVolSeries:
    dates: tuple[date, ...] | None
    window: int
    values: np.ndarray


def rolling_volatility(losses, d: int = 5, dates=None) -> RollingVolSeries:
    """Sample standard deviation (1/(d-1)) over each trailing window of d losses."""
    x = np.asarray(losses, dtype=float)
    if d < 2:
        raise DomainError("rolling window must be at least 2")
    if d > x.size:
        raise InsufficientDataError(f"rolling window {d} exceeds series length {x.size}")
    win = np.lib.stride_tricks.sliding_window_view(x, d)
    dev = win - win.mean(axis=1, keepdims=True)
    values = np.sqrt(np.sum(dev * dev, axis=1) / (d - 1))
    out_dates = tuple(dates[d - 1:]) if dates is not None else None
    return RollingVolSeries(out_dates, d, values)


def pearson_correlation(a, b) -> float:
    x = np.asarray(a, dtype=float)
    y = np.asarray(b, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise AlignmentError("correlation inputs must be 1-D and equally long")
    if x.size < 2:
        raise InsufficientDataError("correlation needs at least two points")
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise DomainError("correlation is undefined for a constant series")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


# -- reports ------------------------------------------------------------------


@dataclass(frozen=True)
class BacktestReport:
    model_id: str
    alpha: float
    T: int
    breaches: int
    overshoot: float
    n00: int
    n01: int
    n10: int
    n11: int
    lr_pof: float
    p_pof: float
    lr_ind: float
    p_ind: float
    lr_cc: float
    p_cc: float
    pass_pof: bool
    pass_ind: bool
    pass_cc: bool
    negative_var_days: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, doc: dict) -> "BacktestReport":
        return cls(**doc)


def backtest(ind: IndicatorSeries, alpha: float, model_id: str = "",
             negative_var_days: int = 0) -> BacktestReport:
    pof = pof_test(ind, alpha)
    dep = independence_test(ind)
    lr_cc, p_cc = cc_test(pof.lr, dep.lr)
    return BacktestReport(
        model_id=model_id, alpha=alpha, T=pof.T, breaches=pof.breaches, overshoot=pof.overshoot,
        n00=dep.n00, n01=dep.n01, n10=dep.n10, n11=dep.n11,
        lr_pof=pof.lr, p_pof=pof.p_value, lr_ind=dep.lr, p_ind=dep.p_value,
        lr_cc=lr_cc, p_cc=p_cc,
        pass_pof=pof.p_value >= SIGNIFICANCE, pass_ind=dep.p_value >= SIGNIFICANCE,
        pass_cc=p_cc >= SIGNIFICANCE, negative_var_days=negative_var_days,
    )


def run_backtest(forecasts: dict, losses, alpha: float, dates=None) -> dict[str, BacktestReport]:
    """Backtest every forecast series against the same ex-post losses.

    ``forecasts`` maps model id to either an array or an object with
    ``values`` and ``dates`` attributes (e.g. ``ForecastSeries``).
    """
    reports = {}
    for model_id, fc in forecasts.items():
        values = getattr(fc, "values", fc)
        fc_dates = getattr(fc, "dates", None)
        ind = indicator_series(losses, values, dates, fc_dates)
        neg = int(np.sum(np.asarray(values) < 0))
        reports[model_id] = backtest(ind, alpha, model_id, neg)
    return reports


def results_table_csv(reports: dict[str, BacktestReport]) -> str:
    """Rows: overshoots (%), UC/Ind/CC p-values; one column per model."""
    ids = list(reports)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["metric", *ids])
    w.writerow(["overshoots_pct", *(f"{100 * reports[m].overshoot:.3f}" for m in ids)])
    w.writerow(["uc_p", *(f"{reports[m].p_pof:.3f}" for m in ids)])
    w.writerow(["ind_p", *(f"{reports[m].p_ind:.3f}" for m in ids)])
    w.writerow(["cc_p", *(f"{reports[m].p_cc:.3f}" for m in ids)])
    return buf.getvalue()

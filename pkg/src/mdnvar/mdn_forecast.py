"""Monte Carlo VaR from day-ahead mixture forecasts."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from datetime import date

import numpy as np

from .classic_var import ceil_order_statistic
from .errors import DataError, DomainError, InsufficientDataError
from .rng import Rng
from .series import ReturnSeries
from .stats_dist import MixtureParams, mixture_sample


@dataclass(frozen=True)
class MonteCarloConfig:
    n_samples: int = 100_000
    alpha: float = 0.99
    asset_value: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_samples < 1000:
            raise DomainError("Monte Carlo needs at least 1,000 samples")
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.asset_value > 0:
            raise DomainError("asset value must be positive")


def mc_var(params: MixtureParams, config: MonteCarloConfig, rng: Rng) -> float:
    """ceil(alpha*N)-th smallest simulated loss, times the asset value."""
    losses = -mixture_sample(params, config.n_samples, rng)
    return ceil_order_statistic(losses, config.alpha) * config.asset_value


@dataclass(frozen=True)
class ForecastSeries:
    dates: tuple[date, ...]
    values: np.ndarray
    model_id: str
    alpha: float

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if len(self.dates) != v.size:
            raise ValueError("dates and forecast values differ in length")

    def __len__(self) -> int:
        return self.values.size

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["date", "var_forecast", "model_id", "alpha"])
        for d, v in zip(self.dates, self.values):
            w.writerow([d.isoformat(), repr(float(v)), self.model_id, repr(self.alpha)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ForecastSeries":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0] != ["date", "var_forecast", "model_id", "alpha"]:
            raise DataError("forecast CSV must have header date,var_forecast,model_id,alpha")
        body = rows[1:]
        if not body:
            raise DataError("forecast CSV has no rows")
        model_ids = {r[2] for r in body}
        alphas = {r[3] for r in body}
        if len(model_ids) != 1 or len(alphas) != 1:
            raise DataError("forecast CSV mixes models or confidence levels")
        try:
            dates = tuple(date.fromisoformat(r[0]) for r in body)
            values = [float(r[1]) for r in body]
        except (ValueError, IndexError) as exc:
            raise DataError(f"malformed forecast CSV: {exc}") from None
        return cls(dates, np.array(values), body[0][2], float(body[0][3]))


def forecast_series(model, returns: ReturnSeries, test_range: tuple[int, int],
                    config: MonteCarloConfig, model_id: str = "nnet") -> ForecastSeries:
    """One VaR per day in ``returns[test_range[0]:test_range[1]]``.

    The forecast for day t uses ``returns[t-d:t]`` only. Each day draws from its
    own stream ``Rng(config.seed).child(t)``, so any single day can be
    recomputed in isolation.
    """
    lo, hi = test_range
    d = model.config.lookback
    if not 0 <= lo < hi <= len(returns):
        raise DomainError(f"test range {test_range} outside series of length {len(returns)}")
    if lo < d:
        raise InsufficientDataError(
            f"{returns.dates[lo].isoformat()} has only {lo} prior returns; lookback needs {d}"
        )
    r = returns.returns
    X = np.lib.stride_tricks.sliding_window_view(r[lo - d:hi - 1], d)
    pi, mu, sigma = model.predict_batch(X)
    root = Rng(config.seed)
    out = np.empty(hi - lo)
    for j, t in enumerate(range(lo, hi)):
        mix = MixtureParams(pi[j], mu[j], sigma[j])
        out[j] = mc_var(mix, config, root.child(t))
    return ForecastSeries(returns.dates[lo:hi], out, model_id, config.alpha)

"""Benchmark Value-at-Risk models: historical simulation and constant mean.

All VaR numbers are positive for losses and scale linearly with the asset
value ``P``; with ``P = 1`` they read as scale-free daily losses.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InsufficientDataError
from .series import sample_stats
from .stats_dist import normal_quantile


@dataclass(frozen=True)
class VaRConfig:
    alpha: float = 0.99
    horizon: int = 1
    window: int = 250
    asset_value: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.horizon != 1:
            raise DomainError("only a one-day horizon is supported")
        if self.window < 2:
            raise DomainError("window must hold at least two observations")
        if not self.asset_value > 0:
            raise DomainError("asset value must be positive")


def order_statistic_rank(alpha: float, n: int) -> int:
    """1-based rank ceil(alpha * n), guarded against float noise in the product."""
    return max(1, min(n, math.ceil(round(alpha * n, 9))))


def ceil_order_statistic(values, alpha: float) -> float:
    """The ceil(alpha*n)-th smallest of ``values``."""
    x = np.asarray(values, dtype=float)
    k = order_statistic_rank(alpha, x.size) - 1
    return float(np.partition(x, k)[k])


def var_hs(losses, config: VaRConfig = VaRConfig()) -> float:
    """Historical-simulation VaR from a window of losses."""
    x = np.asarray(losses, dtype=float)
    if x.size < 2:
        raise InsufficientDataError("historical simulation needs at least two losses")
    return ceil_order_statistic(x, config.alpha) * config.asset_value


def var_cmm(returns, config: VaRConfig = VaRConfig()) -> float:
    """Constant-mean (normal) VaR: -(mu + z_{1-alpha} * sigma) * P."""
    x = np.asarray(returns, dtype=float)
    if x.size < 2:
        raise InsufficientDataError("constant-mean model needs at least two returns")
    mu, sd = sample_stats(x)
    return -(mu + normal_quantile(1.0 - config.alpha) * sd) * config.asset_value


def rolling_var(kind: str, returns, test_range: tuple[int, int],
                config: VaRConfig = VaRConfig()) -> np.ndarray:
    """HS or CMM forecasts for each t in ``test_range`` from ``returns[t-window:t]``."""
    r = np.asarray(returns, dtype=float)
    lo, hi = test_range
    d = config.window
    if lo < d:
        raise InsufficientDataError(f"first forecast at index {lo} has fewer than {d} prior returns")
    if kind == "hs":
        return np.array([var_hs(-r[t - d:t], config) for t in range(lo, hi)])
    if kind == "cmm":
        return np.array([var_cmm(r[t - d:t], config) for t in range(lo, hi)])
    raise DomainError(f"unknown benchmark {kind!r}")

"""Synthetic price fixtures for smoke runs and tests."""
from __future__ import annotations

import numpy as np

from ..garch import synthetic_dates
from ..rng import Rng


def regime_returns(n: int, sigmas=(0.008, 0.02), block: int = 250, rng: Rng | None = None) -> np.ndarray:
    """Zero-mean normal returns whose volatility cycles through ``sigmas`` every ``block`` days."""
    rng = rng or Rng(0)
    sd = np.asarray(sigmas, dtype=float)[(np.arange(n) // block) % len(sigmas)]
    return sd * rng.normal(n)


def prices_csv(returns, start_price: float = 100.0, dates=None) -> str:
    """``date,close`` CSV whose discrete returns are exactly ``returns`` up to rounding."""
    r = np.asarray(returns, dtype=float)
    prices = start_price * np.cumprod(np.concatenate(([1.0], 1.0 + r)))
    dates = dates if dates is not None else synthetic_dates(prices.size)
    lines = ["date,close"]
    lines += [f"{d.isoformat()},{p!r}" for d, p in zip(dates, prices.tolist())]
    return "\n".join(lines) + "\n"


def two_regime_prices_csv(n_prices: int = 4000, seed: int = 0) -> str:
    """The smoke-test fixture: volatility alternating 0.008 / 0.02 in 250-day blocks."""
    return prices_csv(regime_returns(n_prices - 1, rng=Rng(seed).child("two-regime")))

"""Price ingestion, gap repair, returns, splits and rolling windows."""
from __future__ import annotations

import bisect
import csv
import io
import logging
import math
import urllib.request
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Union

import numpy as np

from .errors import (
    BoundaryGapError,
    EmptyInputError,
    InsufficientDataError,
    OrderingError,
    ParseError,
    RangeError,
)

log = logging.getLogger(__name__)

MISSING_WARN_FRACTION = 0.03
_MISSING_TOKENS = {"", "na", "nan", "null"}

Source = Union[bytes, str, Path]


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PriceSeries:
    dates: tuple[date, ...]
    prices: np.ndarray
    missing: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "prices", _frozen(self.prices))
        m = np.array(self.missing, dtype=bool)
        m.setflags(write=False)
        object.__setattr__(self, "missing", m)
        if not (len(self.dates) == len(self.prices) == len(self.missing)):
            raise ValueError("dates, prices and missing flags differ in length")
        for a, b in zip(self.dates, self.dates[1:]):
            if not a < b:
                raise OrderingError(f"dates not strictly increasing at {b.isoformat()}")
        present = self.prices[~self.missing]
        if np.any(~np.isfinite(present)) or np.any(present <= 0):
            raise ParseError("prices must be finite and positive")

    def __len__(self) -> int:
        return len(self.prices)

    @property
    def has_gaps(self) -> bool:
        return bool(self.missing.any())


@dataclass(frozen=True)
class ReturnSeries:
    dates: tuple[date, ...]
    returns: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "returns", _frozen(self.returns))
        if len(self.dates) != len(self.returns):
            raise ValueError("dates and returns differ in length")

    @property
    def losses(self) -> np.ndarray:
        out = -self.returns
        out.setflags(write=False)
        return out

    def __len__(self) -> int:
        return len(self.returns)

    def slice(self, start: int, stop: int) -> "ReturnSeries":
        return ReturnSeries(self.dates[start:stop], self.returns[start:stop])

    def index_of(self, day: date) -> int:
        """Index of the first observation on or after ``day``."""
        return bisect.bisect_left(self.dates, day)


@dataclass(frozen=True)
class SplitSpec:
    eval_start: date
    eval_end: date
    train_fraction: float = 0.9

    def __post_init__(self):
        if not self.eval_start < self.eval_end:
            raise RangeError("eval_start must precede eval_end")
        if not 0.0 < self.train_fraction < 1.0:
            raise RangeError("train_fraction must lie in (0, 1)")


@dataclass(frozen=True)
class Split:
    """Index ranges into the parent series plus the materialized pieces.

    ``dropped`` counts observations after ``eval_end``; they belong to no
    partition.
    """

    train: ReturnSeries
    validation: ReturnSeries
    test: ReturnSeries
    train_range: tuple[int, int]
    validation_range: tuple[int, int]
    test_range: tuple[int, int]
    dropped: int


@dataclass(frozen=True)
class WindowedDataset:
    lookback: int
    inputs: np.ndarray          # (n_pairs, lookback)
    targets: np.ndarray         # (n_pairs,)
    target_index: np.ndarray    # position of each target in the source series
    target_dates: tuple[date, ...]

    def __len__(self) -> int:
        return len(self.targets)

    def subset(self, mask_or_idx) -> "WindowedDataset":
        idx = np.arange(len(self))[mask_or_idx]
        return WindowedDataset(
            self.lookback,
            self.inputs[idx],
            self.targets[idx],
            self.target_index[idx],
            tuple(self.target_dates[i] for i in idx),
        )


# -- ingestion ----------------------------------------------------------------


def _read_source(source: Source) -> str:
    if isinstance(source, bytes):
        raw = source
    elif isinstance(source, str) and source.startswith(("http://", "https://")):
        with urllib.request.urlopen(source, timeout=30) as resp:
            raw = resp.read()
    else:
        raw = Path(source).read_bytes()
    return raw.decode("utf-8-sig")


def parse_csv(text: str) -> PriceSeries:
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if any(cell.strip() for cell in r)]
    if not rows:
        raise EmptyInputError("input is empty")
    header = [c.strip().lower() for c in rows[0]]
    if header != ["date", "close"]:
        raise ParseError(f"expected header 'date,close', got {','.join(rows[0])!r}", line=1)
    if len(rows) == 1:
        raise EmptyInputError("input has a header but no rows")

    dates: list[date] = []
    prices: list[float] = []
    missing: list[bool] = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) == 1:
            row = [row[0], ""]
        if len(row) != 2:
            raise ParseError(f"expected 2 fields, got {len(row)}", line=lineno)
        d_txt, p_txt = row[0].strip(), row[1].strip()
        try:
            d = date.fromisoformat(d_txt)
        except ValueError:
            raise ParseError(f"bad date {d_txt!r}", line=lineno) from None
        if dates and not d > dates[-1]:
            raise OrderingError(f"line {lineno}: date {d_txt} does not increase")
        if p_txt.lower() in _MISSING_TOKENS:
            prices.append(math.nan)
            missing.append(True)
        else:
            try:
                p = float(p_txt)
            except ValueError:
                raise ParseError(f"bad price {p_txt!r}", line=lineno) from None
            if not math.isfinite(p) or p <= 0:
                raise ParseError(f"price must be positive, got {p_txt}", line=lineno)
            prices.append(p)
            missing.append(False)
        dates.append(d)
    return PriceSeries(tuple(dates), np.array(prices), np.array(missing))


def ingest(source: Source) -> PriceSeries:
    """Load a ``date,close`` CSV from raw bytes, a file path or an HTTP URL."""
    return parse_csv(_read_source(source))


def interpolate_missing(series: PriceSeries) -> PriceSeries:
    """Fill each run of missing prices linearly between its present neighbours."""
    miss = series.missing
    if not miss.any():
        return series
    if miss[0] or miss[-1]:
        where = series.dates[0] if miss[0] else series.dates[-1]
        raise BoundaryGapError(f"cannot interpolate missing price at boundary {where.isoformat()}")
    frac = miss.mean()
    if frac > MISSING_WARN_FRACTION:
        log.warning("%.1f%% of prices missing (above %.0f%%)", 100 * frac, 100 * MISSING_WARN_FRACTION)
    x = np.arange(len(series))
    filled = series.prices.copy()
    filled[miss] = np.interp(x[miss], x[~miss], series.prices[~miss])
    return PriceSeries(series.dates, filled, np.zeros(len(series), dtype=bool))


def to_returns(series: PriceSeries) -> ReturnSeries:
    if series.has_gaps:
        raise InsufficientDataError("series has missing prices; interpolate first")
    if len(series) < 2:
        raise InsufficientDataError("need at least two prices for a return")
    p = series.prices
    return ReturnSeries(series.dates[1:], (p[1:] - p[:-1]) / p[:-1])


def split(series: ReturnSeries, spec: SplitSpec) -> Split:
    n = len(series)
    lo = series.index_of(spec.eval_start)
    hi = series.index_of(spec.eval_end)
    if hi < n and series.dates[hi] == spec.eval_end:
        hi += 1
    if hi <= lo:
        raise RangeError("evaluation window contains no observations")
    n_pre = lo
    n_train = int(math.floor(spec.train_fraction * n_pre + 1e-9))
    if n_train == 0 or n_train == n_pre:
        raise RangeError(
            f"pre-evaluation set of {n_pre} observations is too small to split"
        )
    return Split(
        train=series.slice(0, n_train),
        validation=series.slice(n_train, n_pre),
        test=series.slice(lo, hi),
        train_range=(0, n_train),
        validation_range=(n_train, n_pre),
        test_range=(lo, hi),
        dropped=n - hi,
    )


def rolling_windows(series: ReturnSeries, d: int) -> WindowedDataset:
    """All ``(returns[t-d:t], returns[t])`` pairs for ``t = d .. n-1``."""
    if d < 1:
        raise ValueError("lookback must be positive")
    r = series.returns
    n = len(r)
    if n <= d:
        raise InsufficientDataError(f"need more than {d} returns, got {n}")
    inputs = np.lib.stride_tricks.sliding_window_view(r, d)[:-1].copy()
    idx = np.arange(d, n)
    return WindowedDataset(d, inputs, r[d:].copy(), idx, series.dates[d:])


def sample_stats(returns) -> tuple[float, float]:
    """Mean and population (1/T) standard deviation."""
    x = np.asarray(returns, dtype=float)
    if x.size == 0:
        raise InsufficientDataError("sample_stats of an empty sample")
    mu = float(x.mean())
    return mu, float(math.sqrt(np.mean((x - mu) ** 2)))

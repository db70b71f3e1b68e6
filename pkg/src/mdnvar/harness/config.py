"""Experiment configuration: one JSON document, optionally overridden by CLI flags.

Schema (all keys optional except ``source``, ``eval_start`` and ``eval_end``)::

    {
      "source": "prices.csv",          # path (relative to the config file) or http(s) URL
      "eval_start": "2017-01-02",
      "eval_end": "2018-12-31",
      "alpha": 0.99,
      "benchmark_window": 250,
      "lookback": 10,
      "models": ["hs", "cmm", "garch", "nnet1", "nnet2", "nnet3"],
      "mc_samples": 100000,
      "seed": 0,
      "train_seeds": [911, 6969, 9999],
      "max_epochs": 100,
      "patience": 5,
      "batch_size": 32,
      "rolling_window": 5,
      "svg": false,
      "output_dir": "out"
    }
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, fields, replace
from datetime import date
from pathlib import Path

from ..errors import MdnVarError, RangeError

BENCHMARKS = ("hs", "cmm", "garch")
NETWORKS = ("nnet1", "nnet2", "nnet3")
MODELS = BENCHMARKS + NETWORKS

# fields that only decide where artifacts land
_NON_SEMANTIC = {"output_dir"}


class UsageError(MdnVarError):
    exit_code = 64


@dataclass(frozen=True)
class ExperimentConfig:
    source: str
    eval_start: str
    eval_end: str
    alpha: float = 0.99
    benchmark_window: int = 250
    lookback: int = 10
    models: tuple[str, ...] = MODELS
    mc_samples: int = 100_000
    seed: int = 0
    train_seeds: tuple[int, ...] = (911, 6969, 9999)
    max_epochs: int = 100
    patience: int = 5
    batch_size: int = 32
    rolling_window: int = 5
    svg: bool = False
    output_dir: str = "out"

    def __post_init__(self):
        object.__setattr__(self, "models", tuple(self.models))
        object.__setattr__(self, "train_seeds", tuple(int(s) for s in self.train_seeds))
        if not self.models:
            raise UsageError("at least one model is required")
        unknown = [m for m in self.models if m not in MODELS]
        if unknown:
            raise UsageError(f"unknown model id {unknown[0]!r}; choose from {', '.join(MODELS)}")
        if len(set(self.models)) != len(self.models):
            raise UsageError("model list contains duplicates")
        try:
            start, end = self.start_date, self.end_date
        except ValueError as exc:
            raise UsageError(f"bad evaluation date: {exc}") from None
        if not start < end:
            raise RangeError("eval_start must precede eval_end")
        if not 0.0 < self.alpha < 1.0:
            raise UsageError("alpha must lie in (0, 1)")
        if not self.train_seeds:
            raise UsageError("train_seeds must not be empty")
        for name in ("benchmark_window", "lookback", "mc_samples", "max_epochs",
                     "patience", "batch_size", "rolling_window"):
            if getattr(self, name) < 1:
                raise UsageError(f"{name} must be positive")

    @property
    def start_date(self) -> date:
        return date.fromisoformat(self.eval_start)

    @property
    def end_date(self) -> date:
        return date.fromisoformat(self.eval_end)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["models"] = list(self.models)
        d["train_seeds"] = list(self.train_seeds)
        return d

    def semantic_dict(self) -> dict:
        return {k: v for k, v in self.to_dict().items() if k not in _NON_SEMANTIC}

    def config_hash(self) -> str:
        blob = json.dumps(self.semantic_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def override(self, **changes) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})


def field_names() -> list[str]:
    return [f.name for f in fields(ExperimentConfig)]


def from_dict(doc: dict, base_dir: Path | None = None) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise UsageError("config must be a JSON object")
    unknown = set(doc) - set(field_names())
    if unknown:
        raise UsageError(f"unknown config key {sorted(unknown)[0]!r}")
    missing = [k for k in ("source", "eval_start", "eval_end") if k not in doc]
    if missing:
        raise UsageError(f"config is missing {missing[0]!r}")
    doc = dict(doc)
    src = doc["source"]
    if base_dir is not None and not str(src).startswith(("http://", "https://")):
        p = Path(src)
        if not p.is_absolute():
            doc["source"] = str(base_dir / p)
    try:
        return ExperimentConfig(**doc)
    except TypeError as exc:
        raise UsageError(str(exc)) from None


def load(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from None
    return from_dict(doc, path.parent)


def derived_seed(master: int, *keys) -> int:
    """A stable 63-bit seed for one job, derived from the master seed and job keys."""
    text = "/".join([str(master), *map(str, keys)])
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big") >> 1

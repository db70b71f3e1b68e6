"""Minibatch Adam training with early stopping and the best-of-three protocol."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import NumericError, TrainingError
from ..rng import Rng
from ..series import WindowedDataset
from .network import NetworkConfig, NetworkParams, batch_loss, init_params, loss_and_grad
from .optim import AdamState, adam_step

log = logging.getLogger(__name__)

DEFAULT_SEEDS = (911, 6969, 9999)


@dataclass(frozen=True)
class TrainConfig:
    max_epochs: int = 100
    patience: int = 5
    batch_size: int = 32
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-7
    seeds: tuple[int, ...] = DEFAULT_SEEDS

    def __post_init__(self):
        if self.max_epochs < 1 or self.patience < 1 or self.batch_size < 1:
            raise ValueError("max_epochs, patience and batch_size must be at least 1")
        if not self.seeds:
            raise ValueError("at least one seed is required")


class EarlyStopping:
    """Track the best monitored value; signal a stop after ``patience``
    consecutive epochs without strict improvement."""

    def __init__(self, patience: int):
        self.patience = patience
        self.best = math.inf
        self.best_epoch = 0
        self.best_params: NetworkParams | None = None
        self.wait = 0

    def update(self, epoch: int, value: float, params: NetworkParams) -> bool:
        if value < self.best:
            self.best, self.best_epoch = value, epoch
            self.best_params = params.copy()
            self.wait = 0
            return False
        self.wait += 1
        return self.wait >= self.patience


@dataclass
class TrainResult:
    params: NetworkParams
    config: NetworkConfig
    seed: int
    history: list[dict] = field(default_factory=list)
    best_epoch: int = 0
    stopped_epoch: int = 0

    @property
    def best_val_loss(self) -> float:
        return min(h["val_loss"] for h in self.history)


def train(train_set: WindowedDataset, val_set: WindowedDataset, config: NetworkConfig,
          train_config: TrainConfig, rng: Rng) -> TrainResult:
    """Train one network from the seed behind ``rng``.

    Initial weights come from ``rng.child("init")`` and per-epoch shuffles from
    ``rng.child("shuffle")``, so the run is a pure function of the seed.
    """
    if len(train_set) == 0 or len(val_set) == 0:
        raise ValueError("training and validation sets must be non-empty")
    params = init_params(config, rng.child("init"))
    shuffler = rng.child("shuffle")
    adam = AdamState(train_config.beta1, train_config.beta2,
                     train_config.learning_rate, train_config.epsilon)
    stopper = EarlyStopping(train_config.patience)
    history: list[dict] = []
    X, y = train_set.inputs, train_set.targets
    n, bs = len(y), train_config.batch_size
    epoch = 0
    for epoch in range(1, train_config.max_epochs + 1):
        order = shuffler.permutation(n)
        total = 0.0
        try:
            with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
                for start in range(0, n, bs):
                    idx = order[start:start + bs]
                    loss, grads = loss_and_grad(X[idx], y[idx], params, config)
                    total += loss * idx.size
                    adam_step(params, grads, adam)
                val_loss = batch_loss(val_set.inputs, val_set.targets, params, config)
        except NumericError as exc:
            raise TrainingError(f"training diverged in epoch {epoch}: {exc}", history) from exc
        train_loss = total / n
        if not (math.isfinite(train_loss) and math.isfinite(val_loss) and params.all_finite()):
            raise TrainingError(f"non-finite loss in epoch {epoch}", history)
        history.append({"epoch": epoch, "train_loss": train_loss, "val_loss": val_loss})
        log.debug("epoch %d train %.6f val %.6f", epoch, train_loss, val_loss)
        if stopper.update(epoch, val_loss, params):
            break
    return TrainResult(stopper.best_params, config, rng.seed, history,
                       stopper.best_epoch, epoch)


def train_best_of(train_set: WindowedDataset, val_set: WindowedDataset, config: NetworkConfig,
                  train_config: TrainConfig) -> tuple[TrainResult, list[TrainResult]]:
    """Train once per seed and keep the run with the lowest validation loss."""
    runs = [train(train_set, val_set, config, train_config, Rng(s)) for s in train_config.seeds]
    best = min(runs, key=lambda r: r.best_val_loss)
    return best, runs

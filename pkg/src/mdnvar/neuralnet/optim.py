"""Glorot initialization and the Adam optimizer."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..rng import Rng


def glorot_bound(n_in: int, n_out: int) -> float:
    return math.sqrt(6.0 / (n_in + n_out))


def glorot_uniform(n_in: int, n_out: int, rng: Rng) -> np.ndarray:
    if n_in < 1 or n_out < 1:
        raise ValueError("fan-in and fan-out must be positive")
    b = glorot_bound(n_in, n_out)
    return rng.uniform(-b, b, (n_in, n_out))


@dataclass
class AdamState:
    beta1: float = 0.9
    beta2: float = 0.999
    learning_rate: float = 0.001
    epsilon: float = 1e-7
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params, grads, state: AdamState):
    """One Adam update with 1 - beta**t bias correction.

    ``params`` is any mapping-like of arrays (``NetworkParams`` or a dict);
    arrays are updated in place and ``(params, state)`` is returned.
    """
    state.t += 1
    bc1 = 1.0 - state.beta1 ** state.t
    bc2 = 1.0 - state.beta2 ** state.t
    for name, g in grads.items():
        p = params[name]
        if p.shape != g.shape:
            raise ValueError(f"gradient for {name} has shape {g.shape}, parameter {p.shape}")
        if name not in state.m:
            state.m[name] = np.zeros_like(p)
            state.v[name] = np.zeros_like(p)
        m, v = state.m[name], state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        p -= state.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + state.epsilon)
    return params, state

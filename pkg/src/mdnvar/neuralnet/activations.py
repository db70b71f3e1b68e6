"""Activation functions and their derivatives.

Derivatives are expressed in terms of the pre-activation ``x`` except where
noted; the backward pass in :mod:`.network` relies on these exact forms.
"""
from __future__ import annotations

import numpy as np
from scipy import special

from ..errors import NumericError


def sigmoid(x):
    return special.expit(x)


def tanh(x):
    return np.tanh(x)


def relu(x):
    return np.maximum(x, 0.0)


def elu(x):
    return np.where(x > 0, x, np.expm1(np.minimum(x, 0.0)))


def elu1(x):
    """ELU shifted up by one; maps onto (0, inf)."""
    return elu(x) + 1.0


def softmax(x, axis=-1):
    x = np.asarray(x, dtype=float)
    shifted = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=axis, keepdims=True)


def log_softmax(x, axis=-1):
    x = np.asarray(x, dtype=float)
    return x - special.logsumexp(x, axis=axis, keepdims=True)


def d_relu(x):
    return (x > 0).astype(float)


def d_tanh(x):
    return 1.0 - np.tanh(x) ** 2


def d_elu1(x):
    return np.where(x > 0, 1.0, np.exp(np.minimum(x, 0.0)))


ACTIVATIONS = {
    "sigmoid": sigmoid,
    "tanh": tanh,
    "relu": relu,
    "elu": elu,
    "elu1": elu1,
    "softmax": softmax,
}

# derivatives for the activations usable inside the LSTM / dense layers
DERIVATIVES = {
    "tanh": d_tanh,
    "relu": d_relu,
}


def activate(kind: str, x) -> np.ndarray:
    if kind not in ACTIVATIONS:
        raise ValueError(f"unknown activation {kind!r}")
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise ValueError("activation of an empty input")
    if np.isnan(x).any():
        raise NumericError(f"NaN input to {kind}")
    return ACTIVATIONS[kind](x)

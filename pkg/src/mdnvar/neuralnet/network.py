"""LSTM -> Dense -> mixture-density head, with an exact backward pass.

Shapes use the row-vector convention: a batch ``X`` of windows is
``(B, d)`` and every affine map is ``z @ W + b``. Each LSTM gate owns a
weight matrix of shape ``(input_dim + H, H)`` acting on the concatenation
``[x_t, h_{t-1}]``.

Head transforms: pi = softmax, mu = identity, sigma = max(ELU(z) + 1, floor).

``input_scale`` divides every input return before the LSTM and multiplies
the head outputs mu and sigma back, so the mixture is always expressed in
return units. With the default of 1 the network is used as is.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import special

from ..errors import DomainError, NumericError
from ..rng import Rng
from ..stats_dist import LOG_SQRT_2PI, MixtureParams
from .activations import DERIVATIVES, ACTIVATIONS, d_elu1, elu1, log_softmax, sigmoid
from .optim import glorot_uniform

GATES = ("f", "i", "c", "o")
LOSSES = ("nll", "reg_nll")


@dataclass(frozen=True)
class NetworkConfig:
    lookback: int = 10
    lstm_units: int = 6
    dense_units: int = 12
    n_components: int = 2
    loss: str = "nll"
    reg_lambda: float = 0.0
    lstm_activation: str = "relu"
    dense_activation: str = "relu"
    input_dim: int = 1
    sigma_floor: float = 1e-6
    input_scale: float = 1.0

    def __post_init__(self):
        for name in ("lookback", "lstm_units", "dense_units", "n_components", "input_dim"):
            if getattr(self, name) < 1:
                raise DomainError(f"{name} must be at least 1")
        if self.loss not in LOSSES:
            raise DomainError(f"unknown loss {self.loss!r}")
        if self.reg_lambda < 0:
            raise DomainError("reg_lambda must be non-negative")
        if not self.input_scale > 0:
            raise DomainError("input_scale must be positive")
        for name in ("lstm_activation", "dense_activation"):
            if getattr(self, name) not in DERIVATIVES:
                raise DomainError(f"{name} must be one of {sorted(DERIVATIVES)}")

    @property
    def effective_lambda(self) -> float:
        return self.reg_lambda if self.loss == "reg_nll" else 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def param_shapes(config: NetworkConfig) -> dict[str, tuple[int, ...]]:
    H, M, K = config.lstm_units, config.dense_units, config.n_components
    n_cat = config.input_dim + H
    shapes: dict[str, tuple[int, ...]] = {}
    for g in GATES:
        shapes[f"lstm_W{g}"] = (n_cat, H)
        shapes[f"lstm_b{g}"] = (H,)
    shapes["dense_W"] = (H, M)
    shapes["dense_b"] = (M,)
    for head in ("pi", "mu", "sigma"):
        shapes[f"{head}_W"] = (M, K)
        shapes[f"{head}_b"] = (K,)
    return shapes


@dataclass
class NetworkParams:
    """Named parameter arrays in a fixed order (see :func:`param_shapes`)."""

    arrays: dict[str, np.ndarray] = field(default_factory=dict)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.arrays[name]

    def __iter__(self):
        return iter(self.arrays)

    def items(self):
        return self.arrays.items()

    def copy(self) -> "NetworkParams":
        return NetworkParams({k: v.copy() for k, v in self.arrays.items()})

    def zeros_like(self) -> "NetworkParams":
        return NetworkParams({k: np.zeros_like(v) for k, v in self.arrays.items()})

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(v)) for v in self.arrays.values())

    def check(self, config: NetworkConfig) -> None:
        shapes = param_shapes(config)
        if list(shapes) != list(self.arrays):
            raise DomainError("parameter names do not match the network configuration")
        for name, shape in shapes.items():
            if self.arrays[name].shape != shape:
                raise DomainError(f"{name} has shape {self.arrays[name].shape}, expected {shape}")

    @classmethod
    def zeros(cls, config: NetworkConfig) -> "NetworkParams":
        return cls({k: np.zeros(s) for k, s in param_shapes(config).items()})


def init_params(config: NetworkConfig, rng: Rng) -> NetworkParams:
    """Glorot-uniform weights, zero biases."""
    arrays = {}
    for name, shape in param_shapes(config).items():
        if len(shape) == 2:
            arrays[name] = glorot_uniform(shape[0], shape[1], rng)
        else:
            arrays[name] = np.zeros(shape)
    return NetworkParams(arrays)


# -- single LSTM step ---------------------------------------------------------


@dataclass(frozen=True)
class LstmState:
    h: np.ndarray
    C: np.ndarray

    @classmethod
    def zeros(cls, units: int) -> "LstmState":
        return cls(np.zeros(units), np.zeros(units))


def lstm_step(x_t, state: LstmState, params: NetworkParams,
              activation: str = "relu") -> LstmState:
    """One cell update for a single (unbatched) input vector."""
    x_t = np.atleast_1d(np.asarray(x_t, dtype=float))
    H = state.h.shape[0]
    if state.C.shape != (H,):
        raise DomainError("hidden and cell state sizes differ")
    z = np.concatenate([x_t, state.h])
    if params["lstm_Wf"].shape != (z.size, H):
        raise DomainError(
            f"gate weights have shape {params['lstm_Wf'].shape}, input implies {(z.size, H)}"
        )
    act = ACTIVATIONS[activation]
    f = sigmoid(z @ params["lstm_Wf"] + params["lstm_bf"])
    i = sigmoid(z @ params["lstm_Wi"] + params["lstm_bi"])
    o = sigmoid(z @ params["lstm_Wo"] + params["lstm_bo"])
    cand = act(z @ params["lstm_Wc"] + params["lstm_bc"])
    C = f * state.C + i * cand
    return LstmState(act(C) * o, C)


# -- batched forward ----------------------------------------------------------


def _check_finite(a: np.ndarray, layer: str) -> None:
    if not np.all(np.isfinite(a)):
        raise NumericError(f"non-finite values in {layer} layer")


def _forward(X: np.ndarray, params: NetworkParams, config: NetworkConfig, keep_cache: bool):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    B, d = X.shape
    if d != config.lookback:
        raise DomainError(f"window length {d} does not match lookback {config.lookback}")
    H = config.lstm_units
    act = ACTIVATIONS[config.lstm_activation]
    scale = config.input_scale
    if scale != 1.0:
        X = X / scale
    h = np.zeros((B, H))
    C = np.zeros((B, H))
    steps = []
    W = [params[f"lstm_W{g}"] for g in GATES]
    b = [params[f"lstm_b{g}"] for g in GATES]
    for t in range(d):
        z = np.concatenate([X[:, t:t + 1], h], axis=1)
        f = sigmoid(z @ W[0] + b[0])
        i = sigmoid(z @ W[1] + b[1])
        c_pre = z @ W[2] + b[2]
        o = sigmoid(z @ W[3] + b[3])
        cand = act(c_pre)
        C_prev = C
        C = f * C_prev + i * cand
        h = act(C) * o
        if keep_cache:
            steps.append((z, f, i, c_pre, cand, o, C_prev, C))
    _check_finite(h, "lstm")

    a = h @ params["dense_W"] + params["dense_b"]
    g = ACTIVATIONS[config.dense_activation](a)
    _check_finite(g, "dense")

    z_pi = g @ params["pi_W"] + params["pi_b"]
    mu = (g @ params["mu_W"] + params["mu_b"]) * scale
    z_sigma = g @ params["sigma_W"] + params["sigma_b"]
    log_pi = log_softmax(z_pi)
    sigma_raw = elu1(z_sigma) * scale
    sigma = np.maximum(sigma_raw, config.sigma_floor)
    _check_finite(log_pi, "mdn pi")
    _check_finite(mu, "mdn mu")
    _check_finite(sigma, "mdn sigma")
    cache = None
    if keep_cache:
        cache = dict(X=X, steps=steps, h=h, a=a, g=g, z_pi=z_pi, z_sigma=z_sigma,
                     floored=sigma_raw < config.sigma_floor)
    return log_pi, mu, sigma, cache


def forward_batch(X, params: NetworkParams, config: NetworkConfig):
    """Mixture parameters for a batch: arrays ``(pi, mu, sigma)`` each ``(B, K)``."""
    log_pi, mu, sigma, _ = _forward(X, params, config, keep_cache=False)
    return np.exp(log_pi), mu, sigma


def forward(window, params: NetworkParams, config: NetworkConfig) -> MixtureParams:
    """Day-ahead mixture for one window of ``lookback`` returns."""
    window = np.asarray(window, dtype=float)
    if window.ndim != 1:
        raise DomainError("forward expects a single 1-D window")
    pi, mu, sigma = forward_batch(window, params, config)
    return MixtureParams(pi[0], mu[0], sigma[0])


# -- losses -------------------------------------------------------------------


def _log_components(y, log_pi, mu, sigma):
    z = (y[:, None] - mu) / sigma
    return log_pi - np.log(sigma) - LOG_SQRT_2PI - 0.5 * z * z


def nll_loss(pred: MixtureParams, y: float) -> float:
    """Negative log-likelihood of ``y`` under the mixture."""
    with np.errstate(divide="ignore"):
        log_pi = np.log(pred.pi)
    terms = _log_components(np.array([float(y)]), log_pi[None], pred.mu[None], pred.sigma[None])
    return float(-special.logsumexp(terms, axis=1)[0])


def reg_nll_loss(pred: MixtureParams, y: float, lam: float) -> float:
    """Negative log-likelihood plus ``lam * sum(pi**2)``."""
    nll = nll_loss(pred, y)
    if lam == 0:
        return nll
    return nll + lam * float(np.sum(pred.pi ** 2))


def batch_loss(X, y, params: NetworkParams, config: NetworkConfig) -> float:
    """Mean loss over a batch under the configured loss kind."""
    log_pi, mu, sigma, _ = _forward(X, params, config, keep_cache=False)
    return _mean_loss(np.asarray(y, dtype=float), log_pi, mu, sigma, config.effective_lambda)


def _mean_loss(y, log_pi, mu, sigma, lam):
    per = -special.logsumexp(_log_components(y, log_pi, mu, sigma), axis=1)
    if lam:
        per = per + lam * np.sum(np.exp(2.0 * log_pi), axis=1)
    return float(np.mean(per))


# -- backward -----------------------------------------------------------------


def loss_and_grad(X, y, params: NetworkParams, config: NetworkConfig) -> tuple[float, NetworkParams]:
    """Mean batch loss and its exact gradient with respect to every parameter."""
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.size == 0:
        raise DomainError("empty batch")
    log_pi, mu, sigma, cache = _forward(X, params, config, keep_cache=True)
    B = y.size
    lam = config.effective_lambda
    loss = _mean_loss(y, log_pi, mu, sigma, lam)

    logc = _log_components(y, log_pi, mu, sigma)
    gamma = np.exp(logc - special.logsumexp(logc, axis=1, keepdims=True))
    pi = np.exp(log_pi)
    resid = y[:, None] - mu

    d_zpi = pi - gamma
    if lam:
        reg = np.sum(pi * pi, axis=1, keepdims=True)
        d_zpi = d_zpi + lam * 2.0 * pi * (pi - reg)
    scale = config.input_scale
    d_mu = -gamma * resid / sigma**2 * scale
    d_sigma = gamma * (1.0 / sigma - resid**2 / sigma**3)
    d_zsigma = d_sigma * scale * d_elu1(cache["z_sigma"]) * (~cache["floored"])
    d_zpi /= B
    d_mu /= B
    d_zsigma /= B

    grads: dict[str, np.ndarray] = {}
    g = cache["g"]
    grads["pi_W"], grads["pi_b"] = g.T @ d_zpi, d_zpi.sum(0)
    grads["mu_W"], grads["mu_b"] = g.T @ d_mu, d_mu.sum(0)
    grads["sigma_W"], grads["sigma_b"] = g.T @ d_zsigma, d_zsigma.sum(0)

    d_g = d_zpi @ params["pi_W"].T + d_mu @ params["mu_W"].T + d_zsigma @ params["sigma_W"].T
    d_a = d_g * DERIVATIVES[config.dense_activation](cache["a"])
    grads["dense_W"], grads["dense_b"] = cache["h"].T @ d_a, d_a.sum(0)
    d_h = d_a @ params["dense_W"].T

    act = ACTIVATIONS[config.lstm_activation]
    dact = DERIVATIVES[config.lstm_activation]
    W = {gname: params[f"lstm_W{gname}"] for gname in GATES}
    dW = {gname: np.zeros_like(W[gname]) for gname in GATES}
    db = {gname: np.zeros(config.lstm_units) for gname in GATES}
    n_in = config.input_dim
    d_C = np.zeros_like(d_h)
    for z, f, i, c_pre, cand, o, C_prev, C in reversed(cache["steps"]):
        d_o = d_h * act(C)
        d_C = d_C + d_h * o * dact(C)
        d_f = d_C * C_prev
        d_i = d_C * cand
        d_cand = d_C * i
        pre = {
            "f": d_f * f * (1.0 - f),
            "i": d_i * i * (1.0 - i),
            "c": d_cand * dact(c_pre),
            "o": d_o * o * (1.0 - o),
        }
        d_z = np.zeros_like(z)
        for gname in GATES:
            dW[gname] += z.T @ pre[gname]
            db[gname] += pre[gname].sum(0)
            d_z += pre[gname] @ W[gname].T
        d_h = d_z[:, n_in:]
        d_C = d_C * f

    for gname in GATES:
        grads[f"lstm_W{gname}"] = dW[gname]
        grads[f"lstm_b{gname}"] = db[gname]

    ordered = NetworkParams({name: grads[name] for name in params})
    if not ordered.all_finite() or not math.isfinite(loss):
        raise NumericError("non-finite loss or gradient")
    return loss, ordered


def backward(X, y, params: NetworkParams, config: NetworkConfig) -> NetworkParams:
    """Gradient of the mean batch loss (see :func:`loss_and_grad`)."""
    return loss_and_grad(X, y, params, config)[1]

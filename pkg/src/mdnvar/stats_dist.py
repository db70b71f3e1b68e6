"""Normal, GED, Gaussian-mixture and chi-square helpers."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DomainError
from .rng import Rng

LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def _check_prob(p: float) -> None:
    if not (0.0 < p < 1.0):
        raise DomainError(f"probability must lie in (0, 1), got {p}")


# -- normal -------------------------------------------------------------------


def normal_quantile(p: float) -> float:
    _check_prob(p)
    return float(special.ndtri(p))


def normal_cdf(x):
    return special.ndtr(x)


# -- generalized error distribution ------------------------------------------


@dataclass(frozen=True)
class GedShape:
    """Shape of the unit-variance generalized error distribution.

    ``nu = 2`` is the standard normal, ``nu = 1`` a Laplace law and
    ``nu < 2`` gives fatter tails.
    """

    nu: float

    def __post_init__(self):
        if not (self.nu > 0 and math.isfinite(self.nu)):
            raise DomainError(f"GED shape must be positive, got {self.nu}")

    @property
    def scale(self) -> float:
        """lambda such that the density has unit variance."""
        nu = self.nu
        return math.sqrt(2.0 ** (-2.0 / nu) * math.gamma(1.0 / nu) / math.gamma(3.0 / nu))


def _as_shape(shape) -> GedShape:
    return shape if isinstance(shape, GedShape) else GedShape(float(shape))


def ged_logpdf(x, shape):
    s = _as_shape(shape)
    nu, lam = s.nu, s.scale
    z = np.abs(np.asarray(x, dtype=float) / lam)
    const = math.log(nu) - math.log(lam) - (1.0 + 1.0 / nu) * math.log(2.0) - math.lgamma(1.0 / nu)
    out = const - 0.5 * z**nu
    return float(out) if np.ndim(out) == 0 else out


def ged_cdf(x, shape):
    s = _as_shape(shape)
    x = np.asarray(x, dtype=float)
    t = 0.5 * np.abs(x / s.scale) ** s.nu
    out = 0.5 + 0.5 * np.sign(x) * special.gammainc(1.0 / s.nu, t)
    return float(out) if np.ndim(out) == 0 else out


def ged_quantile(p: float, shape, tol: float = 1e-12) -> float:
    """Invert :func:`ged_cdf` by bisection."""
    _check_prob(p)
    s = _as_shape(shape)
    if p == 0.5:
        return 0.0
    lo, hi = -1.0, 1.0
    while ged_cdf(lo, s) > p:
        lo *= 2.0
    while ged_cdf(hi, s) < p:
        hi *= 2.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if ged_cdf(mid, s) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def ged_sample(shape, n: int, rng: Rng) -> np.ndarray:
    """Unit-variance GED draws: |X| = lambda * (2G)^(1/nu), G ~ Gamma(1/nu)."""
    s = _as_shape(shape)
    g = rng.gamma(1.0 / s.nu, n)
    sign = np.where(rng.uniform(size=n) < 0.5, -1.0, 1.0)
    return sign * s.scale * (2.0 * g) ** (1.0 / s.nu)


# -- chi-square tail ----------------------------------------------------------


def chi2_sf(x: float, dof: int) -> float:
    if x < 0 or math.isnan(x):
        raise DomainError(f"chi-square statistic must be non-negative, got {x}")
    if dof == 1:
        return math.erfc(math.sqrt(x / 2.0))
    if dof == 2:
        return math.exp(-x / 2.0)
    raise DomainError(f"only 1 or 2 degrees of freedom are supported, got {dof}")


# -- Gaussian mixtures --------------------------------------------------------


@dataclass(frozen=True)
class MixtureParams:
    pi: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        for name in ("pi", "mu", "sigma"):
            a = np.array(getattr(self, name), dtype=float).reshape(-1)
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if not (self.pi.size == self.mu.size == self.sigma.size >= 1):
            raise DomainError("pi, mu and sigma must have the same positive length")
        if np.any(self.sigma <= 0) or not np.all(np.isfinite(self.sigma)):
            raise DomainError("mixture scales must be positive")
        if np.any(self.pi < 0) or np.any(self.pi > 1) or abs(self.pi.sum() - 1.0) > 1e-9:
            raise DomainError("mixture weights must be probabilities summing to 1")
        if not np.all(np.isfinite(self.mu)):
            raise DomainError("mixture locations must be finite")

    @property
    def K(self) -> int:
        return self.pi.size

    def mean(self) -> float:
        return float(self.pi @ self.mu)


def mixture_logpdf(y, params: MixtureParams):
    """log sum_k pi_k N(y | mu_k, sigma_k^2), evaluated with a max shift."""
    y = np.asarray(y, dtype=float)
    z = (y[..., None] - params.mu) / params.sigma
    with np.errstate(divide="ignore"):
        log_terms = np.log(params.pi) - np.log(params.sigma) - LOG_SQRT_2PI - 0.5 * z * z
    out = special.logsumexp(log_terms, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def mixture_cdf(x, params: MixtureParams):
    x = np.asarray(x, dtype=float)
    out = np.sum(params.pi * special.ndtr((x[..., None] - params.mu) / params.sigma), axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def mixture_sample(params: MixtureParams, n: int, rng: Rng) -> np.ndarray:
    """Draw ``n`` values: pick component k where u falls in the cumulative-pi
    bracket, then draw one normal from component k."""
    if n < 1:
        raise DomainError("sample count must be at least 1")
    u = rng.uniform(size=n)
    edges = np.cumsum(params.pi)
    k = np.minimum(np.searchsorted(edges, u, side="right"), params.K - 1)
    z = rng.normal(n)
    return params.mu[k] + params.sigma[k] * z

"""Zero-mean GARCH(1,1) with normal or GED innovations.

Estimation maximizes the exact conditional log-likelihood with L-BFGS, using
the analytic score, over an unconstrained reparameterization::

    sigma2_unc = sample_var * exp(a)
    persistence = alpha1 + beta1 = P_MAX * logistic(b)
    alpha1 = persistence * logistic(c),  beta1 = persistence - alpha1
    alpha0 = sigma2_unc * (1 - persistence)
    nu = NU_LO + (NU_HI - NU_LO) * logistic(d)         (GED only)

so every trial point is positive and stationary by construction. The
variance derivatives obey the same linear recursion as sigma2 itself (with a
zero start), so the score costs three more passes of the same filter.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from datetime import date, timedelta

import numpy as np
from scipy import optimize, signal, special

from .classic_var import VaRConfig
from .errors import (
    DomainError,
    GarchFitError,
    InsufficientDataError,
    NonStationaryError,
    SelectionError,
)
from .rng import Rng
from .series import ReturnSeries
from .stats_dist import GedShape, ged_logpdf, ged_quantile, ged_sample, normal_quantile

log = logging.getLogger(__name__)

NORMAL = "normal"
GED = "ged"
INNOVATIONS = (NORMAL, GED)

MIN_OBS = 50
P_MAX = 1.0 - 1e-6
NU_LO, NU_HI = 0.5, 5.0
WARM_FLOOR, WARM_CEIL = 0.01, 0.995

# (alpha1, beta1) starting points, plus GED shape starts paired by position
_STARTS = [(0.05, 0.90), (0.10, 0.85), (0.02, 0.96), (0.20, 0.60), (0.01, 0.10)]
_NU_STARTS = [1.5, 1.2, 2.0, 1.0, 3.0]


@dataclass(frozen=True)
class GarchParams:
    alpha0: float
    alpha1: float
    beta1: float
    innovation: str = NORMAL
    nu: float | None = None
    mu: float = 0.0

    def __post_init__(self):
        if self.innovation not in INNOVATIONS:
            raise DomainError(f"unknown innovation {self.innovation!r}")
        if self.innovation == GED and self.nu is None:
            raise DomainError("GED innovations need a shape nu")
        if not self.alpha0 > 0:
            raise DomainError("alpha0 must be positive")
        if self.alpha1 < 0 or self.beta1 < 0:
            raise DomainError("alpha1 and beta1 must be non-negative")

    @property
    def persistence(self) -> float:
        return self.alpha1 + self.beta1

    @property
    def stationary(self) -> bool:
        return self.persistence < 1.0

    @property
    def unconditional_variance(self) -> float:
        if not self.stationary:
            raise NonStationaryError(f"alpha1 + beta1 = {self.persistence:.6f} >= 1")
        return self.alpha0 / (1.0 - self.persistence)

    def innovation_quantile(self, p: float) -> float:
        if self.innovation == NORMAL:
            return normal_quantile(p)
        return ged_quantile(p, GedShape(self.nu))

    @property
    def n_params(self) -> int:
        return 3 if self.innovation == NORMAL else 4


@dataclass(frozen=True)
class GarchFit:
    params: GarchParams
    variances: np.ndarray = field(repr=False)
    residuals: np.ndarray = field(repr=False)
    loglik: float
    next_variance: float
    n_starts_converged: int = 0

    @property
    def k(self) -> int:
        return self.params.n_params

    @property
    def aic(self) -> float:
        return garch_aic(self.loglik, self.k)


# -- likelihood ---------------------------------------------------------------


def conditional_variances(eps: np.ndarray, alpha0: float, alpha1: float, beta1: float,
                          sigma2_start: float) -> np.ndarray:
    """sigma2[0] = sigma2_start; sigma2[t] = alpha0 + alpha1*eps[t-1]^2 + beta1*sigma2[t-1]."""
    drive = alpha0 + alpha1 * eps[:-1] ** 2
    rest = signal.lfilter([1.0], [1.0, -beta1], drive, zi=[beta1 * sigma2_start])[0]
    return np.concatenate(([sigma2_start], rest))


def loglikelihood(eps: np.ndarray, params: GarchParams, sigma2_start: float) -> float:
    s2 = conditional_variances(eps, params.alpha0, params.alpha1, params.beta1, sigma2_start)
    if np.any(s2 <= 0) or not np.all(np.isfinite(s2)):
        return -math.inf
    if params.innovation == NORMAL:
        return float(-0.5 * np.sum(math.log(2 * math.pi) + np.log(s2) + eps**2 / s2))
    z = eps / np.sqrt(s2)
    return float(np.sum(ged_logpdf(z, params.nu)) - 0.5 * np.sum(np.log(s2)))


def _unpack(theta, sample_var: float, innovation: str) -> GarchParams:
    a, b, c = theta[:3]
    persistence = P_MAX * float(special.expit(b))
    alpha1 = persistence * special.expit(c)
    beta1 = persistence - alpha1
    alpha0 = sample_var * math.exp(min(a, 50.0)) * (1.0 - persistence)
    nu = float(NU_LO + (NU_HI - NU_LO) * special.expit(theta[3])) if innovation == GED else None
    return GarchParams(float(alpha0), float(alpha1), float(beta1), innovation, nu)


def _pack(alpha1: float, beta1: float, nu: float | None, innovation: str,
          log_var_ratio: float = 0.0) -> np.ndarray:
    persistence = alpha1 + beta1
    theta = [log_var_ratio, special.logit(persistence / P_MAX), special.logit(alpha1 / persistence)]
    if innovation == GED:
        theta.append(special.logit((nu - NU_LO) / (NU_HI - NU_LO)))
    return np.array(theta)


def neg_loglik_and_grad(theta, eps: np.ndarray, sample_var: float,
                        innovation: str) -> tuple[float, np.ndarray]:
    """Negative log-likelihood and its gradient in the unconstrained coordinates."""
    a, b, c = theta[:3]
    sb, sc = special.expit(b), special.expit(c)
    P = P_MAX * sb
    a1 = P * sc
    b1 = P - a1
    ea = math.exp(min(a, 50.0))
    a0 = sample_var * ea * (1.0 - P)
    e2 = eps**2
    s2 = conditional_variances(eps, a0, a1, b1, sample_var)
    grad = np.zeros(len(theta))
    if np.any(s2 <= 0) or not np.all(np.isfinite(s2)):
        return 1e300, grad
    T = eps.size
    # d sigma2_t / d(alpha0, alpha1, beta1)
    D = np.zeros((3, T))
    D[:, 1:] = signal.lfilter([1.0], [1.0, -b1], np.vstack([np.ones(T - 1), e2[:-1], s2[:-1]]), axis=1)
    if innovation == NORMAL:
        ll = -0.5 * np.sum(math.log(2 * math.pi) + np.log(s2) + e2 / s2)
        w = -0.5 * (1.0 / s2 - e2 / s2**2)
    else:
        sd = special.expit(theta[3])
        nu = NU_LO + (NU_HI - NU_LO) * sd
        lam = GedShape(nu).scale
        u = np.abs(eps) / (np.sqrt(s2) * lam)
        un = u**nu
        const = math.log(nu) - math.log(lam) - (1 + 1 / nu) * math.log(2) - math.lgamma(1 / nu)
        ll = T * const - 0.5 * np.sum(un) - 0.5 * np.sum(np.log(s2))
        w = 0.25 * nu * un / s2 - 0.5 / s2
        psi1, psi3 = special.digamma(1 / nu), special.digamma(3 / nu)
        dloglam = 0.5 * (2 * math.log(2) - psi1 + 3 * psi3) / nu**2
        dconst = 1 / nu - dloglam + (math.log(2) + psi1) / nu**2
        ulogu = un * np.log(np.where(u > 0, u, 1.0))
        dnu = T * dconst - 0.5 * np.sum(ulogu - un * nu * dloglam)
        grad[3] = dnu * (NU_HI - NU_LO) * sd * (1 - sd)
    if not math.isfinite(ll):
        return 1e300, np.zeros(len(theta))
    g0, g1, g2 = D @ w
    dP = P_MAX * sb * (1 - sb)
    dsc = sc * (1 - sc)
    grad[0] = g0 * a0 if a < 50.0 else 0.0
    grad[1] = -g0 * sample_var * ea * dP + g1 * dP * sc + g2 * dP * (1 - sc)
    grad[2] = (g1 - g2) * P * dsc
    return -float(ll), -grad


def fit_garch11(window, innovation: str = NORMAL, start: GarchParams | None = None,
                maxiter: int = 2000) -> GarchFit:
    """Maximum-likelihood GARCH(1,1) fit with mean fixed at zero.

    ``start`` adds an extra starting point ahead of the five built-in ones,
    useful when refitting on overlapping rolling windows. The best converged
    run over all starts wins.
    """
    if innovation not in INNOVATIONS:
        raise DomainError(f"unknown innovation {innovation!r}")
    eps = np.asarray(window, dtype=float)
    if eps.size < MIN_OBS:
        raise InsufficientDataError(f"GARCH fit needs at least {MIN_OBS} observations, got {eps.size}")
    if not np.all(np.isfinite(eps)):
        raise GarchFitError("window contains non-finite values")
    sample_var = float(np.var(eps))
    # a constant window leaves only rounding residue in np.var
    if not sample_var > (64 * np.finfo(float).eps * float(np.max(np.abs(eps)))) ** 2:
        raise GarchFitError("window has zero variance; GARCH is not identifiable")

    starts = []
    if start is not None and start.stationary:
        ratio = math.log(start.unconditional_variance / sample_var)
        nu = start.nu if start.nu is not None else _NU_STARTS[0]
        nu = min(max(nu, NU_LO + 0.05), NU_HI - 0.05)
        # pull boundary estimates inside; the logistic maps flatten at the corners
        a1 = max(start.alpha1, WARM_FLOOR)
        b1 = max(start.beta1, WARM_FLOOR)
        if a1 + b1 > WARM_CEIL:
            a1, b1 = a1 * WARM_CEIL / (a1 + b1), b1 * WARM_CEIL / (a1 + b1)
        starts.append(_pack(a1, b1, nu, innovation, ratio))
    starts += [_pack(a1, b1, nu, innovation) for (a1, b1), nu in zip(_STARTS, _NU_STARTS)]

    best = None
    best_any = None
    converged = 0
    for x0 in starts:
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            res = optimize.minimize(
                neg_loglik_and_grad, x0, args=(eps, sample_var, innovation), jac=True,
                method="L-BFGS-B", options={"maxiter": maxiter, "ftol": 1e-13, "gtol": 1e-8},
            )
        if best_any is None or res.fun < best_any.fun:
            best_any = res
        # a line-search stall at a stationary point still counts as converged
        ok = res.fun < 1e299 and (bool(res.success) or float(np.max(np.abs(res.jac))) < 1e-3)
        converged += ok
        if ok and (best is None or res.fun < best.fun):
            best = res

    if best is None:
        diag = {"innovation": innovation, "n_obs": int(eps.size), "neg_loglik": float(best_any.fun),
                "message": str(best_any.message)}
        if best_any.fun < 1e299:
            diag["params"] = _unpack(best_any.x, sample_var, innovation)
        raise GarchFitError(f"no start converged ({best_any.message})", best=diag)

    params = _unpack(best.x, sample_var, innovation)
    s2 = conditional_variances(eps, params.alpha0, params.alpha1, params.beta1, sample_var)
    ll = loglikelihood(eps, params, sample_var)
    next_var = params.alpha0 + params.alpha1 * eps[-1] ** 2 + params.beta1 * s2[-1]
    s2.setflags(write=False)
    eps = eps.copy()
    eps.setflags(write=False)
    return GarchFit(params, s2, eps, ll, float(next_var), converged)


def garch_aic(loglik: float, k: int) -> float:
    return -2.0 * loglik + 2.0 * k


def select_innovation(window) -> tuple[str, dict[str, GarchFit]]:
    """Fit both innovation laws and keep the lower AIC (ties go to normal)."""
    fits: dict[str, GarchFit] = {}
    errors = {}
    for kind in INNOVATIONS:
        try:
            fits[kind] = fit_garch11(window, kind)
        except GarchFitError as exc:
            errors[kind] = str(exc)
    if not fits:
        raise SelectionError(f"both GARCH fits failed: {errors}")
    if len(fits) == 1:
        (kind,) = fits
        log.warning("only the %s fit converged; selecting it", kind)
        return kind, fits
    chosen = GED if fits[GED].aic < fits[NORMAL].aic else NORMAL
    return chosen, fits


def garch_forecast_variance(fit: GarchFit | GarchParams, k: int, next_variance: float | None = None) -> float:
    """k-step-ahead conditional variance, mean-reverting to alpha0/(1-alpha1-beta1)."""
    if k < 1:
        raise DomainError("forecast step must be at least 1")
    if isinstance(fit, GarchFit):
        params, one_step = fit.params, fit.next_variance
    else:
        params, one_step = fit, next_variance
    uncond = params.unconditional_variance
    return uncond + params.persistence ** (k - 1) * (one_step - uncond)


def garch_var(fit: GarchFit, config: VaRConfig = VaRConfig()) -> float:
    q = fit.params.innovation_quantile(1.0 - config.alpha)
    return -(math.sqrt(fit.next_variance) * q) * config.asset_value + 0.0


def synthetic_dates(n: int, start: date = date(2000, 1, 3)) -> tuple[date, ...]:
    """``n`` consecutive weekdays from ``start``."""
    out = []
    d = start
    while len(out) < n:
        if d.weekday() < 5:
            out.append(d)
        d += timedelta(days=1)
    return tuple(out)


def garch_simulate(params: GarchParams, T: int, rng: Rng, start: date = date(2000, 1, 3)) -> ReturnSeries:
    if T < 1:
        raise DomainError("T must be at least 1")
    sigma2 = params.unconditional_variance
    if params.innovation == NORMAL:
        eta = rng.normal(T)
    else:
        eta = ged_sample(params.nu, T, rng)
    eps = np.empty(T)
    for t in range(T):
        eps[t] = math.sqrt(sigma2) * eta[t]
        sigma2 = params.alpha0 + params.alpha1 * eps[t] ** 2 + params.beta1 * sigma2
    return ReturnSeries(synthetic_dates(T, start), params.mu + eps)


def rolling_garch_var(returns, test_range: tuple[int, int], innovation: str,
                      config: VaRConfig = VaRConfig()) -> np.ndarray:
    """Refit on each trailing window (innovation law frozen) and forecast one day ahead.

    Each refit adds the previous window's estimate as an extra starting point.
    """
    r = np.asarray(returns, dtype=float)
    lo, hi = test_range
    d = config.window
    if lo < d:
        raise InsufficientDataError(f"first forecast at index {lo} has fewer than {d} prior returns")
    out = np.empty(hi - lo)
    prev = None
    for j, t in enumerate(range(lo, hi)):
        fit = fit_garch11(r[t - d:t], innovation, start=prev)
        out[j] = garch_var(fit, config)
        prev = fit.params
    return out

"""Standardized return-error distributions: normal, Student-t, skewed t.

All three are parameterized to have zero mean and unit variance. The skewed t
follows the two-piece construction with constants (a, b, c); its CDF, inverse
CDF and lower-tail conditional expectation are closed-form, so no numeric
root finding is involved anywhere in this module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

__all__ = [
    "Normal",
    "StudentT",
    "SkewT",
    "SkewTConstants",
    "ErrorDist",
    "skewt_constants",
    "log_pdf",
    "cdf",
    "quantile",
    "tail_expectation",
    "dist_code",
    "dist_tail_params",
    "standardized_var_es",
]

_LOG_2PI = math.log(2.0 * math.pi)
_P_EPS = 1e-14


@dataclass(frozen=True)
class Normal:
    """Standard normal return errors."""


@dataclass(frozen=True)
class StudentT:
    """Standardized Student-t return errors (unit variance, nu > 2)."""

    nu: float

    def __post_init__(self):
        if not self.nu > 2.0:
            raise ValueError(f"degrees of freedom must exceed 2, got {self.nu}")


@dataclass(frozen=True)
class SkewT:
    """Standardized skewed Student-t return errors (nu > 2, |lam| < 1)."""

    nu: float
    lam: float

    def __post_init__(self):
        if not self.nu > 2.0:
            raise ValueError(f"degrees of freedom must exceed 2, got {self.nu}")
        if not -1.0 < self.lam < 1.0:
            raise ValueError(f"skewness must lie in (-1, 1), got {self.lam}")


ErrorDist = Normal | StudentT | SkewT


@dataclass(frozen=True)
class SkewTConstants:
    a: float
    b: float
    c: float


def skewt_constants(nu, lam) -> SkewTConstants:
    """Constants (a, b, c) of the two-piece skewed-t density."""
    if not np.all(nu > 2.0):
        raise ValueError("degrees of freedom must exceed 2")
    if not np.all(np.abs(lam) < 1.0):
        raise ValueError("skewness must lie in (-1, 1)")
    a, b, c = _skewt_abc(np.asarray(nu, dtype=float), np.asarray(lam, dtype=float))
    if not np.all(b > 0.0):
        raise ValueError("skewness constants outside numeric domain (b^2 <= 0)")
    return SkewTConstants(float(a), float(b), float(c))


def _skewt_abc(nu, lam):
    c = np.exp(special.gammaln((nu + 1.0) / 2.0) - special.gammaln(nu / 2.0)) / np.sqrt(
        np.pi * (nu - 2.0)
    )
    a = 4.0 * lam * c * (nu - 2.0) / (nu - 1.0)
    b = np.sqrt(1.0 + 3.0 * lam * lam - a * a)
    return a, b, c


def _t_logc(nu):
    # Normalizing constant of the unit-variance Student-t density.
    return (
        special.gammaln((nu + 1.0) / 2.0)
        - special.gammaln(nu / 2.0)
        - 0.5 * np.log(np.pi * (nu - 2.0))
    )


def _t_logpdf_std(eps, nu):
    return _t_logc(nu) - 0.5 * (nu + 1.0) * np.log1p(eps * eps / (nu - 2.0))


def _skewt_logpdf(eps, nu, lam):
    a, b, c = _skewt_abc(nu, lam)
    scale = np.where(eps < -a / b, 1.0 - lam, 1.0 + lam)
    w = (b * eps + a) / scale
    return np.log(b * c) - 0.5 * (nu + 1.0) * np.log1p(w * w / (nu - 2.0))


def _t_cdf_std(eps, nu):
    return special.stdtr(nu, eps * np.sqrt(nu / (nu - 2.0)))


def _skewt_cdf(eps, nu, lam):
    a, b, c = _skewt_abc(nu, lam)
    s = np.sqrt(nu / (nu - 2.0))
    left = (1.0 - lam) * special.stdtr(nu, s * (b * eps + a) / (1.0 - lam))
    right = (1.0 - lam) / 2.0 + (1.0 + lam) * (
        special.stdtr(nu, s * (b * eps + a) / (1.0 + lam)) - 0.5
    )
    return np.where(eps < -a / b, left, right)


def _t_quantile_std(alpha, nu):
    return np.sqrt((nu - 2.0) / nu) * special.stdtrit(nu, alpha)


def _skewt_quantile(alpha, nu, lam):
    a, b, c = _skewt_abc(nu, lam)
    half = (1.0 - lam) / 2.0
    s = np.sqrt((nu - 2.0) / nu)
    p_left = np.clip(alpha / (1.0 - lam), _P_EPS, 1.0 - _P_EPS)
    p_right = np.clip(0.5 + (alpha - half) / (1.0 + lam), _P_EPS, 1.0 - _P_EPS)
    left = ((1.0 - lam) * s * special.stdtrit(nu, p_left) - a) / b
    right = ((1.0 + lam) * s * special.stdtrit(nu, p_right) - a) / b
    return np.where(alpha < half, left, right)


def _normal_tail_expectation(alpha):
    z = special.ndtri(alpha)
    return -np.exp(-0.5 * z * z) / (np.sqrt(2.0 * np.pi) * alpha)


def _t_tail_expectation(alpha, nu):
    t = special.stdtrit(nu, alpha)
    logg = (
        special.gammaln((nu + 1.0) / 2.0)
        - special.gammaln(nu / 2.0)
        - 0.5 * np.log(np.pi * nu)
        - 0.5 * (nu + 1.0) * np.log1p(t * t / nu)
    )
    return -np.exp(logg) * (nu + t * t) / (nu - 1.0) / alpha * np.sqrt((nu - 2.0) / nu)


def _skewt_tail_expectation(alpha, nu, lam):
    a, b, c = _skewt_abc(nu, lam)
    q = _skewt_quantile(alpha, nu, lam)
    # Partial expectation E[eps 1(eps <= q)] = M(q) - (a/b) F(q), with M from
    # the antiderivative of the two-piece kernel; F(q) = alpha by construction.
    kfac = c * (nu - 2.0) / ((1.0 - nu) * b)
    w_left = (b * q + a) / (1.0 - lam)
    w_right = (b * q + a) / (1.0 + lam)
    m_left = kfac * (1.0 - lam) ** 2 * (1.0 + w_left * w_left / (nu - 2.0)) ** (
        (1.0 - nu) / 2.0
    )
    m_right = kfac * (
        (1.0 - lam) ** 2
        + (1.0 + lam) ** 2
        * ((1.0 + w_right * w_right / (nu - 2.0)) ** ((1.0 - nu) / 2.0) - 1.0)
    )
    m = np.where(q < -a / b, m_left, m_right)
    return m / alpha - a / b


def _check_alpha(alpha):
    alpha = np.asarray(alpha, dtype=float)
    if np.any(alpha <= 0.0) or np.any(alpha >= 1.0):
        raise ValueError("probability level must lie strictly inside (0, 1)")
    return alpha


def log_pdf(d: ErrorDist, eps):
    """Log-density of the standardized error distribution."""
    eps = np.asarray(eps, dtype=float)
    if isinstance(d, Normal):
        out = -0.5 * (_LOG_2PI + eps * eps)
    elif isinstance(d, StudentT):
        out = _t_logpdf_std(eps, d.nu)
    else:
        out = _skewt_logpdf(eps, d.nu, d.lam)
    return out if out.ndim else float(out)


def cdf(d: ErrorDist, eps):
    """Cumulative distribution function."""
    eps = np.asarray(eps, dtype=float)
    if isinstance(d, Normal):
        out = special.ndtr(eps)
    elif isinstance(d, StudentT):
        out = _t_cdf_std(eps, d.nu)
    else:
        out = _skewt_cdf(eps, d.nu, d.lam)
    return out if out.ndim else float(out)


def quantile(d: ErrorDist, alpha):
    """Inverse CDF at probability alpha in (0, 1)."""
    alpha = _check_alpha(alpha)
    if isinstance(d, Normal):
        out = special.ndtri(alpha)
    elif isinstance(d, StudentT):
        out = _t_quantile_std(alpha, d.nu)
    else:
        out = _skewt_quantile(alpha, d.nu, d.lam)
    return out if out.ndim else float(out)


def tail_expectation(d: ErrorDist, alpha):
    """Lower-tail conditional expectation E[eps | eps < quantile(alpha)]."""
    alpha = _check_alpha(alpha)
    if isinstance(d, Normal):
        out = _normal_tail_expectation(alpha)
    else:
        if d.nu <= 2.0:
            raise ValueError("tail expectation undefined for nu <= 2")
        if isinstance(d, StudentT):
            out = _t_tail_expectation(alpha, d.nu)
        else:
            out = _skewt_tail_expectation(alpha, d.nu, d.lam)
    return out if out.ndim else float(out)


def dist_code(d: ErrorDist) -> int:
    """Integer code used by the compiled kernels (0/1/2)."""
    if isinstance(d, Normal):
        return 0
    if isinstance(d, StudentT):
        return 1
    return 2


def dist_tail_params(d: ErrorDist) -> tuple[float, ...]:
    """Trailing distribution entries of the flat parameter vector."""
    if isinstance(d, Normal):
        return ()
    if isinstance(d, StudentT):
        return (d.nu,)
    return (d.nu, d.lam)


def standardized_var_es(code: int, nu, lam, alpha):
    """Vectorized standardized (VaR, ES) pair for arrays of draw parameters.

    nu and lam may be arrays (one entry per posterior draw); alpha is a
    scalar level. Used by the forecasting layer.
    """
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValueError("probability level must lie strictly inside (0, 1)")
    if code == 0:
        q = float(special.ndtri(alpha))
        te = float(_normal_tail_expectation(alpha))
        shape = np.shape(nu)
        return np.full(shape, q), np.full(shape, te)
    nu = np.asarray(nu, dtype=float)
    if code == 1:
        return _t_quantile_std(alpha, nu), _t_tail_expectation(alpha, nu)
    lam = np.asarray(lam, dtype=float)
    return _skewt_quantile(alpha, nu, lam), _skewt_tail_expectation(alpha, nu, lam)

"""Realized EGARCH model: parameter container, filtering, likelihood, DGP.

The model links daily returns r_t and K realized measures x_{k,t} through

    r_t       = mu + sqrt(h_t) eps_t
    log h_t   = omega + beta log h_{t-1} + tau1 eps_{t-1}
                + tau2 (eps_{t-1}^2 - 1) + sum_k gamma_k u_{k,t-1}
    log x_kt  = xi_k + phi_k log h_t + delta1_k eps_t
                + delta2_k (eps_t^2 - 1) + u_{k,t}

with eps_t standardized (normal, Student-t or skewed t) and u_{k,t} Gaussian
with per-measure variance sigma2_u[k]. The first day's log-variance is the
supplied initial value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels, dists
from .dists import ErrorDist, Normal, SkewT, StudentT

__all__ = [
    "ModelParams",
    "FilterOutput",
    "SimulatedData",
    "FilterDivergenceError",
    "NEG_INF",
    "n_params",
    "param_names",
    "natural_vector",
    "params_from_natural",
    "pack",
    "unpack",
    "log_jacobian",
    "stationarity_ok",
    "filter_model",
    "log_likelihood",
    "log_likelihood_natural",
    "simulate",
    "default_log_h0",
    "paper_dgp_params",
]

NEG_INF = float("-inf")

NU_LOW = 4.0
NU_HIGH = 200.0


class FilterDivergenceError(RuntimeError):
    """The variance recursion left the representable range."""

    def __init__(self, t: int):
        super().__init__(f"variance path diverged at observation {t}")
        self.t = t


@dataclass(frozen=True)
class ModelParams:
    """Full parameter set for K realized measures plus the error distribution."""

    mu: float
    omega: float
    beta: float
    tau1: float
    tau2: float
    gamma: np.ndarray
    xi: np.ndarray
    phi: np.ndarray
    delta1: np.ndarray
    delta2: np.ndarray
    sigma2_u: np.ndarray
    dist: ErrorDist = field(default_factory=Normal)

    def __post_init__(self):
        for name in ("gamma", "xi", "phi", "delta1", "delta2", "sigma2_u"):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=float)))
        k = self.gamma.shape[0]
        for name in ("xi", "phi", "delta1", "delta2", "sigma2_u"):
            if getattr(self, name).shape[0] != k:
                raise ValueError(f"{name} must have one entry per measure ({k})")

    @property
    def n_measures(self) -> int:
        return int(self.gamma.shape[0])


@dataclass(frozen=True)
class FilterOutput:
    log_h: np.ndarray
    eps: np.ndarray
    u: np.ndarray


@dataclass(frozen=True)
class SimulatedData:
    returns: np.ndarray
    measures: np.ndarray
    h: np.ndarray
    seed: int


def n_params(n_meas: int, dist: ErrorDist | type) -> int:
    base = 5 + 6 * n_meas
    if isinstance(dist, type):
        extra = {Normal: 0, StudentT: 1, SkewT: 2}[dist]
    else:
        extra = len(dists.dist_tail_params(dist))
    return base + extra


def param_names(n_meas: int, dist) -> list[str]:
    names = ["mu", "omega", "beta", "tau1", "tau2"]
    names += [f"gamma{k + 1}" for k in range(n_meas)]
    for k in range(n_meas):
        s = str(k + 1)
        names += [f"xi{s}", f"phi{s}", f"delta1_{s}", f"delta2_{s}", f"sigma2_u{s}"]
    kind = dist if isinstance(dist, type) else type(dist)
    if kind is StudentT:
        names += ["nu"]
    elif kind is SkewT:
        names += ["nu", "lambda"]
    return names


def natural_vector(p: ModelParams) -> np.ndarray:
    """Flat natural-scale vector in the kernel layout."""
    k = p.n_measures
    out = np.empty(n_params(k, p.dist))
    out[0:5] = (p.mu, p.omega, p.beta, p.tau1, p.tau2)
    out[5 : 5 + k] = p.gamma
    for i in range(k):
        base = 5 + k + 5 * i
        out[base : base + 5] = (p.xi[i], p.phi[i], p.delta1[i], p.delta2[i], p.sigma2_u[i])
    tail = dists.dist_tail_params(p.dist)
    if tail:
        out[5 + 6 * k :] = tail
    return out


def params_from_natural(x: np.ndarray, n_meas: int, dist_kind: type) -> ModelParams:
    x = np.asarray(x, dtype=float)
    if x.shape[0] != n_params(n_meas, dist_kind):
        raise ValueError(
            f"expected vector of length {n_params(n_meas, dist_kind)}, got {x.shape[0]}"
        )
    k = n_meas
    xi = np.empty(k)
    phi = np.empty(k)
    d1 = np.empty(k)
    d2 = np.empty(k)
    s2 = np.empty(k)
    for i in range(k):
        base = 5 + k + 5 * i
        xi[i], phi[i], d1[i], d2[i], s2[i] = x[base : base + 5]
    if dist_kind is Normal:
        dist = Normal()
    elif dist_kind is StudentT:
        dist = StudentT(float(x[5 + 6 * k]))
    else:
        dist = SkewT(float(x[5 + 6 * k]), float(x[5 + 6 * k + 1]))
    return ModelParams(
        mu=float(x[0]),
        omega=float(x[1]),
        beta=float(x[2]),
        tau1=float(x[3]),
        tau2=float(x[4]),
        gamma=x[5 : 5 + k].copy(),
        xi=xi,
        phi=phi,
        delta1=d1,
        delta2=d2,
        sigma2_u=s2,
        dist=dist,
    )


def _transform_spec(n_meas: int, dist_kind: type):
    """Indices of the log-variance, nu and lambda entries in the flat layout."""
    s2_idx = [5 + n_meas + 5 * i + 4 for i in range(n_meas)]
    nu_idx = 5 + 6 * n_meas if dist_kind in (StudentT, SkewT) else None
    lam_idx = 5 + 6 * n_meas + 1 if dist_kind is SkewT else None
    return s2_idx, nu_idx, lam_idx


def pack(p: ModelParams) -> np.ndarray:
    """Map parameters to the unconstrained proposal space.

    sigma2_u entries are log-transformed, lambda mapped through atanh and nu
    through log((nu - 4) / (200 - nu)); everything else is the identity.
    """
    x = natural_vector(p)
    s2_idx, nu_idx, lam_idx = _transform_spec(p.n_measures, type(p.dist))
    z = x.copy()
    for i in s2_idx:
        z[i] = math.log(x[i])
    if nu_idx is not None:
        z[nu_idx] = math.log((x[nu_idx] - NU_LOW) / (NU_HIGH - x[nu_idx]))
    if lam_idx is not None:
        z[lam_idx] = math.atanh(x[lam_idx])
    return z


def unconstrained_to_natural(z: np.ndarray, n_meas: int, dist_kind: type) -> np.ndarray:
    s2_idx, nu_idx, lam_idx = _transform_spec(n_meas, dist_kind)
    x = np.asarray(z, dtype=float).copy()
    for i in s2_idx:
        x[i] = math.exp(x[i])
    if nu_idx is not None:
        x[nu_idx] = NU_LOW + (NU_HIGH - NU_LOW) / (1.0 + math.exp(-x[nu_idx]))
    if lam_idx is not None:
        x[lam_idx] = math.tanh(x[lam_idx])
    return x


def unpack(z: np.ndarray, n_meas: int, dist_kind: type) -> ModelParams:
    """Inverse of :func:`pack`."""
    z = np.asarray(z, dtype=float)
    if z.shape[0] != n_params(n_meas, dist_kind):
        raise ValueError(
            f"expected vector of length {n_params(n_meas, dist_kind)}, got {z.shape[0]}"
        )
    return params_from_natural(unconstrained_to_natural(z, n_meas, dist_kind), n_meas, dist_kind)


def log_jacobian(z: np.ndarray, n_meas: int, dist_kind: type) -> float:
    """log |d natural / d unconstrained| of the pack transform at z."""
    s2_idx, nu_idx, lam_idx = _transform_spec(n_meas, dist_kind)
    total = 0.0
    for i in s2_idx:
        total += z[i]
    if nu_idx is not None:
        nu = NU_LOW + (NU_HIGH - NU_LOW) / (1.0 + math.exp(-z[nu_idx]))
        total += math.log(nu - NU_LOW) + math.log(NU_HIGH - nu) - math.log(NU_HIGH - NU_LOW)
    if lam_idx is not None:
        lam = math.tanh(z[lam_idx])
        total += math.log1p(-lam * lam)
    return total


def stationarity_ok(p: ModelParams) -> bool:
    """True iff beta - gamma . phi < 1 (strict)."""
    return float(p.beta - p.gamma @ p.phi) < 1.0


def _aligned(r, x):
    r = np.asarray(r, dtype=float)
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] != r.shape[0]:
        raise ValueError("returns and measures must cover the same days")
    return r, x


def filter_model(p: ModelParams, r, x, log_h0: float) -> FilterOutput:
    """Run the variance filter over aligned returns and measure levels."""
    r, x = _aligned(r, x)
    if x.shape[1] != p.n_measures:
        raise ValueError("measure panel width must match the parameter set")
    n = r.shape[0]
    k = p.n_measures
    log_h = np.empty(n)
    eps = np.empty(n)
    u = np.empty((n, k))
    theta = natural_vector(p)
    fail = _kernels.filter_paths(theta, k, r, np.log(x), float(log_h0), log_h, eps, u)
    if fail >= 0:
        raise FilterDivergenceError(int(fail))
    return FilterOutput(log_h=log_h, eps=eps, u=u)


def log_likelihood(p: ModelParams, r, x, log_h0: float) -> float:
    """Joint log-likelihood; -inf when the parameter region is violated."""
    r, x = _aligned(r, x)
    if x.shape[1] != p.n_measures:
        raise ValueError("measure panel width must match the parameter set")
    if np.any(p.sigma2_u <= 0.0) or not stationarity_ok(p):
        return NEG_INF
    if isinstance(p.dist, (StudentT, SkewT)) and not NU_LOW < p.dist.nu < NU_HIGH:
        return NEG_INF
    return log_likelihood_natural(
        natural_vector(p), p.n_measures, dists.dist_code(p.dist), r, np.log(x), float(log_h0)
    )


def log_likelihood_natural(theta, n_meas, code, r, logx, log_h0) -> float:
    """Kernel-level likelihood on a prevalidated natural vector."""
    return float(_kernels.loglik(theta, n_meas, code, r, logx, log_h0))


def default_log_h0(r) -> float:
    """Variance-targeting initial log h: log of the sample return variance."""
    v = float(np.var(np.asarray(r, dtype=float)))
    if v <= 0.0:
        raise ValueError("returns have zero variance; cannot initialize the filter")
    return math.log(v)


def simulate(p: ModelParams, n: int, seed: int, h0: float = 0.0025) -> SimulatedData:
    """Simulate n days of returns and measures from the model.

    Return shocks are drawn by inverse-CDF of the error distribution so the
    same uniform stream reproduces paths across distributions; measurement
    errors are Gaussian. Deterministic per seed.
    """
    if not stationarity_ok(p):
        raise ValueError("refusing to simulate from a non-stationary parameter set")
    if n < 1:
        raise ValueError("need at least one day")
    k = p.n_measures
    rng = np.random.default_rng(seed)
    eps = dists.quantile(p.dist, rng.uniform(size=n))
    eps = np.atleast_1d(np.asarray(eps, dtype=float))
    noise = rng.standard_normal((n, k)) * np.sqrt(p.sigma2_u)
    r = np.empty(n)
    logx = np.empty((n, k))
    h = np.empty(n)
    theta = natural_vector(p)
    fail = _kernels.simulate_paths(theta, k, eps, noise, math.log(h0), r, logx, h)
    if fail >= 0:
        raise FilterDivergenceError(int(fail))
    return SimulatedData(returns=r, measures=np.exp(logx), h=h, seed=seed)


def paper_dgp_params() -> ModelParams:
    """Single-measure skewed-t generating process used by the recovery tests."""
    return ModelParams(
        mu=0.0,
        omega=-0.12,
        beta=0.98,
        tau1=-0.12,
        tau2=0.04,
        gamma=np.array([0.47]),
        xi=np.array([-0.17]),
        phi=np.array([0.94]),
        delta1=np.array([-0.09]),
        delta2=np.array([0.06]),
        sigma2_u=np.array([0.15]),
        dist=SkewT(4.4, 0.5),
    )

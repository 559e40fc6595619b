"""Hot inner loops: realized EGARCH filtering, likelihood, simulation.

The recursions here are sequential in time and dominate runtime inside the
samplers, so they are compiled with numba when available. Setting the
environment variable ``REGARCH_NO_NUMBA=1`` (before import) selects the plain
NumPy/Python fallbacks, which run the identical source uncompiled.

All kernels operate on the flat natural-scale parameter vector described in
:mod:`regarch.model` (layout: mu, omega, beta, tau1, tau2, gamma[0..K-1],
then per measure (xi, phi, delta1, delta2, sigma2_u), then distribution
parameters). Distribution codes: 0 = normal, 1 = Student-t, 2 = skewed t.
"""

from __future__ import annotations

import math
import os

import numpy as np

__all__ = [
    "NUMBA_ENABLED",
    "filter_paths",
    "loglik",
    "simulate_paths",
    "next_log_variance_batch",
]

LOG_2PI = math.log(2.0 * math.pi)

# |log h| beyond this is treated as a diverged variance path.
_LOG_H_LIMIT = 690.0

DIST_NORMAL = 0
DIST_STUDENT_T = 1
DIST_SKEW_T = 2


def _numba_requested() -> bool:
    if os.environ.get("REGARCH_NO_NUMBA", "").strip().lower() in ("1", "true", "yes"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


NUMBA_ENABLED = _numba_requested()


def _maybe_jit(fn):
    if NUMBA_ENABLED:
        from numba import njit

        return njit(cache=True)(fn)
    return fn


@_maybe_jit
def filter_paths(theta, n_meas, r, logx, log_h0, log_h, eps, u):
    """Run the variance recursion, filling log_h, eps and u in place.

    Returns -1 on success, or the first time index where the path left the
    représentable range (divergence).
    """
    n = r.shape[0]
    mu = theta[0]
    omega = theta[1]
    beta = theta[2]
    tau1 = theta[3]
    tau2 = theta[4]
    for t in range(n):
        if t == 0:
            lh = log_h0
        else:
            e_prev = eps[t - 1]
            lh = omega + beta * log_h[t - 1] + tau1 * e_prev + tau2 * (e_prev * e_prev - 1.0)
            for k in range(n_meas):
                lh += theta[5 + k] * u[t - 1, k]
        if not math.isfinite(lh) or abs(lh) > _LOG_H_LIMIT:
            return t
        log_h[t] = lh
        e = (r[t] - mu) * math.exp(-0.5 * lh)
        eps[t] = e
        for k in range(n_meas):
            base = 5 + n_meas + 5 * k
            u[t, k] = (
                logx[t, k]
                - theta[base]
                - theta[base + 1] * lh
                - theta[base + 2] * e
                - theta[base + 3] * (e * e - 1.0)
            )
    return -1


@_maybe_jit
def loglik(theta, n_meas, dist_code, r, logx, log_h0):
    """One-pass joint log-likelihood (return + measurement equations).

    Returns -inf when the variance path diverges or the skew constants are
    outside their numeric domain. Parameter-region checks (stationarity,
    positivity) belong to the caller.
    """
    n = r.shape[0]
    mu = theta[0]
    omega = theta[1]
    beta = theta[2]
    tau1 = theta[3]
    tau2 = theta[4]

    # Distribution constants, computed once.
    nu = 0.0
    lam = 0.0
    log_const = -0.5 * LOG_2PI
    a = 0.0
    b = 1.0
    if dist_code == 1:
        nu = theta[5 + 6 * n_meas]
        log_const = (
            math.lgamma(0.5 * (nu + 1.0))
            - math.lgamma(0.5 * nu)
            - 0.5 * math.log((nu - 2.0) * math.pi)
        )
    elif dist_code == 2:
        nu = theta[5 + 6 * n_meas]
        lam = theta[5 + 6 * n_meas + 1]
        c = math.exp(math.lgamma(0.5 * (nu + 1.0)) - math.lgamma(0.5 * nu)) / math.sqrt(
            math.pi * (nu - 2.0)
        )
        a = 4.0 * lam * c * (nu - 2.0) / (nu - 1.0)
        b2 = 1.0 + 3.0 * lam * lam - a * a
        if b2 <= 0.0:
            return -np.inf
        b = math.sqrt(b2)
        log_const = math.log(b * c)

    meas_const = 0.0
    for k in range(n_meas):
        s2 = theta[5 + n_meas + 5 * k + 4]
        if s2 <= 0.0:
            return -np.inf
        meas_const += math.log(s2)
    meas_const = -0.5 * (n_meas * LOG_2PI + meas_const)

    total = 0.0
    lh = log_h0
    e_prev = 0.0
    u_prev = np.zeros(n_meas)
    for t in range(n):
        if t > 0:
            lh_new = omega + beta * lh + tau1 * e_prev + tau2 * (e_prev * e_prev - 1.0)
            for k in range(n_meas):
                lh_new += theta[5 + k] * u_prev[k]
            lh = lh_new
        if not math.isfinite(lh) or abs(lh) > _LOG_H_LIMIT:
            return -np.inf
        e = (r[t] - mu) * math.exp(-0.5 * lh)

        if dist_code == 0:
            total += log_const - 0.5 * (lh + e * e)
        elif dist_code == 1:
            total += log_const - 0.5 * lh - 0.5 * (nu + 1.0) * math.log1p(
                e * e / (nu - 2.0)
            )
        else:
            if e < -a / b:
                w = (b * e + a) / (1.0 - lam)
            else:
                w = (b * e + a) / (1.0 + lam)
            total += log_const - 0.5 * lh - 0.5 * (nu + 1.0) * math.log1p(
                w * w / (nu - 2.0)
            )

        total += meas_const
        for k in range(n_meas):
            base = 5 + n_meas + 5 * k
            uk = (
                logx[t, k]
                - theta[base]
                - theta[base + 1] * lh
                - theta[base + 2] * e
                - theta[base + 3] * (e * e - 1.0)
            )
            total -= 0.5 * uk * uk / theta[base + 4]
            u_prev[k] = uk
        e_prev = e
    if not math.isfinite(total):
        return -np.inf
    return total


@_maybe_jit
def simulate_paths(theta, n_meas, eps, noise, log_h0, r_out, logx_out, h_out):
    """Generate return/measure paths from pre-drawn shocks.

    eps holds the standardized return shocks, noise the measurement errors
    (already scaled by their standard deviations). Returns -1 on success or
    the index of divergence.
    """
    n = eps.shape[0]
    mu = theta[0]
    omega = theta[1]
    beta = theta[2]
    tau1 = theta[3]
    tau2 = theta[4]
    lh = log_h0
    for t in range(n):
        if t > 0:
            e_prev = eps[t - 1]
            lh_new = omega + beta * lh + tau1 * e_prev + tau2 * (e_prev * e_prev - 1.0)
            for k in range(n_meas):
                lh_new += theta[5 + k] * noise[t - 1, k]
            lh = lh_new
        if not math.isfinite(lh) or abs(lh) > _LOG_H_LIMIT:
            return t
        h_out[t] = math.exp(lh)
        e = eps[t]
        r_out[t] = mu + math.sqrt(h_out[t]) * e
        for k in range(n_meas):
            base = 5 + n_meas + 5 * k
            logx_out[t, k] = (
                theta[base]
                + theta[base + 1] * lh
                + theta[base + 2] * e
                + theta[base + 3] * (e * e - 1.0)
                + noise[t, k]
            )
    return -1


@_maybe_jit
def next_log_variance_batch(thetas, n_meas, r, logx, log_h0, out):
    """Filter each parameter draw through the data window and emit log h of
    the next (unobserved) day. Diverged draws get NaN. Returns the number of
    diverged draws."""
    m = thetas.shape[0]
    n = r.shape[0]
    failures = 0
    for i in range(m):
        mu = thetas[i, 0]
        omega = thetas[i, 1]
        beta = thetas[i, 2]
        tau1 = thetas[i, 3]
        tau2 = thetas[i, 4]
        lh = log_h0
        e = 0.0
        ok = True
        u_last = np.zeros(n_meas)
        for t in range(n):
            if t > 0:
                lh_new = omega + beta * lh + tau1 * e + tau2 * (e * e - 1.0)
                for k in range(n_meas):
                    lh_new += thetas[i, 5 + k] * u_last[k]
                lh = lh_new
            if not math.isfinite(lh) or abs(lh) > _LOG_H_LIMIT:
                ok = False
                break
            e = (r[t] - mu) * math.exp(-0.5 * lh)
            for k in range(n_meas):
                base = 5 + n_meas + 5 * k
                u_last[k] = (
                    logx[t, k]
                    - thetas[i, base]
                    - thetas[i, base + 1] * lh
                    - thetas[i, base + 2] * e
                    - thetas[i, base + 3] * (e * e - 1.0)
                )
        if not ok:
            out[i] = np.nan
            failures += 1
            continue
        lh_next = omega + beta * lh + tau1 * e + tau2 * (e * e - 1.0)
        for k in range(n_meas):
            lh_next += thetas[i, 5 + k] * u_last[k]
        if not math.isfinite(lh_next) or abs(lh_next) > _LOG_H_LIMIT:
            out[i] = np.nan
            failures += 1
        else:
            out[i] = lh_next
    return failures

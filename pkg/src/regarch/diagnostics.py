"""Multi-chain convergence diagnostics: Gelman-Rubin R-hat, effective sample
size, and autocorrelation time.

The effective sample size uses chain-averaged autocorrelations with the
initial-positive-sequence truncation, so act * n_eff = m * n holds exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DiagnosticsReport",
    "gelman_rubin",
    "effective_sample_size",
    "autocorrelation_time",
    "report",
]

RHAT_THRESHOLD = 1.1


@dataclass(frozen=True)
class DiagnosticsReport:
    param_names: list[str]
    r_hat: np.ndarray | None
    n_eff: np.ndarray
    act: np.ndarray
    degenerate: list[str] = field(default_factory=list)

    @property
    def r_hat_flags(self) -> list[str]:
        if self.r_hat is None:
            return []
        return [n for n, r in zip(self.param_names, self.r_hat) if r > RHAT_THRESHOLD]

    def to_dict(self) -> dict:
        out = {"parameters": list(self.param_names)}
        if self.r_hat is not None:
            out["r_hat"] = [float(v) for v in self.r_hat]
            out["r_hat_above_threshold"] = self.r_hat_flags
        out["n_eff"] = [float(v) for v in self.n_eff]
        out["autocorrelation_time"] = [float(v) for v in self.act]
        if self.degenerate:
            out["degenerate"] = self.degenerate
        return out


def _as_chains(chains) -> np.ndarray:
    arr = np.asarray(chains, dtype=float)
    if arr.ndim != 2:
        raise ValueError("expected a (chains, draws) array for one parameter")
    return arr


def gelman_rubin(chains) -> float:
    """Classic potential-scale-reduction factor for one parameter.

    Returns NaN for degenerate (zero within-chain variance) input.
    """
    arr = _as_chains(chains)
    m, n = arr.shape
    if m < 2:
        raise ValueError("need at least two chains")
    if n < 10:
        raise ValueError("need at least ten draws per chain")
    w = float(np.mean(np.var(arr, axis=1, ddof=1)))
    if w == 0.0:
        return math.nan
    b_over_n = float(np.var(np.mean(arr, axis=1), ddof=1))
    var_plus = (n - 1) / n * w + b_over_n
    return math.sqrt(var_plus / w)


def _autocov(x: np.ndarray) -> np.ndarray:
    n = x.shape[0]
    xc = x - x.mean()
    f = np.fft.rfft(xc, 2 * n)
    acov = np.fft.irfft(f * np.conjugate(f))[:n]
    return acov / n


def _tau(rho: np.ndarray) -> float:
    # Initial-positive-sequence: accumulate consecutive lag pairs while their
    # sum stays positive; tau = 2 * sum - 1 (rho[0] = 1), floored at 1.
    total = 0.0
    k = 0
    while 2 * k + 1 < rho.shape[0]:
        pair = rho[2 * k] + rho[2 * k + 1]
        if pair <= 0.0:
            break
        total += pair
        k += 1
    return max(2.0 * total - 1.0, 1.0)


def effective_sample_size(chains) -> float:
    """Multi-chain effective sample size m*n / (1 + 2 sum rho_k)."""
    arr = np.asarray(chains, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    m, n = arr.shape
    if n < 50:
        raise ValueError("need at least fifty draws")
    w = float(np.mean(np.var(arr, axis=1, ddof=1)))
    if w == 0.0:
        return math.nan
    if m > 1:
        b_over_n = float(np.var(np.mean(arr, axis=1), ddof=1))
    else:
        b_over_n = 0.0
    var_plus = (n - 1) / n * w + b_over_n
    mean_acov = np.mean([_autocov(arr[j]) for j in range(m)], axis=0)
    rho = 1.0 - (w - mean_acov) / var_plus
    rho[0] = 1.0
    return m * n / _tau(rho)


def autocorrelation_time(chain) -> float:
    """Integrated autocorrelation time of a single chain."""
    arr = np.asarray(chain, dtype=float)
    if arr.ndim != 1:
        raise ValueError("expected a single 1-d chain")
    n_eff = effective_sample_size(arr[None, :])
    if math.isnan(n_eff):
        return math.nan
    return arr.shape[0] / n_eff


def report(draws: np.ndarray, param_names: list[str]) -> DiagnosticsReport:
    """Per-parameter diagnostics over an (m, n, p) draw stack."""
    draws = np.asarray(draws, dtype=float)
    if draws.ndim != 3:
        raise ValueError("expected (chains, draws, parameters)")
    m, n, p = draws.shape
    if len(param_names) != p:
        raise ValueError("parameter-name count mismatch")
    r_hat = np.empty(p) if m >= 2 else None
    n_eff = np.empty(p)
    act = np.empty(p)
    degenerate = []
    for j in range(p):
        block = draws[:, :, j]
        if m >= 2:
            r_hat[j] = gelman_rubin(block)
        n_eff[j] = effective_sample_size(block)
        act[j] = m * n / n_eff[j] if n_eff[j] > 0 else math.nan
        if math.isnan(n_eff[j]):
            degenerate.append(param_names[j])
    return DiagnosticsReport(
        param_names=list(param_names), r_hat=r_hat, n_eff=n_eff, act=act, degenerate=degenerate
    )

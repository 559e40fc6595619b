"""Bayesian realized EGARCH volatility models with tail-risk forecasting.

Subpackages cover intraday data handling, realized volatility measures,
standardized error distributions, model filtering and simulation, maximum
likelihood and adaptive-MCMC estimation, rolling VaR/ES forecasting, backtest
statistics, and the model confidence set.
"""

from ._kernels import NUMBA_ENABLED

__all__ = ["NUMBA_ENABLED"]
__version__ = "0.1.0"

"""Special functions used by the partition laws (thin scipy wrappers)."""

import math

import numpy as np
from scipy import special as _sp

__all__ = ["log_gamma", "digamma", "trigamma", "zeta", "logsumexp", "log_binom"]

log_gamma = math.lgamma
logsumexp = _sp.logsumexp


def digamma(x):
    return _sp.digamma(x)


def trigamma(x):
    return _sp.polygamma(1, x)


def zeta(s):
    """Riemann zeta for real ``s > 1``."""
    if not s > 1:
        raise ValueError(f"zeta(s) needs s > 1, got {s}")
    return float(_sp.zeta(s, 1))


def log_binom(n, k):
    """``log C(n, k)`` through log-gamma; vectorises over arrays."""
    if np.ndim(n) or np.ndim(k):
        n = np.asarray(n, dtype=np.float64)
        k = np.asarray(k, dtype=np.float64)
        return _sp.gammaln(n + 1) - _sp.gammaln(k + 1) - _sp.gammaln(n - k + 1)
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)

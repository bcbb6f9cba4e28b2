"""Exact and approximate probability laws on random partitions.

Covers the Chinese restaurant distribution (CRD) over partitions, the law
of the partition size ``M`` given ``N``, its mean and variance, series
upper bounds on ``E[M]``, the Dirichlet-multinomial comparison model and
the evidence of data drawn with a non-atomic base.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy import integrate

from .core import PdParams, SizeBiasedPartition, log_crp_ratio, log_pochhammer, log_pochhammer_inc
from .errors import CoverageError, InvalidParameterError, PdpError
from .special import digamma, logsumexp, trigamma, zeta
from .stirling import LogStirlingTable, build_log_table

__all__ = [
    "crd_log_prob",
    "partition_size_pmf",
    "partition_size_log_pmf",
    "expected_M",
    "var_M",
    "approx_expected_M",
    "approx_var_M",
    "expected_M_oracle",
    "expected_M_geometric",
    "expected_M_zeta",
    "geometric_bound",
    "dirichlet_series_bound",
    "dirichlet_multinomial_log_prob",
    "evidence_nonatomic",
    "PMF_DRIFT_TOL",
]

PMF_DRIFT_TOL = 1e-6

# above this many items the moments switch from exact sums to closed forms
RECURSION_MAX_N = 2_000_000


class TableCorruptionError(PdpError):
    """Partition-size pmf failed to normalise; the Stirling table is wrong or too small."""


def crd_log_prob(partition: SizeBiasedPartition, params: PdParams) -> float:
    """Log probability of a partition under CRD(a, b).

    ``(b|a)_M / (b)_N * prod_m (1 - a)_{n_m - 1}``, which at ``a = 0`` is
    ``b^M / (b)_N * prod_m (n_m - 1)!``.
    """
    if not isinstance(partition, SizeBiasedPartition):
        raise InvalidParameterError("crd_log_prob needs a SizeBiasedPartition")
    a, b = params.a, params.b
    out = log_crp_ratio(partition.M, partition.N, a, b)
    for n in partition.counts:
        out += log_pochhammer(1.0 - a, n - 1)
    return out


def _log_ratio_row(N: int, a: float, b: float) -> np.ndarray:
    # log((b|a)_M / (b)_N) for M = 1..N, with the shared factor b cancelled
    i = np.arange(1, N, dtype=np.float64)
    head = np.concatenate(([0.0], np.cumsum(np.log(b + a * i))))
    return head - log_pochhammer_inc(b + 1.0, 1.0, N - 1)


def partition_size_log_pmf(
    N: int, params: PdParams, table: LogStirlingTable | None = None, normalise: bool = True
) -> np.ndarray:
    """``log p(M | N)`` for ``M = 1..N`` (``-inf`` beyond the table).

    With ``normalise=False`` the raw terms are returned unchecked, which
    exposes the rounding drift of the Stirling table.
    """
    N = int(N)
    if N < 1:
        raise InvalidParameterError(f"N={N} must be at least 1")
    a, b = params.a, params.b
    if table is None:
        table = build_log_table(a, N, t_max=N)
    elif table.a != a:
        raise InvalidParameterError(f"table built for a={table.a}, need a={a}")
    elif table.n_max < N:
        raise CoverageError(N, 1, f"table n_max={table.n_max}")
    top = min(N, table.t_cap)
    logS = table.row(N)[1 : top + 1]
    logp = np.full(N, -np.inf)
    logp[:top] = _log_ratio_row(N, a, b)[:top] + logS
    if not normalise:
        return logp
    total = float(logsumexp(logp))
    if not abs(math.expm1(total)) <= PMF_DRIFT_TOL:
        raise TableCorruptionError(
            f"partition-size pmf for N={N} sums to {math.exp(total):.12g}"
        )
    return logp - total


def partition_size_pmf(N: int, params: PdParams, table: LogStirlingTable | None = None) -> np.ndarray:
    """``p(M | N, a, b) = (b|a)_M / (b)_N * S^N_{M,a}`` for ``M = 1..N``.

    Entry ``M - 1`` holds ``p(M)``.  Computed in log space and normalised;
    a pre-normalisation drift above ``PMF_DRIFT_TOL`` raises.
    """
    return np.exp(partition_size_log_pmf(N, params, table))


def _log_poch_ratio(x: float, N: int, b: float) -> float:
    # log((x)_N / (b + 1)_{N-1})
    return log_pochhammer(x, N) - log_pochhammer(b + 1.0, N - 1)


def expected_M(params: PdParams, N: int) -> float:
    """Mean number of blocks in a CRD(a, b) partition of ``N`` items."""
    a, b, N = params.a, params.b, int(N)
    if N < 1:
        raise InvalidParameterError(f"N={N} must be at least 1")
    if a == 0.0:
        if N <= RECURSION_MAX_N:
            return math.fsum(b / (b + np.arange(N, dtype=np.float64)))
        return float(b * (digamma(b + N) - digamma(b)))
    if N <= RECURSION_MAX_N:
        return _moments_by_recursion(a, b, N)[0]
    if b > 0.0:
        # (b/a) ((b+a)_N/(b)_N - 1) with the ratio as a sum of log1p terms
        i = np.arange(N, dtype=np.float64)
        return float(b / a * math.expm1(math.fsum(np.log1p(a / (b + i)))))
    return math.exp(_log_poch_ratio(b + a, N, b)) / a - b / a


def _moments_by_recursion(a: float, b: float, N: int) -> tuple[float, float]:
    # Item n+1 opens a block with probability q = (b + a M_n)/(b + n), so
    #   E_{n+1} = E_n (1 + a/(b+n)) + b/(b+n)
    #   V_{n+1} = V_n (1 + 2a/(b+n)) + qbar (1 - qbar),  qbar = E[q]
    # starting from E_1 = 1, V_1 = 0.  Every variance term is nonnegative.
    if N == 1:
        return 1.0, 0.0
    n = np.arange(1, N, dtype=np.float64)
    G = np.concatenate(([0.0], np.cumsum(np.log1p(a / (b + n)))))
    E = np.exp(G) * (1.0 + np.concatenate(([0.0], np.cumsum(b / (b + n) * np.exp(-G[1:])))))
    En = E[:-1]
    d = (b + a * En) * (n - a * En) / (b + n) ** 2
    H = np.concatenate(([0.0], np.cumsum(np.log1p(2 * a / (b + n)))))
    V = math.fsum(d * np.exp(H[-1] - H[1:]))
    return float(E[-1]), V


def var_M(params: PdParams, N: int) -> float:
    """Variance of the number of blocks in a CRD(a, b) partition of ``N`` items.

    Up to ``RECURSION_MAX_N`` items this sums the exact one-item-at-a-time
    recursion, which has no cancellation.  Beyond that the closed forms are
    used; they subtract terms of size ``(b/a)^2`` and lose accuracy when
    ``a`` is tiny.
    """
    a, b, N = params.a, params.b, int(N)
    if N < 1:
        raise InvalidParameterError(f"N={N} must be at least 1")
    if N <= RECURSION_MAX_N:
        return _moments_by_recursion(a, b, N)[1]
    if a == 0.0:
        e = b * (digamma(b + N) - digamma(b))
        return float(e + b * b * (trigamma(b + N) - trigamma(b)))
    first = math.exp(_log_poch_ratio(b + a, N, b)) / a          # (b/a)(b+a)_N/(b)_N
    second = (a + b) / a * math.exp(_log_poch_ratio(b + 2 * a, N, b)) / a
    return second - first - first * first


def approx_expected_M(params: PdParams, N: int) -> float:
    """Large-sample approximation of :func:`expected_M`, good for ``N, b >> a``."""
    a, b = params.a, params.b
    if a == 0.0:
        return b * math.log1p(N / b)
    return b / a * (1 + N / b) ** a * math.exp(a * N / (2 * b * (b + N))) - b / a


def approx_var_M(params: PdParams, N: int) -> float:
    """Large-sample approximation of :func:`var_M`, good for ``N, b >> a``.

    For ``a > 0`` this is the leading ``(b/a) (1 + N/b)^(2a)`` term only; a
    neglected ``-b (1 + N/b)^(2a)`` term of the same order makes the
    relative error roughly ``a``.  For ``a = 0`` it is ``b log(1 + N/b)``,
    which overshoots by about ``b``.  Use :func:`var_M` when accuracy matters.
    """
    a, b = params.a, params.b
    if a == 0.0:
        return b * math.log1p(N / b)
    return b / a * (1 + N / b) ** (2 * a) * math.exp(a * N / (b * (b + N)))


def expected_M_oracle(q: Sequence[float], N: int) -> float:
    """Expected distinct indices among ``N`` i.i.d. draws from a finite ``q``.

    ``sum_k 1 - (1 - q_k)^N``.  Callers truncate infinite ``q`` themselves.
    """
    q = np.asarray(q, dtype=np.float64)
    with np.errstate(divide="ignore"):  # q_k = 1 gives log1p(-1) = -inf, which is exact
        return float(np.sum(-np.expm1(N * np.log1p(-q))))


def expected_M_geometric(r: float, N: int) -> float:
    """:func:`expected_M_oracle` for ``q_k = (1 - r) r^(k-1)``, summed until
    the neglected tail is below ``1e-14``."""
    if not 0 < r < 1:
        raise InvalidParameterError(f"need 0 < r < 1, got {r}")
    K = int(math.ceil((math.log(1e-14) - math.log(N)) / math.log(r))) + 1
    k = np.arange(K, dtype=np.float64)
    return expected_M_oracle((1 - r) * r**k, N)


def expected_M_zeta(s: float, N: int, direct_terms: int = 10**6) -> float:
    """:func:`expected_M_oracle` for ``q_k = k^(-s) / zeta(s)``.

    The first ``direct_terms`` terms are summed exactly; the rest by
    Euler-Maclaurin with the integral done by quadrature on a log scale.
    """
    if not s > 1:
        raise InvalidParameterError(f"need s > 1, got {s}")
    z = zeta(s)
    K = int(direct_terms)
    k = np.arange(1, K + 1, dtype=np.float64)
    head = expected_M_oracle(k**-s / z, N)

    def f(x):
        return -math.expm1(N * math.log1p(-(x**-s) / z))

    def fprime(x):
        q = x**-s / z
        return N * math.exp((N - 1) * math.log1p(-q)) * s * q / x

    log_scale = math.log(N) + (1 - s) * math.log(K) - math.log(z)

    def integrand(u):
        # f(x) x at x = K e^u, written as (f / (N q)) * N q x to avoid overflow
        q = math.exp(-s * (math.log(K) + u)) / z
        shrink = -math.expm1(N * math.log1p(-q)) / (N * q) if q > 1e-300 else 1.0
        return shrink * math.exp(log_scale + (1 - s) * u)

    integral, _ = integrate.quad(integrand, 0.0, math.inf, epsabs=0.0, epsrel=1e-12, limit=200)
    tail = integral - f(K) / 2 - fprime(K) / 12
    return head + tail


def geometric_bound(r: float, N: int) -> float:
    """Upper bound on ``E[M]`` for geometric ``q_k = (1 - r) r^(k-1)``.

    Valid when ``N log(1/r) >= 1``.  Below that the optimal cut-off used to
    derive it is negative and the value can undershoot (e.g. ``r = 0.95``,
    ``N = 10``).
    """
    if not 0 < r < 1:
        raise InvalidParameterError(f"need 0 < r < 1, got {r}")
    if N < 1:
        raise InvalidParameterError(f"N={N} must be at least 1")
    L = math.log(1 / r)
    return math.log(N) / L + (1 + 2 * L + math.log(L)) / L


def dirichlet_series_bound(s: float, N: int) -> float:
    """Upper bound on ``E[M]`` for ``q_k = k^(-s) / zeta(s)``."""
    if not s > 1:
        raise InvalidParameterError(f"need s > 1, got {s}")
    if N < 1:
        raise InvalidParameterError(f"N={N} must be at least 1")
    return 1.5 + s / (s - 1) * (N / zeta(s)) ** (1 / s)


def dirichlet_multinomial_log_prob(counts: Sequence[int], alpha: Sequence[float]) -> float:
    """``log[(1/(b)_N) prod_k (alpha_k)_{n_k}]`` with ``b = sum(alpha)``.

    Probability of one particular assignment sequence with these class
    counts under a Dirichlet-multinomial model.
    """
    counts = [int(c) for c in counts]
    alpha = [float(x) for x in alpha]
    if len(counts) != len(alpha):
        raise InvalidParameterError("counts and alpha differ in length")
    if any(x <= 0 for x in alpha) or any(c < 0 for c in counts):
        raise InvalidParameterError("alpha must be positive and counts nonnegative")
    out = -log_pochhammer(math.fsum(alpha), sum(counts))
    for c, x in zip(counts, alpha):
        out += log_pochhammer(x, c)
    return out


def evidence_nonatomic(
    partition: SizeBiasedPartition, base_log_values: Sequence[float], params: PdParams
) -> float:
    """Log evidence of data from a PDP with a non-atomic base.

    ``base_log_values[m]`` is ``log H(x*_m)`` for the ``m``-th distinct value
    in order of first appearance.
    """
    if len(base_log_values) != partition.M:
        raise InvalidParameterError(
            f"{len(base_log_values)} base values for {partition.M} blocks"
        )
    return crd_log_prob(partition, params) + math.fsum(base_log_values)

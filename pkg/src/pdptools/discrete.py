"""PDP evidence and moments when the base distribution is discrete.

With a discrete base several tables can serve the same value, so the
evidence is written in terms of latent table counts ``t_m`` per distinct
value, or per-item table indicators.  Also here: Gibbs updates for the
table counts, prior moments of the PDP weights over a finite support and
the moment-matched Dirichlet concentration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import IndicatorVector, MultiplicityVector, PdParams, SizeBiasedPartition, log_crp_ratio
from .errors import CoverageError, InvalidParameterError
from .samplers import BaseDistribution
from .special import log_binom
from .stirling import LogStirlingTable, StirlingRatioTable, build_log_table

__all__ = [
    "DiscreteBase",
    "PdpMoments",
    "evidence_multiplicities",
    "evidence_indicators",
    "multiplicity_law",
    "gibbs_resample_multiplicity",
    "pdp_moments",
    "dirichlet_moments",
    "dirichlet_equivalent_concentration",
    "power_sum_expectation",
]


class DiscreteBase(BaseDistribution):
    """Finite discrete base with labels and probabilities ``theta``."""

    atomic = True

    def __init__(self, theta: Sequence[float], labels: Sequence | None = None):
        theta = np.asarray(theta, dtype=np.float64)
        if theta.ndim != 1 or len(theta) == 0:
            raise InvalidParameterError("theta must be a nonempty vector")
        if np.any(theta <= 0) or abs(math.fsum(theta) - 1.0) > 1e-12:
            raise InvalidParameterError("theta must be positive and sum to 1")
        self.theta = theta
        self.labels = list(range(len(theta))) if labels is None else list(labels)
        if len(self.labels) != len(theta):
            raise InvalidParameterError("labels and theta differ in length")
        self._index = {lab: i for i, lab in enumerate(self.labels)}

    def sample(self, rng):
        return self.labels[int(rng.choice(len(self.theta), p=self.theta))]

    def log_mass(self, value) -> float:
        return math.log(self.theta[self._index[value]])


def _table_for(a, n_top, table):
    if table is None:
        return build_log_table(a, max(n_top, 1), t_max=max(n_top, 1))
    if table.a != a:
        raise InvalidParameterError(f"table built for a={table.a}, need a={a}")
    return table


def evidence_multiplicities(
    counts: Sequence[int],
    mult: MultiplicityVector | Sequence[int],
    base_log: Sequence[float],
    params: PdParams,
    table: LogStirlingTable | None = None,
) -> float:
    """Joint log probability of the data and the table counts.

    ``log[(b|a)_T / (b)_N * prod_m theta_m^{t_m} S^{n_m}_{t_m,a}]`` where
    ``counts`` are per-value occurrence counts ``n_m``, ``mult`` the table
    counts ``t_m`` and ``base_log[m] = log theta_m``.
    """
    if not isinstance(mult, MultiplicityVector):
        mult = MultiplicityVector(tuple(mult))
    counts = [int(c) for c in counts]
    mult.check_against(counts)
    if len(base_log) != len(counts):
        raise InvalidParameterError(f"{len(base_log)} base masses for {len(counts)} values")
    table = _table_for(params.a, max(counts), table)
    out = log_crp_ratio(mult.T, sum(counts), params.a, params.b)
    for n, t, lh in zip(counts, mult.t, base_log):
        out += t * lh + table.log_S(n, t)
    return out


def evidence_indicators(
    partition: SizeBiasedPartition,
    indicators: IndicatorVector | Sequence[int],
    base_log: Sequence[float],
    params: PdParams,
    table: LogStirlingTable | None = None,
) -> float:
    """Joint log probability of the data and per-item table indicators.

    ``partition`` groups items by data value (first-appearance order).  The
    indicators enter only through the implied table counts ``t_m``; each
    configuration carries ``1 / C(n_m, t_m)`` of the multiplicity evidence.
    """
    if not isinstance(indicators, IndicatorVector):
        indicators = IndicatorVector(tuple(indicators))
    mult = indicators.multiplicities(partition)
    out = evidence_multiplicities(partition.counts, mult, base_log, params, table)
    return out - math.fsum(log_binom(n, t) for n, t in zip(partition.counts, mult.t))


def _ratio(ratios: StirlingRatioTable, n, t):
    if n > ratios.n_max or t > ratios.t_cap:
        raise CoverageError(n, t, f"ratio table has n_max={ratios.n_max}, t_max={ratios.t_max}")
    return ratios.V(n, t)


def multiplicity_law(
    n_m: int, theta_m: float, params: PdParams, ratios: StirlingRatioTable, T_rest: int = 0
) -> np.ndarray:
    """Conditional law of ``t_m`` over ``1..n_m`` given the other tables.

    Proportional to ``theta^t S^{n}_{t} (b|a)_{T_rest + t}``; successive
    weights are chained through ``V`` ratios and normalised in log space.
    """
    n_m = int(n_m)
    if n_m < 1:
        raise InvalidParameterError(f"n_m={n_m} must be at least 1")
    a, b = params.a, params.b
    logw = np.zeros(n_m)
    for t in range(2, n_m + 1):
        step = theta_m * _ratio(ratios, n_m, t) * (b + (T_rest + t - 1) * a)
        logw[t - 1] = logw[t - 2] + (math.log(step) if step > 0 else -math.inf)
    logw -= logw.max()
    w = np.exp(logw)
    return w / w.sum()


def gibbs_resample_multiplicity(
    n_m: int,
    theta_m: float,
    params: PdParams,
    ratios: StirlingRatioTable,
    rng: np.random.Generator,
    mode: str = "full_scan",
    t_current: int | None = None,
    T_rest: int = 0,
) -> int:
    """One Gibbs update of the table count ``t_m`` for a value seen ``n_m`` times.

    ``full_scan`` draws ``t_m`` exactly from :func:`multiplicity_law`.
    ``indicator_step`` picks one of the ``n_m`` items at random (its
    indicator is set with probability ``t_m / n_m``), removes its indicator
    and redraws it from the conditional odds, which need only one ``V``
    ratio and no logs.  ``T_rest`` is the total table count of all other
    values.
    """
    n_m = int(n_m)
    if mode == "full_scan":
        law = multiplicity_law(n_m, theta_m, params, ratios, T_rest)
        return int(np.searchsorted(np.cumsum(law), rng.random() * law.sum(), side="right")) + 1
    if mode != "indicator_step":
        raise InvalidParameterError(f"unknown mode {mode!r}")
    if t_current is None or not 1 <= t_current <= n_m:
        raise InvalidParameterError(f"need 1 <= t_current <= n_m, got {t_current}")
    if n_m == 1:
        return 1
    t = int(t_current)
    u_pick, u_set = rng.random(2)
    has_table = u_pick * n_m < t
    if has_table and t == 1:
        return 1
    rest = t - 1 if has_table else t
    a, b = params.a, params.b
    odds = theta_m * (b + (T_rest + rest) * a) * _ratio(ratios, n_m, rest + 1) * (rest + 1) / (n_m - rest)
    return rest + 1 if u_set * (1.0 + odds) < odds else rest


@dataclass(frozen=True)
class PdpMoments:
    """Prior moments of the PDP weights on a finite support.

    ``covariance`` has the variances on its diagonal; ``third[i, j, k]`` is
    ``E[(p_i - theta_i)(p_j - theta_j)(p_k - theta_k)]``.
    """

    mean: np.ndarray
    variance: np.ndarray
    covariance: np.ndarray
    third: np.ndarray


def _moments(theta, s2, s3):
    theta = np.asarray(theta, dtype=np.float64)
    cov = -s2 * np.outer(theta, theta)
    np.fill_diagonal(cov, s2 * theta * (1 - theta))
    K = len(theta)
    third = 2 * s3 * np.einsum("i,j,k->ijk", theta, theta, theta)
    for i in range(K):
        for j in range(K):
            if i == j:
                continue
            pair = s3 * (2 * theta[i] - 1) * theta[i] * theta[j]
            third[i, i, j] = third[i, j, i] = third[j, i, i] = pair
        third[i, i, i] = s3 * theta[i] * (1 - theta[i]) * (1 - 2 * theta[i])
    return PdpMoments(theta.copy(), np.diag(cov).copy(), cov, third)


def pdp_moments(theta: Sequence[float], params: PdParams) -> PdpMoments:
    """Mean, variance, covariance and third central moments of ``p ~ PDP(a, b, theta)``."""
    return _moments(theta, power_sum_expectation(params, 2), power_sum_expectation(params, 3))


def dirichlet_moments(theta: Sequence[float], alpha: float) -> PdpMoments:
    """The same moments for ``Dirichlet(alpha * theta)``."""
    if not alpha > 0:
        raise InvalidParameterError(f"alpha={alpha} must be positive")
    return _moments(theta, 1 / (alpha + 1), 2 / ((alpha + 1) * (alpha + 2)))


def dirichlet_equivalent_concentration(params: PdParams) -> float:
    """``(a + b) / (1 - a)``: the Dirichlet concentration with matching
    first and second moments (exactly ``b`` when ``a = 0``)."""
    return (params.a + params.b) / (1.0 - params.a)


def power_sum_expectation(params: PdParams, order: int) -> float:
    """``E[sum_k p_k^r] = prod_{i<r} (i - a) / prod_{i<r} (i + b)`` for GEM/PDD weights."""
    r = int(order)
    if r < 1:
        raise InvalidParameterError(f"order={order} must be at least 1")
    a, b = params.a, params.b
    out = 1.0
    for i in range(1, r):
        out *= (i - a) / (i + b)
    return out

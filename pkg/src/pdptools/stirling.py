"""Generalized Stirling numbers ``S^n_{t,a}`` of type ``(-1, -a, 0)``.

``S^n_{t,a}`` is the combinatorial weight of partitions of ``n`` items into
``t`` blocks under discount ``a``; at ``a = 0`` it is the unsigned Stirling
number of the first kind.  They satisfy

    S^{n+1}_t = S^n_{t-1} + (n - t a) S^n_t,   S^n_t = 0 for t > n,   S^n_0 = [n == 0].

Four routes are provided: a log-space table filled by the linear recursion
(optionally striped to save memory), the explicit alternating sum for small
``t``, the large-``n`` asymptotic form, and a table of ratios
``V^n_t = S^n_t / S^n_{t-1}`` filled without any transcendental calls.
"""

from __future__ import annotations

import io
import math
import os
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .core import signed_log_pochhammer_inc
from .errors import (
    CoverageError,
    DegeneratePochhammerError,
    InvalidParameterError,
    ResourceCapError,
)

__all__ = [
    "LogStirlingTable",
    "StirlingRatioTable",
    "StirlingAccuracyWarning",
    "build_log_table",
    "build_ratio_table",
    "stirling_explicit",
    "stirling_asymptotic",
    "mult_recursion_check",
    "DENSE_T",
    "EXPLICIT_MAX_M",
]

DENSE_T = 64
EXPLICIT_MAX_M = 25
DEFAULT_T_MAX = 1000
ASYMPTOTIC_WARN_RATIO = 0.1


def default_memory_cap() -> int:
    """Bytes a single table may occupy; ``PDPTOOLS_MEMORY_CAP`` overrides."""
    return int(float(os.environ.get("PDPTOOLS_MEMORY_CAP", 2 * 1024**3)))


class StirlingAccuracyWarning(UserWarning):
    """Asymptotic form used outside its accuracy domain."""


def _check_discount(a):
    a = float(a)
    if not (math.isfinite(a) and 0.0 <= a < 1.0):
        raise InvalidParameterError(f"discount a={a} outside [0, 1)")
    return a


@dataclass(frozen=True, eq=False)
class LogStirlingTable:
    """Cached ``log S^n_{t,a}`` for ``0 <= n <= n_max`` and ``t <= min(n, t_max)``.

    With ``stripe = L > 1`` only columns ``t <= DENSE_T`` are kept for every
    row; higher columns are kept on rows ``n`` divisible by ``L`` and any
    other coordinate is rebuilt by running the recursion forward from the
    nearest stored row below.  ``log S = -inf`` encodes ``S = 0``.
    """

    a: float
    n_max: int
    t_max: int
    stripe: int
    _rows: np.ndarray = field(repr=False)
    _dense: np.ndarray | None = field(repr=False, default=None)

    @property
    def t_cap(self) -> int:
        return min(self.n_max, self.t_max)

    @property
    def dense_t(self) -> int:
        return self.t_cap if self.stripe == 1 else min(DENSE_T, self.t_cap)

    @property
    def nbytes(self) -> int:
        return self._rows.nbytes + (0 if self._dense is None else self._dense.nbytes)

    def is_stored(self, n: int, t: int) -> bool:
        return (
            0 <= n <= self.n_max
            and 0 <= t <= self.t_cap
            and (self.stripe == 1 or t <= self.dense_t or n % self.stripe == 0)
        )

    def _stored(self, n, t):
        if self.stripe == 1:
            return float(self._rows[n, t])
        if t <= self.dense_t:
            return float(self._dense[n, t])
        return float(self._rows[n // self.stripe, t])

    def log_S(self, n: int, t: int) -> float:
        """``log S^n_{t,a}``; ``-inf`` when ``S`` is zero."""
        n, t = int(n), int(t)
        if n < 0 or t < 0:
            raise InvalidParameterError(f"negative index (n={n}, t={t})")
        if t > n:
            return -math.inf
        if n > self.n_max:
            raise CoverageError(n, t, f"n_max={self.n_max}")
        if t > self.t_cap:
            raise CoverageError(n, t, f"t_max={self.t_max}")
        if self.is_stored(n, t):
            return self._stored(n, t)
        return self._reconstruct(n, t)

    def S(self, n: int, t: int) -> float:
        return math.exp(self.log_S(n, t))

    def _reconstruct(self, n, t):
        # forward recursion over the triangle below (n, t) from stored row n0;
        # columns below zero are padding fixed at -inf
        n0 = n - n % self.stripe
        depth = n - n0
        lo = t - depth
        window = [self._stored(n0, s) if s >= 0 else -math.inf for s in range(lo, t + 1)]
        a = self.a
        for step in range(depth):
            m = n0 + step
            start = lo + step + 1
            window = [
                _log_step(window[i], window[i + 1], m - s * a) if s > 0 else -math.inf
                for i, s in enumerate(range(start, t + 1))
            ]
        return window[-1]

    def row(self, n: int) -> np.ndarray:
        """``log S^n_t`` for ``t = 0..min(n, t_cap)``."""
        top = min(int(n), self.t_cap)
        if self.stripe == 1:
            return self._rows[n, : top + 1].copy()
        return np.array([self.log_S(n, t) for t in range(top + 1)])

    def to_csv(self, fh=None) -> str | None:
        """Stored entries as ``n,t,log_S`` rows with 17 significant digits."""
        out = io.StringIO() if fh is None else fh
        out.write("n,t,log_S\n")
        for n in range(self.n_max + 1):
            for t in range(min(n, self.t_cap) + 1):
                if self.is_stored(n, t):
                    out.write(f"{n},{t},{_g17(self._stored(n, t))}\n")
        return out.getvalue() if fh is None else None


def _g17(x: float) -> str:
    if math.isinf(x):
        return "-inf" if x < 0 else "inf"
    return f"{x:.17g}"


def _log_step(prev, same, coef):
    if same == -math.inf:
        return prev
    d = prev - same
    if d > 0:
        return prev + math.log1p(coef * math.exp(-d))
    return same + math.log(math.exp(d) + coef)


def build_log_table(
    a: float,
    n_max: int,
    t_max: int = DEFAULT_T_MAX,
    stripe: int = 1,
    *,
    memory_cap: int | None = None,
    backend: str | None = None,
) -> LogStirlingTable:
    """Fill ``log S^n_{t,a}`` for ``n <= n_max``, ``t <= min(n, t_max)``.

    Raises :class:`ResourceCapError` before allocating if the table would
    exceed ``memory_cap`` bytes.
    """
    a = _check_discount(a)
    n_max, t_max, stripe = int(n_max), int(t_max), int(stripe)
    if n_max < 1 or t_max < 1 or stripe < 1:
        raise InvalidParameterError(
            f"need n_max, t_max, stripe >= 1 (got {n_max}, {t_max}, {stripe})"
        )
    t_cap = min(n_max, t_max)
    if stripe == 1:
        shapes = [(n_max + 1, t_cap + 1)]
    else:
        shapes = [(n_max // stripe + 1, t_cap + 1), (n_max + 1, min(DENSE_T, t_cap) + 1)]
    need = sum(8 * r * c for r, c in shapes)
    cap = default_memory_cap() if memory_cap is None else memory_cap
    if need > cap:
        raise ResourceCapError(
            f"log Stirling table needs {need} bytes, cap is {cap}"
        )
    rows = np.full(shapes[0], -np.inf)
    dense = np.full(shapes[1], -np.inf) if stripe > 1 else None
    dense_t = t_cap if stripe == 1 else min(DENSE_T, t_cap)
    kernels.get(backend).log_stirling_fill(a, n_max, t_cap, stripe, dense_t, dense, rows)
    return LogStirlingTable(a, n_max, t_max, stripe, rows, dense)


@dataclass(frozen=True, eq=False)
class StirlingRatioTable:
    """Ratios ``V^n_t = S^n_t / S^n_{t-1}`` for ``2 <= t <= min(n, t_max)``.

    ``U^n_t = S^{n+1}_t / S^n_t`` is derived on demand.
    """

    a: float
    n_max: int
    t_max: int
    _V: np.ndarray = field(repr=False)

    @property
    def t_cap(self) -> int:
        return min(self.n_max, self.t_max)

    @property
    def dtype(self):
        return self._V.dtype

    def _check(self, n, t, lo):
        if not (lo <= t <= n and n <= self.n_max and t <= self.t_cap):
            if t < lo or t > n:
                raise InvalidParameterError(f"ratio undefined at (n={n}, t={t})")
            raise CoverageError(n, t, f"ratio table has n_max={self.n_max}, t_max={self.t_max}")

    def V(self, n: int, t: int) -> float:
        self._check(n, t, 2)
        return float(self._V[n, t])

    def U(self, n: int, t: int) -> float:
        self._check(n, t, 1)
        if t == 1:
            return n - self.a
        return 1.0 / float(self._V[n, t]) + (n - t * self.a)

    def to_csv(self, fh=None) -> str | None:
        """Entries as ``n,t,V`` rows with 17 significant digits."""
        out = io.StringIO() if fh is None else fh
        out.write("n,t,V\n")
        for n in range(2, self.n_max + 1):
            for t in range(2, min(n, self.t_cap) + 1):
                out.write(f"{n},{t},{float(self._V[n, t]):.17g}\n")
        return out.getvalue() if fh is None else None


def build_ratio_table(
    a: float,
    n_max: int,
    t_max: int | None = None,
    *,
    dtype=np.float64,
    memory_cap: int | None = None,
    backend: str | None = None,
) -> StirlingRatioTable:
    """Fill ``V^n_{t,a}`` by the ratio recursion, no log/exp anywhere.

    ``dtype=np.float32`` runs the same recursion in single precision
    (always on the NumPy backend).
    """
    a = _check_discount(a)
    n_max = int(n_max)
    if n_max < 2:
        raise InvalidParameterError(f"n_max={n_max} must be at least 2")
    t_max = n_max if t_max is None else int(t_max)
    if t_max < 2:
        raise InvalidParameterError(f"t_max={t_max} must be at least 2")
    t_cap = min(n_max, t_max)
    dtype = np.dtype(dtype)
    need = dtype.itemsize * (n_max + 1) * (t_cap + 1)
    cap = default_memory_cap() if memory_cap is None else memory_cap
    if need > cap:
        raise ResourceCapError(f"ratio table needs {need} bytes, cap is {cap}")
    V = np.zeros((n_max + 1, t_cap + 1), dtype=dtype)
    impl = kernels.get(backend) if dtype == np.float64 else kernels.python_kernels
    impl.ratio_fill(a, n_max, t_cap, V)
    return StirlingRatioTable(a, n_max, t_max, V)


def stirling_explicit(n: int, m: int, a: float) -> float:
    """Alternating-sum closed form of ``S^n_{m,a}`` for ``a > 0``.

    ``(1 / (m! a^m)) sum_j C(m, j) (-1)^j prod_{h<n} (h - a j)``; each term is
    carried as a sign and a log magnitude.  Cancellation grows with ``m``,
    hence the cap at ``EXPLICIT_MAX_M``.
    """
    n, m = int(n), int(m)
    a = _check_discount(a)
    if a == 0.0:
        raise InvalidParameterError(
            "explicit form needs a > 0; use build_log_table(0, ...) for the a = 0 case"
        )
    if n < 0 or m < 0:
        raise InvalidParameterError(f"negative index (n={n}, m={m})")
    if m > EXPLICIT_MAX_M:
        raise InvalidParameterError(f"m={m} exceeds the stability guard {EXPLICIT_MAX_M}")
    if m > n:
        return 0.0
    if m == 0:
        return 1.0 if n == 0 else 0.0
    signs, logs = [], []
    for j in range(m + 1):
        try:
            s, lp = signed_log_pochhammer_inc(-a * j, 1.0, n)
        except DegeneratePochhammerError:
            continue
        logs.append(math.log(math.comb(m, j)) + lp)
        signs.append(s * (-1) ** j)
    if not logs:
        return 0.0
    top = max(logs)
    total = math.fsum(s * math.exp(v - top) for s, v in zip(signs, logs))
    return total * math.exp(top - math.lgamma(m + 1) - m * math.log(a))


def stirling_asymptotic(n: int, m: int, a: float) -> float:
    """Large-``n`` approximation, in log scale.

    ``log[Gamma(n) / (Gamma(1-a) Gamma(m) a^(m-1) n^a)]``.  The relative error
    is of order ``m / n^a``; a :class:`StirlingAccuracyWarning` is issued when
    that exceeds ``ASYMPTOTIC_WARN_RATIO``.
    """
    n, m = int(n), int(m)
    a = _check_discount(a)
    if a == 0.0:
        raise InvalidParameterError("asymptotic form needs a > 0")
    if n < 1 or m < 1:
        raise InvalidParameterError(f"need n, m >= 1 (got n={n}, m={m})")
    if m / n**a > ASYMPTOTIC_WARN_RATIO:
        warnings.warn(
            f"asymptotic S^{n}_{m} is inaccurate: m / n^a = {m / n**a:.3g}",
            StirlingAccuracyWarning,
            stacklevel=2,
        )
    return (
        math.lgamma(n)
        - math.lgamma(1.0 - a)
        - math.lgamma(m)
        - (m - 1) * math.log(a)
        - a * math.log(n)
    )


def mult_recursion_check(
    n: int, m: int, a: float, split_k: int, table: LogStirlingTable | None = None
) -> float:
    """Right-hand side of the multiplicative recursion for ``S^n_{m,a}``.

    ``sum_{n'} C(n, n') / C(m, k) * S^{n'}_k * S^{n-n'}_{m-k}`` over
    ``n' = k .. n - m + k``, accumulated in log space.  A consistency oracle
    for the linear recursion, not a production path.
    """
    n, m, k = int(n), int(m), int(split_k)
    a = _check_discount(a)
    if not 0 < k < m:
        raise InvalidParameterError(f"need 0 < split_k < m (got k={k}, m={m})")
    if m > n:
        return 0.0
    if table is None or table.n_max < n or table.t_cap < m or table.a != a:
        table = build_log_table(a, max(n, 1), t_max=m)
    log_cm = math.lgamma(m + 1) - math.lgamma(k + 1) - math.lgamma(m - k + 1)
    terms = []
    for nn in range(k, n - m + k + 1):
        log_cn = math.lgamma(n + 1) - math.lgamma(nn + 1) - math.lgamma(n - nn + 1)
        terms.append(log_cn - log_cm + table.log_S(nn, k) + table.log_S(n - nn, m - k))
    top = max(terms)
    if top == -math.inf:
        return 0.0
    return math.exp(top) * math.fsum(math.exp(v - top) for v in terms)

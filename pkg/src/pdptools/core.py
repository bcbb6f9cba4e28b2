"""Parameters, partition normal forms, enumeration and Pochhammer utilities.

Partitions of ``{1..N}`` are carried in size-biased normal form: block
labels are assigned ``1, 2, 3, ...`` in order of first occurrence, so the
first item is always in block 1.  Both the label sequence and the count of
items per block are kept; probability formulas only need the counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import DegeneratePochhammerError, InvalidParameterError, InvalidPartitionError

__all__ = [
    "PdParams",
    "SizeBiasedPartition",
    "MultiplicityVector",
    "IndicatorVector",
    "canonicalize",
    "iter_partitions",
    "enumerate_partitions",
    "bell_number",
    "log_pochhammer",
    "log_pochhammer_inc",
    "signed_log_pochhammer_inc",
    "log_crp_ratio",
    "MAX_ENUMERATION_N",
]

MAX_ENUMERATION_N = 12

# below this many factors a product is summed directly in log space
_DIRECT_SUM_MAX = 64


@dataclass(frozen=True)
class PdParams:
    """Discount ``a`` and concentration ``b`` of a Poisson-Dirichlet process.

    Valid when ``0 <= a < 1`` and ``b > -a``.  The pair ``(a1, -a1*a2)``
    used when fragmenting partitions falls inside this domain.
    """

    a: float
    b: float

    def __post_init__(self):
        a, b = float(self.a), float(self.b)
        if not (math.isfinite(a) and math.isfinite(b)):
            raise InvalidParameterError(f"non-finite parameters a={a}, b={b}")
        if not 0.0 <= a < 1.0:
            raise InvalidParameterError(f"discount a={a} outside [0, 1)")
        if not b > -a:
            raise InvalidParameterError(f"concentration b={b} must exceed -a={-a}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def is_dirichlet(self) -> bool:
        return self.a == 0.0


@dataclass(frozen=True)
class SizeBiasedPartition:
    """A set partition of ``{1..N}`` in size-biased normal form.

    ``assignments[n]`` is the block label of item ``n + 1`` and
    ``counts[m]`` the number of items in block ``m + 1``.
    """

    assignments: tuple[int, ...]
    counts: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        k = tuple(int(v) for v in self.assignments)
        if not k:
            raise InvalidPartitionError("empty sequence")
        top = 0
        counts: list[int] = []
        for n, label in enumerate(k):
            if label < 1 or label > top + 1:
                raise InvalidPartitionError(
                    f"label {label} at position {n + 1} breaks size-biased order"
                )
            if label == top + 1:
                top = label
                counts.append(0)
            counts[label - 1] += 1
        object.__setattr__(self, "assignments", k)
        object.__setattr__(self, "counts", tuple(counts))

    @property
    def M(self) -> int:
        return len(self.counts)

    @property
    def N(self) -> int:
        return len(self.assignments)

    def blocks(self) -> tuple[frozenset[int], ...]:
        """Blocks as sets of 1-based items, in size-biased order."""
        out: list[set[int]] = [set() for _ in range(self.M)]
        for item, label in enumerate(self.assignments, start=1):
            out[label - 1].add(item)
        return tuple(frozenset(s) for s in out)

    @classmethod
    def from_blocks(cls, blocks: Iterable[Iterable[int]]) -> SizeBiasedPartition:
        """Build from blocks over items ``1..N`` (any block order)."""
        label_of: dict[int, int] = {}
        for i, block in enumerate(blocks):
            for item in block:
                if item in label_of:
                    raise InvalidPartitionError(f"item {item} appears in two blocks")
                label_of[item] = i
        n = len(label_of)
        if n == 0:
            raise InvalidPartitionError("empty sequence")
        if set(label_of) != set(range(1, n + 1)):
            raise InvalidPartitionError("blocks must cover exactly 1..N")
        return canonicalize([label_of[i] for i in range(1, n + 1)])

    def __len__(self):
        return self.N


def canonicalize(indices: Sequence[object]) -> SizeBiasedPartition:
    """Relabel ``indices`` 1, 2, 3, ... by order of first occurrence.

    >>> canonicalize([12, 435, 7198, 12, 12, 35, 7198]).assignments
    (1, 2, 3, 1, 1, 4, 3)
    """
    if len(indices) == 0:
        raise InvalidPartitionError("empty sequence")
    relabel: dict[object, int] = {}
    out = []
    for v in indices:
        if v not in relabel:
            relabel[v] = len(relabel) + 1
        out.append(relabel[v])
    return SizeBiasedPartition(tuple(out))


@dataclass(frozen=True)
class MultiplicityVector:
    """Table counts ``t_m`` for each distinct value, with total ``T``."""

    t: tuple[int, ...]

    def __post_init__(self):
        t = tuple(int(v) for v in self.t)
        if any(v < 1 for v in t):
            raise InvalidPartitionError(f"multiplicities must be positive, got {t}")
        object.__setattr__(self, "t", t)

    @property
    def T(self) -> int:
        return sum(self.t)

    def check_against(self, counts: Sequence[int]) -> None:
        if len(counts) != len(self.t):
            raise InvalidPartitionError(
                f"{len(self.t)} multiplicities for {len(counts)} blocks"
            )
        for m, (tm, nm) in enumerate(zip(self.t, counts), start=1):
            if not 1 <= tm <= nm:
                raise InvalidPartitionError(f"block {m}: need 1 <= t={tm} <= n={nm}")


@dataclass(frozen=True)
class IndicatorVector:
    """Per-item table indicators ``r_n`` (1 when the item opens a table)."""

    r: tuple[int, ...]

    def __post_init__(self):
        r = tuple(int(v) for v in self.r)
        if any(v not in (0, 1) for v in r):
            raise InvalidPartitionError(f"indicators must be bits, got {r}")
        object.__setattr__(self, "r", r)

    def multiplicities(self, partition: SizeBiasedPartition) -> MultiplicityVector:
        """Per-block table counts implied by these indicators."""
        if len(self.r) != partition.N:
            raise InvalidPartitionError(
                f"{len(self.r)} indicators for {partition.N} items"
            )
        t = [0] * partition.M
        for bit, label in zip(self.r, partition.assignments):
            t[label - 1] += bit
        mult = MultiplicityVector.__new__(MultiplicityVector)
        object.__setattr__(mult, "t", tuple(t))
        if any(v < 1 for v in t):
            raise InvalidPartitionError(
                f"every value needs at least one table indicator, got t={tuple(t)}"
            )
        return mult


def iter_partitions(N: int) -> Iterator[SizeBiasedPartition]:
    """Yield every set partition of ``{1..N}`` as a restricted growth string."""
    if not 1 <= N <= MAX_ENUMERATION_N:
        raise InvalidParameterError(f"N={N} outside 1..{MAX_ENUMERATION_N}")
    k = [1] * N
    top = [1] * N  # top[i] = max(k[0..i])
    while True:
        yield SizeBiasedPartition(tuple(k))
        i = N - 1
        while i > 0 and k[i] > top[i - 1]:
            i -= 1
        if i == 0:
            return
        k[i] += 1
        top[i] = max(top[i - 1], k[i])
        for j in range(i + 1, N):
            k[j] = 1
            top[j] = top[i]


def enumerate_partitions(N: int) -> list[SizeBiasedPartition]:
    """All ``Bell(N)`` partitions of ``{1..N}``, for ``1 <= N <= 12``."""
    return list(iter_partitions(N))


def bell_number(n: int) -> int:
    """Bell numbers via the Bell triangle, exact integers."""
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[0]


def _log_rising_positive(x: float, y: float, n: int) -> float:
    # x > 0, y >= 0: log of x (x+y) ... (x+(n-1)y)
    if n == 0:
        return 0.0
    if y == 0.0:
        return n * math.log(x)
    ratio = x / y
    if n <= _DIRECT_SUM_MAX:
        return math.fsum(math.log(x + i * y) for i in range(n))
    if ratio > 1e6:
        return float(np.sum(np.log(x + y * np.arange(n, dtype=np.float64))))
    return n * math.log(y) + math.lgamma(ratio + n) - math.lgamma(ratio)


def signed_log_pochhammer_inc(x: float, y: float, n: int) -> tuple[int, float]:
    """``(sign, log|x (x+y) ... (x+(n-1)y)|)`` for factors of any sign.

    Raises :class:`DegeneratePochhammerError` if some factor is exactly zero.
    """
    n = int(n)
    if n < 0:
        raise InvalidParameterError(f"negative length n={n}")
    if n == 0:
        return 1, 0.0
    x, y = float(x), float(y)
    if y < 0.0:
        x, y = x + (n - 1) * y, -y
    if y == 0.0:
        if x == 0.0:
            raise DegeneratePochhammerError("degenerate Pochhammer: zero factor")
        sign = -1 if (x < 0.0 and n % 2) else 1
        return sign, n * math.log(abs(x))
    if x > 0.0:
        return 1, _log_rising_positive(x, y, n)
    i0 = round(-x / y)
    if 0 <= i0 < n and x + i0 * y == 0.0:
        raise DegeneratePochhammerError(
            f"degenerate Pochhammer: factor {i0} of ({x}|{y})_{n} is zero"
        )
    kneg = min(n, math.floor(-x / y) + 1)
    # guard against -x/y landing a hair below an integer
    while kneg > 0 and x + (kneg - 1) * y >= 0.0:
        kneg -= 1
    while kneg < n and x + kneg * y < 0.0:
        kneg += 1
    logabs = 0.0
    if kneg:
        logabs += _log_rising_positive(-x - (kneg - 1) * y, y, kneg)
    if n > kneg:
        logabs += _log_rising_positive(x + kneg * y, y, n - kneg)
    return (-1 if kneg % 2 else 1), logabs


def log_pochhammer_inc(x: float, y: float, n: int) -> float:
    """``log(x (x+y) ... (x+(n-1)y))`` when every factor is positive."""
    if n > 0 and min(x, x + (n - 1) * y) < 0.0:
        raise InvalidParameterError(
            f"negative factor in ({x}|{y})_{n}; use signed_log_pochhammer_inc"
        )
    return signed_log_pochhammer_inc(x, y, n)[1]


def log_pochhammer(x: float, n: int) -> float:
    """Log rising factorial ``log(x (x+1) ... (x+n-1))``."""
    return log_pochhammer_inc(x, 1.0, n)


def log_crp_ratio(M: int, N: int, a: float, b: float) -> float:
    """``log((b|a)_M / (b)_N)`` for ``M, N >= 1``.

    The common leading factor ``b`` is cancelled, so ``b = 0`` (reached by
    fragmentation with a zero inner discount) and ``-a < b < 0`` need no
    sign bookkeeping.
    """
    if M < 1 or N < 1:
        if M == 0 and N == 0:
            return 0.0
        raise InvalidParameterError(f"need M, N >= 1, got M={M}, N={N}")
    return log_pochhammer_inc(b + a, a, M - 1) - log_pochhammer_inc(b + 1.0, 1.0, N - 1)

"""Random generation: stick-breaking weights, CRP partitions, PDP data.

All samplers take a :class:`numpy.random.Generator`.  Independent streams
for replicate ``i`` of a run seeded with ``seed`` come from
:func:`spawn_rngs`, which derives child seeds with
``SeedSequence(seed).spawn``; results never depend on how replicates are
scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np

from . import kernels
from .core import PdParams, SizeBiasedPartition
from .errors import InvalidParameterError, ResourceCapError

__all__ = [
    "WeightVector",
    "BaseDistribution",
    "NonAtomicBase",
    "GemStick",
    "make_rng",
    "spawn_rngs",
    "sample_gem",
    "sample_pdd",
    "sample_gem_matrix",
    "sample_crp",
    "sample_crp_batch",
    "crp_assignments",
    "sample_pdp",
    "sample_from_gem",
    "posterior_dirichlet_params",
    "posterior_stick_params",
    "predictive",
    "crp_transition",
]

DEFAULT_MASS_EPSILON = 1e-12
DEFAULT_MAX_ATOMS = 10**6


def make_rng(seed=None) -> np.random.Generator:
    return np.random.default_rng(seed)


def spawn_rngs(seed: int, n: int) -> list[np.random.Generator]:
    """``n`` independent generators; stream ``i`` depends only on ``(seed, i)``."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


@dataclass(frozen=True)
class WeightVector:
    """Finite prefix of an infinite probability vector plus unassigned mass.

    ``order_tag`` is ``"size_biased"`` for stick-breaking order and
    ``"sorted"`` for nonincreasing order.
    """

    weights: np.ndarray
    residual: float
    order_tag: str = "size_biased"

    def __post_init__(self):
        if self.order_tag not in ("size_biased", "sorted"):
            raise InvalidParameterError(f"unknown order tag {self.order_tag!r}")
        w = np.asarray(self.weights, dtype=np.float64)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return len(self.weights)

    @property
    def total(self) -> float:
        return math.fsum(self.weights) + self.residual


class BaseDistribution:
    """Base measure ``H`` of a PDP.

    Subclasses implement :meth:`sample`; discrete ones also implement
    :meth:`log_mass` and set ``atomic = True``.
    """

    atomic = False

    def sample(self, rng: np.random.Generator) -> Any:
        raise NotImplementedError

    def log_mass(self, value) -> float:
        raise TypeError(f"{type(self).__name__} is non-atomic; no point masses")


class NonAtomicBase(BaseDistribution):
    """Continuous base: by default Uniform(0, 1), or any ``draw(rng)`` callable."""

    def __init__(self, draw: Callable[[np.random.Generator], Any] | None = None):
        self._draw = draw

    def sample(self, rng):
        if self._draw is None:
            return float(rng.random())
        return self._draw(rng)


class GemStick:
    """Lazily extended GEM(a, b) stick.

    Atoms are broken off in chunks as needed, so drawing indices never
    renormalizes a truncated vector.
    """

    def __init__(self, params: PdParams, rng: np.random.Generator, max_atoms: int = 10**7):
        self.params = params
        self.rng = rng
        self.max_atoms = int(max_atoms)
        self._w: list[np.ndarray] = []
        self._cum = np.zeros(0)
        self.residual = 1.0
        self.k = 0

    def extend(self, count: int) -> None:
        a, b = self.params.a, self.params.b
        k = np.arange(self.k + 1, self.k + count + 1, dtype=np.float64)
        v = self.rng.beta(1.0 - a, b + k * a)
        keep = np.cumprod(1.0 - v)
        w = v * self.residual * np.concatenate(([1.0], keep[:-1]))
        base = self._cum[-1] if len(self._cum) else 0.0
        self._w.append(w)
        self._cum = np.concatenate((self._cum, base + np.cumsum(w)))
        self.residual *= float(keep[-1])
        self.k += count

    @property
    def weights(self) -> np.ndarray:
        return np.concatenate(self._w) if self._w else np.zeros(0)

    def draw(self, u: float) -> int:
        """0-based atom index for a uniform ``u``."""
        while not len(self._cum) or u >= self._cum[-1]:
            if self.k >= self.max_atoms:
                raise ResourceCapError(f"stick needs more than {self.max_atoms} atoms to reach u={u}")
            self.extend(min(max(16, self.k), self.max_atoms - self.k))
        return int(np.searchsorted(self._cum, u, side="right"))


def sample_gem(
    params: PdParams,
    rng: np.random.Generator,
    mass_epsilon: float = DEFAULT_MASS_EPSILON,
    max_atoms: int = DEFAULT_MAX_ATOMS,
) -> WeightVector:
    """Stick-breaking weights ``p_k = V_k prod_{i<k} (1 - V_i)``.

    ``V_k ~ Beta(1 - a, b + k a)`` independently.  Breaking stops once the
    remaining stick is below ``mass_epsilon`` or ``max_atoms`` atoms exist,
    whichever comes first; the remainder is reported as ``residual``.
    """
    if not mass_epsilon > 0 or max_atoms < 1:
        raise InvalidParameterError("truncation must be positive")
    a, b = params.a, params.b
    parts = []
    residual = 1.0
    k = 0
    chunk = 64
    while residual >= mass_epsilon and k < max_atoms:
        c = min(chunk, max_atoms - k)
        ks = np.arange(k + 1, k + c + 1, dtype=np.float64)
        v = rng.beta(1.0 - a, b + ks * a)
        keep = residual * np.cumprod(1.0 - v)
        w = v * np.concatenate(([residual], keep[:-1]))
        below = np.flatnonzero(keep < mass_epsilon)
        if len(below):
            stop = int(below[0]) + 1
            parts.append(w[:stop])
            residual = float(keep[stop - 1])
            k += stop
            break
        parts.append(w)
        residual = float(keep[-1])
        k += c
        chunk = min(chunk * 2, 1 << 16)
    return WeightVector(np.concatenate(parts), residual, "size_biased")


def sample_pdd(params: PdParams, rng: np.random.Generator, **truncation) -> WeightVector:
    """GEM weights sorted nonincreasing (Poisson-Dirichlet law)."""
    gem = sample_gem(params, rng, **truncation)
    return WeightVector(np.sort(gem.weights)[::-1], gem.residual, "sorted")


def sample_gem_matrix(params: PdParams, n_reps: int, n_atoms: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """``n_reps`` independent GEM prefixes of fixed length, vectorised.

    Returns ``(weights, residuals)`` with ``weights`` of shape ``(n_reps, n_atoms)``.
    """
    a, b = params.a, params.b
    k = np.arange(1, n_atoms + 1, dtype=np.float64)
    v = rng.beta(1.0 - a, b + k * a, size=(n_reps, n_atoms))
    keep = np.cumprod(1.0 - v, axis=1)
    w = v.copy()
    w[:, 1:] *= keep[:, :-1]
    return w, keep[:, -1].copy()


def crp_transition(params: PdParams, counts: Sequence[int]) -> tuple[float, np.ndarray]:
    """Seating probabilities after ``sum(counts)`` customers.

    Returns ``(new_table_prob, per_table_probs)``.
    """
    a, b = params.a, params.b
    n = np.asarray(counts, dtype=np.float64)
    N = float(n.sum())
    if N == 0:
        return 1.0, np.zeros(0)
    denom = b + N
    return (b + len(n) * a) / denom, (n - a) / denom


def predictive(params: PdParams, partition: SizeBiasedPartition | None) -> tuple[float, np.ndarray]:
    """Posterior predictive of the next item's block.

    ``(b + M a)/(b + N)`` for a new block and ``(n_m - a)/(b + N)`` for block
    ``m``; ``partition=None`` means no items seen yet.
    """
    return crp_transition(params, () if partition is None else partition.counts)


def crp_assignments(params: PdParams, N: int, rng: np.random.Generator, backend: str | None = None) -> np.ndarray:
    """Block labels (1-based, size-biased) of one CRP draw as an int array."""
    N = int(N)
    if N < 1:
        raise InvalidParameterError(f"N={N} must be at least 1")
    u = rng.random(N - 1)
    out = np.empty(N, dtype=np.int64)
    kernels.get(backend).crp_assign(params.a, params.b, N, u, out)
    return out


def sample_crp(params: PdParams, N: int, rng: np.random.Generator, backend: str | None = None) -> SizeBiasedPartition:
    """Chinese restaurant process partition of ``N`` items.

    Item ``n + 1`` joins block ``m`` with probability ``(n_m - a)/(b + n)``
    and opens a new block with probability ``(b + M a)/(b + n)``.
    """
    return SizeBiasedPartition(tuple(crp_assignments(params, N, rng, backend).tolist()))


def sample_crp_batch(
    params: PdParams, N: int, n_draws: int, rng: np.random.Generator,
    backend: str | None = None, chunk: int | None = None,
):
    """Many CRP draws at once.

    Yields ``(assignments, block_counts)`` arrays chunk by chunk, with
    ``assignments`` of shape ``(chunk, N)``.  Each draw consumes ``N - 1``
    uniforms, identically to :func:`crp_assignments`.
    """
    N = int(N)
    if N < 1:
        raise InvalidParameterError(f"N={N} must be at least 1")
    impl = kernels.get(backend)
    if chunk is None:
        chunk = max(1, min(n_draws, 4_000_000 // max(N, 1)))
    done = 0
    while done < n_draws:
        r = min(chunk, n_draws - done)
        U = rng.random((r, N - 1))
        out = np.empty((r, N), dtype=np.int64)
        M = impl.crp_assign_batch(params.a, params.b, N, U, out)
        yield out, np.asarray(M)
        done += r


def sample_pdp(
    params: PdParams, base: BaseDistribution, N: int, rng: np.random.Generator
) -> tuple[list, SizeBiasedPartition]:
    """Draw ``N`` values from a PDP with the weights integrated out.

    Runs the CRP and gives each new block a fresh draw from ``base``.
    Returns the data and the latent partition.
    """
    part = sample_crp(params, N, rng)
    atoms = [base.sample(rng) for _ in range(part.M)]
    return [atoms[k - 1] for k in part.assignments], part


def sample_from_gem(params: PdParams, N: int, rng: np.random.Generator) -> tuple[SizeBiasedPartition, GemStick]:
    """Draw ``N`` i.i.d. atom indices from one lazily extended GEM stick.

    The canonicalized index sequence has the same law as :func:`sample_crp`.
    """
    from .core import canonicalize

    stick = GemStick(params, rng)
    u = rng.random(int(N))
    idx = [stick.draw(float(x)) for x in u]
    return canonicalize(idx), stick


def posterior_dirichlet_params(params: PdParams, partition: SizeBiasedPartition) -> np.ndarray:
    """``(n_1 - a, ..., n_M - a, b + M a)``: the posterior on the seen
    blocks' weights and the unseen remainder."""
    a, b = params.a, params.b
    n = np.asarray(partition.counts, dtype=np.float64)
    return np.concatenate((n - a, [b + len(n) * a]))


def posterior_stick_params(params: PdParams, partition: SizeBiasedPartition) -> list[tuple[float, float]]:
    """Beta parameters ``(n_m - a, b + m a + sum_{i>m} n_i)`` per block."""
    a, b = params.a, params.b
    n = partition.counts
    tail = sum(n)
    out = []
    for m, nm in enumerate(n, start=1):
        tail -= nm
        out.append((nm - a, b + m * a + tail))
    return out

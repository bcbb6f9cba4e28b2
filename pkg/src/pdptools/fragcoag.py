"""Fragmentation and coagulation of partitions, and the samplers built on them.

``fragment`` splits every block of a partition by its own sub-partition;
``coagulate`` merges blocks according to a partition of block indices.
Applied to CRD draws with matched parameters the two are dual:

* CRD(a1 a2, b) fragmented block-wise by CRD(a1, -a1 a2) is CRD(a1, b);
* CRD(a1, b) coagulated by CRD(a2, b / a1) is CRD(a1 a2, b).

Repeated fragmentation with an increasing discount schedule gives a random
tree whose depth-``d`` cut is CRD(a_d, b).

Scalar samplers return :class:`SizeBiasedPartition`; the ``*_batch``
variants return ``(n_draws, N)`` arrays of 1-based size-biased labels and
are vectorised over draws, which is what the Monte Carlo checks use.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence

import numpy as np

from .core import PdParams, SizeBiasedPartition, canonicalize
from .errors import InvalidParameterError, InvalidPartitionError
from .samplers import crp_assignments, sample_crp_batch

__all__ = [
    "fragment",
    "coagulate",
    "sample_crd",
    "sample_fragmented_crd",
    "sample_coagulated_crd",
    "sample_fragmented_crd_batch",
    "sample_coagulated_crd_batch",
    "grouped_crp_batch",
    "canonical_rows",
    "validate_schedule",
    "TreeStructure",
    "sample_tree",
    "sample_tree_levels_batch",
]


def _as_blocks(partition: Iterable[Iterable[Hashable]], what: str) -> list[frozenset]:
    blocks = [frozenset(b) for b in partition]
    seen: set = set()
    for blk in blocks:
        if not blk:
            raise InvalidPartitionError(f"{what} has an empty block")
        if seen & blk:
            raise InvalidPartitionError(f"{what} has overlapping blocks")
        seen |= blk
    return blocks


def fragment(P: Iterable[Iterable[Hashable]], Q: Sequence[Iterable[Iterable[Hashable]]]) -> list[frozenset]:
    """Split block ``P[m]`` by the partition ``Q[m]``; returns all pieces in order."""
    P = _as_blocks(P, "P")
    if len(Q) != len(P):
        raise InvalidPartitionError(f"{len(Q)} sub-partitions for {len(P)} blocks")
    out: list[frozenset] = []
    for m, (blk, sub) in enumerate(zip(P, Q)):
        pieces = _as_blocks(sub, f"Q[{m}]")
        if frozenset().union(*pieces) != blk:
            raise InvalidPartitionError(f"Q[{m}] does not partition block {m} of P")
        out.extend(pieces)
    return out


def coagulate(P: Sequence[Iterable[Hashable]], Q: Iterable[Iterable[int]]) -> list[frozenset]:
    """Merge blocks of ``P`` by ``Q``, a partition of the 1-based block indices."""
    P = _as_blocks(P, "P")
    Q = _as_blocks(Q, "Q")
    used = frozenset().union(*Q) if Q else frozenset()
    if used != frozenset(range(1, len(P) + 1)):
        bad = sorted(used - frozenset(range(1, len(P) + 1)), key=repr)
        detail = f"index {bad[0]} out of range 1..{len(P)}" if bad else "Q misses some block indices"
        raise InvalidPartitionError(detail)
    return [frozenset().union(*(P[m - 1] for m in q)) for q in Q]


def sample_crd(items: Sequence[Hashable], a: float, b: float, rng: np.random.Generator) -> list[frozenset]:
    """CRD(a, b) partition of ``items``, seating them in the given order.

    ``b`` may be negative down to ``-a`` (exclusive), as needed by the
    fragmentation samplers.
    """
    items = list(items)
    if len(items) == 1:
        return [frozenset(items)]
    labels = crp_assignments(PdParams(a, b), len(items), rng)
    blocks: list[list] = [[] for _ in range(int(labels.max()))]
    for lab, it in zip(labels.tolist(), items):
        blocks[lab - 1].append(it)
    return [frozenset(b) for b in blocks]


def _check_pair(a1, a2, b):
    if not 0 < a1 < 1:
        raise InvalidParameterError(f"need 0 < a1 < 1, got {a1}")
    if not 0 <= a2 < 1:
        raise InvalidParameterError(f"need 0 <= a2 < 1, got {a2}")
    if not b > -a1 * a2:
        raise InvalidParameterError(f"need b > -a1*a2, got b={b}")


def sample_fragmented_crd(N: int, a1: float, a2: float, b: float, rng: np.random.Generator) -> SizeBiasedPartition:
    """CRD(N; a1 a2, b), each block then split by CRD(block; a1, -a1 a2).

    Equal in law to CRD(N; a1, b).
    """
    _check_pair(a1, a2, b)
    coarse = sample_crd(range(1, N + 1), a1 * a2, b, rng)
    subs = [sample_crd(sorted(blk), a1, -a1 * a2, rng) for blk in coarse]
    return SizeBiasedPartition.from_blocks(fragment(coarse, subs))


def sample_coagulated_crd(N: int, a1: float, a2: float, b: float, rng: np.random.Generator) -> SizeBiasedPartition:
    """CRD(N; a1, b) merged by a CRD(a2, b / a1) partition of its blocks.

    Equal in law to CRD(N; a1 a2, b).  Needs ``a1 > 0``.
    """
    if a1 == 0:
        raise InvalidParameterError("a1 = 0 leaves b / a1 undefined")
    _check_pair(a1, a2, b)
    fine = SizeBiasedPartition.from_blocks(sample_crd(range(1, N + 1), a1, b, rng))
    merge = sample_crd(range(1, fine.M + 1), a2, b / a1, rng)
    return SizeBiasedPartition.from_blocks(coagulate(fine.blocks(), merge))


# ---------------------------------------------------------------- batch forms


def canonical_rows(labels: np.ndarray) -> np.ndarray:
    """Relabel each row 1, 2, ... by first occurrence (row-wise :func:`canonicalize`)."""
    labels = np.asarray(labels, dtype=np.int64)
    R, N = labels.shape
    lo = labels.min(initial=0)
    width = int(labels.max(initial=0) - lo) + 1
    mapping = np.zeros((R, width), dtype=np.int64)
    nxt = np.zeros(R, dtype=np.int64)
    out = np.empty_like(labels)
    rows = np.arange(R)
    for i in range(N):
        code = labels[:, i] - lo
        cur = mapping[rows, code]
        new = cur == 0
        nxt[new] += 1
        cur = np.where(new, nxt, cur)
        mapping[rows, code] = cur
        out[:, i] = cur
    return out


def grouped_crp_batch(groups: np.ndarray, a: float, b: float, rng: np.random.Generator) -> np.ndarray:
    """Independent CRD(a, b) partitions inside every group of every row.

    ``groups`` is an ``(R, N)`` array of nonnegative group labels.  Items
    are seated in column order; the result holds 0-based sub-block labels
    in size-biased order within each group.  One-item groups stay whole.
    """
    PdParams(a, b)  # validates b > -a
    groups = np.asarray(groups, dtype=np.int64)
    R, N = groups.shape
    G = int(groups.max(initial=0)) + 1
    counts = np.zeros((R, G, N), dtype=np.float64)
    seen = np.zeros((R, G), dtype=np.int64)
    nsub = np.zeros((R, G), dtype=np.int64)
    out = np.empty((R, N), dtype=np.int64)
    rows = np.arange(R)
    for i in range(N):
        g = groups[:, i]
        n = seen[rows, g]
        K = nsub[rows, g]
        target = rng.random(R) * (b + n)
        new = (n == 0) | (target >= n - K * a)
        c = counts[rows, g]
        cum = np.cumsum(c - a * (c > 0), axis=1)
        old = (cum <= target[:, None]).sum(axis=1)
        lab = np.where(new, K, old)
        counts[rows, g, lab] += 1
        seen[rows, g] += 1
        nsub[rows, g] += new
        out[:, i] = lab
    return out


def _combine(parent: np.ndarray, child: np.ndarray) -> np.ndarray:
    width = child.shape[1]
    return canonical_rows((parent - 1) * width + child)


def sample_fragmented_crd_batch(
    N: int, a1: float, a2: float, b: float, n_draws: int, rng: np.random.Generator
) -> np.ndarray:
    """``n_draws`` rows from :func:`sample_fragmented_crd`."""
    _check_pair(a1, a2, b)
    coarse = np.concatenate([o for o, _ in sample_crp_batch(PdParams(a1 * a2, b), N, n_draws, rng)])
    fine = grouped_crp_batch(coarse - 1, a1, -a1 * a2, rng)
    return _combine(coarse, fine)


def sample_coagulated_crd_batch(
    N: int, a1: float, a2: float, b: float, n_draws: int, rng: np.random.Generator
) -> np.ndarray:
    """``n_draws`` rows from :func:`sample_coagulated_crd`.

    The merge partition is a CRP over ``N`` seats of which only the first
    ``M`` are read; a CRP prefix is itself a CRP, so this is exact.
    """
    if a1 == 0:
        raise InvalidParameterError("a1 = 0 leaves b / a1 undefined")
    _check_pair(a1, a2, b)
    fine = np.concatenate([o for o, _ in sample_crp_batch(PdParams(a1, b), N, n_draws, rng)])
    merge = grouped_crp_batch(np.zeros_like(fine), a2, b / a1, rng)
    return canonical_rows(np.take_along_axis(merge, fine - 1, axis=1))


# ---------------------------------------------------------------------- trees


def validate_schedule(schedule: Sequence[float], maxdepth: int, b: float) -> tuple[float, ...]:
    schedule = tuple(float(x) for x in schedule)
    if maxdepth < 1 or len(schedule) != maxdepth:
        raise InvalidParameterError(f"schedule has {len(schedule)} discounts for maxdepth={maxdepth}")
    if not 0 <= schedule[0] < 1 or any(not 0 < x < 1 for x in schedule[1:]):
        raise InvalidParameterError("discounts must lie in (0, 1), the first may be 0")
    if any(x >= y for x, y in zip(schedule, schedule[1:])):
        raise InvalidParameterError("schedule must be strictly increasing")
    if not b > -schedule[0]:
        raise InvalidParameterError(f"need b > -a_1, got b={b}")
    return schedule


@dataclass
class TreeStructure:
    """Rooted tree whose nodes hold sorted item arrays.

    ``levels[d]`` lists the nodes at depth ``d`` (the root is depth 0);
    ``parents[d][j]`` is the index in ``levels[d - 1]`` of node ``j``'s
    parent.  Node ids are ``"depth:least_item"``.
    """

    N: int
    schedule: tuple[float, ...]
    b: float
    levels: list[list[np.ndarray]] = field(default_factory=list)
    parents: list[list[int]] = field(default_factory=list)

    @property
    def maxdepth(self) -> int:
        return len(self.schedule)

    @staticmethod
    def node_id(depth: int, members: np.ndarray) -> str:
        return f"{depth}:{int(members[0])}"

    def children_counts(self, depth: int) -> np.ndarray:
        """Number of children of every node at ``depth``."""
        return np.bincount(self.parents[depth + 1], minlength=len(self.levels[depth]))

    def depth_partition(self, depth: int) -> SizeBiasedPartition:
        labels = np.empty(self.N, dtype=np.int64)
        for j, mem in enumerate(self.levels[depth]):
            labels[mem - 1] = j
        return canonicalize(labels.tolist())

    def to_dict(self) -> dict:
        nodes, edges = [], []
        for d, level in enumerate(self.levels):
            for j, mem in enumerate(level):
                nid = self.node_id(d, mem)
                nodes.append({"id": nid, "depth": d, "members": mem.tolist()})
                if d:
                    edges.append({"child": nid, "parent": self.node_id(d - 1, self.levels[d - 1][self.parents[d][j]])})
        return {"nodes": nodes, "edges": edges}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))


def _split(members: np.ndarray, a: float, b: float, rng) -> list[np.ndarray]:
    if len(members) == 1:
        return [members]
    labels = crp_assignments(PdParams(a, b), len(members), rng)
    ordered = members[np.argsort(labels, kind="stable")]
    edges = np.concatenate(([0], np.cumsum(np.bincount(labels)[1:]))).tolist()
    return [ordered[lo:hi] for lo, hi in zip(edges[:-1], edges[1:])]


def sample_tree(
    N: int, schedule: Sequence[float], b: float, maxdepth: int, rng: np.random.Generator
) -> TreeStructure:
    """Grow a tree over items ``1..N`` level by level.

    The root is split by CRD(a_1, b); every node at depth ``d >= 1`` is
    split by CRD(a_{d+1}, -a_d), single items passing straight through.
    Nodes are visited breadth first, so the draws consumed are fixed by
    the seed.
    """
    schedule = validate_schedule(schedule, maxdepth, b)
    if N < 1:
        raise InvalidParameterError(f"N={N} must be at least 1")
    tree = TreeStructure(int(N), schedule, float(b), [[np.arange(1, N + 1)]], [[]])
    for d in range(maxdepth):
        a = schedule[d]
        conc = b if d == 0 else -schedule[d - 1]
        level, parents = [], []
        for j, node in enumerate(tree.levels[d]):
            kids = _split(node, a, conc, rng)
            level.extend(kids)
            parents.extend([j] * len(kids))
        tree.levels.append(level)
        tree.parents.append(parents)
    return tree


def sample_tree_levels_batch(
    N: int, schedule: Sequence[float], b: float, maxdepth: int, n_draws: int, rng: np.random.Generator
) -> list[np.ndarray]:
    """Depth cuts of ``n_draws`` trees as canonical label arrays.

    Entry ``d - 1`` of the result is the ``(n_draws, N)`` array of depth-``d``
    partitions.
    """
    schedule = validate_schedule(schedule, maxdepth, b)
    cur = np.ones((n_draws, N), dtype=np.int64)
    out = []
    for d in range(maxdepth):
        conc = b if d == 0 else -schedule[d - 1]
        sub = grouped_crp_batch(cur - 1, schedule[d], conc, rng)
        cur = _combine(cur, sub)
        out.append(cur)
    return out

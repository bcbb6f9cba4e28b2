"""Pure Python / NumPy kernels.

Drop-in replacements for the compiled ``_ckernels`` extension.  The table
fills are vectorised across one row at a time; the CRP seating loop is
plain Python and consumes exactly one uniform per item after the first,
using the same arithmetic as the compiled loop.
"""

import numpy as np


def log_stirling_fill(a, n_max, t_cap, stripe, dense_t, dense, rows):
    """Fill log generalized Stirling numbers row by row.

    ``dense[n, t]`` receives every row for ``t <= dense_t``; ``rows[n // stripe, t]``
    receives full rows for ``n`` divisible by ``stripe``.  Either array may be
    ``None``.  Unreached cells must be preset to ``-inf`` by the caller.
    """
    dtype = (rows if rows is not None else dense).dtype
    cur = np.full(t_cap + 1, -np.inf, dtype=dtype)
    cur[0] = 0.0
    _store(cur, 0, stripe, dense_t, dense, rows)
    t = np.arange(t_cap + 1, dtype=dtype)
    ta = t * dtype.type(a)
    nxt = np.empty_like(cur)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for n in range(n_max):
            # row n -> row n + 1; only t <= n + 1 can be finite
            hi = min(n + 1, t_cap)
            prev = cur[: hi]          # log S^n_{t-1} for t = 1..hi
            same = cur[1 : hi + 1]    # log S^n_t
            coef = dtype.type(n) - ta[1 : hi + 1]
            out = nxt[1 : hi + 1]
            finite = np.isfinite(same)
            d = prev - same
            # log S^n_t + log(exp(d) + (n - t a)), switched to the d > 0 form
            # so exp never overflows
            big = finite & (d > 0)
            small = finite & ~big
            out[small] = same[small] + np.log(np.exp(d[small]) + coef[small])
            out[big] = prev[big] + np.log1p(coef[big] * np.exp(-d[big]))
            out[~finite] = prev[~finite]
            nxt[0] = -np.inf
            nxt[hi + 1 :] = -np.inf
            cur, nxt = nxt, cur
            _store(cur, n + 1, stripe, dense_t, dense, rows)


def _store(row, n, stripe, dense_t, dense, rows):
    if dense is not None:
        dense[n, : dense_t + 1] = row[: dense_t + 1]
    if rows is not None and n % stripe == 0:
        rows[n // stripe, :] = row


def ratio_fill(a, n_max, t_cap, V):
    """Fill ``V[n, t] = S^n_t / S^n_{t-1}`` for ``2 <= t <= min(n, t_cap)``.

    Uses only arithmetic: ``U^n_1 = n - a``, ``U^n_t = 1/V^n_t + (n - t a)``,
    ``V^n_n = 1/U^{n-1}_{n-1}`` and
    ``V^{n+1}_t = (1 + (n - t a) V^n_t) / U^n_{t-1}``.
    """
    dtype = V.dtype
    one = dtype.type(1.0)
    a = dtype.type(a)
    t = np.arange(t_cap + 1, dtype=dtype)
    ta = t * a
    U = np.zeros(t_cap + 1, dtype=dtype)
    for n in range(1, n_max):
        # U^n_s for s = 1..min(n, t_cap) from row n of V
        hi = min(n, t_cap)
        nn = dtype.type(n)
        U[1] = nn - a
        if hi >= 2:
            U[2 : hi + 1] = one / V[n, 2 : hi + 1] + (nn - ta[2 : hi + 1])
        # row n + 1
        top = min(n, t_cap)
        if top >= 2:
            V[n + 1, 2 : top + 1] = (one + (nn - ta[2 : top + 1]) * V[n, 2 : top + 1]) / U[1:top]
        if n + 1 <= t_cap:
            V[n + 1, n + 1] = one / U[n]


def crp_assign(a, b, N, u, out):
    """Seat ``N`` customers; ``u`` holds ``N - 1`` uniforms in ``[0, 1)``.

    Writes 1-based size-biased block labels to ``out`` and returns the block
    count.  Existing blocks are located by binary lifting over a Fenwick tree
    of integer block sizes; the prefix weight of the first ``k`` blocks is
    ``C_k - k a``, which is increasing in ``k``.
    """
    if N == 0:
        return 0
    size = 1
    while size < N:
        size <<= 1
    tree = [0] * (size + 1)
    out[0] = 1
    _fen_add(tree, size, 1)
    M = 1
    for n in range(1, N):
        target = u[n - 1] * (b + n)
        if target < n - M * a:
            pos = 0
            acc = 0
            step = size
            while step:
                nxt = pos + step
                if nxt <= M and (acc + tree[nxt]) - nxt * a <= target:
                    pos = nxt
                    acc += tree[nxt]
                step >>= 1
            label = pos + 1
        else:
            M += 1
            label = M
        out[n] = label
        _fen_add(tree, size, label)
    return M


def _fen_add(tree, size, i):
    while i <= size:
        tree[i] += 1
        i += i & -i


def crp_assign_batch(a, b, N, U, out):
    """Row-wise :func:`crp_assign` over a ``(R, N - 1)`` uniform matrix."""
    counts = np.empty(U.shape[0], dtype=np.int64)
    for r in range(U.shape[0]):
        counts[r] = crp_assign(a, b, N, U[r], out[r])
    return counts

"""Built-in acceptance checks.

Every check returns a :class:`CheckResult`; :func:`run_suite` runs the
``quick`` or ``full`` selection.  Randomised checks draw from streams
derived from a single seed, so results are reproducible.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import stats

from . import fragcoag
from .core import PdParams, canonicalize, enumerate_partitions
from .discrete import (
    dirichlet_equivalent_concentration,
    evidence_indicators,
    evidence_multiplicities,
    gibbs_resample_multiplicity,
    multiplicity_law,
    pdp_moments,
    power_sum_expectation,
)
from .laws import (
    approx_expected_M,
    crd_log_prob,
    dirichlet_series_bound,
    expected_M,
    expected_M_geometric,
    expected_M_zeta,
    geometric_bound,
    partition_size_log_pmf,
    partition_size_pmf,
    var_M,
)
from .samplers import sample_crp_batch, sample_gem_matrix, spawn_rngs
from .stirling import (
    StirlingAccuracyWarning,
    build_log_table,
    build_ratio_table,
    mult_recursion_check,
    stirling_asymptotic,
    stirling_explicit,
)

__all__ = ["CheckResult", "CHECKS", "QUICK", "run_check", "run_suite", "exact_vs_empirical"]

DEFAULT_SEED = 20240521


@dataclass
class CheckResult:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] criterion {self.number:2d} {self.title} ({self.seconds:.1f}s): {self.detail}"


def _rel(x, y):
    return abs(x - y) / abs(y) if y != 0 else abs(x)


def exact_vs_empirical(rows: np.ndarray, params: PdParams) -> tuple[float, float]:
    """L1 distance and chi-square p-value of canonical label rows against CRD."""
    parts = enumerate_partitions(rows.shape[1])
    index = {p.assignments: i for i, p in enumerate(parts)}
    exact = np.array([math.exp(crd_log_prob(p, params)) for p in parts])
    seen, counts = np.unique(rows, axis=0, return_counts=True)
    emp = np.zeros(len(parts))
    for r, c in zip(seen, counts):
        emp[index[tuple(r.tolist())]] = c
    n = emp.sum()
    l1 = float(np.abs(emp / n - exact).sum())
    p = float(stats.chisquare(emp, exact * n).pvalue)
    return l1, p


# ------------------------------------------------------------------ checks


def check_exact_pmf(seed):
    pmf = partition_size_pmf(3, PdParams(0.5, 1.0))
    spot = max(_rel(x, y) for x, y in zip(pmf, (0.125, 0.375, 0.5)))
    drift = 0.0
    for a in (0.0, 0.5, 0.9):
        table = build_log_table(a, 200, t_max=200)
        for b in (0.5, 1.0, 10.0):
            for N in range(1, 201):
                raw = np.exp(partition_size_log_pmf(N, PdParams(a, b), table, normalise=False))
                drift = max(drift, abs(math.fsum(raw) - 1.0))
    ok = spot <= 1e-12 and drift <= 1e-9
    return ok, f"spot rel err {spot:.2e}, max |sum-1| {drift:.2e} over N<=200"


def check_aggregation(seed):
    worst = 0.0
    for N in range(1, 9):
        parts = enumerate_partitions(N)
        for a in (0.0, 0.3, 0.9):
            for b in (0.5, 1.0, 10.0):
                P = PdParams(a, b)
                agg = np.zeros(N)
                for p in parts:
                    agg[p.M - 1] += math.exp(crd_log_prob(p, P))
                pmf = partition_size_pmf(N, P)
                worst = max(worst, max(_rel(x, y) for x, y in zip(pmf, agg)))
    return worst <= 1e-9, f"max rel err {worst:.2e} for N<=8"


def check_moments(seed):
    worst = 0.0
    for a in (0.0, 0.5, 0.9):
        table = build_log_table(a, 200, t_max=200)
        for b in (0.5, 1.0, 10.0):
            P = PdParams(a, b)
            for N in range(1, 201):
                p = partition_size_pmf(N, P, table)
                M = np.arange(1, N + 1)
                E = float(p @ M)
                V = float(p @ (M - E) ** 2)
                worst = max(worst, _rel(expected_M(P, N), E))
                if N > 1:
                    worst = max(worst, _rel(var_M(P, N), V))
    spots = [
        _rel(expected_M(PdParams(0, 1), 3), 11 / 6),
        _rel(var_M(PdParams(0, 1), 3), 17 / 36),
        _rel(expected_M(PdParams(0.5, 1), 3), 2.375),
    ]
    ok = worst <= 1e-8 and max(spots) <= 1e-12
    return ok, f"max rel err vs pmf {worst:.2e}, spot values {max(spots):.2e}"


def _rising_factorial_coefficients(n):
    # coefficients of x (x+1) ... (x+n-1): unsigned first-kind Stirling numbers
    poly = [1]
    for k in range(n):
        nxt = [0] * (len(poly) + 1)
        for i, c in enumerate(poly):
            nxt[i + 1] += c
            nxt[i] += k * c
        poly = nxt
    return poly


def check_stirling(seed):
    rng = np.random.default_rng(seed)
    explicit = 0.0
    for a in (0.1, 0.5, 0.9):
        table = build_log_table(a, 50, t_max=4)
        for n in range(1, 51):
            for m in range(1, min(4, n) + 1):
                explicit = max(explicit, _rel(stirling_explicit(n, m, a), table.S(n, m)))
    a = 0.5
    logt = build_log_table(a, 2000, t_max=2000)
    ratios = build_ratio_table(a, 2000)
    ratio = 0.0
    for n in range(2, 2001):
        row = logt.row(n)
        t = np.arange(2, n + 1)
        v = np.array([ratios.V(n, k) for k in t]) if n <= 3 else ratios._V[n, 2 : n + 1]
        ratio = max(ratio, float(np.max(np.abs(np.exp(row[t] - row[t - 1]) / v - 1))))
    mult = 0.0
    for _ in range(10):
        n = int(rng.integers(4, 80))
        m = int(rng.integers(2, min(n, 12) + 1))
        k = int(rng.integers(1, m))
        av = float(rng.uniform(0.0, 0.95))
        mult = max(mult, _rel(mult_recursion_check(n, m, av, k), build_log_table(av, n, t_max=m).S(n, m)))
    zero = build_log_table(0.0, 12, t_max=12)
    first_kind = all(
        round(zero.S(n, m)) == c and _rel(zero.S(n, m), c) < 1e-13
        for n in range(1, 13)
        for m, c in enumerate(_rising_factorial_coefficients(n))
        if m >= 1
    )
    ok = explicit <= 1e-9 and ratio <= 1e-6 and mult <= 1e-10 and first_kind
    return ok, (
        f"explicit {explicit:.2e}, ratio-vs-log {ratio:.2e}, multiplicative {mult:.2e}, "
        f"a=0 integers {'exact' if first_kind else 'MISMATCH'}"
    )


RATIO_REFERENCE = {10: 0.222133, 100: 0.0201025, 1000: 0.00189684}


def check_ratio_reference(seed):
    ratios = build_ratio_table(0.5, 10000, t_max=1000)
    errs = {t: _rel(ratios.V(10000, t), v) for t, v in RATIO_REFERENCE.items()}
    vals = ", ".join(f"V(10000,{t})={ratios.V(10000, t):.6g}" for t in RATIO_REFERENCE)
    return max(errs.values()) <= 5e-5, f"{vals}; max rel err {max(errs.values()):.1e}"


def check_asymptotic(seed):
    n, m, a = 10**4, 2, 0.5
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", StirlingAccuracyWarning)
        approx = stirling_asymptotic(n, m, a)
    exact = build_log_table(a, n, t_max=m).log_S(n, m)
    err = abs(math.expm1(approx - exact))
    return err <= 0.03, f"rel err {err:.2e} at (N, M, a) = (1e4, 2, 0.5)"


def _three_item_crp_law(a, b):
    d = (b + 1) * (b + 2)
    if a == 0:
        return [2 / d, b / d, b / d, b / d, b * b / d]
    mid = (b + a) * (1 - a) / d
    return [(1 - a) * (2 - a) / d, mid, mid, mid, (b + a) * (b + 2 * a) / d]


def check_crp(seed):
    order = [(1, 1, 1), (1, 1, 2), (1, 2, 1), (1, 2, 2), (1, 2, 3)]
    pvals = []
    for a, rng in zip((0.0, 0.5), spawn_rngs(seed, 2)):
        rows = np.concatenate([o for o, _ in sample_crp_batch(PdParams(a, 1.0), 3, 200_000, rng)])
        seen, counts = np.unique(rows, axis=0, return_counts=True)
        obs = dict(zip(map(tuple, seen.tolist()), counts))
        emp = np.array([obs.get(k, 0) for k in order], dtype=float)
        pvals.append(float(stats.chisquare(emp, np.array(_three_item_crp_law(a, 1.0)) * emp.sum()).pvalue))
    return min(pvals) > 1e-3, "chi-square p = " + ", ".join(f"{p:.3f}" for p in pvals)


def check_fragcoag(seed):
    rngs = iter(spawn_rngs(seed, 4))
    out = []
    ok = True
    for a1, a2, b in ((0.5, 0.5, 1.0), (0.8, 0.25, 0.5)):
        rows = fragcoag.sample_fragmented_crd_batch(4, a1, a2, b, 200_000, next(rngs))
        l1f, pf = exact_vs_empirical(rows, PdParams(a1, b))
        rows = fragcoag.sample_coagulated_crd_batch(4, a1, a2, b, 200_000, next(rngs))
        l1c, pc = exact_vs_empirical(rows, PdParams(a1 * a2, b))
        ok &= max(l1f, l1c) < 0.01
        out.append(f"({a1},{a2},{b}) frag L1={l1f:.4f} p={pf:.3f}, coag L1={l1c:.4f} p={pc:.3f}")
    return ok, "; ".join(out)


def check_tree(seed):
    r1, r2 = spawn_rngs(seed, 2)
    depth2 = fragcoag.sample_tree_levels_batch(4, (0.3, 0.6), 1.0, 2, 200_000, r1)[1]
    l1, p = exact_vs_empirical(depth2, PdParams(0.6, 1.0))
    N, b = 10**4, 50.0
    fan = [len(fragcoag.sample_tree(N, (0.0,), b, 1, r2).levels[1]) for _ in range(10**4)]
    target = b * math.log1p(N / b)
    dev = abs(np.mean(fan) / target - 1)
    ok = l1 < 0.01 and dev <= 0.02
    return ok, (
        f"depth-2 L1={l1:.4f} p={p:.3f}; root fan-out {np.mean(fan):.2f} vs "
        f"b log(1+N/b)={target:.2f} ({100 * dev:.2f}%)"
    )


def _latent_marginal(data, theta, params):
    # sum over partitions of crd * product over blocks of the shared symbol's mass
    total = 0.0
    for p in enumerate_partitions(len(data)):
        w = math.exp(crd_log_prob(p, params))
        for blk in p.blocks():
            vals = {data[i - 1] for i in blk}
            if len(vals) > 1:
                w = 0.0
                break
            w *= theta[vals.pop()]
        total += w
    return total


def _compositions(counts):
    if not counts:
        yield ()
        return
    for t in range(1, counts[0] + 1):
        for rest in _compositions(counts[1:]):
            yield (t,) + rest


def check_triangle(seed):
    theta = (0.3, 0.7)
    worst = 0.0
    for a, b in ((0.0, 1.0), (0.5, 1.0), (0.3, 2.5), (0.8, -0.5)):
        P = PdParams(a, b)
        for N in range(1, 5):
            for code in range(2**N):
                data = [(code >> i) & 1 for i in range(N)]
                part = canonicalize(data)
                symbols = [data[blk_first - 1] for blk_first in _firsts(part)]
                base_log = [math.log(theta[s]) for s in symbols]
                latent = _latent_marginal(data, theta, P)
                mult = math.fsum(
                    math.exp(evidence_multiplicities(part.counts, t, base_log, P))
                    for t in _compositions(part.counts)
                )
                ind = 0.0
                for bits in range(2**N):
                    r = [(bits >> i) & 1 for i in range(N)]
                    if all(any(r[i] for i in range(N) if part.assignments[i] == m) for m in range(1, part.M + 1)):
                        ind += math.exp(evidence_indicators(part, r, base_log, P))
                worst = max(worst, _rel(mult, latent), _rel(ind, latent))
    return worst <= 1e-10, f"max rel disagreement {worst:.2e} over N<=4, 2-symbol base"


def _firsts(part):
    seen, out = set(), []
    for i, m in enumerate(part.assignments, start=1):
        if m not in seen:
            seen.add(m)
            out.append(i)
    return out


def check_gibbs(seed):
    n, P, theta = 5, PdParams(0.5, 1.0), 0.3
    ratios = build_ratio_table(P.a, n)
    exact = multiplicity_law(n, theta, P, ratios)
    rng = np.random.default_rng(seed)
    t = 1
    hits = np.zeros(n)
    for _ in range(10**5):
        t = gibbs_resample_multiplicity(n, theta, P, ratios, rng, "indicator_step", t)
        hits[t - 1] += 1
    tv = 0.5 * float(np.abs(hits / hits.sum() - exact).sum())
    return tv < 0.01, f"total variation {tv:.4f} after 1e5 indicator steps"


def check_pdp_moments(seed, reps=10**5, atoms=1000, chunk=10**4):
    P = PdParams(0.5, 1.0)
    theta = np.array([0.3, 0.7])
    mom = pdp_moments(theta, P)
    sym_rng, gem_rng = spawn_rngs(seed, 2)
    p0, sums = [], {r: [] for r in range(2, 6)}
    for start in range(0, reps, chunk):
        w, res = sample_gem_matrix(P, min(chunk, reps - start), atoms, gem_rng)
        on0 = sym_rng.random(w.shape) < theta[0]
        p0.append((w * on0).sum(axis=1) + res * (sym_rng.random(len(res)) < theta[0]))
        for r in sums:
            sums[r].append((w**r).sum(axis=1))
    x = np.concatenate(p0)
    n = len(x)
    z = []
    z.append((x.mean() - mom.mean[0]) / (x.std() / math.sqrt(n)))
    dev = (x - x.mean()) ** 2
    z.append((dev.mean() - mom.variance[0]) / (dev.std() / math.sqrt(n)))
    # with two symbols p_1 = 1 - p_0, so the covariance is -Var[p_0]
    cov = -(x - x.mean()) ** 2
    z.append((cov.mean() - mom.covariance[0, 1]) / (cov.std() / math.sqrt(n)))
    cube = (x - x.mean()) ** 3
    z.append((cube.mean() - mom.third[0, 0, 0]) / (cube.std() / math.sqrt(n)))
    for r, parts in sums.items():
        s = np.concatenate(parts)
        z.append((s.mean() - power_sum_expectation(P, r)) / (s.std() / math.sqrt(n)))
    algebra = max(
        _rel(1 / (dirichlet_equivalent_concentration(PdParams(a, b)) + 1), (1 - a) / (b + 1))
        for a in (0.0, 0.1, 0.5, 0.9)
        for b in (-0.05, 0.5, 1.0, 10.0)
        if b > -a
    )
    zmax = float(np.max(np.abs(z)))
    ok = zmax <= 4 and algebra <= 1e-14
    labels = ["mean", "var", "cov", "third"] + [f"r={r}" for r in sums]
    return ok, "z: " + ", ".join(f"{k}={v:+.2f}" for k, v in zip(labels, z)) + f"; variance matching {algebra:.1e}"


def check_bounds(seed):
    slack = []
    ok = True
    for r in (0.3, 0.5, 0.8, 0.95):
        for N in (10**2, 10**3, 10**4, 10**6):
            s = geometric_bound(r, N) - expected_M_geometric(r, N)
            ok &= s >= 0
            slack.append(s)
    for s_ in (1.5, 2.0, 3.0):
        for N in (10**2, 10**3, 10**4, 10**6):
            s = dirichlet_series_bound(s_, N) - expected_M_zeta(s_, N)
            ok &= s >= 0
            slack.append(s)
    return ok, f"{len(slack)} points, min slack {min(slack):.3f}, max slack {max(slack):.1f}"


def check_approx(seed):
    errs = [
        _rel(approx_expected_M(PdParams(a, 50.0), 10**4), expected_M(PdParams(a, 50.0), 10**4))
        for a in (0.0, 0.5)
    ]
    return max(errs) <= 0.02, "rel err " + ", ".join(f"{e:.2%}" for e in errs)


CHECKS: dict[int, tuple[str, Callable]] = {
    1: ("exact pmf", check_exact_pmf),
    2: ("aggregation oracle", check_aggregation),
    3: ("closed-form moments", check_moments),
    4: ("Stirling cross-methods", check_stirling),
    5: ("ratio table at n=10000", check_ratio_reference),
    6: ("asymptotic Stirling", check_asymptotic),
    7: ("CRP exactness", check_crp),
    8: ("fragmentation/coagulation", check_fragcoag),
    9: ("tree marginals", check_tree),
    10: ("discrete consistency triangle", check_triangle),
    11: ("Gibbs stationarity", check_gibbs),
    12: ("PDP moments", check_pdp_moments),
    13: ("series bounds", check_bounds),
    14: ("approximation quality", check_approx),
}

QUICK = (1, 3, 4, 5, 6, 10, 14)

# wall-clock limits in seconds for the checks that carry one
RUNTIME_LIMITS = {1: 5.0, 2: 60.0, 5: 30.0, 7: 10.0, 8: 60.0}

SUITE_LIMITS = {"quick": 60.0, "full": 900.0}


def run_check(number: int, seed: int = DEFAULT_SEED) -> CheckResult:
    title, fn = CHECKS[number]
    start = time.perf_counter()
    try:
        ok, detail = fn(seed + number)
    except Exception as exc:  # a crash is a failure, reported on one line
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    elapsed = time.perf_counter() - start
    limit = RUNTIME_LIMITS.get(number)
    if limit is not None and elapsed >= limit:
        ok, detail = False, f"{detail}; took {elapsed:.1f}s, limit {limit:.0f}s"
    return CheckResult(number, title, bool(ok), detail, elapsed)


def run_suite(which: str = "quick", seed: int = DEFAULT_SEED, report: Callable[[str], None] | None = None):
    """Run a suite; returns ``(results, timing_result)``.

    The timing result is the suite's own wall-clock bound, reported as
    criterion 15.
    """
    if which not in SUITE_LIMITS:
        raise ValueError(f"unknown suite {which!r}")
    numbers = QUICK if which == "quick" else tuple(CHECKS)
    start = time.perf_counter()
    results = []
    for k in numbers:
        res = run_check(k, seed)
        results.append(res)
        if report:
            report(res.line())
    elapsed = time.perf_counter() - start
    limit = SUITE_LIMITS[which]
    timing = CheckResult(15, f"{which} suite runtime", elapsed < limit, f"{elapsed:.1f}s (limit {limit:.0f}s)", elapsed)
    if report:
        report(timing.line())
    return results, timing

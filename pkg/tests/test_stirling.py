import io
import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pdptools.errors import CoverageError, InvalidParameterError, ResourceCapError
from pdptools.stirling import (
    DENSE_T,
    StirlingAccuracyWarning,
    build_log_table,
    build_ratio_table,
    mult_recursion_check,
    stirling_asymptotic,
    stirling_explicit,
)


def test_small_values_at_a_zero():
    t = build_log_table(0.0, 6, t_max=6)
    assert t.S(3, 2) == pytest.approx(3, rel=1e-14)
    assert t.S(4, 2) == pytest.approx(11, rel=1e-14)
    assert t.S(5, 5) == pytest.approx(1, rel=1e-14)


def test_small_values_at_half():
    t = build_log_table(0.5, 6, t_max=6)
    assert t.S(3, 2) == pytest.approx(1.5, rel=1e-14)
    assert t.S(3, 1) == pytest.approx(0.75, rel=1e-14)  # (1 - a)_2


def test_boundary_values():
    t = build_log_table(0.4, 10, t_max=10)
    assert t.log_S(0, 0) == 0.0
    assert t.log_S(5, 0) == -math.inf
    assert t.log_S(3, 7) == -math.inf
    assert all(t.log_S(n, n) == pytest.approx(0.0, abs=1e-14) for n in range(11))


def test_coverage_errors_name_the_entry():
    t = build_log_table(0.5, 20, t_max=5)
    with pytest.raises(CoverageError, match=r"n=25, t=3"):
        t.log_S(25, 3)
    with pytest.raises(CoverageError, match=r"n=10, t=7"):
        t.log_S(10, 7)


def test_memory_cap_refuses_before_allocating():
    with pytest.raises(ResourceCapError):
        build_log_table(0.5, 10**6, t_max=10**6)
    with pytest.raises(ResourceCapError):
        build_ratio_table(0.5, 1000, memory_cap=1000)


@pytest.mark.parametrize("a", [0.0, 0.25, 0.9])
def test_row_sums_satisfy_generating_identity(a):
    # sum_t S^n_t (b|a)_t = (b)_n: the partition-size pmf is normalised
    b, n = 1.7, 40
    t = build_log_table(a, n, t_max=n)
    terms = [t.log_S(n, m) + sum(math.log(b + i * a) for i in range(m)) for m in range(1, n + 1)]
    top = max(terms)
    lhs = top + math.log(math.fsum(math.exp(v - top) for v in terms))
    rhs = sum(math.log(b + i) for i in range(n))
    assert lhs == pytest.approx(rhs, rel=1e-12)


@given(st.floats(0.05, 0.95), st.integers(1, 40), st.integers(1, 4))
def test_explicit_form_agrees_with_recursion(a, n, m):
    t = build_log_table(a, 40, t_max=4)
    if m > n:
        assert stirling_explicit(n, m, a) == 0.0
    else:
        assert stirling_explicit(n, m, a) == pytest.approx(t.S(n, m), rel=1e-9)


def test_explicit_form_guards():
    with pytest.raises(InvalidParameterError):
        stirling_explicit(10, 2, 0.0)
    with pytest.raises(InvalidParameterError):
        stirling_explicit(40, 26, 0.5)


@given(st.floats(0.0, 0.95), st.integers(4, 60), st.data())
def test_multiplicative_recursion(a, n, data):
    m = data.draw(st.integers(2, min(n, 10)))
    k = data.draw(st.integers(1, m - 1))
    t = build_log_table(a, n, t_max=m)
    assert mult_recursion_check(n, m, a, k, t) == pytest.approx(t.S(n, m), rel=1e-10)


@given(st.floats(0.0, 0.95), st.integers(70, 400), st.sampled_from([2, 3, 7, 16]))
def test_striped_table_reproduces_dense(a, n_max, stripe):
    dense = build_log_table(a, n_max, t_max=n_max)
    striped = build_log_table(a, n_max, t_max=n_max, stripe=stripe)
    rng = np.random.default_rng(n_max)
    for _ in range(25):
        n = int(rng.integers(0, n_max + 1))
        t = int(rng.integers(0, n + 1))
        assert striped.log_S(n, t) == pytest.approx(dense.log_S(n, t), rel=1e-12, abs=1e-12)
    n = n_max - 1
    assert np.allclose(striped.row(n), dense.row(n), rtol=1e-12, atol=1e-12)


def test_striping_saves_memory_on_large_tables():
    dense = build_log_table(0.5, 3000, t_max=3000)
    striped = build_log_table(0.5, 3000, t_max=3000, stripe=16)
    assert striped.nbytes < dense.nbytes / 5
    assert striped.log_S(2999, 1500) == pytest.approx(dense.log_S(2999, 1500), rel=1e-12)


def test_striped_storage_layout():
    t = build_log_table(0.5, 300, t_max=300, stripe=10)
    assert t.is_stored(123, DENSE_T)
    assert not t.is_stored(123, DENSE_T + 1)
    assert t.is_stored(120, 200)


def test_ratio_table_matches_log_table():
    a = 0.3
    logt = build_log_table(a, 500, t_max=500)
    ratios = build_ratio_table(a, 500)
    for n in (2, 10, 99, 500):
        for t in range(2, n + 1, 7):
            assert ratios.V(n, t) == pytest.approx(math.exp(logt.log_S(n, t) - logt.log_S(n, t - 1)), rel=1e-9)
            assert ratios.U(n, t) == pytest.approx(math.exp(logt.log_S(n + 1, t) - logt.log_S(n, t)), rel=1e-9) if n < 500 else True


def test_ratio_table_u_first_column():
    r = build_ratio_table(0.5, 10)
    assert r.U(4, 1) == 3.5


def test_ratio_table_single_precision():
    r32 = build_ratio_table(0.5, 300, dtype=np.float32)
    r64 = build_ratio_table(0.5, 300)
    assert r32.dtype == np.float32
    assert r32.V(300, 50) == pytest.approx(r64.V(300, 50), rel=1e-3)


def test_ratio_table_domain():
    r = build_ratio_table(0.5, 10, t_max=4)
    with pytest.raises(InvalidParameterError):
        r.V(5, 1)
    with pytest.raises(CoverageError):
        r.V(8, 6)


def test_asymptotic_form_and_warning():
    exact = build_log_table(0.5, 10**4, t_max=2).log_S(10**4, 2)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        approx = stirling_asymptotic(10**4, 2, 0.5)
    assert abs(math.expm1(approx - exact)) < 0.03
    with pytest.warns(StirlingAccuracyWarning):
        stirling_asymptotic(100, 5, 0.5)


def test_csv_round_trip():
    t = build_log_table(0.37, 30, t_max=30)
    text = t.to_csv()
    lines = text.splitlines()
    assert lines[0] == "n,t,log_S"
    for line in lines[1:]:
        n, m, v = line.split(",")
        assert float(v) == t.log_S(int(n), int(m))
    buf = io.StringIO()
    build_ratio_table(0.37, 30).to_csv(buf)
    n, m, v = buf.getvalue().splitlines()[-1].split(",")
    assert float(v) == build_ratio_table(0.37, 30).V(int(n), int(m))

"""Compiled and pure-Python kernels must agree."""

import os
import subprocess
import sys

import numpy as np
import pytest

from pdptools import kernels
from pdptools.core import PdParams
from pdptools.samplers import crp_assignments, sample_crp_batch
from pdptools.stirling import build_log_table, build_ratio_table

needs_compiled = pytest.mark.skipif(kernels.compiled_kernels is None, reason="extension not built")


@needs_compiled
@pytest.mark.parametrize("a", [0.0, 0.5, 0.93])
@pytest.mark.parametrize("stripe", [1, 5])
def test_log_tables_agree_to_rounding(a, stripe):
    c = build_log_table(a, 300, t_max=200, stripe=stripe, backend="compiled")
    p = build_log_table(a, 300, t_max=200, stripe=stripe, backend="python")
    # vectorised exp/log in NumPy and libm may round the last bit differently
    assert np.array_equal(np.isinf(c._rows), np.isinf(p._rows))
    assert np.allclose(c._rows, p._rows, rtol=1e-14, atol=1e-14)
    if stripe > 1:
        assert np.allclose(c._dense, p._dense, rtol=1e-14, atol=1e-14)


@needs_compiled
@pytest.mark.parametrize("a", [0.0, 0.5, 0.93])
def test_ratio_tables_identical(a):
    c = build_ratio_table(a, 400, t_max=300, backend="compiled")
    p = build_ratio_table(a, 400, t_max=300, backend="python")
    assert np.array_equal(c._V, p._V)


@needs_compiled
@pytest.mark.parametrize("a,b", [(0.0, 1.0), (0.5, -0.25), (0.7, 30.0)])
def test_crp_seating_identical(a, b):
    P = PdParams(a, b)
    for seed in range(5):
        x = crp_assignments(P, 2000, np.random.default_rng(seed), backend="compiled")
        y = crp_assignments(P, 2000, np.random.default_rng(seed), backend="python")
        assert np.array_equal(x, y)


@needs_compiled
def test_crp_batch_identical():
    P = PdParams(0.4, 2.0)
    (cx, mx), = sample_crp_batch(P, 50, 200, np.random.default_rng(9), backend="compiled")
    (py, my), = sample_crp_batch(P, 50, 200, np.random.default_rng(9), backend="python")
    assert np.array_equal(cx, py) and np.array_equal(mx, my)
    assert np.array_equal(mx, cx.max(axis=1))


def test_batch_rows_match_single_draws():
    P = PdParams(0.3, 1.0)
    rng = np.random.default_rng(4)
    (rows, _), = sample_crp_batch(P, 30, 3, rng)
    rng = np.random.default_rng(4)
    U = rng.random((3, 29))
    for r in range(3):
        out = np.empty(30, dtype=np.int64)
        kernels.active.crp_assign(P.a, P.b, 30, U[r], out)
        assert np.array_equal(out, rows[r])


def test_environment_forces_python_backend():
    env = dict(os.environ, PDPTOOLS_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "import pdptools; print(pdptools.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"


def test_unknown_backend_name():
    with pytest.raises(ValueError):
        kernels.get("fortran")

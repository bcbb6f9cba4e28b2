import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from pdptools import kernels
from pdptools.core import PdParams, canonicalize, enumerate_partitions
from pdptools.errors import InvalidParameterError, ResourceCapError
from pdptools.laws import crd_log_prob
from pdptools.samplers import (
    GemStick,
    NonAtomicBase,
    WeightVector,
    crp_transition,
    posterior_dirichlet_params,
    posterior_stick_params,
    predictive,
    sample_crp,
    sample_from_gem,
    sample_gem,
    sample_gem_matrix,
    sample_pdd,
    sample_pdp,
    spawn_rngs,
)


@pytest.mark.parametrize("a,b", [(0.0, 1.0), (0.5, 1.0), (0.3, -0.2), (0.1, 20.0)])
def test_gem_weights_and_residual_account_for_all_mass(a, b):
    wv = sample_gem(PdParams(a, b), np.random.default_rng(1))
    assert np.all(wv.weights > 0)
    assert wv.residual < 1e-12 or len(wv) == 10**6
    assert math.isclose(wv.total, 1.0, rel_tol=0, abs_tol=1e-12)
    assert wv.order_tag == "size_biased"


def test_gem_truncation_contract_when_atom_cap_binds():
    # residual decays like k^(-(1-a)/a); at a = 0.9 the cap is reached first
    wv = sample_gem(PdParams(0.9, 100.0), np.random.default_rng(2), mass_epsilon=1e-12, max_atoms=10**6)
    assert len(wv) == 10**6
    assert 1e-12 < wv.residual < 1
    assert math.isclose(wv.total, 1.0, abs_tol=1e-9)


@given(st.floats(0.0, 0.95), st.floats(0.1, 20), st.integers(1, 500), st.floats(1e-9, 0.5))
def test_gem_stops_at_first_threshold(a, b, cap, eps):
    wv = sample_gem(PdParams(a, b), np.random.default_rng(0), mass_epsilon=eps, max_atoms=cap)
    assert wv.residual < eps or len(wv) == cap
    assert len(wv) <= cap
    if len(wv) > 1:
        # stopping is not late: the mass left before the final atom was above eps
        assert wv.residual + wv.weights[-1] >= eps * (1 - 1e-12)


def test_gem_rejects_bad_truncation():
    with pytest.raises(InvalidParameterError):
        sample_gem(PdParams(0.5, 1), np.random.default_rng(0), mass_epsilon=0)


def test_pdd_is_sorted_gem():
    P = PdParams(0.4, 2.0)
    g = sample_gem(P, np.random.default_rng(5))
    d = sample_pdd(P, np.random.default_rng(5))
    assert d.order_tag == "sorted"
    assert np.all(np.diff(d.weights) <= 0)
    assert np.array_equal(np.sort(g.weights), np.sort(d.weights))


def test_weight_vector_is_read_only():
    wv = WeightVector(np.array([0.5, 0.25]), 0.25)
    with pytest.raises(ValueError):
        wv.weights[0] = 1.0
    with pytest.raises(InvalidParameterError):
        WeightVector(np.array([1.0]), 0.0, "random")


def test_gem_matrix_rows():
    w, res = sample_gem_matrix(PdParams(0.5, 1.0), 20, 300, np.random.default_rng(3))
    assert w.shape == (20, 300)
    assert np.allclose(w.sum(axis=1) + res, 1.0, atol=1e-12)


def test_spawned_streams_depend_only_on_seed_and_index():
    a = spawn_rngs(7, 3)
    b = spawn_rngs(7, 10)
    for x, y in zip(a, b):
        assert x.random() == y.random()
    assert spawn_rngs(7, 2)[0].random() != spawn_rngs(8, 2)[0].random()


def test_crp_is_deterministic_for_seed():
    P = PdParams(0.5, 1.0)
    assert sample_crp(P, 100, np.random.default_rng(1)) == sample_crp(P, 100, np.random.default_rng(1))


def test_predictive_probabilities():
    P = PdParams(0.5, 1.0)
    new, old = predictive(P, canonicalize([1, 1, 2]))
    assert new == pytest.approx(2.0 / 4.0)
    assert old == pytest.approx([1.5 / 4, 0.5 / 4])
    assert predictive(P, None) == (1.0, pytest.approx(np.zeros(0)))
    new, old = crp_transition(P, [3, 1])
    assert new + old.sum() == pytest.approx(1.0)


def _seat(P, u):
    out = np.empty(len(u) + 1, dtype=np.int64)
    kernels.active.crp_assign(P.a, P.b, len(u) + 1, np.asarray(u, dtype=np.float64), out)
    return out


@given(st.floats(0.0, 0.9), st.floats(0.05, 5.0), st.lists(st.integers(0, 3), min_size=1, max_size=12))
def test_kernel_seats_with_predictive_probabilities(a, b, choices):
    """The uniform-to-label map of the sampler partitions [0, 1) into
    intervals whose lengths are the predictive probabilities."""
    P = PdParams(a, b)
    prefix = []
    counts = [1]
    for c in choices:
        n = sum(counts)
        new, old = crp_transition(P, counts)
        probs = list(old) + [new]
        m = min(c, len(counts))
        lo = sum(probs[:m])
        prefix.append(lo + probs[m] / 2)
        if m == len(counts):
            counts.append(1)
        else:
            counts[m] += 1
    labels = _seat(P, prefix)
    assert tuple(np.bincount(labels)[1:]) == tuple(counts)

    def label_at(u):
        return int(_seat(P, prefix + [u])[-1])

    new, old = crp_transition(P, counts)
    expected = list(old) + [new]
    edges = [0.0]
    for m in range(1, len(counts) + 1):
        lo, hi = edges[-1], 1.0
        for _ in range(60):
            mid = (lo + hi) / 2
            if label_at(mid) <= m:
                lo = mid
            else:
                hi = mid
        edges.append(hi)
    edges.append(1.0)
    assert np.allclose(np.diff(edges), expected, atol=1e-12)


def _chi2_against_crd(parts_seen, P, N):
    parts = enumerate_partitions(N)
    exact = np.array([math.exp(crd_log_prob(p, P)) for p in parts])
    index = {p: i for i, p in enumerate(parts)}
    obs = np.zeros(len(parts))
    for p in parts_seen:
        obs[index[p]] += 1
    return stats.chisquare(obs, exact * obs.sum()).pvalue


def test_stick_indices_have_crd_law():
    P = PdParams(0.5, 1.0)
    rng = np.random.default_rng(11)
    seen = [sample_from_gem(P, 4, rng)[0] for _ in range(20000)]
    assert _chi2_against_crd(seen, P, 4) > 1e-3


def test_crp_has_crd_law_with_negative_concentration():
    P = PdParams(0.6, -0.4)
    rng = np.random.default_rng(12)
    seen = [sample_crp(P, 4, rng) for _ in range(20000)]
    assert _chi2_against_crd(seen, P, 4) > 1e-3


def test_gem_stick_extends_lazily():
    stick = GemStick(PdParams(0.5, 1.0), np.random.default_rng(0))
    assert stick.draw(0.0) == 0
    k = stick.k
    stick.draw(0.999)
    assert stick.k > k
    assert stick.residual < 1e-3
    assert math.isclose(stick.weights.sum() + stick.residual, 1.0, abs_tol=1e-12)


def test_gem_stick_atom_cap():
    stick = GemStick(PdParams(0.5, 1.0), np.random.default_rng(0), max_atoms=100)
    with pytest.raises(ResourceCapError):
        stick.draw(1 - 1e-9)


def test_pdp_data_repeat_within_blocks_only():
    data, part = sample_pdp(PdParams(0.5, 1.0), NonAtomicBase(), 200, np.random.default_rng(4))
    assert canonicalize(data) == part
    assert len(set(data)) == part.M


def test_posterior_parameters():
    P = PdParams(0.5, 1.0)
    part = canonicalize([1, 1, 2, 1, 3])
    assert posterior_dirichlet_params(P, part).tolist() == [2.5, 0.5, 0.5, 2.5]
    assert posterior_stick_params(P, part) == [(2.5, 1.5 + 2), (0.5, 2.0 + 1), (0.5, 2.5)]

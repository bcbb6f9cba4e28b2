import json
import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import chisquare

from pdptools.core import PdParams, SizeBiasedPartition, enumerate_partitions
from pdptools.errors import InvalidParameterError, InvalidPartitionError
from pdptools.fragcoag import (
    canonical_rows,
    coagulate,
    fragment,
    grouped_crp_batch,
    sample_coagulated_crd,
    sample_coagulated_crd_batch,
    sample_crd,
    sample_fragmented_crd,
    sample_fragmented_crd_batch,
    sample_tree,
    sample_tree_levels_batch,
    validate_schedule,
)
from pdptools.laws import crd_log_prob, partition_size_pmf

FINE = [set("a"), set("bfj"), set("c"), set("dk"), set("em"), set("g"), set("hi"), set("lo"), set("n")]


def _as_sets(blocks):
    return sorted((set(b) for b in blocks), key=lambda s: sorted(s))


def test_coagulation_worked_example():
    out = coagulate(FINE, [{1, 4, 9}, {2, 7}, {3, 5, 8}, {6}])
    assert _as_sets(out) == _as_sets([set("adkn"), set("bfhij"), set("celmo"), set("g")])


def test_fragmenting_back_recovers_the_fine_blocks():
    coarse = [set("adkn"), set("bfhij"), set("celmo"), set("g")]
    subs = [[set("a"), set("dk"), set("n")], [set("bfj"), set("hi")], [set("c"), set("em"), set("lo")], [set("g")]]
    assert _as_sets(fragment(coarse, subs)) == _as_sets(FINE)


def test_trivial_operations_are_identities():
    assert _as_sets(fragment(FINE, [[b] for b in FINE])) == _as_sets(FINE)
    assert _as_sets(coagulate(FINE, [{m} for m in range(1, len(FINE) + 1)])) == _as_sets(FINE)
    assert _as_sets(coagulate(FINE, [set(range(1, len(FINE) + 1))])) == [set("abcdefghijklmno")]


def test_operator_errors():
    with pytest.raises(InvalidPartitionError):
        coagulate(FINE, [{1, 2}, {3, 10}])
    with pytest.raises(InvalidPartitionError):
        coagulate(FINE, [{1, 2}])
    with pytest.raises(InvalidPartitionError):
        fragment([{1, 2}, {3}], [[{1}, {2}]])
    with pytest.raises(InvalidPartitionError):
        fragment([{1, 2}, {3}], [[{1}], [{3}]])
    with pytest.raises(InvalidPartitionError):
        fragment([{1, 2}, {2, 3}], [[{1, 2}], [{2, 3}]])


@st.composite
def nested_pair(draw):
    n = draw(st.integers(1, 12))
    fine_labels = draw(st.lists(st.integers(0, 5), min_size=n, max_size=n))
    fine = [set(i for i in range(n) if fine_labels[i] == k) for k in sorted(set(fine_labels))]
    group = draw(st.lists(st.integers(0, 3), min_size=len(fine), max_size=len(fine)))
    return fine, group


@given(nested_pair())
def test_coagulate_then_fragment_round_trip(pair):
    fine, group = pair
    keys = sorted(set(group))
    Q = [{m + 1 for m, g in enumerate(group) if g == k} for k in keys]
    coarse = coagulate(fine, Q)
    subs = [[fine[m - 1] for m in sorted(q)] for q in Q]
    assert _as_sets(fragment(coarse, subs)) == _as_sets(fine)
    assert sum(len(b) for b in coarse) == sum(len(b) for b in fine)


def test_sample_crd_partitions_its_items():
    items = ["x", "y", "z", "w"]
    blocks = sample_crd(items, 0.5, 1.0, np.random.default_rng(0))
    assert set().union(*blocks) == set(items)
    assert sum(len(b) for b in blocks) == len(items)


def _law_pvalue(rows, params):
    N = rows.shape[1]
    exact = {p.assignments: math.exp(crd_log_prob(p, params)) for p in enumerate_partitions(N)}
    seen = Counter(map(tuple, canonical_rows(rows).tolist()))
    assert set(seen) <= set(exact)
    keys = sorted(exact)
    obs = np.array([seen.get(k, 0) for k in keys], dtype=float)
    return chisquare(obs, np.array([exact[k] for k in keys]) * len(rows)).pvalue


@pytest.mark.parametrize("a1,a2,b", [(0.5, 0.4, 1.0), (0.7, 0.2, -0.1), (0.3, 0.0, 2.0)])
def test_fragmented_batch_has_the_fine_law(a1, a2, b):
    rows = sample_fragmented_crd_batch(4, a1, a2, b, 40_000, np.random.default_rng(1))
    assert _law_pvalue(rows, PdParams(a1, b)) > 1e-3


@pytest.mark.parametrize("a1,a2,b", [(0.5, 0.4, 1.0), (0.7, 0.2, -0.1), (0.3, 0.5, 2.0)])
def test_coagulated_batch_has_the_coarse_law(a1, a2, b):
    rows = sample_coagulated_crd_batch(4, a1, a2, b, 40_000, np.random.default_rng(2))
    assert _law_pvalue(rows, PdParams(a1 * a2, b)) > 1e-3


def test_scalar_samplers_match_their_laws():
    rng = np.random.default_rng(3)
    frag = np.array([sample_fragmented_crd(3, 0.5, 0.4, 1.0, rng).assignments for _ in range(4000)])
    coag = np.array([sample_coagulated_crd(3, 0.5, 0.4, 1.0, rng).assignments for _ in range(4000)])
    assert _law_pvalue(frag, PdParams(0.5, 1.0)) > 1e-3
    assert _law_pvalue(coag, PdParams(0.2, 1.0)) > 1e-3


def test_sampler_parameter_checks():
    rng = np.random.default_rng(0)
    with pytest.raises(InvalidParameterError):
        sample_fragmented_crd(4, 0.0, 0.5, 1.0, rng)
    with pytest.raises(InvalidParameterError):
        sample_coagulated_crd(4, 0.5, 1.0, 1.0, rng)
    with pytest.raises(InvalidParameterError):
        sample_fragmented_crd_batch(4, 0.5, 0.5, -0.3, 10, rng)


def test_canonical_rows_relabel_by_first_appearance():
    got = canonical_rows(np.array([[7, 7, 3, 9, 3], [2, 1, 2, 1, 5]]))
    assert got.tolist() == [[1, 1, 2, 3, 2], [1, 2, 1, 2, 3]]


def test_grouped_crp_labels_each_group_separately():
    groups = np.array([[0, 1, 0, 1, 2, 2, 0]] * 50)
    sub = grouped_crp_batch(groups, 0.5, 1.0, np.random.default_rng(0))
    for g_row, s_row in zip(groups, sub):
        for g in range(3):
            labels = s_row[g_row == g].tolist()
            firsts = list(dict.fromkeys(labels))
            assert firsts == list(range(len(firsts)))


SCHEDULE = (0.2, 0.5, 0.8)


def test_tree_levels_nest_and_cover():
    tree = sample_tree(30, SCHEDULE, 1.0, 3, np.random.default_rng(5))
    assert tree.maxdepth == 3
    for d in range(4):
        items = np.sort(np.concatenate(tree.levels[d]))
        assert items.tolist() == list(range(1, 31))
    for d in range(1, 4):
        for node, parent in zip(tree.levels[d], tree.parents[d]):
            assert set(node.tolist()) <= set(tree.levels[d - 1][parent].tolist())
        assert len(tree.levels[d]) >= len(tree.levels[d - 1])
    assert tree.children_counts(0).tolist() == [len(tree.levels[1])]


def test_tree_json_shape():
    tree = sample_tree(12, SCHEDULE, 1.0, 3, np.random.default_rng(6))
    doc = json.loads(tree.to_json())
    ids = [n["id"] for n in doc["nodes"]]
    assert len(ids) == len(set(ids))
    assert len(doc["edges"]) == len(doc["nodes"]) - 1
    known = set(ids)
    assert all(e["child"] in known and e["parent"] in known for e in doc["edges"])
    assert {n["depth"] for n in doc["nodes"]} == {0, 1, 2, 3}


def test_tree_is_reproducible():
    t1 = sample_tree(40, SCHEDULE, 1.0, 3, np.random.default_rng(9)).to_json()
    t2 = sample_tree(40, SCHEDULE, 1.0, 3, np.random.default_rng(9)).to_json()
    assert t1 == t2


def test_single_item_tree():
    tree = sample_tree(1, SCHEDULE, 1.0, 3, np.random.default_rng(0))
    assert [len(level) for level in tree.levels] == [1, 1, 1, 1]


@pytest.mark.parametrize("depth", [1, 2, 3])
def test_depth_cuts_follow_their_crd(depth):
    levels = sample_tree_levels_batch(4, SCHEDULE, 1.0, 3, 40_000, np.random.default_rng(depth))
    assert _law_pvalue(levels[depth - 1], PdParams(SCHEDULE[depth - 1], 1.0)) > 1e-3


def test_scalar_tree_depth_cut_law():
    rng = np.random.default_rng(12)
    rows = np.array([sample_tree(3, SCHEDULE[:2], 1.0, 2, rng).depth_partition(2).assignments for _ in range(4000)])
    assert _law_pvalue(rows, PdParams(0.5, 1.0)) > 1e-3


def test_fan_out_follows_partition_size_law():
    # a depth-1 node holding n items has CRD(n; a_2, -a_1) children
    rng = np.random.default_rng(13)
    n_target, fan = 3, Counter()
    for _ in range(3000):
        tree = sample_tree(6, SCHEDULE[:2], 1.0, 2, rng)
        kids = tree.children_counts(1)
        for node, k in zip(tree.levels[1], kids):
            if len(node) == n_target:
                fan[int(k)] += 1
    pmf = partition_size_pmf(n_target, PdParams(SCHEDULE[1], -SCHEDULE[0]))
    obs = np.array([fan.get(k, 0) for k in range(1, n_target + 1)], dtype=float)
    assert obs.sum() > 500
    assert chisquare(obs, pmf * obs.sum()).pvalue > 1e-3


@pytest.mark.parametrize(
    "schedule,maxdepth,b",
    [((0.2, 0.5), 3, 1.0), ((0.5, 0.5), 2, 1.0), ((0.5, 0.3), 2, 1.0), ((0.2, 1.0), 2, 1.0), ((-0.1, 0.5), 2, 1.0), ((0.2, 0.5), 2, -0.3)],
)
def test_bad_schedules(schedule, maxdepth, b):
    with pytest.raises(InvalidParameterError):
        validate_schedule(schedule, maxdepth, b)


def test_zero_first_discount_allowed():
    assert validate_schedule((0.0, 0.5), 2, 1.0) == (0.0, 0.5)
    tree = sample_tree(20, (0.0, 0.5), 1.0, 2, np.random.default_rng(0))
    assert isinstance(tree.depth_partition(2), SizeBiasedPartition)

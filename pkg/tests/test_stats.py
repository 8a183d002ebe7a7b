import itertools
import math

import numpy as np
import pytest

from progressa.errors import BootstrapStarvationError, DegenerateUnitError, ParameterError
from progressa.matrix import estimate_probabilities, matrix_from_array
from progressa.stats import (
    TiesWarning,
    assess_pairs,
    assess_selectivity,
    benjamini_hochberg,
    bootstrap_distributions,
    mann_whitney_one_sided,
    score_pair,
)


# ---------------------------------------------------------------------------
# score_pair


def test_score_pair_self():
    m = matrix_from_array([[1, 1], [1, 1], [0, 0], [1, 1]], ("x", "y"))
    p = estimate_probabilities(m)
    sp = score_pair(p, 0, 0)
    assert sp.gamma == pytest.approx(0.0)
    assert sp.lam == pytest.approx(1.0)  # P(i|i) - P(i|~i) = 1 - 0


def test_score_pair_subset_containment():
    # y strictly inside x over rows 11/10/00: hand counts give
    # gamma = 2/3 - 1/3 and lambda = 1/2 - 0
    m = matrix_from_array([[1, 1], [1, 0], [0, 0]], ("x", "y"))
    p = estimate_probabilities(m)
    sp = score_pair(p, 0, 1)
    assert sp.gamma == pytest.approx(1 / 3)
    assert sp.lam == pytest.approx(1 / 2)


def test_score_pair_independent_columns():
    rows = [[1, 1], [1, 1], [1, 0], [1, 0], [0, 1], [0, 1], [0, 0], [0, 0]]
    p = estimate_probabilities(matrix_from_array(rows, ("x", "y")))
    sp = score_pair(p, 0, 1)
    assert sp.gamma == pytest.approx(0.0)
    assert sp.lam == pytest.approx(0.0)


def test_score_pair_degenerate_unit():
    m = matrix_from_array([[1, 0], [1, 1]], ("x", "y"))
    with pytest.raises(DegenerateUnitError):
        score_pair(estimate_probabilities(m), 0, 1)


def test_subset_containment_monotonicity_property():
    # strict subset support implies positive margins, for any such pair
    rng = np.random.default_rng(11)
    for _ in range(40):
        m = int(rng.integers(6, 40))
        parent = (rng.random(m) < rng.uniform(0.3, 0.9)).astype(np.uint8)
        if parent.sum() < 2 or parent.sum() == m:
            continue
        child = parent.copy()
        on = np.nonzero(parent)[0]
        child[on[rng.integers(0, len(on))]] = 0  # strictly smaller support
        if child.sum() == 0:
            continue
        p = estimate_probabilities(np.column_stack([parent, child]))
        sp = score_pair(p, 0, 1)
        assert sp.gamma > 0
        assert sp.lam > 0


# ---------------------------------------------------------------------------
# Mann-Whitney


def _mw_oracle(x, y):
    """Exhaustive tie-conditioned permutation mid-p for the rank-sum of x."""
    pooled = list(x) + list(y)
    n1 = len(x)
    # midranks
    order = sorted(range(len(pooled)), key=lambda i: pooled[i])
    ranks = [0.0] * len(pooled)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and pooled[order[j + 1]] == pooled[order[i]]:
            j += 1
        for k in range(i, j + 1):
            ranks[order[k]] = (i + j) / 2 + 1
        i = j + 1
    obs = sum(ranks[:n1])
    greater = equal = total = 0
    for combo in itertools.combinations(range(len(pooled)), n1):
        s = sum(ranks[k] for k in combo)
        total += 1
        if s > obs + 1e-9:
            greater += 1
        elif abs(s - obs) <= 1e-9:
            equal += 1
    return (greater + 0.5 * equal) / total


def test_mw_exact_matches_enumeration_oracle_all_small_sizes():
    rng = np.random.default_rng(3)
    for n1 in range(1, 8):
        for n2 in range(1, 8):
            for _ in range(3):
                x = rng.integers(0, 5, size=n1).astype(float)
                y = rng.integers(0, 5, size=n2).astype(float)
                got = mann_whitney_one_sided(x, y)
                want = _mw_oracle(x, y)
                assert got == pytest.approx(want, abs=1e-12), (x, y)


def test_mw_complete_separation():
    x = np.arange(1, 31, dtype=float)
    y = x - 100.0
    assert mann_whitney_one_sided(x, y) < 1e-6
    assert mann_whitney_one_sided(y, x) > 1 - 1e-6


def test_mw_identical_vectors_give_half():
    x = np.array([1.0, 2.0, 3.0])
    assert mann_whitney_one_sided(x, x.copy()) == pytest.approx(0.5)


def test_mw_all_values_identical_warns():
    with pytest.warns(TiesWarning):
        p = mann_whitney_one_sided([2.0, 2.0], [2.0, 2.0, 2.0])
    assert p == 0.5


def test_mw_empty_sample_rejected():
    with pytest.raises(ParameterError):
        mann_whitney_one_sided([], [1.0])


def test_mw_antisymmetry():
    rng = np.random.default_rng(7)
    for _ in range(20):
        x = rng.integers(0, 6, size=int(rng.integers(2, 7))).astype(float)
        y = rng.integers(0, 6, size=int(rng.integers(2, 7))).astype(float)
        s = mann_whitney_one_sided(x, y) + mann_whitney_one_sided(y, x)
        assert s == pytest.approx(1.0, abs=1e-12)  # exact branch, mid-p
    # normal branch: sum >= 1, so both directions can never be accepted
    for _ in range(10):
        x = rng.normal(size=25)
        y = rng.normal(size=30)
        s = mann_whitney_one_sided(x, y) + mann_whitney_one_sided(y, x)
        assert s >= 1.0 - 1e-12


def test_benjamini_hochberg_known_values():
    p = np.array([0.01, 0.04, 0.03, 0.005])
    adj = benjamini_hochberg(p)
    assert adj[3] == pytest.approx(0.02)
    assert adj[0] == pytest.approx(0.02)
    assert adj[1] == pytest.approx(0.04)
    assert adj[2] == pytest.approx(0.04)


# ---------------------------------------------------------------------------
# bootstrap


def _chain_matrix(m, seed, pa=0.8, pb_given_a=0.7):
    rng = np.random.default_rng(seed)
    a = (rng.random(m) < pa).astype(np.uint8)
    b = ((rng.random(m) < pb_given_a) & (a == 1)).astype(np.uint8)
    return np.column_stack([a, b])


def test_bootstrap_k_and_determinism():
    data = _chain_matrix(200, 1)
    d1 = bootstrap_distributions(data, ("a", "b"), k=100, seed=9)
    d2 = bootstrap_distributions(data, ("a", "b"), k=100, seed=9)
    assert d1.marginals.shape == (100, 2)
    assert d1.joints.shape == (100, 2, 2)
    assert np.array_equal(d1.marginals, d2.marginals)
    assert np.array_equal(d1.joints, d2.joints)
    d3 = bootstrap_distributions(data, ("a", "b"), k=100, seed=10)
    assert not np.array_equal(d1.marginals, d3.marginals)


def test_bootstrap_rejection_criterion_holds():
    data = _chain_matrix(40, 2)
    d = bootstrap_distributions(data, ("a", "b"), k=60, seed=5)
    assert np.all(d.marginals > 0) and np.all(d.marginals < 1)
    # no retained resample may have identical columns
    pij = d.joints[:, 0, 1]
    assert not np.any((pij == d.marginals[:, 0]) & (pij == d.marginals[:, 1]))


def test_bootstrap_starves_on_constant_column():
    data = np.column_stack([np.ones(30, dtype=np.uint8), _chain_matrix(30, 3)[:, 0]])
    with pytest.raises(BootstrapStarvationError) as err:
        bootstrap_distributions(data, ("ones", "a"), k=10, seed=0)
    assert "ones" in err.value.units


def test_bootstrap_starves_on_identical_columns():
    a = _chain_matrix(30, 4)[:, 0]
    data = np.column_stack([a, a])
    with pytest.raises(BootstrapStarvationError) as err:
        bootstrap_distributions(data, ("a", "copy"), k=10, seed=0)
    assert set(err.value.units) == {"a", "copy"}


def test_bootstrap_invalid_k():
    with pytest.raises(ParameterError):
        bootstrap_distributions(_chain_matrix(10, 5), ("a", "b"), k=0)


# ---------------------------------------------------------------------------
# selectivity assessment


def test_assess_chain_direction():
    # a -> b with P(a)=0.9, P(b|a)=0.8 at m=500: a->b accepted, b->a not
    rng = np.random.default_rng(21)
    a = (rng.random(500) < 0.9).astype(np.uint8)
    b = ((rng.random(500) < 0.8) & (a == 1)).astype(np.uint8)
    data = np.column_stack([a, b])
    probs = estimate_probabilities(data)
    dists = bootstrap_distributions(data, ("a", "b"), k=100, seed=33)
    fwd = assess_selectivity(dists, 0, 1, probs)
    rev = assess_selectivity(dists, 1, 0, probs)
    assert fwd.significant(0.05)
    assert fwd.gamma > 0 and fwd.lam > 0
    assert not rev.significant(0.05)
    # boundary: alpha = 0 accepts nothing
    assert not fwd.significant(0.0)


def test_assess_pairs_matches_scalar_path():
    data = _chain_matrix(300, 8)
    probs = estimate_probabilities(data)
    dists = bootstrap_distributions(data, ("a", "b"), k=100, seed=13)
    batch = assess_pairs(dists, [(0, 1), (1, 0)], probs)
    single = assess_selectivity(dists, 0, 1, probs)
    assert batch[(0, 1)].p_tp == pytest.approx(single.p_tp, abs=1e-12)
    assert batch[(0, 1)].p_pr == pytest.approx(single.p_pr, abs=1e-12)
    assert batch[(0, 1)].gamma == pytest.approx(single.gamma)


def test_acceptance_antisymmetric_under_temporal_priority():
    # at most one direction can have a significant temporal-priority test
    rng = np.random.default_rng(55)
    for trial in range(10):
        data = (rng.random((80, 3)) < rng.uniform(0.2, 0.8, size=3)).astype(np.uint8)
        try:
            dists = bootstrap_distributions(data, ("a", "b", "c"), k=50, seed=trial)
        except BootstrapStarvationError:
            continue
        probs = estimate_probabilities(data)
        pairs = [(i, j) for i in range(3) for j in range(3) if i != j]
        scores = assess_pairs(dists, pairs, probs)
        for i, j in ((0, 1), (0, 2), (1, 2)):
            assert not (scores[(i, j)].p_tp < 0.5 and scores[(j, i)].p_tp < 0.5)

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import norm

from siameseduo.active_learning import (
    BudgetTracker,
    VariableThreshold,
    budget_allows,
    budget_update,
    criterion_density_duo,
    criterion_density_s1,
    criterion_uncertainty,
    rvus_decide,
)
from siameseduo.exceptions import ConfigurationError
from siameseduo.memory import EncodingMemory, init_memory
from siameseduo.siamese import SiameseEncoderNet, SiameseHeadNet, s1_pair_prob, s2_pair_prob


def test_uncertainty_criterion():
    assert criterion_uncertainty([1, 0, 0]) == 1
    assert criterion_uncertainty(np.full(4, 0.25)) == 0.25
    assert criterion_uncertainty([0.5, 0.3, 0.2]) == 0.5


class _OneHead:
    def pair_prob(self, A, B):
        return np.ones(len(A))

    def distance_prob(self, D):
        return np.ones(len(D))


def test_density_s1(rng):
    mem = init_memory(2, 5, [(rng.normal(size=3), c) for c in (0, 1) for _ in range(5)])
    assert criterion_density_s1(np.zeros(3), mem, _OneHead(), 0) == 1
    s1 = SiameseEncoderNet(3, (8, 4), rng=rng)
    x = rng.normal(size=3)
    brute = max(s1_pair_prob(s1, x, xi) for xi in mem.queues[1])
    assert criterion_density_s1(x, mem, s1, 1) == pytest.approx(brute, abs=1e-15)
    single = init_memory(2, 5, [(np.ones(3), 0)])
    assert criterion_density_s1(x, single, s1, 0) == pytest.approx(
        s1_pair_prob(s1, x, np.ones(3)), abs=1e-15)
    assert criterion_density_s1(x, single, s1, 1) == 0.0


def test_density_duo(rng):
    enc = EncodingMemory([rng.normal(size=(5, 4)), np.zeros((0, 4))])
    assert criterion_density_duo(np.zeros(4), enc, _OneHead(), 0) == 1
    s2 = SiameseHeadNet(4, (16,), rng=rng)
    z = rng.normal(size=4)
    brute = max(s2_pair_prob(s2, z, e) for e in enc.per_class[0])
    assert criterion_density_duo(z, enc, s2, 0) == pytest.approx(brute, abs=1e-15)
    assert criterion_density_duo(z, enc, s2, 1) == 0.0


def test_rvus_deterministic_branches(rng):
    thr = VariableThreshold(theta=1.0, step=0.01, std=0.0)
    d = rvus_decide(0.5, thr, rng)
    assert d.query and d.theta_after == pytest.approx(0.99)
    # the default clamp keeps theta <= 1; with a wider bound the unclamped update shows
    wide = VariableThreshold(theta=1.0, step=0.01, std=0.0, theta_max=2.0)
    d = rvus_decide(1.5, wide, rng)
    assert not d.query and d.theta_after == pytest.approx(1.01)
    d = rvus_decide(1.5, thr, rng)
    assert not d.query and d.theta_after == 1.0


def test_rvus_reproducible():
    thr = VariableThreshold()
    a = [rvus_decide(v, thr, np.random.default_rng(3)).query for v in np.linspace(0, 1, 20)]
    b = [rvus_decide(v, thr, np.random.default_rng(3)).query for v in np.linspace(0, 1, 20)]
    assert a == b


def test_rvus_does_not_mutate_threshold(rng):
    thr = VariableThreshold(theta=0.5)
    rvus_decide(0.1, thr, rng)
    assert thr.theta == 0.5


@given(st.lists(st.floats(0, 1), max_size=300), st.integers(0, 1000))
@settings(max_examples=50)
def test_threshold_stays_positive(values, seed):
    rng = np.random.default_rng(seed)
    thr = VariableThreshold()
    for v in values:
        thr.theta = rvus_decide(v, thr, rng).theta_after
        assert 0 < thr.theta <= 1


@pytest.mark.parametrize("v", [0.0, 0.5, 1.0, 2.0])
@pytest.mark.parametrize("theta", [0.5, 1.0])
def test_query_rate_matches_normal_tail(v, theta):
    rng = np.random.default_rng(0)
    thr = VariableThreshold(theta=theta)
    n = 20_000
    hits = sum(rvus_decide(v, thr, rng).query for _ in range(n))
    p = norm.sf(v / theta, loc=1.0)
    assert p > 0 and hits > 0
    assert abs(hits / n - p) < 4 * np.sqrt(p * (1 - p) / n) + 1e-3


@given(st.floats(0, 1e3), st.floats(1e-6, 1))
def test_query_probability_is_positive(v, theta):
    # P(query) = P(eta > v / theta) for eta ~ N(1, 1); positive for any finite ratio
    assert norm.logsf(v / theta, loc=1.0) > -np.inf


def test_threshold_validation():
    with pytest.raises(ConfigurationError):
        VariableThreshold(step=0)
    with pytest.raises(ConfigurationError):
        VariableThreshold(theta=2.0)


def test_budget_never_query():
    tr = BudgetTracker(0.1)
    for _ in range(1000):
        budget_update(tr, False)
    assert tr.b_hat == 0


def test_budget_always_query():
    tr = BudgetTracker(0.1, window=300)
    for _ in range(5000):
        budget_update(tr, True)
    # exact rational iteration of the recurrence gives 1 - (299/300)^5000
    assert tr.b_hat == pytest.approx(0.9999999438088366, abs=1e-12)
    assert abs(tr.b_hat - 1) < 1e-3


def test_budget_every_other_step():
    tr = BudgetTracker(0.1, window=300)
    for t in range(10_000):
        budget_update(tr, t % 2 == 0)
    # fixed points 300 / 599 after a query and 299 / 599 after a skip
    assert tr.b_hat == pytest.approx(299 / 599, abs=1e-9)
    assert abs(tr.b_hat - 0.5) < 0.01


@given(st.lists(st.booleans(), max_size=2000))
@settings(max_examples=50)
def test_u_hat_bounded_by_window(queries):
    tr = BudgetTracker(0.5, window=50)
    for q in queries:
        budget_update(tr, q)
        assert 0 <= tr.u_hat <= tr.window + 1e-9
        assert tr.b_hat == tr.u_hat / tr.window


def test_budget_gate():
    assert not budget_allows(BudgetTracker(0.0))
    assert budget_allows(BudgetTracker(1.0, u_hat=299.0))
    tr = BudgetTracker(0.1, window=300, u_hat=30.0)
    assert tr.b_hat == pytest.approx(0.1) and not budget_allows(tr)


@pytest.mark.parametrize("B", [0.01, 0.05, 0.1, 0.25])
def test_budget_compliance_with_random_criteria(B):
    rng = np.random.default_rng(int(B * 100))
    tr, thr = BudgetTracker(B), VariableThreshold()
    n, queries = 10_000, 0
    for _ in range(n):
        q = False
        if budget_allows(tr):
            d = rvus_decide(rng.random(), thr, rng)
            thr.theta, q = d.theta_after, d.query
        budget_update(tr, q)
        queries += q
    assert queries / n <= B + 2 / tr.window + 0.01


def test_larger_budget_queries_at_least_as_often_on_average():
    def count(B, seed):
        rng = np.random.default_rng(seed)
        tr, thr = BudgetTracker(B), VariableThreshold()
        values = np.random.default_rng(seed + 1).random(3000)
        total = 0
        for v in values:
            q = False
            if budget_allows(tr):
                d = rvus_decide(v, thr, rng)
                thr.theta, q = d.theta_after, d.query
            budget_update(tr, q)
            total += q
        return total

    for lo, hi in [(0.01, 0.05), (0.05, 0.1), (0.1, 0.25)]:
        assert np.mean([count(hi, s) for s in range(5)]) >= np.mean(
            [count(lo, s) for s in range(5)])

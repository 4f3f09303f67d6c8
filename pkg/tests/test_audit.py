import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oraclepriv.audit import (
    alternating_stream, clopper_pearson, constant_sampler, dp_ratio_audit, empirical, error_table,
    exact_erm_sampler, expected_perturbation_norm, follow_private_leader, product_dataset,
    randomized_response_sampler, rspm_sampler, single_record_neighbors, tv_distance, tv_slack,
)
from oraclepriv.errors import CapacityError, InputError
from oraclepriv.mechanisms import rspm
from oraclepriv.oracles import FailurePolicy, coupled_run
from oraclepriv.queries import Dataset, QueryClass

CONJ2 = QueryClass("conj", 2)
MICRO = Dataset(np.array([[1, 1]] * 4 + [[0, 1]] * 4, dtype=np.int8))


@pytest.fixture(scope="module")
def micro_neighbors():
    return single_record_neighbors(MICRO, CONJ2.universe)


# -- statistics -----------------------------------------------------------


def test_clopper_pearson_known_values():
    lo, hi = clopper_pearson(5, 10, 0.05)
    assert float(lo) == pytest.approx(0.1871, abs=1e-4)
    assert float(hi) == pytest.approx(0.8129, abs=1e-4)
    lo, hi = clopper_pearson(0, 10, 0.05)
    assert float(lo) == 0.0 and float(hi) == pytest.approx(1 - 0.025 ** 0.1, abs=1e-9)


def test_tv_distance_examples():
    assert tv_distance([0.2, 0.8], [0.2, 0.8]) == 0.0
    assert tv_distance([1.0, 0.0], [0.0, 1.0]) == 1.0
    assert tv_distance({"a": 1.0}, {"b": 1.0}) == 1.0


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.01, 1), min_size=2, max_size=6), st.integers(0, 2**32 - 1))
def test_tv_is_a_metric_on_distributions(w, seed):
    p = np.array(w) / sum(w)
    q = np.random.default_rng(seed).dirichlet(np.ones(len(w)))
    t = tv_distance(p, q)
    assert 0.0 <= t <= 1.0
    assert t == pytest.approx(tv_distance(q, p))
    assert t == pytest.approx(0.5 * np.abs(p - q).sum())


def test_empirical_frequencies():
    assert list(empirical([0, 2, 2, 1], support=4)) == [0.25, 0.25, 0.5, 0.0]


# -- ratio audit ----------------------------------------------------------


def test_neighbors_cover_all_single_record_swaps(micro_neighbors):
    # replacing a (1,1) record by 3 other points and a (0,1) record by 3 others, deduplicated
    assert len(micro_neighbors) == 6
    for N in micro_neighbors:
        diff = sorted(map(tuple, MICRO.points)) != sorted(map(tuple, N.points))
        assert diff and N.n == MICRO.n


def test_constant_mechanism_passes(micro_neighbors):
    rep = dp_ratio_audit(constant_sampler(0), MICRO, micro_neighbors, 0.01, 0.0, 10_000,
                         np.random.default_rng(0), support=4)
    assert rep.passed and rep.max_log_ratio == 0.0


def test_exact_erm_fails(micro_neighbors):
    rep = dp_ratio_audit(exact_erm_sampler(CONJ2), MICRO, micro_neighbors, 1.0, 0.0, 10_000,
                         np.random.default_rng(0), support=4)
    assert not rep.passed


def test_rspm_micro_audit_passes(micro_neighbors):
    U = CONJ2.separator()
    rep = dp_ratio_audit(rspm_sampler(CONJ2, U, 1.0), MICRO, micro_neighbors, 1.0, 0.0, 50_000,
                         np.random.default_rng(1), support=4)
    assert rep.passed, rep.summary()


def test_randomized_response_calibration():
    S = Dataset(np.array([[1, 0]] * 4, dtype=np.int8))
    nbrs = [S.replace_record(0, [0, 0])]
    rng = np.random.default_rng(2)
    good = dp_ratio_audit(randomized_response_sampler(1.0), S, nbrs, 1.0, 0.0, 100_000, rng, support=2)
    bad = dp_ratio_audit(randomized_response_sampler(1.0), S, nbrs, 0.5, 0.0, 100_000, rng, support=2)
    assert good.passed and not bad.passed
    assert good.max_log_ratio == pytest.approx(1.0, abs=0.05)


def test_audit_needs_enough_trials(micro_neighbors):
    with pytest.raises(CapacityError):
        dp_ratio_audit(constant_sampler(), MICRO, micro_neighbors, 1.0, 0.0, 9_999, np.random.default_rng(0))
    with pytest.raises(InputError):
        dp_ratio_audit(constant_sampler(), MICRO, [], 1.0, 0.0, 10_000, np.random.default_rng(0))


def test_coupling_tv_bernoulli():
    cls = QueryClass("conj", 3)
    U = cls.separator()
    S = product_dataset(60, 3, (0.7, 0.5, 0.3), np.random.default_rng(0))

    def alg(D, oracle, rng):
        return rspm(D, cls, U, 1.0, oracle, rng).query

    ideal, heur = [], []
    for seed in range(2000):
        a, b = coupled_run(alg, S, cls, FailurePolicy.parse("bernoulli:0.05"), seed)
        ideal.append(cls.index_of[a])
        if b is not None:
            assert b == a
            heur.append(cls.index_of[b])
    pi, ph = empirical(ideal, 8), empirical(heur, 8)
    assert tv_distance(pi, ph) <= 0.05 + tv_slack(pi, len(ideal), ph, len(heur))


# -- regret ---------------------------------------------------------------


def test_constant_stream_regret():
    cls = QueryClass("parity", 2)
    U = cls.separator()
    stream = np.tile([[1, 0]], (100, 1))
    tr = follow_private_leader(cls, stream, U, 1.0, np.random.default_rng(0))
    assert tr.best_cumulative[-1] == 0.0  # the constant-0 parity never errs
    bound = 1.0 + expected_perturbation_norm(cls, U, 1.0, np.random.default_rng(1)) / 100
    assert tr.average_regret <= bound


def test_alternating_stream_regret_decreases():
    cls = QueryClass("parity", 2)
    U = cls.separator()
    med = {}
    for T in (500, 2000):
        stream = alternating_stream(2, T)
        med[T] = np.median([follow_private_leader(cls, stream, U, 0.1, np.random.default_rng(s)).average_regret
                            for s in range(20)])
    assert med[2000] < med[500]


def test_regret_monotone_in_T():
    cls = QueryClass("parity", 2)
    U = cls.separator()
    grid = [250, 500, 1000, 2000]
    meds = [np.median([follow_private_leader(cls, alternating_stream(2, T), U, 0.1,
                                             np.random.default_rng(s)).average_regret for s in range(20)])
            for T in grid]
    assert all(b <= a for a, b in zip(meds, meds[1:]))


def test_perturbation_norm_scale():
    cls = QueryClass("parity", 2)
    U = cls.separator()
    ez = expected_perturbation_norm(cls, U, 0.1, np.random.default_rng(0), draws=50_000)
    eta = np.random.default_rng(1).laplace(0, U.size / 0.1, (50_000, U.size))
    emax = np.abs(eta).max(axis=1).mean()
    # single-coordinate parities expose each eta_i, and |Z_q| <= sum_i |eta_i|
    assert 0.97 * emax <= ez <= 1.03 * U.size * emax


# -- error tables ---------------------------------------------------------


def test_error_table_rows():
    cls = QueryClass("conj", 3)
    rows = error_table("rspm", cls, [500, 1000], [1.0], 200, np.random.default_rng(0), p=(0.7, 0.5, 0.3))
    assert len(rows) == 2
    assert rows[0]["bound"] == pytest.approx(2 * 9 * math.log(3 / 0.05) / 500)
    assert rows[1]["bound"] == pytest.approx(rows[0]["bound"] / 2)
    for r in rows:
        assert r["p95"] <= r["bound"]
        assert set(r) == {"preset", "n", "eps", "mean", "p95", "bound"}


def test_product_dataset_marginals():
    S = product_dataset(20_000, 3, (0.9, 0.5, 0.1), np.random.default_rng(0))
    assert np.allclose(S.points.mean(axis=0), (0.9, 0.5, 0.1), atol=0.02)

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oraclepriv.audit import context_ftpl_regret, product_dataset
from oraclepriv.errors import InputError
from oraclepriv.mechanisms import MechanismOutput, rspm_bound, weighted_rspm_minimizer
from oraclepriv.oracles import CertifiableOracle, FailurePolicy, exact_oracle
from oraclepriv.queries import Dataset, QueryClass, conjunction, eval_on_dataset
from oraclepriv.synthgen import (
    DataPlayerState, best_payoff, ftpl_draw, ftpl_sample, max_query_error, negation_closure, oracle_query,
    oracle_query_budget, payoff, payoff_mixed, preset_T, private_best_response, sample_size,
)

CONJ2 = QueryClass("conj", 2)
CONJ3 = QueryClass("conj", 3)


def exact_minimizer(cls):
    def minimize(wd, rng, n_private=None):
        return MechanismOutput(exact_oracle(cls, wd).result, None, 1)

    return minimize


# -- payoffs --------------------------------------------------------------


def test_payoff_examples():
    q = conjunction(1, [0])
    S = Dataset([[1], [0]])
    assert payoff(S, [1], q) == -0.5
    x = np.array([1, 0, 1])
    for q in negation_closure(CONJ3):
        assert payoff(Dataset([x]), x, q) == 0.0


def test_mixed_payoff_matches_direct_sum():
    rng = np.random.default_rng(0)
    S = Dataset(rng.integers(0, 2, (20, 3)))
    S_hat = rng.integers(0, 2, (4, 3))
    for q in negation_closure(CONJ3):
        direct = sum(payoff(S, x, q) for x in S_hat) / 4
        assert payoff_mixed(S, S_hat, q) == pytest.approx(direct)


def test_game_value_zero_at_truth():
    """max over Q-bar of A(S, q) is exactly 0 when the data player plays S itself."""
    for d in (1, 2, 3):
        cls = QueryClass("conj", d)
        pts = np.array(list(itertools.product((0, 1), repeat=d)))
        for rows in itertools.combinations_with_replacement(range(len(pts)), 3):
            S = Dataset(pts[list(rows)])
            assert best_payoff(S, S.points, cls) == 0.0


def brute_error(S, S_hat, cls):
    best = 0.0
    for q in negation_closure(cls):
        best = max(best, abs(eval_on_dataset(q, S) - float(np.mean([q(x) for x in S_hat]))))
    return best


def test_max_query_error_examples():
    rng = np.random.default_rng(1)
    S = Dataset(rng.integers(0, 2, (100, 3)))
    assert max_query_error(S, S.points, CONJ3) == 0.0
    ones, zeros = Dataset([[1]] * 5), np.zeros((5, 1), dtype=np.int8)
    assert max_query_error(ones, zeros, QueryClass("conj", 1)) == 1.0
    S_hat = rng.integers(0, 2, (100, 3))
    assert max_query_error(S, S_hat, CONJ3) == pytest.approx(brute_error(S, S_hat, CONJ3))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["conj", "disj", "parity"]))
def test_equilibrium_to_error(seed, family):
    """Because Q-bar is closed under negation, the best payoff equals the max error."""
    rng = np.random.default_rng(seed)
    cls = QueryClass(family, 3)
    S = Dataset(rng.integers(0, 2, (15, 3)))
    S_hat = rng.integers(0, 2, (int(rng.integers(1, 12)), 3))
    alpha = best_payoff(S, S_hat, cls)
    assert max_query_error(S, S_hat, cls) <= alpha + 1e-12


# -- data player ----------------------------------------------------------


def test_ftpl_empty_history_zero_noise():
    state = DataPlayerState(CONJ2, 1.0)
    x, ans = ftpl_draw(state, np.random.default_rng(0), noise=np.zeros(2))
    assert list(x) == [0, 0]


def test_ftpl_single_loss_term():
    q = conjunction(2, [0, 1])
    state = DataPlayerState(CONJ2, 1.0, history=[q])  # the data player's loss is not-q
    x, _ = ftpl_draw(state, np.random.default_rng(0), noise=np.zeros(2))
    assert list(x) == [1, 1]


def test_ftpl_sample_matches_sequential_draws():
    cls = QueryClass("parity", 3)
    state = DataPlayerState(cls, 2.0, history=[cls.members[3], cls.members[5]])
    fast = ftpl_sample(state, 40, np.random.default_rng(7))
    rng = np.random.default_rng(7)
    slow = np.array([ftpl_draw(state, rng)[0] for _ in range(40)])
    assert np.array_equal(fast, slow)


def test_ftpl_heuristic_fail_propagates():
    state = DataPlayerState(CONJ2, 1.0)
    oracle = CertifiableOracle(state.dual, FailurePolicy.parse("bernoulli:1"), np.random.default_rng(0))
    x, ans = ftpl_draw(state, np.random.default_rng(0), oracle)
    assert x is None and ans.failed


def test_data_player_regret_sublinear():
    cls = QueryClass("parity", 3)
    r = {T: np.median([context_ftpl_regret(cls, T, np.random.default_rng(s)).average_regret for s in range(20)])
         for T in (100, 400)}
    assert r[400] < r[100]


# -- query player ---------------------------------------------------------


def test_pbr_finds_maximal_payoff():
    # all-ones data against an all-zeros data-player sample
    S = Dataset(np.ones((10, 2), dtype=np.int8))
    S_hat = np.zeros((10, 2), dtype=np.int8)
    br = private_best_response(S, S_hat, 1e12, exact_minimizer(CONJ2), np.random.default_rng(0))
    assert payoff_mixed(S, S_hat, br.query) == 1.0
    assert br.query in set(negation_closure(CONJ2))
    # Every nonempty conjunction attains payoff 1 here; the tie-break picks the first of them.
    assert br.candidates[0] == conjunction(2, [0])


def test_pbr_degenerate_point_masses():
    x = np.array([[1, 0]])
    S = Dataset(np.repeat(x, 6, axis=0))
    br = private_best_response(S, np.repeat(x, 6, axis=0), 1.0, exact_minimizer(CONJ2), np.random.default_rng(0))
    assert br.payoffs == (0.0, 0.0)
    assert br.query in br.candidates


def test_pbr_returns_member_of_closure():
    rng = np.random.default_rng(2)
    cls = QueryClass("disj", 3)
    closure = set(negation_closure(cls))
    S = product_dataset(200, 3, 0.4, rng)
    mini = weighted_rspm_minimizer(cls, cls.separator(), 0.5, S.n)
    for _ in range(20):
        br = private_best_response(S, rng.integers(0, 2, (30, 3)), 0.5, mini, rng)
        assert br.query in closure
        assert len(br.candidates) == 2


def test_pbr_fail_propagates():
    cls = CONJ2
    oracle = CertifiableOracle(cls, FailurePolicy.parse("bernoulli:1"), np.random.default_rng(0))
    mini = weighted_rspm_minimizer(cls, cls.separator(), 1.0, 10, oracle=oracle)
    S = Dataset(np.ones((10, 2), dtype=np.int8))
    br = private_best_response(S, np.zeros((4, 2), dtype=np.int8), 1.0, mini, np.random.default_rng(0))
    assert br.failed


def test_pbr_per_round_guarantee():
    rng = np.random.default_rng(3)
    cls = CONJ2
    m, n, eps0, beta0 = 2, 400, 1.0, 0.05
    S = product_dataset(n, 2, (0.8, 0.3), rng)
    mini = weighted_rspm_minimizer(cls, cls.separator(), eps0, n)
    slack = rspm_bound(m, eps0, n, beta0) + 2 * math.log(2 / beta0) / (eps0 * n)
    good, trials = 0, 300
    for _ in range(trials):
        S_hat = product_dataset(25, 2, (0.2, 0.6), rng).points
        br = private_best_response(S, S_hat, eps0, mini, rng)
        good += payoff_mixed(S, S_hat, br.query) >= best_payoff(S, S_hat, cls) - slack
    assert good / trials >= 1 - 3 * beta0


# -- OracleQuery ----------------------------------------------------------


def test_oracle_query_shape_T1():
    S = Dataset(np.array(list(itertools.product((0, 1), repeat=2)) * 5))
    res = oracle_query(S, CONJ2, 1, 1.0, 0.01, 0.1, rng=np.random.default_rng(0))
    assert res is not None
    assert res.size == res.params["N_final"] == sample_size(CONJ2.size, 0.1, res.params["alpha0"], 8.0)
    assert np.all(np.isin(res.points, (0, 1)))
    assert res.points.shape[1] == 2
    assert len(res.queries) == 1 and set(res.rounds) == {1}


def test_oracle_query_budget_wiring():
    S = product_dataset(300, 2, 0.5, np.random.default_rng(0))
    res = oracle_query(S, CONJ2, 4, 1.0, 0.01, 0.1, alpha0=0.5, rng=np.random.default_rng(0))
    p = res.params
    assert p["eps0"] == pytest.approx(1.0 / math.sqrt(24 * 4 * math.log(2 / 0.01)))
    assert p["delta0"] == pytest.approx(0.01 / 16)
    assert p["beta0"] == pytest.approx(0.1 / 16)
    assert p["N"] == math.ceil(2 * math.log(2 * 4 / p["beta0"]) / 0.25)


def test_oracle_query_deterministic_given_seed():
    S = product_dataset(300, 2, 0.5, np.random.default_rng(0))
    a = oracle_query(S, CONJ2, 3, 1.0, 0.01, 0.1, alpha0=0.5, rng=np.random.default_rng(5))
    b = oracle_query(S, CONJ2, 3, 1.0, 0.01, 0.1, alpha0=0.5, rng=np.random.default_rng(5))
    assert np.array_equal(a.points, b.points) and a.queries == b.queries


def test_oracle_query_fail_on_dual_oracle_failure():
    S = product_dataset(100, 2, 0.5, np.random.default_rng(0))
    from oraclepriv.queries import DualClass

    dual_oracle = CertifiableOracle(DualClass(CONJ2), FailurePolicy.parse("calls:3"), np.random.default_rng(0))
    res = oracle_query(S, CONJ2, 2, 1.0, 0.01, 0.1, alpha0=0.5, dual_oracle=dual_oracle,
                       rng=np.random.default_rng(0))
    assert res is None


def test_oracle_query_prsma_preset_runs():
    # eps0 and delta0 land far below 1/2 here, so this only exercises the wiring at a small budget
    S = product_dataset(400, 2, 0.5, np.random.default_rng(0))
    res = oracle_query(S, CONJ2, 1, 31.0, 1.0, 0.1, alpha0=0.5, preset="prsma", rng=np.random.default_rng(1),
                       prsma_kw=dict(raw=False))
    # each round either fails as a whole or releases a member of the closure
    if res is not None:
        assert all(q in set(negation_closure(CONJ2)) for q in res.queries)


def test_oracle_query_input_checks():
    S = product_dataset(50, 2, 0.5, np.random.default_rng(0))
    with pytest.raises(InputError):
        oracle_query(S, CONJ2, 0, 1.0, 0.01, 0.1)
    with pytest.raises(InputError):
        oracle_query(S, CONJ2, 1, 1.0, 0.01, 1.5)


def test_composed_budget_within_target():
    # eps in (0, 1); the certificate overshoots eps once delta approaches 1 (see the decisions ledger)
    for eps, delta, T in itertools.product((0.1, 0.5, 0.99), (1e-4, 1e-2, 0.05), (1, 10, 500)):
        e, d = oracle_query_budget(eps, delta, T)
        assert e <= eps and d == pytest.approx(delta)


# -- presets --------------------------------------------------------------


def test_preset_T_gaussian_formula():
    m1 = m2 = 3
    log_X = 3 * math.log(2)
    T = preset_T("gaussian-rspm", m1=m1, m2=m2, log_X=log_X, log_Q=math.log(8), n=5000, eps=2.0, delta=1e-4,
                 beta=0.1)
    expect = m2**0.75 * math.sqrt(log_X) * 5000 * 2 / (m1**1.5 * math.sqrt(math.log(m1 / 0.1)) * math.log(1e4))
    assert T == math.ceil(expect)


def test_preset_T_private_oracle_reduction():
    # with log|X| = 1 and log|Q| + log(1/beta) = 1 and log(1/delta) = 1
    beta = 1.0
    T = preset_T("private-oracle", m1=3, m2=5, log_X=1.0, log_Q=1.0, n=700, eps=0.5, delta=math.exp(-1),
                 beta=beta)
    assert T == math.ceil(700 * 0.5 * 5**0.75)


def test_preset_T_prsma_exponent():
    kw = dict(m1=3, m2=3, log_X=2.0, log_Q=2.0, eps=1.0, delta=0.1, beta=0.1)
    a = preset_T("prsma", n=10**6, **kw)
    b = preset_T("prsma", n=16 * 10**6, **kw)
    # the base scales as sqrt(n), so T scales as n^(2/3): 16^(2/3) ~ 6.35
    assert b / a == pytest.approx(16 ** (2 / 3), rel=1e-3)
    with pytest.raises(InputError):
        preset_T("nope", n=1, **kw)

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oraclepriv.errors import CapacityError, InputError, UnsupportedError
from oraclepriv.queries import (
    FAMILIES, HALF, Dataset, DualClass, LossClass, Query, QueryClass, SeparatorSet, WeightedDataset,
    check_size_bound, conjunction, decision_list, disjunction, eval_on_dataset, eval_query, eval_weighted,
    halfspace, lift_to_loss_class, loss, parity, separator_set, verify_separator,
)


def cube(d):
    return np.array(list(itertools.product((0, 1), repeat=d)), dtype=np.int8)


def naive_eval(q: Query, x) -> int:
    """Reference evaluator written independently of the vectorised path."""
    x = [float(v) for v in x]
    if q.family == "conj":
        v = int(all(x[i] == 1 for i in q.params))
    elif q.family == "disj":
        v = int(any(x[i] == 1 for i in q.params))
    elif q.family == "parity":
        v = int(sum(x[i] for i in q.params)) % 2
    elif q.family == "half":
        v = int(sum(w * xi for w, xi in zip(q.params, x)) >= 1 - 1e-9)
    else:
        rules, default = q.params
        v = default
        for j, b in rules:
            if x[j] == 1:
                v = b
                break
    return 1 - v if q.negated else v


# -- evaluation -----------------------------------------------------------


def test_conjunction_on_satisfying_point():
    assert eval_query(conjunction(3, [0, 1]), [1, 1, 0]) == 1


def test_parity_of_two_ones_is_zero():
    assert eval_query(parity(3, [0, 2]), [1, 0, 1]) == 0


def test_halfspace_threshold_is_inclusive():
    assert eval_query(halfspace([1, -1]), [1, 0]) == 1
    assert eval_query(halfspace([1, -1]), [1, 1]) == 0


def test_empty_disjunction_is_constant_zero():
    S = Dataset(cube(3))
    assert eval_on_dataset(disjunction(3, []), S) == 0.0


def test_dataset_means():
    assert eval_on_dataset(conjunction(1, [0]), Dataset([[1], [0]])) == 0.5
    assert eval_on_dataset(conjunction(3, [0, 1]), Dataset(cube(3))) == 0.25


def test_empty_dataset_rejected():
    with pytest.raises(InputError):
        Dataset(np.zeros((0, 2)))


def test_weighted_evaluation():
    q = conjunction(2, [0])
    assert eval_weighted(q, WeightedDataset([[1, 1], [0, 1]], [0, 0])) == 0.0
    assert eval_weighted(q, WeightedDataset([[1, 1], [0, 1]], [1, -2])) == 1.0


def test_weighted_evaluation_matches_loop():
    rng = np.random.default_rng(3)
    X = rng.integers(0, 2, (10, 4))
    w = rng.normal(size=10)
    q = parity(4, [1, 3])
    total = 0.0
    for x, wi in zip(X, w):
        total += wi * naive_eval(q, x)
    assert eval_weighted(q, WeightedDataset(X, w)) == pytest.approx(total)


@pytest.mark.parametrize("family", FAMILIES)
def test_vectorised_matches_naive(family):
    d = 3
    cls = QueryClass(family, d)
    X = cls.universe
    M = cls.matrix(X)
    for k, q in enumerate(cls.members):
        assert [naive_eval(q, x) for x in X] == list(M[k])


@pytest.mark.parametrize("family", FAMILIES)
@settings(max_examples=30, deadline=None)
@given(data=st.data())
def test_negation_complements(family, data):
    cls = QueryClass(family, 3)
    q = cls.members[data.draw(st.integers(0, cls.size - 1))]
    x = cls.universe[data.draw(st.integers(0, cls.universe_size - 1))]
    assert eval_query(~q, x) == 1 - eval_query(q, x)
    assert ~~q == q


@settings(max_examples=50, deadline=None)
@given(st.sampled_from(FAMILIES), st.integers(1, 4), st.data())
def test_encoding_roundtrip(family, d, data):
    cls = QueryClass(family, d)
    q = cls.members[data.draw(st.integers(0, cls.size - 1))]
    if data.draw(st.booleans()):
        q = ~q
    assert Query.decode(q.encode()) == q


def test_bad_query_construction():
    with pytest.raises(InputError):
        conjunction(3, [3])
    with pytest.raises(InputError):
        Query("conj", 3, (1, 0))
    with pytest.raises(UnsupportedError):
        Query("tree", 3, ())
    with pytest.raises(InputError):
        decision_list(2, [(0, 1), (0, 0)], 1)


def test_dimension_mismatch():
    with pytest.raises(InputError):
        conjunction(3, [0]).evaluate(np.zeros((2, 2)))


# -- classes --------------------------------------------------------------


@pytest.mark.parametrize("d,size", [(1, 2), (2, 4), (3, 8), (5, 32)])
def test_index_family_sizes(d, size):
    for fam in ("conj", "disj", "parity"):
        assert QueryClass(fam, d).size == size


def test_members_sorted_and_first_is_empty_conjunction():
    cls = QueryClass("conj", 3)
    assert list(cls.members) == sorted(cls.members)
    assert cls.members[0] == conjunction(3, [])


def test_members_are_functionally_distinct():
    for fam in FAMILIES:
        cls = QueryClass(fam, 3)
        M = cls.matrix(cls.universe)
        assert len(np.unique(M, axis=0)) == cls.size


def test_halfspace_grid_validation():
    with pytest.raises(InputError):
        QueryClass(HALF, 2, weight_grid=(0.5,))
    with pytest.raises(InputError):
        QueryClass(HALF, 2, weight_grid=(-2, 1))
    with pytest.raises(InputError):
        QueryClass("conj", 2, weight_grid=(-1, 1))


def test_locate_roundtrip_and_rejects_foreign_points():
    cls = QueryClass("parity", 4)
    idx = cls.locate(cls.universe)
    assert np.array_equal(idx, np.arange(cls.universe_size))
    with pytest.raises(InputError):
        cls.locate(np.array([[0, 2, 0, 0]]))


def test_capacity_error_for_huge_class():
    cls = QueryClass("conj", 24, cap=1 << 10)
    with pytest.raises(CapacityError):
        cls.members


# -- separators -----------------------------------------------------------


def test_conjunction_separator_elements():
    U = separator_set(QueryClass("conj", 3))
    assert {tuple(u) for u in U} == {(0, 1, 1), (1, 0, 1), (1, 1, 0)}


def test_parity_separator_elements():
    U = separator_set(QueryClass("parity", 2))
    assert {tuple(u) for u in U} == {(1, 0), (0, 1)}


def test_halfspace_separator_size():
    cls = QueryClass(HALF, 2, weight_grid=(-1, 1))
    U = separator_set(cls)
    assert U.size == 2
    assert verify_separator(cls, U)


def test_verify_separator_negative_case():
    cls = QueryClass("conj", 3)
    assert verify_separator(cls, separator_set(cls))
    assert not verify_separator(cls, SeparatorSet(np.array([[1, 1, 1]], dtype=np.int8)))


def test_parity_basis_separates_d4():
    cls = QueryClass("parity", 4)
    assert verify_separator(cls, SeparatorSet(np.eye(4, dtype=np.int8)))


def _pairwise_separated(cls, U) -> bool:
    """Independent pair-by-pair check."""
    pts = np.asarray(U.elements)
    for a, b in itertools.combinations(cls.members, 2):
        if all(naive_eval(a, u) == naive_eval(b, u) for u in pts):
            return False
    return True


@pytest.mark.parametrize("family", FAMILIES)
@pytest.mark.parametrize("d", [2, 3, 4])
def test_canonical_separator_verifies(family, d):
    cls = QueryClass(family, d)
    U = separator_set(cls)
    assert verify_separator(cls, U)
    assert check_size_bound(cls, U)


@pytest.mark.parametrize("family", FAMILIES)
def test_separator_agrees_with_pairwise_oracle(family):
    cls = QueryClass(family, 2)
    assert _pairwise_separated(cls, separator_set(cls))


def test_halfspace_finer_grid_separator():
    cls = QueryClass(HALF, 2, weight_grid=(-1, -0.5, 0, 0.5, 1))
    U = separator_set(cls)
    assert U.size == 4 * 2
    assert verify_separator(cls, U)


# -- duals ----------------------------------------------------------------


def test_parity_dual_matches_primal_evaluation():
    cls = QueryClass("parity", 3)
    dual = DualClass(cls)
    assert dual.self_dual
    M = dual.matrix(cls.members)  # |X| x |Q|: h_x(q)
    for i, x in enumerate(cls.universe):
        for k, q in enumerate(cls.members):
            assert M[i, k] == q(x)
            assert dual.dual_query(x)(dual.query_as_point(q)) == q(x)


def test_conjunction_dual_separator():
    cls = QueryClass("conj", 2)
    U = cls.dual().separator()
    assert U.size == 2
    assert all(isinstance(u, Query) and u.family == "conj" for u in U)
    assert verify_separator(cls.dual(), U)


@pytest.mark.parametrize("family", ["conj", "disj"])
def test_relabeling_identity(family):
    cls = QueryClass(family, 3)
    dual = cls.dual()
    for x in cls.universe:
        for q in cls.members:
            assert dual.dual_query(x)(dual.query_as_point(q)) == q(x)


def test_halfspace_self_dual():
    # B always gains 0, so check the identity on the {-1, 1} points (B = V).
    cls = QueryClass(HALF, 2, weight_grid=(-1, 1), point_grid=(-1, 1))
    dual = cls.dual()
    pts = [x for x in cls.universe if set(np.abs(x)) == {1.0}]
    assert len(pts) == 4
    assert {tuple(dual.query_as_point(q)) for q in cls.members} <= {tuple(x) for x in cls.universe}
    for x in pts:
        for q in cls.members:
            assert dual.dual_query(x)(dual.query_as_point(q)) == q(x)


@pytest.mark.parametrize("family", ["conj", "disj", "parity", "dl1"])
def test_dual_separator_verifies(family):
    cls = QueryClass(family, 3)
    assert verify_separator(cls.dual(), cls.dual().separator())


# -- loss lift ------------------------------------------------------------


def test_loss_examples():
    h = conjunction(1, [0])
    assert loss(h, [1, 1]) == 0
    assert loss(h, [0, 1]) == 1


def test_lifted_separator():
    L = lift_to_loss_class(QueryClass("conj", 3))
    U = L.separator()
    assert U.size == 3
    assert np.all(np.asarray(U.elements)[:, -1] == 0)
    assert verify_separator(L, U)


def test_loss_class_values_match_direct():
    rng = np.random.default_rng(0)
    hyp = QueryClass("disj", 3)
    L = LossClass(hyp)
    Z = np.hstack([rng.integers(0, 2, (40, 3)), rng.integers(0, 2, (40, 1))]).astype(np.int8)
    vals = L.values(Dataset(Z))
    for k, h in enumerate(L.members):
        assert vals[k] == pytest.approx(np.mean([loss(h, z) for z in Z]))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1), st.integers(0, 1)), min_size=1, max_size=20))
def test_values_equal_member_means(rows):
    cls = QueryClass("conj", 3)
    S = Dataset(np.array(rows, dtype=np.int8))
    v = cls.values(S)
    for k, q in enumerate(cls.members):
        assert v[k] == pytest.approx(eval_on_dataset(q, S))

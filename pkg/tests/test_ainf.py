import random

import pytest
from hypothesis import given, settings, strategies as st

from sphalg.ainf import (AInfStructure, DGAlgebra, GaugeTransform, Pairing, catalan, check_cyclic,
                         check_stasheff, check_units, compose_gauges, count_planar_binary_trees,
                         find_units, gauge_transform, hochschild_class_of_m3, orthogonal_contraction,
                         perturb, random_gauge)
from sphalg.cusp_order import minimal_model_pipeline
from sphalg.graded_quiver import GMatrix, build_S
from sphalg.scalar_linalg import QQ, Mat

one = QQ.one


def truncated_poly(k=3, corrupt=False):
    """k[x]/(x^k) in degree 0; with ``corrupt`` the unit acts wrongly on x."""
    def m2(t):
        i, j = t
        if corrupt and t == (0, 1):
            return {1: one, 2: one}
        return {i + j: one} if i + j < k else {}
    return AInfStructure(QQ, [0] * k, {2: m2}, 3, units=[0])


def S_as_dg(g):
    S = build_S(2, g, g.field)
    B = DGAlgebra(QQ, S.cdeg, lambda i: {}, S.mul, S.labels, S.src, S.tgt, S.weight)
    xi = {S.index("xi_X"), S.index("xi_Y")}

    def form(i, j):
        if S.src[i] != S.tgt[j] or S.tgt[i] != S.src[j]:
            return QQ.zero
        return sum((c for k, c in S.mul(i, j).items() if k in xi), QQ.zero)
    return S, B, Pairing(B, form)


def test_associative_algebra_passes_stasheff():
    assert check_stasheff(truncated_poly(), 3) == (True, None)
    S = build_S(2, GMatrix.diag([1, 2]))
    A = AInfStructure(QQ, S.cdeg, {2: lambda t: S.mul(*t)}, 2, S.src, S.tgt, units=S.units)
    assert check_stasheff(A, 3)[0]
    assert check_units(A, 2)


def test_corrupted_entry_fails():
    ok, where = check_stasheff(truncated_poly(corrupt=True), 3)
    assert not ok and len(where) == 3


@pytest.mark.parametrize("n", range(2, 8))
def test_tree_count_is_catalan(n):
    assert count_planar_binary_trees(n) == catalan(n - 1)


def test_arity_four_has_five_trees():
    assert count_planar_binary_trees(4) == 5


def test_minimal_B_gives_m2_only():
    S, B, pair = S_as_dg(GMatrix.identity(2))
    assert B.check_d_squared() and B.check_leibniz()
    c = orthogonal_contraction(B, pair)
    assert c.check() and not c.Q_basis and not c.C
    A = perturb(c, 4)
    assert check_stasheff(A, 4)[0]
    assert all(not A.m(*t) for n in (3, 4) for t in A.tuples(n))
    assert check_cyclic(A, lambda i, j: pair(c.iota[i], c.iota[j]), 3)[0]
    assert len(find_units(A)) == 2
    assert hochschild_class_of_m3(A)["zero_class"]


def test_pairing_checks():
    S, B, pair = S_as_dg(GMatrix.identity(2))
    pairs = [(i, j) for i in range(B.dim) for j in range(B.dim)]
    assert pair.check_symmetric(pairs) and pair.check_d_invariant(pairs)
    S, B, pair = S_as_dg(GMatrix.diag([1, 2]))
    assert not pair.check_symmetric(pairs)


def test_degenerate_pairing_is_refused():
    # basis 1, u in degree 0; v, w in degree 1; d u = v; w pairs only with u
    d = {0: {}, 1: {2: one}, 2: {}, 3: {}}
    B = DGAlgebra(QQ, [0, 0, 1, 1], d.__getitem__, lambda i, j: {j: one} if i == 0 else {i: one} if j == 0 else {})
    pair = Pairing(B, lambda i, j: one if {i, j} == {1, 3} else QQ.zero)
    with pytest.raises(ValueError):
        orthogonal_contraction(B, pair)
    c = orthogonal_contraction(B, pair, correct=False)
    assert c.check() and c.hdim == 2


def test_contraction_rejects_wide_band():
    B = DGAlgebra(QQ, [0, 2], lambda i: {}, lambda i, j: {})
    with pytest.raises(ValueError):
        orthogonal_contraction(B, Pairing(B, lambda i, j: QQ.zero))


@pytest.fixture(scope="module")
def cusp_structure():
    A, _ = minimal_model_pipeline(2, GMatrix.diag([1, 2]), Mat(QQ, [[0, 1], [-1, 0]]), N=2, arity=4,
                                  D=10, product="tw", check_arity=3)
    return A


def same_products(A, B, arities=(2, 3, 4)):
    return all(A.m(*t) == B.m(*t) for n in arities for t in A.tuples(n) if A.grade_ok(t))


def test_identity_gauge(cusp_structure):
    A = cusp_structure
    assert same_products(gauge_transform(A, GaugeTransform({}, 4), 4), A)


def test_gauge_keeps_m2_and_stasheff(cusp_structure):
    A = cusp_structure
    A1 = gauge_transform(A, random_gauge(A, random.Random(1), 4), 4)
    assert same_products(A1, A, (2,))
    assert not same_products(A1, A, (3,))
    assert check_stasheff(A1, 4)[0]
    assert check_units(A1, 4)


def test_gauge_composition(cusp_structure):
    A = cusp_structure
    rng = random.Random(2)
    G1, G2 = random_gauge(A, rng, 4), random_gauge(A, rng, 4)
    twice = gauge_transform(gauge_transform(A, G1, 4), G2, 4)
    once = gauge_transform(A, compose_gauges(G2, G1, A.cdeg, A.composable, A.field, 4), 4)
    assert same_products(twice, once)


@settings(max_examples=3)
@given(seed=st.integers(0, 2 ** 32))
def test_class_of_m3_is_gauge_invariant(cusp_structure, seed):
    A = cusp_structure
    A1 = gauge_transform(A, random_gauge(A, random.Random(seed), 3), 3)
    rep = hochschild_class_of_m3(A1, reference=A)
    assert rep["cocycle"] and rep["same_class"] and not rep["zero_class"]


def test_cusp_m3_class_nonzero(cusp_structure):
    rep = hochschild_class_of_m3(cusp_structure)
    assert rep["cocycle"] and not rep["zero_class"]


def test_arity_guard():
    A = truncated_poly()
    with pytest.raises(ValueError):
        A.m(0, 0, 0, 0)
    with pytest.raises(ValueError):
        check_stasheff(A, 5)


def test_to_json_roundtrip_shape():
    A = truncated_poly()
    check_stasheff(A, 3)
    rows = A.to_json(2)
    assert {"arity": 2, "inputs": [1, 1], "output": 2, "coef": "1"} in rows

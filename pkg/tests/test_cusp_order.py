import json
import random
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from sphalg import cusp_order as co
from sphalg.ainf import orthogonal_contraction
from sphalg.graded_quiver import GMatrix, build_E, opposite, polynomial_extension
from sphalg.scalar_linalg import GF, QQ, Mat

FIX = Path(__file__).parent / "fixtures"
F101 = GF(101)
G12 = GMatrix.diag([1, 2])
H0 = Mat(QQ, [[0, 1], [-1, 0]])


@settings(max_examples=15)
@given(m=st.integers(-2, 5), n=st.sampled_from([2, 3]), seed=st.integers(0, 999))
def test_section_dims(m, n, seed):
    g = GMatrix.random(n, F101, random.Random(seed))
    basis = co.section_basis(m, n, g)
    assert len(basis) == (0 if m < 0 else 1 if m == 0 else m * n * n)
    assert all(co.is_cusp_section(x, g, m) for x in basis)


def test_section_examples():
    assert len(co.section_basis(0, 2, G12)) == 1
    assert len(co.section_basis(1, 2, G12)) == 4
    assert co.section_basis(-1, 2, G12) == []
    with pytest.raises(ValueError):
        co.section_basis(3, 2, G12, bandcap=2)


def test_cusp_condition():
    F = QQ
    ident = {(0, 0): F.one, (1, 1): F.one}
    assert co.is_cusp_section(co.LaurentMatrix(2, {0: ident}), G12, 0)
    assert not co.is_cusp_section(co.LaurentMatrix(2, {0: {(0, 0): F.one}}), G12, 0)
    # tr(g a1) = 1 * 2 - 2 * 1 = 0 for a1 = diag(2, -1)
    assert co.is_cusp_section(co.LaurentMatrix(2, {1: {(0, 0): F(2), (1, 1): F(-1)}}), G12, 1)
    assert not co.is_cusp_section(co.LaurentMatrix(2, {1: {(0, 0): F.one}}), G12, 1)
    assert not co.is_cusp_section(co.LaurentMatrix(2, {2: ident}), G12, 1)


def test_laurent_band():
    with pytest.raises(OverflowError):
        co.LaurentMatrix(2, {3: {(0, 0): 1}}, band=(0, 2))
    x = co.LaurentMatrix(2, {1: {(0, 1): 1}})
    y = co.LaurentMatrix(2, {-1: {(1, 0): 1}})
    assert (x @ y).coeffs == {0: {(0, 0): 1}}
    assert (x - x).coeffs == {}


@pytest.mark.parametrize("n,g", [(2, G12), (3, GMatrix.identity(3, F101)), (2, GMatrix.companion(2, F101))])
def test_twist_numerology(n, g):
    for D in (8, 10):
        h = [co.twist_cohomology(m, n, g, D) for m in range(-1, 6)]
        assert [x[0] for x in h] == [0, 1] + [m * n * n for m in range(1, 6)]
        assert h[1][1] == 1 and h[2][1] == 0


def test_cech_refuses_char2_and_short_band():
    with pytest.raises(ValueError):
        co.cech_dg(0, 2, GMatrix.identity(2, GF(2)), D=6)
    with pytest.raises(ValueError):
        co.cech_dg(2, 2, G12, D=7)


def test_cech_N0_is_weakly_spherical():
    B = co.cech_dg(0, 2, G12, D=6)
    assert B.check_d_squared() and B.check_leibniz()
    c, rep = co.cohomology_with_trace(B)
    assert c.check()
    assert rep["dims"] == {"0<-0": [1, 1]} and rep["pairing_ranks"] == {"0<-0": 1}


def test_cech_N1_blocks():
    B = co.cech_dg(1, 2, G12, D=6)
    _, rep = co.cohomology_with_trace(B)
    assert rep["dims"]["1<-0"] == [4, 0]
    assert rep["dims"]["0<-1"] == [0, 4]


def test_cech_N2_invariants():
    B = co.cech_dg(2, 2, G12, D=10)
    assert B.check_d_squared()
    pairs = [(i, j) for i in range(B.dim) for j in range(B.dim) if B.src[i] == B.tgt[j]]
    assert B.check_leibniz(random.Random(0).sample(pairs, 3000))


def test_averaged_product_is_not_associative():
    # the reason the pipeline runs on the Thom-Whitney model
    B = co.cech_dg(1, 2, G12, D=6)
    triples = [(i, j, k) for i in range(B.dim) for j in range(B.dim) for k in range(B.dim)
               if B.src[i] == B.tgt[j] and B.src[j] == B.tgt[k] and B.cdeg[i] + B.cdeg[j] + B.cdeg[k] == 1]
    assert B.check_associative(random.Random(1).sample(triples, min(4000, len(triples))))


def test_theta_examples():
    B = co.cech_dg(0, 2, G12, D=6)
    for x in range(B.dim):
        assert not B.theta(B.d(x))
    b = {(0, 0): QQ.one}  # tr(g E11) = 1
    assert B.theta(B.element(12, 0, 0, co.LaurentMatrix(2, {1: b}))) == 1


def test_contraction_is_Q_adjoint():
    B = co.cech_dg(1, 2, G12, D=6)
    pair = B.pairing()
    c = orthogonal_contraction(B, pair)
    assert c.check()
    pairs = [(i, j) for i in range(B.dim) for j in range(B.dim)
             if B.cdeg[i] + B.cdeg[j] == 1 and B.src[i] == B.tgt[j] and B.tgt[i] == B.src[j]]
    assert c.check_Q_adjoint(pair, random.Random(2).sample(pairs, min(3000, len(pairs))))


@pytest.mark.parametrize("m", [-2, -1, 0, 1, 2])
def test_serre_small(m):
    r, a, b = co.serre_pairing_rank(m, 2, G12, 12)
    assert r == a == b == max(0, m) * 4 + (m == 0)


def test_nakayama():
    ident = co.nakayama(2, GMatrix.identity(2), QQ, 4)
    assert ident["identity"] and ident["multiplicative"] and ident["symbol_is_Ad_g"]
    twisted = co.nakayama(2, G12, QQ, 4)
    assert not twisted["identity"] and twisted["multiplicative"] and twisted["symbol_is_Ad_g"]
    scalar = co.nakayama(2, GMatrix.diag([3, 3]), QQ, 3)
    assert scalar["identity"]


def test_kappa_fixture():
    fx = json.loads((FIX / "kappa.json").read_text())
    for name, g in (("I", GMatrix.identity(2)), ("diag(1,2)", G12)):
        mats = co.nakayama(2, g, QQ, 3)["matrices"]
        assert {str(m): M.to_json() for m, M in mats.items()} == fx[name]


@pytest.mark.parametrize("n,g", [(2, G12), (3, GMatrix.identity(3)), (2, GMatrix.diag([1, 2], F101))])
def test_sections_ring_is_E_op_t(n, g):
    D = 4
    S = co.sections_ring(n, g, D)
    ref = opposite(polynomial_extension(build_E(n, g, g.field, D), D))
    assert all(S.table.get(k, {}) == ref.table.get(k, {}) for k in set(S.table) | set(ref.table))
    assert S.check_associative()


def test_sections_ring_without_op_is_E_t():
    S = co.sections_ring(2, G12, 3, op=False)
    ref = polynomial_extension(build_E(2, G12, QQ, 3), 3)
    assert all(S.table.get(k, {}) == ref.table.get(k, {}) for k in set(S.table) | set(ref.table))


@pytest.mark.parametrize("model", ["cech", "tw"])
def test_gamma_functional(model):
    B = co.cech_dg(2, 2, G12, D=10) if model == "cech" else co.thom_whitney_dg(2, 2, G12, D=10)
    abg = co.build_alpha_beta_gamma(B, H0)
    vals = co.gamma_functional_check(B, abg)
    assert all(a == b for a, b in vals)
    assert [int(a) for a, _ in vals] == [0, 0, 0, 0, 0, 1, -4, 0]
    # r = t^2 is the constant section I in A(2)
    t2 = co.LaurentMatrix(2, {0: {(0, 0): QQ.one, (1, 1): QQ.one}})
    assert not B.theta(B.mul_vec(B.cocycle0(2, 0, t2), abg["gamma"]))


def test_alpha_beta_gamma_guards():
    B = co.cech_dg(2, 2, G12, D=8)
    with pytest.raises(ValueError):
        co.build_alpha_beta_gamma(B, Mat(QQ, [[1, 0], [0, 1]]))
    with pytest.raises(ValueError):
        co.build_alpha_beta_gamma(B, Mat(QQ, [[1, 1], [-1, -1]]))


def test_thom_whitney_model():
    B = co.thom_whitney_dg(1, 2, G12, D=6)
    assert B.check_d_squared()
    rng = random.Random(3)
    pairs = [(i, j) for i in range(B.dim) for j in range(B.dim) if B.src[i] == B.tgt[j]]
    assert B.check_leibniz(rng.sample(pairs, 3000))
    triples = [(i, j, k) for i, j in rng.sample(pairs, 400) for k in range(B.dim) if B.src[j] == B.tgt[k]]
    assert not B.check_associative(rng.sample(triples, 3000))
    _, rep = co.cohomology_with_trace(B)
    assert rep["dims"]["0<-0"] == [1, 1] and rep["dims"]["1<-0"] == [4, 0]


def test_thom_whitney_needs_large_characteristic():
    with pytest.raises(ValueError):
        co.thom_whitney_dg(2, 2, GMatrix.diag([1, 2], GF(5)), D=10)


def test_m3_fixture():
    fx = json.loads((FIX / "m3.json").read_text())
    for key, value in fx.items():
        h0 = Mat(QQ, json.loads(key))
        _, rep = co.minimal_model_pipeline(2, G12, h0, N=2, arity=3, D=10, product="tw")
        assert rep["stasheff"] and rep["cyclic"] and rep["m2_beta_alpha_zero"]
        assert QQ.fmt(rep["m3_gamma_beta_alpha"]) == value
        assert abs(int(value)) == 1

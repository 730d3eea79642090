import json
import random
from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from sphalg.graded_quiver import (GMatrix, GradedAlgebra, Generator, QuadraticPresentation, build_E,
                                  build_S, check_koszul, derivation_space, E_presentation,
                                  free_presentation, generation_check, koszul_failure_presentation,
                                  opposite, polynomial_extension, quadratic_dual, right_mult_injectivity,
                                  truncated_algebra)
from sphalg.scalar_linalg import GF, QQ, Mat, Subspace, axpy

FIX = Path(__file__).parent / "fixtures"
F101 = GF(101)


def load(name):
    return json.loads((FIX / f"{name}.json").read_text())


def random_g(n, F, seed):
    return GMatrix.random(n, F, random.Random(seed))


@given(n=st.sampled_from([2, 3]), p=st.sampled_from([0, 2, 101]), seed=st.integers(0, 10 ** 6))
def test_S_dimension_and_associativity(n, p, seed):
    F = QQ if p == 0 else GF(p)
    S = build_S(n, random_g(n, F, seed), F)
    assert S.dim == 2 * n + 4
    assert S.check_associative()
    assert S.check_units()


def test_S_gradings():
    S = build_S(2, GMatrix.identity(2))
    assert S.hilbert() == [2, 4, 2]
    assert [S.cdeg[S.index(x)] for x in ("a1", "b1", "xi_X")] == [0, 1, 1]


def test_S_products_follow_g():
    S = build_S(2, GMatrix.of(QQ, [[1, 1], [0, 1]]))
    b, a = S.index, S.index
    assert S.mul(b("b1"), a("a2")) == {S.index("xi_X"): QQ.one}
    assert S.mul(b("b2"), a("a1")) == {}
    assert S.mul(a("a1"), b("b1")) == {S.index("xi_Y"): QQ.one}
    assert S.mul(a("a1"), b("b2")) == {}


def test_S_rejects_wrong_size():
    with pytest.raises(ValueError):
        build_S(3, GMatrix.identity(2))


def test_dual_of_S_relations():
    g = GMatrix.of(QQ, [[2, 1], [-1, 3]])
    p = build_S(2, g).presentation
    q = quadratic_dual(p)
    idx = {x.label: k for k, x in enumerate(q.gens)}
    r1, r2 = {}, {}
    for i in range(2):
        for j in range(2):
            w = q.word_index[(idx[f"a{j + 1}*"], idx[f"b{i + 1}*"])]
            axpy(r1, g[i, j], {w: QQ.one})
        axpy(r2, QQ.one, {q.word_index[(idx[f"b{i + 1}*"], idx[f"a{i + 1}*"])]: QQ.one})
    assert q.relations == Subspace(QQ, len(q.words2), [r1, r2])


@pytest.mark.parametrize("n", [2, 3])
def test_biduality(n):
    p = build_S(n, random_g(n, F101, 5), F101).presentation
    assert quadratic_dual(quadratic_dual(p)) == p


def test_dual_of_free_has_all_relations():
    q = quadratic_dual(free_presentation(QQ, 3))
    assert q.relations.dim == len(q.words2) == 9
    assert truncated_algebra(q, 3).hilbert(3) == [1, 3, 0, 0]


def test_truncated_dims():
    assert truncated_algebra(free_presentation(QQ, 2), 3).hilbert() == [1, 2, 4, 8]
    Sd = truncated_algebra(quadratic_dual(build_S(2, GMatrix.identity(2)).presentation), 6)
    blocks = {}
    for x in Sd.by_deg[2]:
        blocks[(Sd.src[x], Sd.tgt[x])] = blocks.get((Sd.src[x], Sd.tgt[x]), 0) + 1
    assert len(Sd.by_deg[2]) == 6
    assert blocks.get((0, 0)) == blocks.get((1, 1)) == 3
    assert Sd.hilbert() == [2, 4, 6, 8, 10, 12, 14]
    assert Sd.check_associative()


def test_E_dims():
    assert build_E(2, GMatrix.identity(2), QQ, 4).hilbert() == [1, 3, 4, 4, 4]
    assert build_E(3, GMatrix.identity(3), QQ, 4).hilbert() == [1, 8, 9, 9, 9]
    for seed in range(3):
        E = build_E(3, random_g(3, QQ, seed), QQ, 3)
        assert len(E.by_deg[1]) == 8
        assert E.check_associative()


@pytest.mark.parametrize("rows,member", [([[1, 0], [0, -1]], True), ([[0, 1], [-1, 0]], True),
                                         ([[1, 0], [0, 1]], False), ([[1, 2], [0, 1]], False)])
def test_identity_z_membership(rows, member):
    g = GMatrix.of(QQ, rows)
    E = build_E(2, g, QQ, 2)
    ident = [[QQ.one, QQ.zero], [QQ.zero, QQ.one]]
    try:
        E.coords(ident, 1)
        inside = True
    except ValueError:
        inside = False
    assert inside == member == (g.trace() == 0)


def test_E_rejects_zero_g():
    with pytest.raises(ValueError):
        build_E(2, GMatrix.of(QQ, [[0, 0], [0, 0]]), QQ, 2)


def test_koszul_certificates_small():
    assert check_koszul(build_S(3, random_g(3, F101, 1), F101).presentation, 5) == (True, None)
    assert check_koszul(E_presentation(2, GMatrix.diag([1, 2])), 6) == (True, None)
    assert check_koszul(free_presentation(QQ, 2), 4) == (True, None)


def test_koszul_failure_fixture():
    fx = load("koszul_failure")
    p = koszul_failure_presentation()
    assert p.to_json() == fx["presentation"]
    ok, where = check_koszul(p, 5)
    assert not ok and list(where) == fx["first_failure"] == [4, 2]
    # Hilbert series check: H_A(t) H_{A^!}(-t) = 1 breaks exactly at t^4
    A = truncated_algebra(p, 5).hilbert(5)
    B = truncated_algebra(quadratic_dual(p), 5).hilbert(5)
    prod = [sum(A[i] * (-1) ** (d - i) * B[d - i] for i in range(d + 1)) for d in range(6)]
    assert prod[:4] == [1, 0, 0, 0] and prod[4] != 0


def test_generation_fixture():
    fx = load("generation")
    F2 = GF(2)
    cases = {"E(Q^3,I)": (3, GMatrix.identity(3)),
             "E(Q^2,[[0,1],[-1,0]])": (2, GMatrix.of(QQ, [[0, 1], [-1, 0]])),
             "E(F2^2,I)": (2, GMatrix.identity(2, F2)),
             "E(Q^2,diag(1,2))": (2, GMatrix.diag([1, 2]))}
    for name, (n, g) in cases.items():
        D = fx[name]["D"]
        E = build_E(n, g, g.field, D)
        assert generation_check(E, {1}, D) == fx[name]["degree_1"]
        assert generation_check(E, {1, 2}, D) == fx[name]["degrees_1_2"] is True
    assert fx["E(Q^3,I)"]["degree_1"] is True


def test_generation_negative():
    # k[x]/(x^2) with x in degree 2 is not generated in degree 1
    a = GradedAlgebra(QQ, ("*",), ["1", "x"], [0, 0], [0, 0], [0, 2], [0, 0], [(), ()],
                      {(0, 0): {0: QQ.one}, (0, 1): {1: QQ.one}, (1, 0): {1: QQ.one}}, [0], 3)
    assert not generation_check(a, {1}, 3)
    assert generation_check(a, {2}, 3)


def test_derivations_vanish_n3():
    E = build_E(3, GMatrix.identity(3), QQ, 4)
    assert derivation_space(E, -1, 4)[0] == 0


def test_derivations_degree_minus_3_vanish():
    E = build_E(2, GMatrix.identity(2, GF(2)), GF(2), 5)
    assert derivation_space(E, -3, 5)[0] == 0


def test_derivations_need_generation():
    a = GradedAlgebra(QQ, ("*",), ["1", "x"], [0, 0], [0, 0], [0, 3], [0, 0], [(), ()],
                      {(0, 0): {0: QQ.one}, (0, 1): {1: QQ.one}, (1, 0): {1: QQ.one}}, [0], 3)
    with pytest.raises(ValueError):
        derivation_space(a, -1, 3)


def family_derivation(E, a):
    """x z^d -> ([a, x] + d tr(a) x) z^(d-1), i.e. ad(a z^-1) + tr(a) d/dz."""
    F = E.field
    A = Mat(F, a)
    tr = A.trace()
    out = {}
    for x in range(E.dim):
        d = E.deg[x]
        if d == 0:
            continue
        M = Mat(F, E.mats[x])
        N = A @ M - M @ A + M.scale(tr * d)
        img = E.coords([list(r) for r in N.rows], d - 1)
        if img:
            out[x] = img
    return out


def test_char2_family_inside_derivations():
    F2 = GF(2)
    D = 5
    E = build_E(2, GMatrix.identity(2, F2), F2, D)
    dim, basis = derivation_space(E, -1, D)
    assert dim == load("derivations_f2")["-1"] == 3
    keys = sorted({(x, y) for der in basis for x, img in der.items() for y in img})
    pos = {k: i for i, k in enumerate(keys)}

    def flat(der):
        return {pos[(x, y)]: c for x, img in der.items() for y, c in img.items()}

    span = Subspace(F2, len(keys), [flat(b) for b in basis])
    nonscalar = 0
    for entries in range(16):
        a = [[(entries >> k) & 1 for k in (0, 1)], [(entries >> k) & 1 for k in (2, 3)]]
        if a[0][1] == a[1][0] == 0 and a[0][0] == a[1][1]:
            continue
        nonscalar += 1
        der = family_derivation(E, a)
        assert der
        assert all((x, y) in pos for x, img in der.items() for y in img)
        assert span.contains(flat(der))
    assert nonscalar == 14


def test_right_multiplication_injective():
    Sd = truncated_algebra(quadratic_dual(build_S(2, GMatrix.identity(2)).presentation), 6)
    a1 = Sd.index("a1*")
    for m in range(6):
        assert right_mult_injectivity(Sd, (m, 0), a1)
    assert not right_mult_injectivity(Sd, (1, 0), {})
    g = random_g(3, QQ, 11)
    Sd3 = truncated_algebra(quadratic_dual(build_S(3, g).presentation), 5)
    for m in range(5):
        assert right_mult_injectivity(Sd3, (m, 0), Sd3.index("a2*"))


def test_opposite_involution():
    S = build_S(3, random_g(3, QQ, 2))
    S2 = opposite(opposite(S))
    assert S2.table == S.table and S2.src == S.src and S2.tgt == S.tgt
    P = polynomial_extension(build_E(2, GMatrix.identity(2), QQ, 3), 3)
    assert opposite(opposite(P)).table == P.table


def test_opposite_of_E():
    E = build_E(2, GMatrix.identity(2), QQ, 2)
    Eop = opposite(E)
    for x in E.by_deg[1]:
        for y in E.by_deg[1]:
            expected = E.coords([list(r) for r in (Mat(QQ, E.mats[y]) @ Mat(QQ, E.mats[x])).rows], 2)
            assert Eop.mul(x, y) == expected


def test_opposite_commutative():
    P = truncated_algebra(QuadraticPresentation(QQ, ("*",), [Generator("x", 0, 0)], []), 4)
    Q = opposite(P)
    assert all(Q.mul(i, j) == P.mul(i, j) for i in range(P.dim) for j in range(P.dim)
               if P.deg[i] + P.deg[j] <= 4)

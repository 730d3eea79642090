from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

import oracle
from sphalg.scalar_linalg import (GF, QQ, FieldSpec, Mat, Subspace, complement, image, kernel, rank,
                                  rank_of, rref, solve, solve_vectors, kernel_of)

FIELDS = [0, 2, 101]


@st.composite
def matrices(draw, max_dim=6):
    m = draw(st.integers(1, max_dim))
    n = draw(st.integers(1, max_dim))
    entries = st.integers(-4, 4)
    return draw(st.lists(st.lists(entries, min_size=n, max_size=n), min_size=m, max_size=m))


def field(p):
    return QQ if p == 0 else GF(p)


def as_int(F, x):
    return Fraction(str(x)) if F.p == 0 else int(x)


@pytest.mark.parametrize("p", FIELDS)
@given(rows=matrices())
def test_rank_matches_oracle(p, rows):
    assert rank(Mat(field(p), rows)) == oracle.rank(rows, p)


@pytest.mark.parametrize("p", FIELDS)
@given(rows=matrices())
def test_kernel_dim_and_vectors(p, rows):
    F = field(p)
    M = Mat(F, rows)
    K = kernel(M)
    assert K.dim == oracle.nullity(rows, M.ncols, p)
    B = K.basis()
    assert (M @ B).is_zero() if B.ncols else True


@pytest.mark.parametrize("p", FIELDS)
@given(rows=matrices(), data=st.data())
def test_solve_agrees_with_oracle(p, rows, data):
    F = field(p)
    M = Mat(F, rows)
    b = data.draw(st.lists(st.integers(-4, 4), min_size=M.nrows, max_size=M.nrows))
    x = solve(M, Mat(F, [[v] for v in b]))
    assert (x is not None) == oracle.solvable(rows, b, p)
    if x is not None:
        assert M @ x == Mat(F, [[v] for v in b])


@pytest.mark.parametrize("p", FIELDS)
@given(rows=matrices())
def test_rref_is_oracle_rref(p, rows):
    F = field(p)
    R, piv = rref(Mat(F, rows))
    ref, ref_piv = oracle.rref(rows, p)
    assert list(piv) == ref_piv
    for r, s in zip(R.rows, ref):
        assert [as_int(F, x) for x in r] == s


@given(rows=matrices())
def test_rank_nullity(rows):
    M = Mat(QQ, rows)
    assert rank(M) + kernel(M).dim == M.ncols
    assert image(M).dim == rank(M)


@given(rows=matrices(), more=matrices())
def test_subspace_canonical(rows, more):
    # the echelon basis does not depend on the spanning set
    n = len(rows[0])
    vecs = [{j: x for j, x in enumerate(r) if x} for r in rows]
    S1 = Subspace(QQ, n, vecs)
    S2 = Subspace(QQ, n, list(reversed(vecs)) + [{}])
    assert S1 == S2
    assert S1 <= S1 + S2


def test_complement_and_intersect():
    F = GF(101)
    whole = Subspace(F, 3, [{0: 1}, {1: 1}, {2: 1}])
    s = Subspace(F, 3, [{0: 1, 1: 1}])
    c = complement(s, whole)
    assert c.dim == 2 and (s + c) == whole
    t = Subspace(F, 3, [{0: 1}, {1: 1}])
    assert s.intersect(t) == s
    assert Subspace(F, 3, [{2: 1}]).intersect(t).dim == 0


def test_sparse_helpers():
    F = QQ
    cols = [{0: 1}, {1: 1}, {0: 1, 1: 1}]
    assert rank_of(F, cols, 2) == 2
    ker = kernel_of(F, cols, 2)
    assert len(ker) == 1
    sols = solve_vectors(F, cols, 2, [{0: 3, 1: 2}, {}])
    assert sols[1] == {}
    x = sols[0]
    total = {}
    for j, c in x.items():
        for i, v in cols[j].items():
            total[i] = total.get(i, 0) + c * v
    assert {i: v for i, v in total.items() if v} == {0: 3, 1: 2}


def test_field_parsing():
    assert FieldSpec.parse("Q") == QQ
    assert FieldSpec.parse("F101") == GF(101)
    assert GF(7)("1/2") * 2 == GF(7).one
    assert QQ.fmt(QQ("3/6")) == "1/2"
    with pytest.raises(ValueError):
        FieldSpec(4)
    with pytest.raises(ValueError):
        FieldSpec.parse("R")


def test_det_inverse():
    F = GF(101)
    M = Mat(F, [[1, 2], [3, 4]])
    assert M.det() == F(-2)
    assert M @ M.inverse() == Mat.identity(F, 2)


@given(rows=matrices(), dens=st.lists(st.integers(1, 7), min_size=6, max_size=6))
def test_sparse_rank_with_fractions(rows, dens):
    rows = [[Fraction(x, dens[j % 6]) for j, x in enumerate(r)] for r in rows]
    vecs = [{j: QQ(x) for j, x in enumerate(r) if x} for r in rows]
    assert rank_of(QQ, vecs, len(rows[0])) == oracle.rank(rows, 0)

"""The cusp order: matrix functions on P^1 with a cusp condition at z = 0.

Charts: U1 = P^1 minus {infinity} (matrix polynomials in z whose constant term is
scalar and whose linear term a1 has tr(g a1) = 0), U2 = P^1 minus {0}
(polynomials in 1/z; for the twist O(m) at infinity the top z-degree is <= m),
U12 = Laurent polynomials.  Everything is truncated to z-exponents in [-D, D].

The Hom-block (j <- i) of End(A(0) + .. + A(N)) is the twist A(j - i); a
product of blocks (k <- j)(j <- i) is the matrix product.
"""
from __future__ import annotations

from collections import defaultdict

from .scalar_linalg import Mat, axpy, rank_of, solve_vectors, kernel_of
from .graded_quiver import GMatrix, GradedAlgebra, build_E, endg_basis, polynomial_extension
from .ainf import (DGAlgebra, Pairing, check_cyclic, check_stasheff, check_units,
                   find_units, orthogonal_contraction, perturb)


# ---------------------------------------------------------------- Laurent matrices

class LaurentMatrix:
    """Sparse Laurent matrix: {exponent: {(row, col): coef}} within a band [lo, hi]."""

    def __init__(self, n, coeffs=None, band=None):
        self.n = n
        self.coeffs = {k: {ij: c for ij, c in v.items() if c} for k, v in (coeffs or {}).items()}
        self.coeffs = {k: v for k, v in self.coeffs.items() if v}
        self.band = band
        if band is not None and self.coeffs:
            lo, hi = band
            if min(self.coeffs) < lo or max(self.coeffs) > hi:
                raise OverflowError("Laurent matrix outside its band")

    def __add__(self, other):
        out = {k: dict(v) for k, v in self.coeffs.items()}
        for k, v in other.coeffs.items():
            acc = out.setdefault(k, {})
            for ij, c in v.items():
                acc[ij] = acc.get(ij, 0) + c
        return LaurentMatrix(self.n, out, self.band)

    def scale(self, c):
        return LaurentMatrix(self.n, {k: {ij: x * c for ij, x in v.items()} for k, v in self.coeffs.items()},
                             self.band)

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def __matmul__(self, other):
        out = defaultdict(dict)
        for k, a in self.coeffs.items():
            for l, b in other.coeffs.items():
                acc = out[k + l]
                for (i, j), x in a.items():
                    for (j2, m), y in b.items():
                        if j == j2:
                            acc[(i, m)] = acc.get((i, m), 0) + x * y
        band = None
        if self.band and other.band:
            band = (min(self.band[0], other.band[0]), max(self.band[1], other.band[1]))
        return LaurentMatrix(self.n, dict(out), band)

    def __eq__(self, other):
        return isinstance(other, LaurentMatrix) and self.coeffs == other.coeffs

    def coefficient(self, k, field):
        v = self.coeffs.get(k, {})
        return [[v.get((i, j), field.zero) for j in range(self.n)] for i in range(self.n)]

    def trace_with(self, g, k, field):
        """Coefficient of z^k in tr(g x)."""
        v = self.coeffs.get(k, {})
        return sum((g[j, i] * c for (i, j), c in v.items()), field.zero)


def is_cusp_section(x: LaurentMatrix, g: GMatrix, twist: int) -> bool:
    """Global section of A(twist): exponents in [0, twist], scalar constant term, tr(g a1) = 0."""
    F = g.field
    if any(k < 0 or k > twist for k in x.coeffs):
        return False
    a0 = x.coefficient(0, F)
    c = a0[0][0]
    if any(a0[i][j] != (c if i == j else F.zero) for i in range(x.n) for j in range(x.n)):
        return False
    return not x.trace_with(g, 1, F)


# ---------------------------------------------------------------- chart bases

def _chart1_basis(n, g, D):
    """(exponent, matrix dict) for U1: I, End_g basis * z, E_ab z^k (2 <= k <= D)."""
    F = g.field
    sub = endg_basis(g)
    out = [(0, {(i, i): F.one for i in range(n)}, "I")]
    for r, row in enumerate(sub.rows):
        out.append((1, {(idx // n, idx % n): c for idx, c in row.items()}, f"u{r + 1}z"))
    for k in range(2, D + 1):
        for a in range(n):
            for b in range(n):
                out.append((k, {(a, b): F.one}, f"E{a + 1}{b + 1}z^{k}"))
    return out, sub


def _full_basis(n, lo, hi, F):
    return [(k, {(a, b): F.one}, f"E{a + 1}{b + 1}z^{k}") for k in range(lo, hi + 1)
            for a in range(n) for b in range(n)]


def section_basis(m: int, n: int, g: GMatrix, field=None, bandcap: int | None = None):
    """Basis of H^0(A(m)): cusp polynomials of degree <= m (list of LaurentMatrix)."""
    if bandcap is not None and bandcap < m:
        raise ValueError("bandcap must be at least m")
    if m < 0:
        return []
    basis, _ = _chart1_basis(n, g, m)
    return [LaurentMatrix(n, {k: M}) for k, M, _ in basis if k <= m]


def _weight(g, n, M):
    if not g.diagonal:
        return ()
    (a, b) = min(M)
    return tuple((1 if k == a else 0) - (1 if k == b else 0) for k in range(n))


# ---------------------------------------------------------------- Cech dg-algebra

class CechDG(DGAlgebra):
    """Truncated Cech complex of End(A(0) + .. + A(N)) with the averaged product.

    Basis elements are (chart, tgt, src, exponent, matrix) with chart 1, 2 in
    degree 0 and chart 12 in degree 1.  ``product`` is "average" (the halved
    mixed product) or "cup" (f.g = f1 g, g.f = g f2).
    """

    def __init__(self, N, n, g: GMatrix, D, product="average", objects=None):
        F = g.field
        if F.char == 2:
            raise ValueError("the averaged product needs characteristic != 2")
        self.N, self.n, self.g, self.D, self.mode = N, n, g, D, product
        objects = list(objects) if objects is not None else list(range(N + 1))
        self.objects = objects
        c1, sub = _chart1_basis(n, g, D)
        self.endg = sub
        self.elems = []
        labels, cdeg, src, tgt, grade = [], [], [], [], []
        self.index = {}
        for j in objects:
            for i in objects:
                m = j - i
                for chart, basis in ((1, c1), (2, _full_basis(n, -D, m, F)), (12, _full_basis(n, -D, D, F))):
                    for k, M, lab in basis:
                        key = (chart, j, i, k, lab)
                        self.index[key] = len(self.elems)
                        self.elems.append((chart, j, i, k, M))
                        labels.append(f"{chart}:[{j}<-{i}]{lab}")
                        cdeg.append(1 if chart == 12 else 0)
                        src.append(i)
                        tgt.append(j)
                        grade.append((k,) + _weight(g, n, M))
        # lookups for re-expansion in chart bases
        self._c1_exp = defaultdict(list)
        for k, M, lab in c1:
            self._c1_exp[k].append((M, lab))
        self._ginv = g.inverse()
        super().__init__(F, cdeg, self._d_basis, self._mul_basis, labels, src, tgt, grade,
                         unit=None, name=f"Cech(N={N},n={n},D={D})")
        self.unit = {}
        for j in objects:
            for chart in (1, 2):
                lab = "I" if chart == 1 else None
                if chart == 1:
                    self.unit[self.index[(1, j, j, 0, "I")]] = F.one
                else:
                    for a in range(n):
                        self.unit[self.index[(2, j, j, 0, f"E{a + 1}{a + 1}z^0")]] = F.one

    # chart coordinates of a matrix dict at exponent k
    def _coords(self, chart, j, i, k, M):
        F = self.field
        n = self.n
        if chart == 1:
            if k < 0:
                raise ValueError("negative exponent on U1")
            if k > self.D:
                raise OverflowError("U1 exponent beyond D")
            if k == 0:
                c = M.get((0, 0), F.zero)
                if any(M.get((a, b), F.zero) != (c if a == b else F.zero) for a in range(n) for b in range(n)):
                    raise ValueError("constant term not scalar")
                return {self.index[(1, j, i, 0, "I")]: c} if c else {}
            if k == 1:
                flat = {a * n + b: c for (a, b), c in M.items() if c}
                cs = self.endg.coordinates(flat)
                return {self.index[(1, j, i, 1, f"u{r + 1}z")]: c for r, c in enumerate(cs) if c}
        else:
            hi = self.D if chart == 12 else j - i
            if k > hi:
                raise (OverflowError if chart == 12 else ValueError)("exponent outside chart")
            if k < -self.D:
                raise OverflowError("exponent below -D")
        return {self.index[(chart, j, i, k, f"E{a + 1}{b + 1}z^{k}")]: c
                for (a, b), c in M.items() if c}

    def _vec(self, chart, j, i, L: dict):
        out = {}
        for k, M in L.items():
            axpy(out, self.field.one, self._coords(chart, j, i, k, M))
        return out

    def _d_basis(self, x):
        chart, j, i, k, M = self.elems[x]
        if chart == 12:
            return {}
        sign = -self.field.one if chart == 1 else self.field.one
        return {y: c * sign for y, c in self._coords(12, j, i, k, M).items()}

    def _mul_basis(self, x, y):
        F = self.field
        cx, j, i, k, M = self.elems[x]
        cy, i2, h, l, P = self.elems[y]
        if i != i2:
            return {}
        prod = {}
        for (a, b), u in M.items():
            for (b2, c), v in P.items():
                if b == b2:
                    prod[(a, c)] = prod.get((a, c), F.zero) + u * v
        prod = {ab: c for ab, c in prod.items() if c}
        if not prod:
            return {}
        e = k + l
        if cx == 12 and cy == 12:
            return {}
        if cx != 12 and cy != 12:
            if cx != cy:
                return {}
            return self._coords(cx, j, h, e, prod)
        deg0 = cx if cy == 12 else cy
        if self.mode == "average":
            coef = F.one / F(2)
        else:
            # cup: (f1, f2).g = f1 g and g.(f1, f2) = g f2
            if (cy == 12 and deg0 != 1) or (cx == 12 and deg0 != 2):
                return {}
            coef = F.one
        return {z: c * coef for z, c in self._coords(12, j, h, e, prod).items()}

    # -- elements
    def element(self, chart, j, i, L: LaurentMatrix):
        return self._vec(chart, j, i, L.coeffs)

    def cocycle0(self, j, i, L: LaurentMatrix):
        """A global section as the degree-0 cocycle (f, f)."""
        out = self._vec(1, j, i, L.coeffs)
        axpy(out, self.field.one, self._vec(2, j, i, L.coeffs))
        return out

    def laurent(self, v):
        """Decode a degree-1 (chart 12) vector into {(tgt, src): LaurentMatrix}."""
        out = defaultdict(lambda: defaultdict(dict))
        for x, c in v.items():
            chart, j, i, k, M = self.elems[x]
            if chart != 12:
                raise ValueError("not a degree-1 vector")
            for ab, u in M.items():
                out[(j, i)][k][ab] = out[(j, i)][k].get(ab, self.field.zero) + c * u
        return {blk: LaurentMatrix(self.n, dict(v)) for blk, v in out.items()}

    def theta(self, v):
        """Sum over diagonal blocks of the z^1 coefficient of tr(g x12)."""
        F = self.field
        total = F.zero
        for x, c in v.items():
            chart, j, i, k, M = self.elems[x]
            if chart != 12 or i != j or k != 1:
                continue
            total += c * sum((self.g[b, a] * u for (a, b), u in M.items()), F.zero)
        return total

    def pairing(self) -> Pairing:
        """<x, y> = theta(x y)."""
        def form(i, j):
            # theta only sees total exponent 1 on diagonal blocks
            if self.src[i] != self.tgt[j] or self.tgt[i] != self.src[j]:
                return self.field.zero
            if self.elems[i][3] + self.elems[j][3] != 1:
                return self.field.zero
            return self.theta(self.mul(i, j))
        return Pairing(self, form, 1)


def cech_dg(N: int, n: int, g: GMatrix, field=None, D: int = 10, product="average", objects=None) -> CechDG:
    if field is not None and field != g.field:
        g = GMatrix(Mat(field, [[field(g[i, j]) for j in range(g.n)] for i in range(g.n)]))
    if g.field.char == 2:
        raise ValueError("characteristic 2 is not supported (the product halves mixed terms)")
    span = (max(objects) - min(objects)) if objects else N
    if D < 2 * span + 4:
        raise ValueError("D must be at least 2N + 4")
    return CechDG(N, n, g, D, product, objects)


class ThomWhitneyDG(DGAlgebra):
    """Polynomial forms on the 1-simplex with values in the two-chart cover.

    Degree 0: F(s) with coefficients in U12, F(0) on U1 and F(1) on U2;
    degree 1: G(s) ds.  The product is pointwise, hence strictly associative,
    and the trace is theta(integral over [0, 1]).  Integration over s identifies
    the cohomology with the Cech cohomology (d(f1, f2) = f2 - f1).  Basis:
    (1-s) u (u in U1), s u (u in U2), s^k (1-s) E z^e (1 <= k < S) and
    s^k ds E z^e (0 <= k < S).
    """

    def __init__(self, N, n, g: GMatrix, D, S=8, objects=None):
        F = g.field
        self.N, self.n, self.g, self.D, self.S, self.mode = N, n, g, D, S, "tw"
        objects = list(objects) if objects is not None else list(range(N + 1))
        self.objects = objects
        c1, sub = _chart1_basis(n, g, D)
        self.endg = sub
        self.elems = []
        self.index = {}
        labels, cdeg, src, tgt, grade = [], [], [], [], []
        one = F.one

        def add(key, j, i, e, M, poly, form):
            self.index[key] = len(self.elems)
            self.elems.append((key[0], j, i, e, M, poly, form))
            labels.append(f"{key[0]}:[{j}<-{i}]" + "/".join(str(x) for x in key[4:]))
            cdeg.append(1 if form else 0)
            src.append(i)
            tgt.append(j)
            grade.append((e,) + _weight(g, n, M))

        for j in objects:
            for i in objects:
                m = j - i
                for e, M, lab in c1:
                    add(("v1", j, i, e, lab), j, i, e, M, {0: one, 1: -one}, False)
                for e, M, lab in _full_basis(n, -D, m, F):
                    add(("v2", j, i, e, lab), j, i, e, M, {1: one}, False)
                for k in range(1, S):
                    for e, M, lab in _full_basis(n, -D, D, F):
                        add(("bub", j, i, e, lab, k), j, i, e, M, {k: one, k + 1: -one}, False)
                for k in range(S):
                    for e, M, lab in _full_basis(n, -D, D, F):
                        add(("form", j, i, e, lab, k), j, i, e, M, {k: one}, True)
        self._ginv = g.inverse()
        super().__init__(F, cdeg, self._d_basis, self._mul_basis, labels, src, tgt, grade,
                         unit=None, name=f"TW(N={N},n={n},D={D},S={S})")
        self.unit = self.cocycle0_matrix = None
        self.unit = {}
        for j in objects:
            self.unit.update(self.cocycle0(j, j, LaurentMatrix(n, {0: {(a, a): one for a in range(n)}})))

    def _chart(self, chart, j, i, e, M):
        F = self.field
        n = self.n
        if chart == 1:
            if e < 0:
                raise ValueError("negative exponent on U1")
            if e > self.D:
                raise OverflowError("U1 exponent beyond D")
            if e == 0:
                c = M.get((0, 0), F.zero)
                if any(M.get((a, b), F.zero) != (c if a == b else F.zero) for a in range(n) for b in range(n)):
                    raise ValueError("constant term not scalar")
                return {self.index[("v1", j, i, 0, "I")]: c} if c else {}
            if e == 1:
                flat = {a * n + b: c for (a, b), c in M.items() if c}
                cs = self.endg.coordinates(flat)
                return {self.index[("v1", j, i, 1, f"u{r + 1}z")]: c for r, c in enumerate(cs) if c}
            return {self.index[("v1", j, i, e, f"E{a + 1}{b + 1}z^{e}")]: c for (a, b), c in M.items() if c}
        if e > j - i:
            raise ValueError("exponent beyond the twist on U2")
        if e < -self.D:
            raise OverflowError("exponent below -D")
        return {self.index[("v2", j, i, e, f"E{a + 1}{b + 1}z^{e}")]: c for (a, b), c in M.items() if c}

    def _encode(self, j, i, e, M, poly, form):
        """Coordinates of poly(s) (ds) (x) M z^e."""
        F = self.field
        poly = {k: c for k, c in poly.items() if c}
        M = {ab: c for ab, c in M.items() if c}
        if not poly or not M:
            return {}
        if abs(e) > self.D:
            raise OverflowError("exponent outside [-D, D]")
        if max(poly) > (self.S - 1 if form else self.S):
            raise OverflowError("s-degree beyond the truncation")
        out = {}
        if form:
            for k, c in poly.items():
                for (a, b), x in M.items():
                    key = ("form", j, i, e, f"E{a + 1}{b + 1}z^{e}", k)
                    out[self.index[key]] = out.get(self.index[key], F.zero) + c * x
            return out
        p0 = poly.get(0, F.zero)
        p1 = sum(poly.values(), F.zero)
        if p0:
            axpy(out, p0, self._chart(1, j, i, e, M))
        if p1:
            axpy(out, p1, self._chart(2, j, i, e, M))
        # remainder vanishes at 0 and 1: divide by s(1 - s)
        rem = dict(poly)
        rem[0] = rem.get(0, F.zero) - p0
        rem[1] = rem.get(1, F.zero) + p0 - p1
        top = max(k for k in rem)
        # s(1-s) G(s) = rem; solve from the top: coefficient of s^{k+2} in rem is -G_k
        G = {}
        r = dict(rem)
        for k in range(top - 2, -1, -1):
            gk = -r.get(k + 2, F.zero)
            if gk:
                G[k] = gk
                r[k + 1] = r.get(k + 1, F.zero) - gk
                r[k + 2] = r.get(k + 2, F.zero) + gk
        if any(r.get(k, F.zero) for k in r):
            raise ArithmeticError("division by s(1-s) failed")
        for k, gk in G.items():
            for (a, b), x in M.items():
                key = ("bub", j, i, e, f"E{a + 1}{b + 1}z^{e}", k + 1)
                axpy(out, gk * x, {self.index[key]: self.field.one})
        return out

    def _d_basis(self, x):
        kind, j, i, e, M, poly, form = self.elems[x]
        if form:
            return {}
        der = {k - 1: c * k for k, c in poly.items() if k}
        return self._encode(j, i, e, M, der, True)

    def _raw_mul(self, x, y):
        F = self.field
        _, j, i, e, M, p, fx = self.elems[x]
        _, i2, h, l, P, q, fy = self.elems[y]
        if i != i2 or (fx and fy):
            return None
        prod = {}
        for (a, b), u in M.items():
            for (b2, c), v in P.items():
                if b == b2:
                    prod[(a, c)] = prod.get((a, c), F.zero) + u * v
        poly = {}
        for k, u in p.items():
            for k2, v in q.items():
                poly[k + k2] = poly.get(k + k2, F.zero) + u * v
        return j, h, e + l, prod, poly, fx or fy

    def _mul_basis(self, x, y):
        r = self._raw_mul(x, y)
        return {} if r is None else self._encode(*r)

    def element(self, chart, j, i, L: LaurentMatrix):
        if chart != 12:
            raise ValueError("only degree-1 elements (chart 12) are built here")
        out = {}
        for e, M in L.coeffs.items():
            axpy(out, self.field.one, self._encode(j, i, e, M, {0: self.field.one}, True))
        return out

    def cocycle0(self, j, i, L: LaurentMatrix):
        out = {}
        for e, M in L.coeffs.items():
            axpy(out, self.field.one, self._encode(j, i, e, M, {0: self.field.one}, False))
        return out

    def theta(self, v):
        F = self.field
        total = F.zero
        for x, c in v.items():
            kind, j, i, e, M, poly, form = self.elems[x]
            if not form or i != j or e != 1:
                continue
            integral = sum((a / F(k + 1) for k, a in poly.items()), F.zero)
            total += c * integral * sum((self.g[b, a] * u for (a, b), u in M.items()), F.zero)
        return total

    def pairing(self) -> Pairing:
        def form(i, j):
            if self.src[i] != self.tgt[j] or self.tgt[i] != self.src[j]:
                return self.field.zero
            if self.elems[i][3] + self.elems[j][3] != 1:
                return self.field.zero
            r = self._raw_mul(i, j)
            if r is None or not r[5]:
                return self.field.zero
            F = self.field
            a, b, _, M, poly, _ = r
            if a != b:
                return F.zero
            integral = sum((c / F(k + 1) for k, c in poly.items()), F.zero)
            return integral * sum((self.g[y, x] * u for (x, y), u in M.items()), F.zero)
        return Pairing(self, form, 1)


def thom_whitney_dg(N: int, n: int, g: GMatrix, D: int = 10, S: int = 8, objects=None) -> ThomWhitneyDG:
    span = (max(objects) - min(objects)) if objects else N
    if D < 2 * span + 4:
        raise ValueError("D must be at least 2N + 4")
    if g.field.char and g.field.char <= S:
        raise ValueError("integration over s needs characteristic > S")
    return ThomWhitneyDG(N, n, g, D, S, objects)


# ---------------------------------------------------------------- cohomology

def twist_cohomology(m: int, n: int, g: GMatrix, D: int):
    """(h0, h1) of the single twist A(m), computed from the truncated Cech complex."""
    F = g.field
    c1, _ = _chart1_basis(n, g, D)
    c2 = _full_basis(n, -D, m, F)
    c12 = _full_basis(n, -D, D, F)
    pos = {(k, lab): p for p, (k, M, lab) in enumerate(c12)}
    # d(f1, f2) = f2 - f1, split by exponent
    cols = defaultdict(list)
    for sign, basis in ((-1, c1), (1, c2)):
        for k, M, lab in basis:
            col = {}
            for (a, b), c in M.items():
                col[pos[(k, f"E{a + 1}{b + 1}z^{k}")]] = c * sign
            cols[k].append(col)
    h0 = h1 = 0
    for k in range(-D, D + 1):
        cs = cols.get(k, [])
        r = rank_of(F, cs, len(c12)) if cs else 0
        h0 += len(cs) - r
        h1 += n * n - r
    return h0, h1


def cohomology_with_trace(B: CechDG, pair: Pairing | None = None, contraction=None):
    """Cohomology of B with theta; checks theta(d .) = 0 and perfectness of the pairing on H.

    Returns (contraction, report).  The report lists block dims of H^0/H^1 and
    the rank of the pairing H^0 x H^1 -> k per block pair.
    """
    pair = pair or B.pairing()
    for x in range(B.dim):
        if B.cdeg[x] == 0 and B.theta(B.d(x)):
            raise ArithmeticError("theta does not vanish on coboundaries")
    c = contraction or orthogonal_contraction(B, pair)
    dims = defaultdict(lambda: [0, 0])
    for h in range(c.hdim):
        dims[(c.h_tgt[h], c.h_src[h])][c.h_cdeg[h]] += 1
    ranks = {}
    for (j, i), (d0, _) in dims.items():
        H0 = [h for h in range(c.hdim) if c.h_cdeg[h] == 0 and (c.h_tgt[h], c.h_src[h]) == (j, i)]
        H1 = [h for h in range(c.hdim) if c.h_cdeg[h] == 1 and (c.h_tgt[h], c.h_src[h]) == (i, j)]
        M = [{k: pair(c.iota[a], c.iota[b]) for k, b in enumerate(H1) if pair(c.iota[a], c.iota[b])}
             for a in H0]
        r = rank_of(B.field, M, len(H1)) if H0 and H1 else 0
        if not (r == len(H0) == len(H1)):
            raise ArithmeticError(f"pairing on cohomology not perfect for block {(j, i)}")
        ranks[(j, i)] = r
    report = {"dims": {f"{j}<-{i}": list(v) for (j, i), v in sorted(dims.items())},
              "pairing_ranks": {f"{j}<-{i}": r for (j, i), r in sorted(ranks.items())}}
    return c, report


def serre_pairing_rank(m: int, n: int, g: GMatrix, D: int):
    """Rank of H^0(A(m)) x H^1(A(-m)) -> k, (x, c) -> theta(x c), and the two dims."""
    F = g.field
    B = cech_dg(1, n, g, D=D, objects=[0, m]) if m else cech_dg(0, n, g, D=D)
    i, j = (0, m) if m else (0, 0)
    pair = B.pairing()
    c = orthogonal_contraction(B, pair, correct=False)
    H0 = [h for h in range(c.hdim) if c.h_cdeg[h] == 0 and (c.h_tgt[h], c.h_src[h]) == (j, i)]
    H1 = [h for h in range(c.hdim) if c.h_cdeg[h] == 1 and (c.h_tgt[h], c.h_src[h]) == (i, j)]
    M = [{k: pair(c.iota[a], c.iota[b]) for k, b in enumerate(H1)} for a in H0]
    r = rank_of(F, M, len(H1)) if H0 and H1 else 0
    return r, len(H0), len(H1)


# ---------------------------------------------------------------- Nakayama

def nakayama(n: int, g: GMatrix, field=None, D: int = 4):
    """kappa on F_m = H^0(A(m)) from theta(y x) = theta(x kappa(y)), x in H^1(A(-m)).

    Solved levelwise from the perfect pairing.  Returns a dict with per-level
    matrices (on the section basis), the multiplicativity check and whether
    kappa is the identity.
    """
    F = g.field
    mats = {}
    level_basis = {m: section_basis(m, n, g) for m in range(D + 1)}
    for m in range(D + 1):
        Y = level_basis[m]
        X = _h1_reps(-m, n, g, D + m + 2) if m else _h1_reps(0, n, g, D + 2)

        def theta(L):
            return L.trace_with(g.mat, 1, F)

        # solve for kappa(y) = sum c_k Y_k with theta(x kappa(y)) = theta(y x) for all x
        G = [{r: theta(x @ yk) for r, x in enumerate(X) if theta(x @ yk)} for yk in Y]
        targets = [{r: theta(y @ x) for r, x in enumerate(X) if theta(y @ x)} for y in Y]
        sols = solve_vectors(F, G, len(X), targets)
        if any(s is None for s in sols):
            raise ArithmeticError("no Nakayama solution")
        if kernel_of(F, G, len(X)):
            raise ArithmeticError("pairing degenerate")
        rows = [[F.zero] * len(Y) for _ in Y]
        for col, s in enumerate(sols):
            for r, c in s.items():
                rows[r][col] = c
        mats[m] = Mat(F, rows, len(Y))

    def kappa(m, v):
        out = {}
        for col, c in v.items():
            for r in range(len(level_basis[m])):
                x = mats[m][r, col]
                if x:
                    out[r] = out.get(r, F.zero) + c * x
        return {k: x for k, x in out.items() if x}

    def coords(m, L):
        return _section_coords(L, level_basis[m], F)

    multiplicative = True
    for m1 in range(D + 1):
        for m2 in range(D + 1 - m1):
            for a, ya in enumerate(level_basis[m1]):
                for b, yb in enumerate(level_basis[m2]):
                    lhs = kappa(m1 + m2, coords(m1 + m2, ya @ yb))
                    ka = _combine(level_basis[m1], kappa(m1, {a: F.one}), n)
                    kb = _combine(level_basis[m2], kappa(m2, {b: F.one}), n)
                    if lhs != coords(m1 + m2, ka @ kb):
                        multiplicative = False
    identity = all(mats[m] == Mat.identity(F, mats[m].nrows) for m in mats)
    # leading symbol on degree-1 parts versus Ad(g)
    Y1 = level_basis[1]
    adg = True
    gm = g.mat
    gi = g.inverse()
    for col, y in enumerate(Y1):
        ky = _combine(Y1, kappa(1, {col: F.one}), n)
        A = Mat(F, y.coefficient(1, F))
        want = gm @ A @ gi
        if Mat(F, ky.coefficient(1, F)) != want:
            adg = False
    return {"matrices": mats, "multiplicative": multiplicative, "identity": identity,
            "symbol_is_Ad_g": adg, "scalar_g": is_scalar(g)}


def is_scalar(g):
    c = g[0, 0]
    return all(g[i, j] == (c if i == j else 0) for i in range(g.n) for j in range(g.n))


def _combine(basis, v, n):
    out = LaurentMatrix(n)
    for k, c in v.items():
        out = out + basis[k].scale(c)
    return out


def _section_coords(L, basis, F):
    flat = lambda X: {(k, ij): c for k, v in X.coeffs.items() for ij, c in v.items()}
    keys = sorted({key for b in basis for key in flat(b)})
    pos = {key: p for p, key in enumerate(keys)}
    cols = [{pos[key]: c for key, c in flat(b).items()} for b in basis]
    tgt = {}
    for key, c in flat(L).items():
        if key not in pos:
            raise ValueError("not in the span of the section basis")
        tgt[pos[key]] = c
    s = solve_vectors(F, cols, len(keys), [tgt])[0]
    if s is None:
        raise ValueError("not a section")
    return {k: c for k, c in s.items() if c}


def _h1_reps(m: int, n: int, g: GMatrix, D: int):
    """Laurent representatives of a basis of H^1(A(m)), m <= 0 (exponents m+1 .. 1)."""
    F = g.field
    out = []
    if m == 0:
        # End / End_g at exponent 1: a single class, e.g. h z with tr(g h) = 1
        from .filtered_rees import default_h
        h = default_h(g)
        out.append(LaurentMatrix(n, {1: {(i, j): h[i, j] for i in range(n) for j in range(n) if h[i, j]}}))
        return out
    for k in range(m + 1, 2):
        if k == 1:
            from .filtered_rees import default_h
            h = default_h(g)
            out.append(LaurentMatrix(n, {1: {(i, j): h[i, j] for i in range(n) for j in range(n) if h[i, j]}}))
        elif k == 0:
            for a in range(n):
                for b in range(n):
                    if (a, b) != (0, 0):
                        out.append(LaurentMatrix(n, {0: {(a, b): F.one}}))
        else:
            for a in range(n):
                for b in range(n):
                    out.append(LaurentMatrix(n, {k: {(a, b): F.one}}))
    return out


# ---------------------------------------------------------------- sections ring

def sections_ring(n: int, g: GMatrix, D: int, op=True) -> GradedAlgebra:
    """The graded algebra of global sections of A(m), 0 <= m <= D, with t = I in degree 1.

    The basis is (E basis element b, t-power) in the order of
    polynomial_extension, so the comparison with E(V,g)[t] is entrywise.  With
    ``op`` the product is x * y = y x (composition order), giving E^op[t].
    """
    E = build_E(n, g, g.field, D)
    ref = polynomial_extension(E, D)
    F = g.field
    mats = E.mats
    table = {}
    pairs = ref.basis_pairs
    pos = {p: k for k, p in enumerate(pairs)}
    sec = []
    for i, kt in pairs:
        level = E.deg[i] + kt
        M = mats[i]
        sec.append((level, LaurentMatrix(n, {E.deg[i]: {(a, b): M[a][b] for a in range(n)
                                                        for b in range(n) if M[a][b]}})))
    for p, (lp, x) in enumerate(sec):
        for q, (lq, y) in enumerate(sec):
            if lp + lq > D:
                continue
            prod = (y @ x) if op else (x @ y)
            level = lp + lq
            out = {}
            for e, Mv in prod.coeffs.items():
                M = [[Mv.get((a, b), F.zero) for b in range(n)] for a in range(n)]
                for i, c in E.coords(M, e).items():
                    out[pos[(i, level - e)]] = c
            if out:
                table[(p, q)] = out
    R = GradedAlgebra(F, ref.vertices, ref.labels, ref.src, ref.tgt, ref.deg, ref.cdeg, ref.weight,
                      table, ref.units, D, "H0(A(*))" + ("^op" if op else ""))
    R.basis_pairs = pairs
    R.t_index = ref.t_index
    return R


# ---------------------------------------------------------------- alpha, beta, gamma

def build_alpha_beta_gamma(B: CechDG, h0: Mat):
    """alpha = (t, hz), beta = (hz, -t), gamma = class of h^{-1} z^{-1} in block (0 <- 2).

    h = g^{-1} h0 with tr(h0) = 0 and h0 invertible.  Returns degree-0 cocycles
    alpha = [a1, a2] (blocks 1 <- 0), beta = [b1, b2] (blocks 2 <- 1) and the
    degree-1 cocycle gamma (block 0 <- 2), as vectors of B.
    """
    F = B.field
    n = B.n
    if h0.trace():
        raise ValueError("tr(h0) must vanish")
    if not h0.det():
        raise ValueError("h0 must be invertible")
    if not {0, 1, 2} <= set(B.objects):
        raise ValueError("need objects 0, 1, 2")
    h = B._ginv @ h0
    hinv = h.inverse()
    I = LaurentMatrix(n, {0: {(i, i): F.one for i in range(n)}})
    hz = LaurentMatrix(n, {1: {(i, j): h[i, j] for i in range(n) for j in range(n) if h[i, j]}})
    c12 = LaurentMatrix(n, {-1: {(i, j): hinv[i, j] for i in range(n) for j in range(n) if hinv[i, j]}})
    alpha = [B.cocycle0(1, 0, I), B.cocycle0(1, 0, hz)]
    beta = [B.cocycle0(2, 1, hz), B.cocycle0(2, 1, -I)]
    gamma = B.element(12, 0, 2, c12)
    for v in alpha + beta:
        if B.d_vec(v):
            raise ArithmeticError("alpha/beta must be cocycles")
    return {"alpha": alpha, "beta": beta, "gamma": gamma, "h": h, "hz": hz, "c12": c12}


def gamma_functional_check(B: CechDG, abg, R2=None):
    """theta(r gamma) versus tr(r2 h^{-1} g) for r in a basis of H^0(A(2)).

    r2 is the z^2 coefficient of r.  Returns list of (direct, formula) pairs.
    """
    F = B.field
    n = B.n
    hinv = abg["h"].inverse()
    out = []
    for r in section_basis(2, n, B.g):
        direct = B.theta(B.mul_vec(B.cocycle0(2, 0, r), abg["gamma"]))
        r2 = Mat(F, r.coefficient(2, F))
        formula = (r2 @ hinv @ B.g.mat).trace()
        out.append((direct, formula))
    return out


# ---------------------------------------------------------------- pipeline

def minimal_model_pipeline(n: int, g: GMatrix, h0: Mat, N: int = 2, arity: int = 4, D: int = 10,
                           product="tw", check_arity=None, contraction=None, B=None):
    """dg model -> orthogonal contraction -> tree formula; checks and m3(gamma, beta, alpha).

    ``product`` is "tw" (Thom-Whitney, the default) or a Cech product name
    ("average", "cup"); only the Thom-Whitney model gives a cyclic structure.

    Stasheff identities are checked up to ``check_arity`` (default: arity),
    the cyclic identity for m_n with n <= arity, units and the m3 value
    sum_k m3(gamma, beta_k, alpha_k) in H^0(A(0)) = k.
    """
    import time
    t0 = time.time()
    F = g.field
    if B is None:
        B = thom_whitney_dg(N, n, g, D=D) if product == "tw" else cech_dg(N, n, g, D=D, product=product)
    pair = B.pairing()
    c, coh = cohomology_with_trace(B, pair, contraction)
    A = perturb(c, arity)
    units = find_units(A, [h for h in range(A.dim) if A.cdeg[h] == 0 and A.src[h] == A.tgt[h]])
    A.units = units
    hpair = {}

    def hp(a, b):
        key = (a, b)
        if key not in hpair:
            hpair[key] = pair(c.iota[a], c.iota[b])
        return hpair[key]

    t1 = time.time()
    ok_st, bad_st = check_stasheff(A, check_arity or arity)
    t2 = time.time()
    ok_cy, bad_cy = check_cyclic(A, hp, arity)
    t3 = time.time()
    ok_un = check_units(A, arity)
    abg = build_alpha_beta_gamma(B, h0)
    gam = c.p(abg["gamma"])
    als = [c.p(a) for a in abg["alpha"]]
    bes = [c.p(b) for b in abg["beta"]]
    val = {}
    for a, b in zip(als, bes):
        r = A.m_vec([gam, b, a])
        axpy(val, F.one, r)
    m2ba = {}
    for a, b in zip(als, bes):
        axpy(m2ba, F.one, A.m_vec([b, a]))
    unit0 = [u for u in units if A.src[u] == 0]
    scalar = None
    if set(val) <= set(unit0):
        scalar = val.get(unit0[0], F.zero) if unit0 else None
    report = {"stasheff": ok_st, "stasheff_failure": bad_st, "cyclic": ok_cy, "cyclic_failure": bad_cy,
              "units": ok_un, "m2_beta_alpha_zero": not m2ba, "m3_gamma_beta_alpha": scalar,
              "h_dim": A.dim, "cohomology": coh,
              "timings": {"setup": t1 - t0, "stasheff": t2 - t1, "cyclic": t3 - t2}}
    return A, report

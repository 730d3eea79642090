"""A-infinity structures on finite-dimensional graded spaces, and homological perturbation.

Sign conventions (used everywhere in this module)
-------------------------------------------------
* Stasheff identities:  sum_{r+s+t=n} (-1)^{r+st} m_{r+1+t}(1^r (x) m_s (x) 1^t) = 0,
  where applying 1^r (x) m_s (x) 1^t to a1..an costs (-1)^{(2-s)(|a1|+..+|ar|)}.
* Homotopy: d Q + Q d = iota p - id.
* Transfer (tree formula):  Lambda_1(a) = iota(a),
  Lambda_n(a1..an) = sum_k (-1)^{|u|} u * v  with  u = T_k(a1..ak), v = T_{n-k}(a_{k+1}..an),
  T_1 = iota, T_k = Q Lambda_k; then m_n = (-1)^{sum_i (n-i)|a_i|} p Lambda_n.
  This is the shifted-degree (bar) form of the sum over planar binary trees.
* Gauge transformations act in the shifted convention b_n = (-1)^{sum (n-i)|a_i|} m_n with
  f_1 = id.
"""
from __future__ import annotations

import itertools
from collections import defaultdict
from math import comb

from .scalar_linalg import axpy, kernel_of, rank_of, solve_vectors, complement_vectors


def catalan(n):
    return comb(2 * n, n) // (n + 1)


def _sign(e, one):
    return -one if e % 2 else one


def _scale(v, c):
    if not c:
        return {}
    return {k: x * c for k, x in v.items()}


# ---------------------------------------------------------------- dg algebras

class DGAlgebra:
    """A finite-dimensional dg-algebra given on a basis.

    ``d(i)`` and ``mul(i, j)`` return sparse vectors; basis element i has
    cohomological degree ``cdeg[i]`` and lives in the Hom-block
    (``tgt[i]`` <- ``src[i]``).  ``grade[i]`` is any additive grading respected
    by d and the product (used to split linear algebra).
    """

    def __init__(self, field, cdeg, d, mul, labels=None, src=None, tgt=None, grade=None,
                 unit=None, name=""):
        self.field = field
        self.cdeg = list(cdeg)
        self._d = d
        self._mul = mul
        n = len(self.cdeg)
        self.labels = list(labels) if labels else [str(i) for i in range(n)]
        self.src = list(src) if src else [0] * n
        self.tgt = list(tgt) if tgt else [0] * n
        self.grade = list(grade) if grade else [()] * n
        self.unit = unit
        self.name = name
        self._dcache = {}
        self._mcache = {}

    @property
    def dim(self):
        return len(self.cdeg)

    def d(self, i):
        v = self._dcache.get(i)
        if v is None:
            v = self._dcache[i] = self._d(i)
        return v

    def mul(self, i, j):
        if self.src[i] != self.tgt[j]:
            return {}
        key = (i, j)
        v = self._mcache.get(key)
        if v is None:
            v = self._mcache[key] = self._mul(i, j)
        return v

    def d_vec(self, v):
        out = {}
        for i, c in v.items():
            axpy(out, c, self.d(i))
        return out

    def mul_vec(self, u, v):
        out = {}
        for i, a in u.items():
            for j, b in v.items():
                p = self.mul(i, j)
                if p:
                    axpy(out, a * b, p)
        return out

    def check_d_squared(self):
        return all(not self.d_vec(self.d(i)) for i in range(self.dim))

    def check_leibniz(self, pairs=None):
        """d(xy) = d(x) y + (-1)^{|x|} x d(y) on basis pairs (all composable pairs by default)."""
        one = self.field.one
        if pairs is None:
            pairs = [(i, j) for i in range(self.dim) for j in range(self.dim) if self.src[i] == self.tgt[j]]
        for i, j in pairs:
            try:
                lhs = self.d_vec(self.mul(i, j))
                rhs = self.mul_vec(self.d(i), {j: one})
                axpy(rhs, _sign(self.cdeg[i], one), self.mul_vec({i: one}, self.d(j)))
            except OverflowError:
                continue
            if lhs != rhs:
                return False
        return True

    def check_associative(self, triples):
        one = self.field.one
        bad = []
        for i, j, k in triples:
            try:
                lhs = self.mul_vec(self.mul(i, j), {k: one})
                rhs = self.mul_vec({i: one}, self.mul(j, k))
            except OverflowError:
                continue
            if lhs != rhs:
                bad.append((i, j, k))
        return bad


class Pairing:
    """A bilinear form of fixed degree on a DGAlgebra's basis: ``form(i, j)``."""

    def __init__(self, algebra, form, degree=1):
        self.algebra = algebra
        self.form = form
        self.degree = degree
        self._cache = {}

    def __call__(self, u, v):
        F = self.algebra.field
        out = F.zero
        for i, a in u.items():
            for j, b in v.items():
                out += a * b * self.basis(i, j)
        return out

    def basis(self, i, j):
        key = (i, j)
        if key not in self._cache:
            A = self.algebra
            if A.cdeg[i] + A.cdeg[j] != self.degree:
                self._cache[key] = A.field.zero
            else:
                self._cache[key] = self.form(i, j)
        return self._cache[key]

    def check_d_invariant(self, pairs):
        A = self.algebra
        one = A.field.one
        for i, j in pairs:
            lhs = self(A.d(i), {j: one}) + _sign(A.cdeg[i], one) * self({i: one}, A.d(j))
            if lhs:
                return False
        return True

    def check_symmetric(self, pairs):
        A = self.algebra
        one = A.field.one
        return all(self.basis(i, j) == _sign(A.cdeg[i] * A.cdeg[j], one) * self.basis(j, i)
                   for i, j in pairs)


# ---------------------------------------------------------------- contractions

class Contraction:
    """Cohomology H with inclusion iota, projection p and homotopy Q.

    ``iota[h]`` is a B-vector per H basis element; ``p_basis[i]`` an H-vector and
    ``Q_basis[i]`` a B-vector per B basis element.
    """

    def __init__(self, B, h_cdeg, h_labels, h_src, h_tgt, h_grade, iota, p_basis, Q_basis, C=None):
        self.B = B
        self.h_cdeg = list(h_cdeg)
        self.h_labels = list(h_labels)
        self.h_src = list(h_src)
        self.h_tgt = list(h_tgt)
        self.h_grade = list(h_grade)
        self.iota = iota
        self.p_basis = p_basis
        self.Q_basis = Q_basis
        self.C = C or []

    @property
    def hdim(self):
        return len(self.h_cdeg)

    def p(self, v):
        out = {}
        for i, c in v.items():
            pv = self.p_basis.get(i)
            if pv:
                axpy(out, c, pv)
        return out

    def Q(self, v):
        out = {}
        for i, c in v.items():
            q = self.Q_basis.get(i)
            if q:
                axpy(out, c, q)
        return out

    def iota_vec(self, h):
        out = {}
        for k, c in h.items():
            axpy(out, c, self.iota[k])
        return out

    def check(self):
        """dQ + Qd = iota p - id, Q iota = 0, p Q = 0, Q^2 = 0, p iota = id."""
        B = self.B
        one = B.field.one
        for i in range(B.dim):
            e = {i: one}
            lhs = B.d_vec(self.Q(e))
            axpy(lhs, one, self.Q(B.d(i)))
            rhs = self.iota_vec(self.p(e))
            axpy(rhs, -one, e)
            if lhs != rhs:
                return False
            if self.p(self.Q(e)) or self.Q(self.Q(e)):
                return False
        for h in range(self.hdim):
            if self.Q(self.iota[h]):
                return False
            if self.p(self.iota[h]) != {h: one}:
                return False
        return True

    def check_Q_adjoint(self, pair, pairs):
        """<Qx, y> = (-1)^{|x|} <x, Qy> on the given basis pairs."""
        B = self.B
        one = B.field.one
        for i, j in pairs:
            lhs = pair(self.Q({i: one}), {j: one})
            rhs = _sign(B.cdeg[i], one) * pair({i: one}, self.Q({j: one}))
            if lhs != rhs:
                return False
        return True


def orthogonal_contraction(B: DGAlgebra, pair: Pairing, cells=None, correct=True) -> Contraction:
    """Contraction B = im(d) + A + C with <C, A^1> = 0 (degrees [0, 1] only).

    Linear algebra is done per cell: basis elements sharing (src, tgt, grade).
    A^0 = ker d (echelon), A^1 = greedy complement of im d in B^1 over the
    standard basis, C = greedy complement of ker d in B^0, then each c in C is
    corrected by the element a(c) of A^0 with <a(c), a1> = <c, a1> for all a1.
    """
    F = B.field
    one = F.one
    if any(c not in (0, 1) for c in B.cdeg):
        raise ValueError("B must be concentrated in degrees 0 and 1")
    groups = defaultdict(lambda: ([], []))
    for i in range(B.dim):
        groups[(B.tgt[i], B.src[i], B.grade[i])][B.cdeg[i]].append(i)
    h_cdeg, h_labels, h_src, h_tgt, h_grade, iota = [], [], [], [], [], []
    p_basis, Q_basis = {}, {}
    all_C = []
    A1_of = {}
    A0_of = {}
    decomp = {}
    for key in sorted(groups, key=repr):
        b0, b1 = groups[key]
        pos1 = {x: k for k, x in enumerate(b1)}
        cols = [{pos1[x]: c for x, c in B.d(i).items()} for i in b0]
        ker = kernel_of(F, cols, len(b1)) if b0 else []
        ker_vecs = [{b0[k]: c for k, c in v.items()} for v in ker]
        imgs = [c for c in cols if c]
        units1 = [{k: one} for k in range(len(b1))]
        A1_loc = complement_vectors(F, imgs, units1, len(b1)) if b1 else []
        A1 = [{b1[k]: c for k, c in v.items()} for v in A1_loc]
        pos0 = {x: k for k, x in enumerate(b0)}
        ker_loc = [{pos0[x]: c for x, c in v.items()} for v in ker_vecs]
        C_loc = complement_vectors(F, ker_loc, [{k: one} for k in range(len(b0))], len(b0)) if b0 else []
        C = [{b0[k]: c for k, c in v.items()} for v in C_loc]
        A0_of[key] = ker_vecs
        A1_of[key] = A1
        decomp[key] = C
    # orthogonal correction: <c, a1> pairs a block (j<-i) in degree 0 with (i<-j) in degree 1
    if correct:
        for key, C in decomp.items():
            tgt, src, grade = key
            partners = [k for k in A1_of if k[0] == src and k[1] == tgt and A1_of[k]]
            if not C or not partners:
                continue
            A0 = A0_of[key]
            A1 = [a for k in partners for a in A1_of[k]]
            if not A0:
                if any(pair(c, a) for c in C for a in A1):
                    raise ValueError("pairing on cohomology is degenerate")
                continue
            G = [[pair(a0, a1) for a1 in A1] for a0 in A0]
            newC = []
            for c in C:
                target = [pair(c, a1) for a1 in A1]
                if not any(target):
                    newC.append(c)
                    continue
                sol = solve_vectors(F, [{j: x for j, x in enumerate(row) if x} for row in G],
                                    len(A1), [{j: x for j, x in enumerate(target) if x}])[0]
                if sol is None:
                    raise ValueError("pairing on cohomology is degenerate")
                cc = dict(c)
                for k, x in sol.items():
                    axpy(cc, -x, A0[k])
                newC.append(cc)
            decomp[key] = newC
    # assemble H, iota, p, Q per cell
    for key in sorted(groups, key=repr):
        b0, b1 = groups[key]
        tgt, src, grade = key
        A0, A1, C = A0_of[key], A1_of[key], decomp[key]
        first0 = len(h_cdeg)
        for k, v in enumerate(A0):
            h_cdeg.append(0); h_labels.append(f"H0[{tgt}<-{src}]{grade}#{k}")
            h_src.append(src); h_tgt.append(tgt); h_grade.append(grade); iota.append(v)
        first1 = len(h_cdeg)
        for k, v in enumerate(A1):
            h_cdeg.append(1); h_labels.append(f"H1[{tgt}<-{src}]{grade}#{k}")
            h_src.append(src); h_tgt.append(tgt); h_grade.append(grade); iota.append(v)
        # degree 0: B0 = A0 + C
        if b0:
            pos0 = {x: k for k, x in enumerate(b0)}
            basis0 = A0 + C
            cols = [{pos0[x]: c for x, c in v.items()} for v in basis0]
            sols = solve_vectors(F, cols, len(b0), [{pos0[x]: one} for x in b0])
            for x, s in zip(b0, sols):
                pv = {first0 + k: c for k, c in s.items() if k < len(A0)}
                if pv:
                    p_basis[x] = pv
        # degree 1: B1 = d(C) + A1;  Q(d c) = -c
        if b1:
            pos1 = {x: k for k, x in enumerate(b1)}
            dC = [B.d_vec(c) for c in C]
            basis1 = dC + A1
            cols = [{pos1[x]: c for x, c in v.items()} for v in basis1]
            sols = solve_vectors(F, cols, len(b1), [{pos1[x]: one} for x in b1])
            for x, s in zip(b1, sols):
                if s is None:
                    raise ArithmeticError("decomposition of B^1 failed")
                pv, qv = {}, {}
                for k, c in s.items():
                    if k < len(C):
                        axpy(qv, -c, C[k])
                    else:
                        pv[first1 + k - len(C)] = c
                if pv:
                    p_basis[x] = pv
                if qv:
                    Q_basis[x] = qv
        all_C.extend(C)
    return Contraction(B, h_cdeg, h_labels, h_src, h_tgt, h_grade, iota, p_basis, Q_basis, all_C)


# ---------------------------------------------------------------- A-infinity structures

class AInfStructure:
    """Products m_n on a graded space with basis, given as callables on basis tuples.

    ``products[n](tuple) -> sparse vector``; composability of a tuple
    (a1, .., an) means src(a_i) == tgt(a_{i+1}).
    """

    def __init__(self, field, cdeg, products, max_arity, src=None, tgt=None, grade=None,
                 units=None, labels=None, name=""):
        self.field = field
        self.cdeg = list(cdeg)
        n = len(self.cdeg)
        self.src = list(src) if src else [0] * n
        self.tgt = list(tgt) if tgt else [0] * n
        self.grade = list(grade) if grade else [()] * n
        self.units = list(units or [])
        self.labels = list(labels) if labels else [str(i) for i in range(n)]
        self.max_arity = max_arity
        self.name = name
        self._products = dict(products)
        self._cache = defaultdict(dict)
        self.record = {}

    @property
    def dim(self):
        return len(self.cdeg)

    def m(self, *args):
        n = len(args)
        if n > self.max_arity:
            raise ValueError("arity beyond max_arity")
        fn = self._products.get(n)
        if fn is None:
            return {}
        c = self._cache[n]
        if args not in c:
            c[args] = fn(args) if self.composable(args) else {}
        return c[args]

    def composable(self, args):
        return all(self.src[a] == self.tgt[b] for a, b in zip(args, args[1:]))

    def m_vec(self, vecs):
        """Multilinear extension of m_n to sparse vectors."""
        out = {}
        for combo in itertools.product(*[list(v.items()) for v in vecs]):
            coef = self.field.one
            for _, c in combo:
                coef = coef * c
            r = self.m(*[k for k, _ in combo])
            if r:
                axpy(out, coef, r)
        return out

    def tuples(self, n, total_degrees=None):
        """Composable basis tuples of length n, optionally with sum of degrees in a set."""
        by_tgt = defaultdict(list)
        for i in range(self.dim):
            by_tgt[self.tgt[i]].append(i)
        out = [(i,) for i in range(self.dim)]
        for _ in range(n - 1):
            out = [t + (j,) for t in out for j in by_tgt[self.src[t[-1]]]]
        if total_degrees is not None:
            out = [t for t in out if sum(self.cdeg[i] for i in t) in total_degrees]
        return out

    def grade_ok(self, t, shift=0):
        """Could the tuple's total grade be carried by some basis element?"""
        if not hasattr(self, "_grades"):
            self._grades = {(self.tgt[i], self.src[i], self.grade[i]) for i in range(self.dim)}
        g = ()
        from .graded_quiver import wadd
        for i in t:
            g = wadd(g, self.grade[i])
        return (self.tgt[t[0]], self.src[t[-1]], g) in self._grades

    def to_json(self, N=None):
        F = self.field
        N = self.max_arity if N is None else N
        out = []
        for n in range(1, N + 1):
            for n_, cache in sorted(self._cache.items()):
                if n_ != n:
                    continue
                for args, v in sorted(cache.items()):
                    for k, c in sorted(v.items()):
                        out.append({"arity": n, "inputs": list(args), "output": k, "coef": F.fmt(c)})
        return out


def _stasheff_value(A: AInfStructure, t):
    one = A.field.one
    n = len(t)
    total = {}
    for s in range(1, n + 1):
        for r in range(0, n - s + 1):
            tt = n - r - s
            u = r + 1 + tt
            if u > A.max_arity or s > A.max_arity:
                continue
            inner = A.m(*t[r:r + s])
            if not inner:
                continue
            sgn = (r + s * tt) + (2 - s) * sum(A.cdeg[i] for i in t[:r])
            for k, c in inner.items():
                args = t[:r] + (k,) + t[r + s:]
                if not A.composable(args):
                    continue
                outer = A.m(*args)
                if outer:
                    axpy(total, _sign(sgn, one) * c, outer)
    return total


def check_stasheff(A: AInfStructure, N: int, tuples=None):
    """All identities of arity <= N on basis tuples; returns (ok, first failing tuple)."""
    if N > A.max_arity + 1:
        raise ValueError("N beyond max_arity + 1")
    for n in range(1, N + 1):
        cand = tuples.get(n) if tuples else None
        if cand is None:
            cand = A.tuples(n)
        for t in cand:
            if not A.grade_ok(t):
                continue
            if _stasheff_value(A, t):
                return False, t
    return True, None


def check_units(A: AInfStructure, N: int) -> bool:
    """m_2(1, x) = x = m_2(x, 1) and m_n(.., 1, ..) = 0 for 3 <= n <= N."""
    one = A.field.one
    for x in range(A.dim):
        for u in A.units:
            if A.src[u] == A.tgt[x] and A.m(u, x) != {x: one}:
                return False
            if A.src[x] == A.tgt[u] and A.m(x, u) != {x: one}:
                return False
    for n in range(3, N + 1):
        for t in A.tuples(n):
            if any(i in A.units for i in t) and A.m(*t):
                return False
    return True


def check_cyclic(A: AInfStructure, pair, N: int, tuples=None):
    """<m_n(a1..an), a_{n+1}> = (-1)^{n(|a1|+1)} <a1, m_n(a2..a_{n+1})> for n <= N.

    ``pair(h, h')`` is the pairing on basis elements.  Returns (ok, first failure).
    """
    one = A.field.one
    for n in range(2, N + 1):
        cand = tuples.get(n + 1) if tuples else None
        if cand is None:
            cand = A.tuples(n + 1)
        for t in cand:
            if A.tgt[t[0]] != A.src[t[-1]]:
                continue
            lhs = A.field.zero
            for k, c in A.m(*t[:n]).items():
                lhs += c * pair(k, t[n])
            rhs = A.field.zero
            for k, c in A.m(*t[1:]).items():
                rhs += c * pair(t[0], k)
            if lhs != _sign(n * (A.cdeg[t[0]] + 1), one) * rhs:
                return False, t
    return True, None


# ---------------------------------------------------------------- perturbation

def perturb(c: Contraction, N: int, count_trees=False) -> AInfStructure:
    """Minimal model on H = cohomology of c.B by the planar tree formula."""
    B = c.B
    F = B.field
    one = F.one
    memo = {}

    def Lam(args):
        if args in memo:
            return memo[args]
        n = len(args)
        out = {}
        for k in range(1, n):
            u = T(args[:k])
            if not u:
                continue
            v = T(args[k:])
            if not v:
                continue
            du = sum(c.h_cdeg[a] for a in args[:k]) - (k - 1)  # degree of u
            prod = B.mul_vec(u, v)
            if prod:
                axpy(out, _sign(du, one), prod)
        memo[args] = out
        return out

    def T(args):
        if len(args) == 1:
            return c.iota[args[0]]
        return c.Q(Lam(args))

    def m_n(args):
        n = len(args)
        if n == 1:
            return {}
        if n > N:
            raise ValueError("arity beyond N")
        sgn = sum((n - 1 - i) * c.h_cdeg[a] for i, a in enumerate(args))
        return _scale(c.p(Lam(args)), _sign(sgn, one))

    products = {n: m_n for n in range(2, N + 1)}
    A = AInfStructure(F, c.h_cdeg, products, N, c.h_src, c.h_tgt, c.h_grade, [], c.h_labels,
                      f"H({B.name})")
    A.contraction = c
    A.tree_count = {n: count_planar_binary_trees(n) for n in range(2, N + 1)}
    return A


def count_planar_binary_trees(n):
    """Number of summands in the tree formula for m_n (checked against Catalan(n-1))."""
    if n == 1:
        return 1
    return sum(count_planar_binary_trees(k) * count_planar_binary_trees(n - k) for k in range(1, n))


def find_units(A: AInfStructure, candidates=None):
    """Basis elements acting as two-sided identities for m_2, one per object if present."""
    one = A.field.one
    out = []
    for u in (candidates if candidates is not None else range(A.dim)):
        if A.cdeg[u] or A.src[u] != A.tgt[u]:
            continue
        ok = True
        for x in range(A.dim):
            if A.src[u] == A.tgt[x] and A.m(u, x) != {x: one}:
                ok = False
                break
            if A.src[x] == A.tgt[u] and A.m(x, u) != {x: one}:
                ok = False
                break
        if ok:
            out.append(u)
    return out


# ---------------------------------------------------------------- gauge action

class GaugeTransform:
    """f_n (n >= 2) of degree 1 - n, with f_1 = id; ``maps[n](tuple) -> vector``."""

    def __init__(self, maps, max_arity):
        self.maps = dict(maps)
        self.max_arity = max_arity

    def f(self, args):
        n = len(args)
        if n == 1:
            return None
        fn = self.maps.get(n)
        return fn(args) if fn else {}


def random_gauge(A: AInfStructure, rng, N: int, density=0.3, bound=3) -> GaugeTransform:
    """Random strict gauge: f_n has degree 1 - n, preserves grades and kills units."""
    F = A.field
    cells = defaultdict(list)
    for b in range(A.dim):
        cells[(A.tgt[b], A.src[b], A.cdeg[b], A.grade[b])].append(b)
    from .graded_quiver import wadd
    tables = {}

    def make(n):
        memo = tables.setdefault(n, {})

        def fn(args):
            if args in memo:
                return memo[args]
            out = {}
            if not any(a in A.units for a in args):
                gr = ()
                for a in args:
                    gr = wadd(gr, A.grade[a])
                key = (A.tgt[args[0]], A.src[args[-1]], sum(A.cdeg[a] for a in args) + 1 - n, gr)
                for b in cells.get(key, ()):
                    if rng.random() < density:
                        c = rng.randint(-bound, bound)
                        if c:
                            out[b] = F(c)
            memo[args] = out
            return out
        return fn

    return GaugeTransform({n: make(n) for n in range(2, N + 1)}, N)


def _shift_sign(cdeg, args):
    n = len(args)
    return sum((n - 1 - i) * cdeg[a] for i, a in enumerate(args))


def gauge_transform(A: AInfStructure, G: GaugeTransform, N: int) -> AInfStructure:
    """Push the structure forward along the strict A-infinity isomorphism (f_1 = id).

    In the shifted convention the new products b' solve
    sum F_{r+1+t}(1^r b_s 1^t) = sum_k b'_k(F_{i1} .. F_{ik}).
    """
    F = A.field
    one = F.one
    cdeg = A.cdeg

    def Fm(args):
        # shifted gauge map F_n = (-1)^{shift} f_n
        if len(args) == 1:
            return {args[0]: one}
        return _scale(G.f(args), _sign(_shift_sign(cdeg, args), one))

    def bm(args):
        return _scale(A.m(*args), _sign(_shift_sign(cdeg, args), one)) if len(args) > 1 else {}

    memo = {}

    def bnew(args):
        if args in memo:
            return memo[args]
        n = len(args)
        if n == 1:
            return {}
        out = {}
        # F(1^r b_s 1^t); in shifted degrees every b_s has degree 1 and F degree 0
        for s in range(2, n + 1):
            for r in range(0, n - s + 1):
                inner = bm(args[r:r + s])
                if not inner:
                    continue
                sg = sum(cdeg[a] + 1 for a in args[:r])
                for k, c in inner.items():
                    new = args[:r] + (k,) + args[r + s:]
                    if not A.composable(new):
                        continue
                    fv = Fm(new)
                    if fv:
                        axpy(out, _sign(sg, one) * c, fv)
        # minus sum over k < n of b'_k(F_{i1} .. F_{ik}), k >= 2
        for parts in _compositions(n):
            k = len(parts)
            if k == n or k < 2:
                continue
            pieces, pos = [], 0
            for p in parts:
                pieces.append(Fm(args[pos:pos + p]))
                pos += p
            if not all(pieces):
                continue
            for combo in itertools.product(*[list(v.items()) for v in pieces]):
                ids = tuple(x for x, _ in combo)
                if not A.composable(ids):
                    continue
                coef = one
                for _, cc in combo:
                    coef = coef * cc
                r = bnew(ids)
                if r:
                    axpy(out, -coef, r)
        memo[args] = out
        return out

    def m_new(args):
        return _scale(bnew(args), _sign(_shift_sign(cdeg, args), one))

    products = {n: m_new for n in range(2, N + 1)}
    return AInfStructure(F, A.cdeg, products, N, A.src, A.tgt, A.grade, A.units, A.labels,
                         A.name + "'")


def compose_gauges(G2: GaugeTransform, G1: GaugeTransform, cdeg, composable, field, N):
    """(G2 o G1)_n = sum G2_k(G1_{i1} .. G1_{ik}) in the shifted convention."""
    one = field.one

    def shifted(G, args):
        if len(args) == 1:
            return {args[0]: one}
        return _scale(G.f(args), _sign(_shift_sign(cdeg, args), one))

    def comp(args):
        n = len(args)
        out = {}
        for parts in _compositions(n):
            pieces, pos = [], 0
            for p in parts:
                pieces.append(shifted(G1, args[pos:pos + p]))
                pos += p
            if not all(pieces):
                continue
            for combo in itertools.product(*[list(v.items()) for v in pieces]):
                ids = tuple(x for x, _ in combo)
                if len(ids) > 1 and not composable(ids):
                    continue
                coef = one
                for _, cc in combo:
                    coef = coef * cc
                r = shifted(G2, ids)
                if r:
                    axpy(out, coef, r)
        return _scale(out, _sign(_shift_sign(cdeg, args), one))

    return GaugeTransform({n: comp for n in range(2, N + 1)}, N)


def _compositions(n):
    """Ordered compositions of n into positive parts."""
    if n == 0:
        yield ()
        return
    for first in range(1, n + 1):
        for rest in _compositions(n - first):
            yield (first,) + rest


# ---------------------------------------------------------------- Hochschild class of m3

def _m3_cochain(A):
    out = {}
    for t in A.tuples(3):
        if not A.grade_ok(t):
            continue
        v = A.m(*t)
        if v:
            out[t] = v
    return out


def _delta_m3(A, m3):
    """Hochschild differential of the 3-cochain m3 with respect to m_2.

    Vanishes exactly when the arity-4 Stasheff identity holds (m_1 = 0).
    """
    one = A.field.one
    out = {}
    for t in A.tuples(4):
        val = {}
        # -m2(m3(a, b, c), d) and -(-1)^|a| m2(a, m3(b, c, d))
        for r, sgn in ((0, 1), (1, 1 + A.cdeg[t[0]])):
            for x, c in m3.get(t[r:r + 3], {}).items():
                args = t[:r] + (x,) + t[r + 3:]
                if A.composable(args):
                    axpy(val, _sign(sgn, one) * c, A.m(*args))
        # m3 with m2 inserted at position r
        for r in range(3):
            for x, c in A.m(*t[r:r + 2]).items():
                args = t[:r] + (x,) + t[r + 2:]
                if A.composable(args):
                    axpy(val, _sign(r, one) * c, m3.get(args, {}))
        if val:
            out[t] = val
    return out


def hochschild_class_of_m3(A: AInfStructure, reference: AInfStructure | None = None):
    """m_3 as a Hochschild 3-cochain of internal degree -1 for (H, m_2).

    Cochains are restricted to grade-preserving ones.  Returns the cocycle check, whether m_3 is a coboundary and the rank of the
    coboundaries.  With ``reference`` (same underlying space and m_2) also
    reports whether the two m_3 differ by a coboundary.
    """
    F = A.field
    one = F.one
    m3 = _m3_cochain(A)
    cocycle = not _delta_m3(A, m3)

    # 2-cochains of degree -1: (a, b) -> outputs of degree |a| + |b| - 1
    # the complex splits by grade shift; m_3 preserves grades, so shift 0 suffices
    from .graded_quiver import wadd
    by_cell = defaultdict(list)
    for b in range(A.dim):
        by_cell[(A.tgt[b], A.src[b], A.cdeg[b], A.grade[b])].append(b)
    sp2 = {}
    for t in A.tuples(2):
        key = (A.tgt[t[0]], A.src[t[1]], A.cdeg[t[0]] + A.cdeg[t[1]] - 1,
               wadd(A.grade[t[0]], A.grade[t[1]]))
        sp2[t] = list(by_cell.get(key, ()))
    colno = {}
    for t, outs in sp2.items():
        for b in outs:
            colno[(t, b)] = len(colno)
    rowno = {}

    def row(t, x):
        return rowno.setdefault((t, x), len(rowno))

    cols = [dict() for _ in colno]

    def add(col, key, c):
        v = cols[col]
        v[key] = v.get(key, F.zero) + c

    # (delta f)(a, b, c) = m2(f(a, b), c) - (-1)^|a| m2(a, f(b, c)) + f(m2(a, b), c) - f(a, m2(b, c));
    # a strict gauge with f_2 = f changes m_3 by exactly this
    for t in A.tuples(3):
        a, b, c = t
        for x in sp2[(a, b)]:
            for y, v in A.m(x, c).items():
                add(colno[((a, b), x)], row(t, y), v)
        sa = -_sign(A.cdeg[a], one)
        for x in sp2[(b, c)]:
            for y, v in A.m(a, x).items():
                add(colno[((b, c), x)], row(t, y), sa * v)
        for x, v in A.m(a, b).items():
            for y in sp2.get((x, c), ()):
                add(colno[((x, c), y)], row(t, y), v)
        for x, v in A.m(b, c).items():
            for y in sp2.get((a, x), ()):
                add(colno[((a, x), y)], row(t, y), -v)
    cols = [{k: v for k, v in col.items() if v} for col in cols]

    def vec(m):
        return {row(t, b): c for t, v in m.items() for b, c in v.items()}

    target = vec(m3)
    nrows = len(rowno)
    rank_im = rank_of(F, cols, nrows) if cols else 0

    def exact(v):
        if not v:
            return True
        return bool(cols) and solve_vectors(F, cols, len(rowno), [v])[0] is not None

    report = {"cocycle": cocycle, "zero_class": exact(target), "coboundary_rank": rank_im,
              "cochain_dim": len(colno), "m3_support": len(m3)}
    if reference is not None:
        diff = dict(target)
        axpy(diff, -one, vec(_m3_cochain(reference)))
        diff = {k: v for k, v in diff.items() if v}
        report["same_class"] = exact(diff)
    return report

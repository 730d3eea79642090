"""Filtered algebras, Rees algebras, and the Rees product built from higher-product data."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

from .scalar_linalg import Mat, axpy, kernel_of, rank_of, solve_vectors
from .graded_quiver import (GMatrix, GradedAlgebra, Generator, QuadraticPresentation, build_E,
                            endg_basis, generation_check, opposite, presentation_from_algebra,
                            truncated_algebra, _matmul)
from .hochschild import twisted_dual


class FilteredAlgebra:
    """Adapted basis: element i lies in F_{level[i]}; ``table[(i, j)]`` is the product.

    Products are known when level[i] + level[j] <= bound.  Single vertex, with
    ``unit`` the index of 1 (which must have level 0).
    """

    def __init__(self, field, labels, level, table, unit, bound, name=""):
        self.field = field
        self.labels = list(labels)
        self.level = list(level)
        self.table = table
        self.unit = unit
        self.bound = bound
        self.name = name
        if self.level[unit] != 0:
            raise ValueError("1 must lie in F_0")

    @property
    def dim(self):
        return len(self.labels)

    def dims(self):
        return [sum(1 for l in self.level if l <= m) for m in range(self.bound + 1)]

    def mul(self, i, j):
        if self.level[i] + self.level[j] > self.bound:
            raise OverflowError("product beyond the filtration bound")
        return self.table.get((i, j), {})

    def check(self) -> bool:
        """F_i F_j in F_{i+j}, 1 a unit, associativity within the bound."""
        one = self.field.one
        for i in range(self.dim):
            if self.mul(self.unit, i) != {i: one} or self.mul(i, self.unit) != {i: one}:
                return False
            for j in range(self.dim):
                if self.level[i] + self.level[j] > self.bound:
                    continue
                if any(self.level[k] > self.level[i] + self.level[j] for k in self.mul(i, j)):
                    return False
        for i, j, k in itertools.product(range(self.dim), repeat=3):
            if self.level[i] + self.level[j] + self.level[k] > self.bound:
                continue
            lhs, rhs = {}, {}
            for x, c in self.mul(i, j).items():
                axpy(lhs, c, self.mul(x, k))
            for x, c in self.mul(j, k).items():
                axpy(rhs, c, self.mul(i, x))
            if lhs != rhs:
                return False
        return True

    @classmethod
    def trivially_filtered(cls, a: GradedAlgebra, source: GradedAlgebra | None = None):
        """F_m = sum of components of degree <= m (single-vertex, unital a).

        ``source`` is the algebra carrying matrix data (e.g. E when a = E^op).
        """
        if len(a.units) != 1:
            raise ValueError("need a single unit")
        out = cls(a.field, a.labels, a.deg, dict(a.table), a.units[0], a.bound, a.name)
        out.graded = source or a
        out.g = getattr(out.graded, "g", None)
        return out

    def to_json(self):
        F = self.field
        return {"name": self.name, "dims": self.dims(), "labels": self.labels, "level": self.level,
                "mult": [[i, j, k, F.fmt(c)] for (i, j), v in sorted(self.table.items())
                         for k, c in sorted(v.items())]}


class ReesAlgebra:
    """A graded algebra with a distinguished central degree-one element t."""

    def __init__(self, algebra: GradedAlgebra, t: int, source=None):
        self.algebra = algebra
        self.t = t
        self.source = source

    @property
    def field(self):
        return self.algebra.field

    def dims(self, D=None):
        return self.algebra.hilbert(D)

    def check_central(self) -> bool:
        R = self.algebra
        for x in range(R.dim):
            if R.deg[x] + 1 > R.bound:
                continue
            if R.mul(self.t, x) != R.mul(x, self.t):
                return False
        return True

    def check_regular(self) -> bool:
        R = self.algebra
        one = R.field.one
        for d in range(R.bound):
            comp = R.by_deg.get(d, [])
            if not comp:
                continue
            left = [R.mul_vec({self.t: one}, {x: one}) for x in comp]
            right = [R.mul_vec({x: one}, {self.t: one}) for x in comp]
            if rank_of(R.field, left, R.dim) != len(comp) or rank_of(R.field, right, R.dim) != len(comp):
                return False
        return True

    def quotient_dims(self):
        """dims of R/(t): dim R_m - rank of t R_{m-1}."""
        R = self.algebra
        one = R.field.one
        out = []
        for d in range(R.bound + 1):
            comp = R.by_deg.get(d, [])
            prev = R.by_deg.get(d - 1, []) if d else []
            imgs = [R.mul_vec({self.t: one}, {x: one}) for x in prev]
            out.append(len(comp) - (rank_of(R.field, imgs, R.dim) if imgs else 0))
        return out


def rees(A: FilteredAlgebra, D: int | None = None) -> ReesAlgebra:
    """R = sum_m F_m A t^m with t = 1 in F_1; basis (b, m), level(b) <= m <= D."""
    D = A.bound if D is None else min(D, A.bound)
    basis = [(b, m) for m in range(D + 1) for b in range(A.dim) if A.level[b] <= m]
    basis.sort(key=lambda bm: (bm[1], bm[1] - A.level[bm[0]], bm[0]))
    pos = {bm: k for k, bm in enumerate(basis)}
    graded = getattr(A, "graded", None)
    labels, weight = [], []
    for b, m in basis:
        k = m - A.level[b]
        labels.append(A.labels[b] + (f"*t^{k}" if k > 1 else "*t" if k == 1 else ""))
        weight.append((k,) + (graded.weight[b] if graded is not None else ()))
    table = {}
    for p, (b, m) in enumerate(basis):
        for q, (c, l) in enumerate(basis):
            if m + l > D:
                continue
            prod = A.mul(b, c)
            if prod:
                table[(p, q)] = {pos[(x, m + l)]: v for x, v in prod.items()}
    N = len(basis)
    R = GradedAlgebra(A.field, ("*",), labels, [0] * N, [0] * N, [m for _, m in basis], [0] * N,
                      weight, table, [pos[(A.unit, 0)]], D, f"Rees({A.name})")
    R.basis_pairs = basis
    R.gens = [k for k, (b, m) in enumerate(basis) if m == 1]
    return ReesAlgebra(R, pos[(A.unit, 1)], A)


# ---------------------------------------------------------------- product data

@dataclass
class ProductData:
    """r, r2: n^2 x n^2 matrices on row-major End(V); s: list of n^2 scalars;
    m4: square matrix on End_g coordinates; h: n x n with tr(g h) = 1."""
    r: Mat
    r2: Mat
    s: list
    m4: Mat
    h: Mat

    @classmethod
    def zero(cls, g: GMatrix, h: Mat | None = None):
        F, n = g.field, g.n
        k = n * n - 1
        if h is None:
            h = default_h(g)
        return cls(Mat.zeros(F, n * n, n * n), Mat.zeros(F, n * n, n * n), [F.zero] * (n * n),
                   Mat.zeros(F, k, k), h)

    @classmethod
    def random(cls, g: GMatrix, rng, bound=5):
        F, n = g.field, g.n
        k = n * n - 1
        rnd = lambda: F(rng.randint(-bound, bound))
        M = lambda a, b: Mat(F, [[rnd() for _ in range(b)] for _ in range(a)])
        return cls(M(n * n, n * n), M(n * n, n * n), [rnd() for _ in range(n * n)], M(k, k),
                   default_h(g))

    def to_json(self):
        F = self.h.field
        return {"r": self.r.to_json(), "r2": self.r2.to_json(), "s": [F.fmt(x) for x in self.s],
                "m4": self.m4.to_json(), "h": self.h.to_json()}


def default_h(g: GMatrix) -> Mat:
    """Some h with tr(g h) = 1: a scaled matrix unit E_ij with g_ji != 0."""
    F, n = g.field, g.n
    for i in range(n):
        for j in range(n):
            if g[j, i]:
                rows = [[F.zero] * n for _ in range(n)]
                rows[i][j] = F.one / g[j, i]
                return Mat(F, rows)
    raise ValueError("g is zero")


def _flat(M, n):
    return [M[i][j] for i in range(n) for j in range(n)]


def _unflat(v, n):
    return [list(v[i * n:(i + 1) * n]) for i in range(n)]


def _apply(T: Mat, M, n):
    v = _flat(M, n)
    F = T.field
    return _unflat([sum((T[i, j] * v[j] for j in range(n * n) if v[j]), F.zero) for i in range(n * n)], n)


def build_rees_from_products(g: GMatrix, pd: ProductData, D: int):
    """Quadratic algebra on End_g(V) + k t with the deformed product, truncated at D.

    a.b = ba + [r(b) a + b r2(a) + s(ba) h] t + m4(a, b) t^2 for a, b in End_g(V).
    The t-coefficient is projected to End_g(V) along h (x -> x - tr(g x) h),
    which is the identity when it already lies there.
    Returns (ReesAlgebra, report) where report compares dims with E(V,g)^op[t].
    """
    F, n = g.field, g.n
    trgh = sum((g.mat[i, j] * pd.h[j, i] for i in range(n) for j in range(n)), F.zero)
    if trgh != F.one:
        raise ValueError("tr(g h) must be 1")
    sub = endg_basis(g)
    k = sub.dim
    us = []
    for r in sub.rows:
        us.append([[r.get(i * n + j, F.zero) for j in range(n)] for i in range(n)])
    G = [Generator(f"u{i + 1}", 0, 0) for i in range(k)] + [Generator("t", 0, 0)]
    # R_2 coordinates: End(V) (n^2) | End_g t (k) | t^2 (1)
    o1, o2 = n * n, n * n + k
    gm = [[g.mat[i, j] for j in range(n)] for i in range(n)]
    hm = [[pd.h[i, j] for j in range(n)] for i in range(n)]

    def tr_g(M):
        return sum((gm[i][j] * M[j][i] for i in range(n) for j in range(n)), F.zero)

    def endg_coords(M):
        # project along h, then read coordinates in the echelon basis
        c = tr_g(M)
        P = [[M[i][j] - c * hm[i][j] for j in range(n)] for i in range(n)]
        flat = {i * n + j: P[i][j] for i in range(n) for j in range(n) if P[i][j]}
        return sub.coordinates(flat), bool(c)

    projected = 0
    p0 = QuadraticPresentation(F, ("*",), G, [])
    cols = []
    for (a, b) in p0.words2:
        col = {}
        if a < k and b < k:
            A_, B_ = us[a], us[b]
            ba = _matmul(B_, A_, F)
            for idx, v in enumerate(_flat(ba, n)):
                if v:
                    col[idx] = v
            lin = _matmul(_apply(pd.r, B_, n), A_, F)
            lin2 = _matmul(B_, _apply(pd.r2, A_, n), F)
            sv = sum((x * y for x, y in zip(pd.s, _flat(ba, n))), F.zero)
            X = [[lin[i][j] + lin2[i][j] + sv * hm[i][j] for j in range(n)] for i in range(n)]
            cs, moved = endg_coords(X)
            projected += moved
            for idx, v in enumerate(cs):
                if v:
                    col[o1 + idx] = v
            m4 = pd.m4[a, b]
            if m4:
                col[o2] = m4
        elif a < k or b < k:
            col[o1 + (a if a < k else b)] = F.one
        else:
            col[o2] = F.one
        cols.append(col)
    from .scalar_linalg import Subspace
    ker = kernel_of(F, cols, o2 + 1)
    p = QuadraticPresentation(F, ("*",), G, Subspace(F, len(p0.words2), ker), "Rees(pd)")
    R = truncated_algebra(p, D)
    got = R.hilbert(D)
    e_dims = [1, k] + [n * n] * max(0, D - 1)
    want = [sum(e_dims[:m + 1]) for m in range(D + 1)]
    rees_alg = ReesAlgebra(R, R.gens[k])
    report = {"dims": got, "expected": want, "flat": got == want, "projected_terms": projected}
    return rees_alg, report


def E_op_t(n, g: GMatrix, D: int) -> ReesAlgebra:
    """E(V,g)^op[t] as the Rees algebra of the trivially filtered E(V,g)^op."""
    E = build_E(n, g, g.field, D)
    return rees(FilteredAlgebra.trivially_filtered(opposite(E), E))


def isomorphic_via_generators(R: GradedAlgebra, T: GradedAlgebra, genmap: dict, D: int) -> bool:
    """Does R.gens[i] -> genmap[i] (vectors of T) extend to a graded isomorphism up to D?

    R must be generated in degree one by R.gens (e.g. a truncated quadratic
    algebra), with its normal-word basis in R.words.
    """
    F = R.field
    one = F.one
    img = {}
    for i in range(R.dim):
        w = R.words[i] if hasattr(R, "words") else None
        if R.deg[i] == 0:
            img[i] = {T.units[0]: one}
        elif R.deg[i] == 1:
            img[i] = genmap[R.gens.index(i)]
        else:
            # the normal word w = (letters); image is the product of letter images
            v = {T.units[0]: one}
            for a in w:
                v = T.mul_vec(v, genmap[a])
            img[i] = v
    for d in range(D + 1):
        comp = R.by_deg.get(d, [])
        if len(comp) != len(T.by_deg.get(d, [])):
            return False
        if comp and rank_of(F, [img[i] for i in comp], T.dim) != len(comp):
            return False
    for i in range(R.dim):
        for j in range(R.dim):
            if R.deg[i] + R.deg[j] > D:
                continue
            lhs = {}
            for x, c in R.mul(i, j).items():
                axpy(lhs, c, img[x])
            if lhs != T.mul_vec(img[i], img[j]):
                return False
    return True


# ---------------------------------------------------------------- automorphisms

class FilteredAutomorphism:
    """phi on a filtered algebra, as images of basis elements (sparse vectors)."""

    def __init__(self, A: FilteredAlgebra, images: dict):
        self.A = A
        self.images = images

    def __call__(self, v):
        out = {}
        for i, c in v.items():
            axpy(out, c, self.images[i])
        return out

    def matrix(self, m):
        """The restriction to F_m, as a Mat on the F_m basis (columns = images)."""
        A = self.A
        idx = [i for i in range(A.dim) if A.level[i] <= m]
        pos = {x: k for k, x in enumerate(idx)}
        rows = [[A.field.zero] * len(idx) for _ in idx]
        for k, i in enumerate(idx):
            for x, c in self.images[i].items():
                rows[pos[x]][k] = c
        return Mat(A.field, rows, len(idx))

    def check(self) -> bool:
        A = self.A
        for i in range(A.dim):
            if any(A.level[x] > A.level[i] for x in self.images[i]):
                return False
        for i in range(A.dim):
            for j in range(A.dim):
                if A.level[i] + A.level[j] > A.bound:
                    continue
                if self(A.mul(i, j)) != _mul(A, self.images[i], self.images[j]):
                    return False
        return all(self.matrix(m).det() for m in range(A.bound + 1))

    def rees_map(self, R: ReesAlgebra):
        """The induced graded map on the Rees algebra (phi(t) = t)."""
        pairs = R.algebra.basis_pairs
        pos = {bm: k for k, bm in enumerate(pairs)}

        def phi(r):
            b, m = pairs[r]
            return {pos[(x, m)]: c for x, c in self.images[b].items()}
        return phi

    def to_json(self):
        F = self.A.field
        return {str(i): {str(x): F.fmt(c) for x, c in sorted(v.items())}
                for i, v in sorted(self.images.items())}


def _mul(A, u, v):
    out = {}
    for i, a in u.items():
        for j, b in v.items():
            p = A.mul(i, j)
            if p:
                axpy(out, a * b, p)
    return out


def ad_symbol(A: FilteredAlgebra, M: Mat):
    """The graded automorphism x z^d -> M x M^{-1} z^d of (a filtration on) E(V,g)^op, as level-1 images."""
    E = A.graded
    F = A.field
    Mi = M.inverse()
    out = {}
    for i in range(A.dim):
        if A.level[i] != 1:
            continue
        X = M @ Mat(F, E.mats[i]) @ Mi
        out[i] = E.coords([list(r) for r in X.rows], 1)
    return out


def solve_filtered_automorphism(A: FilteredAlgebra, symbol: dict, force=False, max_enumerate=1 << 16):
    """Filtration-preserving automorphisms phi of A with gr(phi) = symbol.

    ``symbol`` maps each level-1 basis index to its image in gr_1 (same index
    set).  Unknowns: phi(x) = symbol(x) + lambda(x), lambda(x) in F_0.  A must
    be generated by F_1.  Returns the unique FilteredAutomorphism or None when
    the uniqueness hypotheses hold; with ``force`` returns a dict describing
    the full solution set.
    """
    F = A.field
    one = F.one
    g = getattr(A, "g", None)
    if g is not None:
        n = g.n
        hyp = (n >= 3 and g.invertible) or bool(g.trace())
    else:
        hyp = False
    if not hyp and not force:
        raise ValueError("uniqueness hypotheses fail (need n >= 3 with g invertible, or tr(g) invertible)")
    L1 = [i for i in range(A.dim) if A.level[i] == 1]
    F0 = [i for i in range(A.dim) if A.level[i] == 0]
    if set(symbol) != set(L1):
        raise ValueError("symbol must be given on every level-1 basis element")
    var = {(x, z): k for k, (x, z) in enumerate(itertools.product(L1, F0))}
    nv = len(var)
    R = rees(A, 2)
    Ra = R.algebra
    if not generation_check(Ra, {1}, 2):
        raise ValueError("A is not generated by F_1 in degree 2")
    pres = presentation_from_algebra(Ra)
    gens = list(Ra.gens)
    pairs = Ra.basis_pairs
    # Phi on a generator (b, 1): constant part and linear part in lambda, as R_1 vectors
    pos = {bm: k for k, bm in enumerate(pairs)}

    def Phi(gi):
        b, _ = pairs[gens[gi]]
        if b in F0:
            return {pos[(b, 1)]: one}, {}
        const = {pos[(x, 1)]: c for x, c in symbol[b].items()}
        lin = {var[(b, z)]: pos[(z, 1)] for z in F0}
        return const, lin

    # equations: coefficient of each R_2 basis element in sum c_ab Phi(a)Phi(b)
    eqs = []  # (const, {var: coef}, {(v, w): coef})
    for rel in pres.relation_words():
        c0, c1, c2 = {}, {}, {}
        for (a, b), c in rel.items():
            ca, la = Phi(a)
            cb, lb = Phi(b)
            axpy(c0, c, Ra.mul_vec(ca, cb))
            for v, z in la.items():
                for y, cc in Ra.mul_vec({z: one}, cb).items():
                    c1.setdefault(y, {})
                    axpy(c1[y], c * cc, {v: one})
            for w, z in lb.items():
                for y, cc in Ra.mul_vec(ca, {z: one}).items():
                    c1.setdefault(y, {})
                    axpy(c1[y], c * cc, {w: one})
            for v, z in la.items():
                for w, z2 in lb.items():
                    for y, cc in Ra.mul(z, z2).items():
                        c2.setdefault(y, {})
                        axpy(c2[y], c * cc, {(v, w): one})
        for y in set(c0) | set(c1) | set(c2):
            eqs.append((c0.get(y, F.zero), c1.get(y, {}), {k: v for k, v in c2.get(y, {}).items() if v}))
    lin_eqs = [(c, l) for c, l, q in eqs if not q]
    cols = [dict() for _ in range(nv)]
    rhs = {}
    for r, (c, l) in enumerate(lin_eqs):
        for v, x in l.items():
            cols[v][r] = x
        if c:
            rhs[r] = -c
    nr = len(lin_eqs)
    part = solve_vectors(F, cols, nr, [rhs])[0] if nv else ({} if not rhs else None)
    kernel = kernel_of(F, cols, nr) if nv else []
    if part is None:
        return None if not force else {"solutions": [], "linear_kernel_dim": len(kernel), "count": 0}

    def satisfies(lam):
        for c, l, q in eqs:
            val = c + sum((x * lam.get(v, F.zero) for v, x in l.items()), F.zero)
            val += sum((x * lam.get(v, F.zero) * lam.get(w, F.zero) for (v, w), x in q.items()), F.zero)
            if val:
                return False
        return True

    def build(lam):
        images = {z: {z: one} for z in F0}
        for x in L1:
            im = dict(symbol[x])
            for z in F0:
                c = lam.get(var[(x, z)], F.zero)
                if c:
                    axpy(im, c, {z: one})
            images[x] = im
        return _extend(A, images)

    if not force:
        if kernel:
            raise ArithmeticError("solution not unique although the hypotheses hold")
        if not satisfies(part):
            return None
        phi = build(part)
        return phi if phi is not None and phi.check() else None
    sols = []
    count = None
    if F.char and F.char ** len(kernel) <= max_enumerate:
        count = 0
        for coeffs in itertools.product(list(F.elements()), repeat=len(kernel)):
            lam = dict(part)
            for c, v in zip(coeffs, kernel):
                if c:
                    axpy(lam, c, v)
            if satisfies(lam):
                count += 1
                if len(sols) < 8:
                    sols.append(lam)
    return {"linear_kernel_dim": len(kernel), "count": count, "solutions": sols,
            "particular": part, "kernel": kernel}


def _extend(A: FilteredAlgebra, images: dict):
    """Extend phi from F_1 to all of A multiplicatively (A generated by F_1)."""
    F = A.field
    one = F.one
    for m in range(2, A.bound + 1):
        new = [i for i in range(A.dim) if A.level[i] == m]
        if not new:
            continue
        low = [i for i in range(A.dim) if A.level[i] < m]
        ones = [i for i in range(A.dim) if A.level[i] == 1]
        prevs = [i for i in range(A.dim) if 1 <= A.level[i] <= m - 1]
        # products x*y spanning F_m modulo F_{m-1}; together with F_{m-1} they span F_m
        prods, cols = [], []
        for x in ones:
            for y in prevs:
                if A.level[y] != m - 1:
                    continue
                p = A.mul(x, y)
                if p:
                    prods.append((x, y))
                    cols.append(p)
        cols_all = cols + [{i: one} for i in low]
        targets = [{i: one} for i in new]
        sols = solve_vectors(F, cols_all, A.dim, targets)
        for i, s in zip(new, sols):
            if s is None:
                return None
            im = {}
            for k, c in s.items():
                if k < len(prods):
                    x, y = prods[k]
                    axpy(im, c, _mul(A, images[x], images[y]))
                else:
                    axpy(im, c, images[low[k - len(prods)]])
            images[i] = im
    return FilteredAutomorphism(A, images)


def twisted_dual_bimodule(R: ReesAlgebra, phi=None):
    """Restricted dual of 1_R_phi; ``phi`` is a FilteredAutomorphism of the source or a map on R."""
    if isinstance(phi, FilteredAutomorphism):
        phi = phi.rees_map(R)
    if phi is not None:
        one = R.field.one
        if phi(R.t) != {R.t: one}:
            raise ValueError("phi(t) must be t")
    return twisted_dual(R.algebra, phi, "R*_phi")

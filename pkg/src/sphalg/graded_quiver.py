"""Graded algebras over a semisimple base k^V, quadratic presentations and duals.

Conventions
-----------
* Basis elements are paths between vertices.  The product ``x*y`` is the
  composition "first y, then x", so it is nonzero only if ``src(x) == tgt(y)``.
* Each basis element carries an internal degree ``deg`` (path length, or the
  z-degree for E(V,g)), a cohomological degree ``cdeg`` used for signs, and an
  optional additive multi-weight ``weight`` (a torus weight when g is diagonal).
  Every structure map in the library preserves ``weight``, which is how large
  complexes are split into small blocks.
* The dual generator ``a*`` goes from ``tgt(a)`` to ``src(a)``.  A dual word
  ``(u1*, ..., um*)`` pairs with the word ``(um, ..., u1)``.
"""
from __future__ import annotations

from collections import defaultdict
from typing import NamedTuple

from .scalar_linalg import (QQ, FieldSpec, Mat, Subspace, axpy, echelon, kernel_flint,
                            kernel_of, rank_of, to_flint, _rref_flint)


# ---------------------------------------------------------------- weights

def wadd(a, b):
    if not a:
        return tuple(b)
    if not b:
        return tuple(a)
    return tuple(x + y for x, y in zip(a, b))


def wneg(a):
    return tuple(-x for x in a)


def unit_weight(n, i, sign=1):
    return tuple(sign if k == i else 0 for k in range(n))


# ---------------------------------------------------------------- GMatrix

class GMatrix:
    """The twisting matrix g (n x n over a field)."""

    def __init__(self, mat: Mat):
        if mat.nrows != mat.ncols:
            raise ValueError("g must be square")
        if mat.nrows < 2:
            raise ValueError("need n >= 2")
        self.mat = mat
        self.field = mat.field
        self.n = mat.nrows
        self.invertible = bool(mat.det())
        self.diagonal = all(not mat[i, j] for i in range(self.n) for j in range(self.n) if i != j)

    @classmethod
    def of(cls, field, rows):
        return cls(Mat(field, rows))

    @classmethod
    def identity(cls, n, field=QQ):
        return cls(Mat.identity(field, n))

    @classmethod
    def diag(cls, entries, field=QQ):
        n = len(entries)
        return cls(Mat(field, [[entries[i] if i == j else 0 for j in range(n)] for i in range(n)]))

    @classmethod
    def random(cls, n, field, rng, diagonal=False, bound=9):
        """Entries uniform in [-bound, bound] (or F_p), resampled until invertible."""
        while True:
            if field.p:
                draw = lambda: rng.randrange(field.p)
            else:
                draw = lambda: rng.randint(-bound, bound)
            rows = [[(draw() if (i == j or not diagonal) else 0) for j in range(n)] for i in range(n)]
            g = cls(Mat(field, rows))
            if g.invertible:
                return g

    @classmethod
    def companion(cls, n, field=QQ):
        """Companion matrix of x^n - x - 1 (invertible over every field)."""
        rows = [[0] * n for _ in range(n)]
        for i in range(1, n):
            rows[i][i - 1] = 1
        rows[0][n - 1] = 1
        rows[1][n - 1] = 1
        return cls(Mat(field, rows))

    def __getitem__(self, ij):
        return self.mat[ij]

    def __eq__(self, other):
        return isinstance(other, GMatrix) and other.mat == self.mat

    def __hash__(self):
        return hash(self.mat)

    def __repr__(self):
        return f"GMatrix({self.mat!r})"

    def trace(self):
        return self.mat.trace()

    def inverse(self) -> Mat:
        return self.mat.inverse()

    def scaled(self, c):
        return GMatrix(self.mat.scale(c))

    def conjugated(self, u: Mat):
        return GMatrix(u @ self.mat @ u.inverse())

    def to_json(self):
        return self.mat.to_json()


# ---------------------------------------------------------------- algebras

class GradedAlgebra:
    """A graded algebra given by a labeled basis and sparse structure constants.

    ``table[(i, j)]`` is the product of basis elements i and j as a sparse
    vector; missing entries are zero.  ``bound`` is the largest internal degree
    kept (``None`` for a finite-dimensional algebra stored completely).
    """

    def __init__(self, field, vertices, labels, src, tgt, deg, cdeg, weight, table,
                 units, bound=None, name=""):
        self.field = field
        self.vertices = tuple(vertices)
        self.labels = list(labels)
        self.src = list(src)
        self.tgt = list(tgt)
        self.deg = list(deg)
        self.cdeg = list(cdeg)
        self.weight = [tuple(w) for w in weight]
        self.table = table
        self.units = list(units)
        self.bound = bound
        self.name = name
        self.gens = None          # indices of degree-one generators, when known
        self.presentation = None
        self._index()

    def _index(self):
        self.by_deg = defaultdict(list)
        self.by_block = defaultdict(list)
        for i, d in enumerate(self.deg):
            self.by_deg[d].append(i)
            self.by_block[(d, self.src[i], self.tgt[i])].append(i)
        self.label_index = {l: i for i, l in enumerate(self.labels)}

    # -- basic queries
    @property
    def dim(self):
        return len(self.labels)

    @property
    def top(self):
        return max(self.deg) if self.deg else 0

    def hilbert(self, upto=None):
        upto = self.top if upto is None else upto
        return [len(self.by_deg.get(d, ())) for d in range(upto + 1)]

    def component(self, d, src=None, tgt=None):
        return [i for i in self.by_deg.get(d, ())
                if (src is None or self.src[i] == src) and (tgt is None or self.tgt[i] == tgt)]

    def index(self, label):
        return self.label_index[label]

    def unit(self):
        return {u: self.field.one for u in self.units}

    def known(self, d):
        return self.bound is None or d <= self.bound

    def mul(self, i, j) -> dict:
        if self.bound is not None and self.deg[i] + self.deg[j] > self.bound:
            raise OverflowError(f"product of degrees {self.deg[i]}+{self.deg[j]} beyond bound {self.bound}")
        return self.table.get((i, j), {})

    def mul_vec(self, u: dict, v: dict) -> dict:
        out = {}
        for i, a in u.items():
            for j, b in v.items():
                p = self.mul(i, j)
                if p:
                    axpy(out, a * b, p)
        return out

    def left_mult(self, x: dict, i) -> dict:
        return self.mul_vec(x, {i: self.field.one})

    # -- checks
    def check_associative(self, max_deg=None) -> bool:
        top = self.top if self.bound is None else self.bound
        if max_deg is not None:
            top = min(top, max_deg)
        n = self.dim
        one = self.field.one
        for i in range(n):
            for j in range(n):
                if self.deg[i] + self.deg[j] > top or self.src[i] != self.tgt[j]:
                    continue
                ij = self.mul(i, j)
                for k in range(n):
                    if self.deg[i] + self.deg[j] + self.deg[k] > top or self.src[j] != self.tgt[k]:
                        continue
                    lhs = self.mul_vec(ij, {k: one})
                    rhs = self.mul_vec({i: one}, self.mul(j, k))
                    if lhs != rhs:
                        return False
        return True

    def check_units(self) -> bool:
        one = self.field.one
        for x in range(self.dim):
            for v, u in enumerate(self.units):
                left = self.mul(u, x)
                right = self.mul(x, u)
                if left != ({x: one} if self.tgt[x] == v else {}):
                    return False
                if right != ({x: one} if self.src[x] == v else {}):
                    return False
        return True

    def __eq__(self, other):
        if not isinstance(other, GradedAlgebra):
            return NotImplemented
        keys = ("field", "vertices", "labels", "src", "tgt", "deg", "cdeg", "weight", "units", "bound")
        if any(getattr(self, k) != getattr(other, k) for k in keys):
            return False
        return _clean(self.table) == _clean(other.table)

    __hash__ = None

    def __repr__(self):
        return f"GradedAlgebra({self.name or '?'}, dims={self.hilbert()}, {self.field})"

    def to_json(self):
        F = self.field
        mult = []
        for (i, j), v in sorted(self.table.items()):
            for k, c in sorted(v.items()):
                mult.append([i, j, k, F.fmt(c)])
        return {
            "name": self.name,
            "field": F.tag,
            "vertices": list(self.vertices),
            "basis": [{"label": l, "src": s, "tgt": t, "deg": d, "cdeg": c, "weight": list(w)}
                      for l, s, t, d, c, w in zip(self.labels, self.src, self.tgt, self.deg,
                                                  self.cdeg, self.weight)],
            "dims": self.hilbert(),
            "bound": self.bound,
            "units": self.units,
            "mult": mult,
        }


class LazyTable:
    """Structure constants computed on first use and cached."""

    def __init__(self, fn, size, admissible):
        self.fn = fn
        self.size = size
        self.admissible = admissible
        self.cache = {}

    def get(self, key, default=None):
        v = self.cache.get(key)
        if v is None:
            v = self.cache[key] = self.fn(*key)
        return v if v else default

    def __getitem__(self, key):
        v = self.get(key)
        if v is None:
            raise KeyError(key)
        return v

    def items(self):
        for i in range(self.size):
            for j in range(self.size):
                if self.admissible(i, j):
                    v = self.get((i, j))
                    if v:
                        yield (i, j), v


def _clean(table):
    return {k: v for k, v in table.items() if v}


def opposite(a: GradedAlgebra) -> GradedAlgebra:
    if isinstance(a.table, LazyTable):
        table = LazyTable(lambda i, j: a.table.get((j, i), {}), a.dim,
                          lambda i, j: a.table.admissible(j, i))
    else:
        table = {(j, i): dict(v) for (i, j), v in a.table.items()}
    name = a.name[:-3] if a.name.endswith("^op") else a.name + "^op"
    op = GradedAlgebra(a.field, a.vertices, a.labels, a.tgt, a.src, a.deg, a.cdeg, a.weight,
                       table, a.units, a.bound, name)
    op.gens = a.gens
    return op


def polynomial_extension(a: GradedAlgebra, D: int, var="t") -> GradedAlgebra:
    """A[t] with t central of degree 1, truncated at total degree D.

    The t-power is prepended to the weight so that the bigrading survives.
    """
    basis = [(i, k) for d in range(D + 1) for k in range(d + 1)
             for i in a.by_deg.get(d - k, ())]
    basis.sort(key=lambda ik: (a.deg[ik[0]] + ik[1], ik[1], ik[0]))
    pos = {b: p for p, b in enumerate(basis)}
    labels, src, tgt, deg, cdeg, weight = [], [], [], [], [], []
    for i, k in basis:
        labels.append(a.labels[i] + (f"*{var}^{k}" if k > 1 else f"*{var}" if k == 1 else ""))
        src.append(a.src[i])
        tgt.append(a.tgt[i])
        deg.append(a.deg[i] + k)
        cdeg.append(a.cdeg[i])
        weight.append((k,) + a.weight[i])
    table = {}
    for p, (i, k) in enumerate(basis):
        for q, (j, l) in enumerate(basis):
            if deg[p] + deg[q] > D or a.src[i] != a.tgt[j]:
                continue
            prod = a.mul(i, j)
            if prod:
                table[(p, q)] = {pos[(r, k + l)]: c for r, c in prod.items()}
    units = [pos[(u, 0)] for u in a.units]
    out = GradedAlgebra(a.field, a.vertices, labels, src, tgt, deg, cdeg, weight, table, units,
                        D, f"{a.name}[{var}]")
    out.base = a
    out.basis_pairs = basis
    out.t_index = pos.get((a.units[0], 1)) if len(a.units) == 1 else None
    return out


# ---------------------------------------------------------------- S(k^n, g)

def build_S(n: int, g: GMatrix, field: FieldSpec | None = None) -> GradedAlgebra:
    """The (2n+4)-dimensional algebra on vertices X, Y.

    Products: beta_i alpha_j = g_ij xi_X and alpha_j beta_i = delta_ij xi_Y.
    ``deg`` is the path-length grading deg_K, ``cdeg`` the cohomological one.
    """
    field = field or g.field
    if g.n != n:
        raise ValueError("g must be n x n")
    if g.field != field:
        raise ValueError("g lives over another field")
    X, Y = 0, 1
    w = (lambda i, s: unit_weight(n, i, s)) if g.diagonal else (lambda i, s: ())
    z = tuple([0] * n) if g.diagonal else ()
    labels = ["e_X", "e_Y"] + [f"a{i + 1}" for i in range(n)] + [f"b{i + 1}" for i in range(n)] + ["xi_X", "xi_Y"]
    src = [X, Y] + [X] * n + [Y] * n + [X, Y]
    tgt = [X, Y] + [Y] * n + [X] * n + [X, Y]
    deg = [0, 0] + [1] * (2 * n) + [2, 2]
    cdeg = [0, 0] + [0] * n + [1] * n + [1, 1]
    weight = [z, z] + [w(i, 1) for i in range(n)] + [w(i, -1) for i in range(n)] + [z, z]
    a = lambda i: 2 + i
    b = lambda i: 2 + n + i
    xiX, xiY = 2 + 2 * n, 3 + 2 * n
    one = field.one
    table = {}
    N = len(labels)
    for x in range(N):
        for v, u in enumerate((0, 1)):
            if tgt[x] == v:
                table[(u, x)] = {x: one}
            if src[x] == v:
                table[(x, u)] = {x: one}
    for i in range(n):
        for j in range(n):
            if g[i, j]:
                table[(b(i), a(j))] = {xiX: g[i, j]}
        table[(a(i), b(i))] = {xiY: one}
    S = GradedAlgebra(field, ("X", "Y"), labels, src, tgt, deg, cdeg, weight, table, [0, 1], None,
                      f"S(k^{n},g)")
    S.gens = [a(i) for i in range(n)] + [b(i) for i in range(n)]
    S.g = g
    S.presentation = presentation_from_algebra(S)
    return S


# ---------------------------------------------------------------- presentations

class Generator(NamedTuple):
    label: str
    src: int
    tgt: int
    cdeg: int = 0
    weight: tuple = ()


def dual_label(label):
    return label[:-1] if label.endswith("*") else label + "*"


class QuadraticPresentation:
    """Generators in path-length one and a relation space in path-length two.

    ``words2`` lists the composable pairs (a, b) (meaning a*b, so
    src(a) == tgt(b)) in lexicographic order; ``relations`` is a Subspace of
    the span of ``words2``.
    """

    def __init__(self, field, vertices, gens, relations, name=""):
        self.field = field
        self.vertices = tuple(vertices)
        self.gens = tuple(Generator(*g) for g in gens)
        self.words2 = [(a, b) for a in range(len(self.gens)) for b in range(len(self.gens))
                       if self.gens[a].src == self.gens[b].tgt]
        self.word_index = {w: i for i, w in enumerate(self.words2)}
        if isinstance(relations, Subspace):
            rel = relations
        else:
            vecs = []
            for r in relations:
                vecs.append({self.word_index[w]: field(c) for w, c in r.items() if field(c)})
            rel = Subspace(field, len(self.words2), vecs)
        self.relations = rel
        self.name = name
        for r in rel.rows:
            blocks = {(self.gens[self.words2[k][0]].tgt, self.gens[self.words2[k][1]].src) for k in r}
            if len(blocks) > 1:
                raise ValueError("relations must be K-bihomogeneous")

    def relation_words(self):
        return [{self.words2[k]: c for k, c in r.items()} for r in self.relations.rows]

    def __eq__(self, other):
        return (isinstance(other, QuadraticPresentation) and self.field == other.field
                and self.vertices == other.vertices and self.gens == other.gens
                and self.relations == other.relations)

    __hash__ = None

    def __repr__(self):
        return (f"QuadraticPresentation({self.name or '?'}, gens={len(self.gens)}, "
                f"relations={self.relations.dim})")

    def to_json(self):
        F = self.field
        return {
            "name": self.name,
            "field": F.tag,
            "vertices": list(self.vertices),
            "generators": [{"label": g.label, "src": g.src, "tgt": g.tgt, "cdeg": g.cdeg,
                            "weight": list(g.weight)} for g in self.gens],
            "words2": [list(w) for w in self.words2],
            "relations": [[[k, F.fmt(c)] for k, c in sorted(r.items())] for r in self.relations.rows],
        }


def presentation_from_algebra(a: GradedAlgebra, gens=None) -> QuadraticPresentation:
    """Quadratic part of a: generators = given degree-1 basis, R = kernel of V(x)V -> A_2."""
    gens = list(a.gens if gens is None else gens)
    G = [Generator(a.labels[i], a.src[i], a.tgt[i], a.cdeg[i], a.weight[i]) for i in gens]
    p0 = QuadraticPresentation(a.field, a.vertices, G, [])
    targets = a.by_deg.get(2, [])
    tpos = {x: k for k, x in enumerate(targets)}
    cols = []
    for (u, v) in p0.words2:
        prod = a.mul(gens[u], gens[v])
        cols.append({tpos[k]: c for k, c in prod.items()})
    ker = kernel_of(a.field, cols, len(targets))
    return QuadraticPresentation(a.field, a.vertices, G, Subspace(a.field, len(p0.words2), ker),
                                 a.name)


def quadratic_dual(p: QuadraticPresentation) -> QuadraticPresentation:
    F = p.field
    G = [Generator(dual_label(g.label), g.tgt, g.src, -g.cdeg, wneg(g.weight)) for g in p.gens]
    q0 = QuadraticPresentation(F, p.vertices, G, [])
    # the dual word (a*, b*) pairs with the word (b, a)
    rows = []
    for r in p.relations.rows:
        row = {}
        for k, c in r.items():
            a, b = p.words2[k]
            row[q0.word_index[(b, a)]] = c
        rows.append(row)
    n = len(q0.words2)
    if rows:
        ann = kernel_flint(F, to_flint(F, rows, len(rows), n))
    else:
        ann = [{j: F.one} for j in range(n)]
    name = p.name[:-1] if p.name.endswith("!") else p.name + "!"
    return QuadraticPresentation(F, p.vertices, G, Subspace(F, n, ann), name)


def free_presentation(field, ngens, name="free"):
    gens = [Generator(f"x{i + 1}", 0, 0) for i in range(ngens)]
    return QuadraticPresentation(field, ("*",), gens, [], name)


# ---------------------------------------------------------------- truncation

def truncated_algebra(p: QuadraticPresentation, D: int) -> GradedAlgebra:
    """T(V)/(R) in path-length degrees <= D, on a basis of normal words.

    Degree d is computed as the cokernel of A_{d-2} (x) R -> A_{d-1} (x) V, which
    only needs the previous two levels.  Columns are (normal word, letter)
    pairs; the non-pivot columns of the echelon form are the normal words.
    """
    F = p.field
    one = F.one
    G = p.gens
    nv = len(p.vertices)
    rels = p.relation_words()
    # levels[d]: list of normal words (tuples of generator indices)
    levels = [[()] * nv, [(a,) for a in range(len(G))]]
    vert0 = list(range(nv))
    # reduce[d][(u_idx, b)] -> sparse vector over levels[d] indices
    reduce = [None, None]
    def src_of(d, k):
        return vert0[k] if d == 0 else G[levels[d][k][-1]].src

    def tgt_of(d, k):
        return vert0[k] if d == 0 else G[levels[d][k][0]].tgt

    def red_letter(d, vec, b):
        """vec in A_d, times generator b on the right, reduced into A_{d+1}."""
        out = {}
        if d == 0:
            for k, c in vec.items():
                if vert0[k] == G[b].tgt:
                    axpy(out, c, {b: one})
            return out
        table = reduce[d + 1]
        for k, c in vec.items():
            r = table.get((k, b))
            if r:
                axpy(out, c, r)
        return out

    for d in range(2, D + 1):
        prev = levels[d - 1]
        cols = [(k, b) for k in range(len(prev)) for b in range(len(G))
                if src_of(d - 1, k) == G[b].tgt]
        cpos = {c: i for i, c in enumerate(cols)}
        # blocks keyed by (tgt, src, weight, cdeg)
        def ckey(c):
            k, b = c
            w = prev[k]
            wt = ()
            cd = 0
            for x in w + (b,):
                wt = wadd(wt, G[x].weight)
                cd += G[x].cdeg
            return (tgt_of(d - 1, k), G[b].src, wt, cd)
        keys = [ckey(c) for c in cols]
        rows = []
        for k2 in range(len(levels[d - 2])):
            for r in rels:
                row = {}
                for (a, b), c in r.items():
                    if src_of(d - 2, k2) != G[a].tgt:
                        continue
                    ua = red_letter(d - 2, {k2: one}, a)
                    for k1, c1 in ua.items():
                        pos = cpos.get((k1, b))
                        if pos is not None:
                            axpy(row, c * c1, {pos: one})
                if row:
                    rows.append(row)
        blocks = defaultdict(list)
        for row in rows:
            blocks[keys[min(row)]].append(row)
        pivot_rows = {}
        for key, brows in blocks.items():
            cidx = sorted({j for r in brows for j in r})
            loc = {j: i for i, j in enumerate(cidx)}
            M = to_flint(F, [{loc[j]: x for j, x in r.items()} for r in brows], len(brows), len(cidx))
            R, piv = _rref_flint(F, M)
            for r, pv in zip(R, piv):
                pivot_rows[cidx[pv]] = {cidx[j]: x for j, x in r.items()}
        normal = [i for i in range(len(cols)) if i not in pivot_rows]
        npos = {c: m for m, c in enumerate(normal)}
        levels.append([prev[cols[i][0]] + (cols[i][1],) for i in normal])
        red = {}
        for i, c in enumerate(cols):
            if i in npos:
                red[c] = {npos[i]: one}
            else:
                red[c] = {npos[j]: -x for j, x in pivot_rows[i].items() if j != i}
        reduce.append(red)

    # assemble the GradedAlgebra
    basis = [(d, k) for d in range(len(levels)) for k in range(len(levels[d]))]
    gpos = {b: i for i, b in enumerate(basis)}
    labels, src, tgt, deg, cdeg, weight = [], [], [], [], [], []
    for d, k in basis:
        w = levels[d][k]
        if d == 0:
            labels.append(f"e_{p.vertices[k]}")
            wt = tuple([0] * len(G[0].weight)) if G and G[0].weight else ()
            cd = 0
        else:
            labels.append(".".join(G[x].label for x in w))
            wt, cd = (), 0
            for x in w:
                wt = wadd(wt, G[x].weight)
                cd += G[x].cdeg
        src.append(src_of(d, k))
        tgt.append(tgt_of(d, k))
        deg.append(d)
        cdeg.append(cd)
        weight.append(wt)
    def product(x, y):
        (d1, k1), (d2, k2) = basis[x], basis[y]
        if d1 + d2 > D or src[x] != tgt[y]:
            return {}
        if d2 == 0:
            return {x: one}
        if d1 == 0:
            return {y: one}
        vec = {k1: one}
        d = d1
        for b in levels[d2][k2]:
            vec = red_letter(d, vec, b)
            d += 1
            if not vec:
                return {}
        return {gpos[(d, k)]: c for k, c in vec.items()}

    table = LazyTable(product, len(basis), lambda x, y: deg[x] + deg[y] <= D and src[x] == tgt[y])
    A = GradedAlgebra(F, p.vertices, labels, src, tgt, deg, cdeg, weight, table,
                      [gpos[(0, v)] for v in range(nv)], D, p.name)
    A.gens = [gpos[(1, a)] for a in range(len(G))]
    A.presentation = p
    A.words = [levels[d][k] for d, k in basis]

    def reduce_word(word):
        """Normal form of an arbitrary word of generators, as a sparse vector."""
        if not word:
            raise ValueError("empty word")
        vec = {word[0]: one}
        for d, b in enumerate(word[1:], start=1):
            vec = red_letter(d, vec, b)
            if not vec:
                return {}
        return {gpos[(len(word), k)]: c for k, c in vec.items()}

    A.reduce_word = reduce_word
    return A


# ---------------------------------------------------------------- E(V, g)

def _matmul(A, B, F):
    n = len(A)
    return [[sum((A[i][k] * B[k][j] for k in range(n) if A[i][k] and B[k][j]), F.zero)
             for j in range(n)] for i in range(n)]


def endg_basis(g: GMatrix):
    """Echelon basis of End_g(V) = {a : tr(g a) = 0}, as flattened row-major vectors."""
    n, F = g.n, g.field
    # tr(g a) = sum_ij g_ji a_ij
    functional = {i * n + j: g[j, i] for i in range(n) for j in range(n) if g[j, i]}
    if not functional:
        raise ValueError("g must be nonzero")
    ker = kernel_flint(F, to_flint(F, [functional], 1, n * n))
    return Subspace(F, n * n, ker)


def build_E(n: int, g: GMatrix, field: FieldSpec | None = None, D: int = 4) -> GradedAlgebra:
    """Truncation to z-degree <= D of {a0 + a1 z + ... : a0 scalar, tr(g a1) = 0}."""
    field = field or g.field
    if g.n != n:
        raise ValueError("g must be n x n")
    F = field
    one = F.one
    sub = endg_basis(g)
    weights = g.diagonal

    def ew(i, j):
        return tuple((1 if k == i else 0) - (1 if k == j else 0) for k in range(n)) if weights else ()

    mats, labels, deg, weight = [], [], [], []
    ident = [[one if i == j else F.zero for j in range(n)] for i in range(n)]
    mats.append(ident)
    labels.append("1")
    deg.append(0)
    weight.append(ew(0, 0))
    for k, r in enumerate(sub.rows):
        M = [[F.zero] * n for _ in range(n)]
        for idx, c in r.items():
            M[idx // n][idx % n] = c
        mats.append(M)
        labels.append(f"u{k + 1}*z")
        deg.append(1)
        i0 = min(r) // n, min(r) % n
        weight.append(ew(*i0))
    for d in range(2, D + 1):
        for i in range(n):
            for j in range(n):
                M = [[F.zero] * n for _ in range(n)]
                M[i][j] = one
                mats.append(M)
                labels.append(f"E{i + 1}{j + 1}*z^{d}")
                deg.append(d)
                weight.append(ew(i, j))
    start = {}
    for idx, d in enumerate(deg):
        start.setdefault(d, idx)

    def coords(M, d):
        if d == 0:
            c = M[0][0]
            if any(M[i][j] != (c if i == j else 0) for i in range(n) for j in range(n)):
                raise ValueError("not a scalar")
            return {0: c} if c else {}
        if d == 1:
            flat = {i * n + j: M[i][j] for i in range(n) for j in range(n) if M[i][j]}
            cs = sub.coordinates(flat)
            return {start[1] + k: c for k, c in enumerate(cs) if c}
        return {start[d] + i * n + j: M[i][j] for i in range(n) for j in range(n) if M[i][j]}

    table = {}
    N = len(mats)
    for x in range(N):
        for y in range(N):
            d = deg[x] + deg[y]
            if d > D:
                continue
            P = _matmul(mats[x], mats[y], F)
            c = coords(P, d)
            if c:
                table[(x, y)] = c
    E = GradedAlgebra(F, ("*",), labels, [0] * N, [0] * N, deg, [0] * N, weight, table, [0], D,
                      f"E(k^{n},g)")
    E.gens = list(range(1, 1 + sub.dim))
    E.g = g
    E.mats = mats
    E.endg = sub
    E.coords = coords
    return E


def E_presentation(n, g, field=None):
    E = build_E(n, g, field, 2)
    return presentation_from_algebra(E)


def build_End_z(n: int, field: FieldSpec, D: int) -> GradedAlgebra:
    """End(V)[z] truncated at z-degree D, basis E_ij z^d."""
    F = field
    labels, deg, weight = [], [], []
    for d in range(D + 1):
        for i in range(n):
            for j in range(n):
                labels.append(f"E{i + 1}{j + 1}*z^{d}")
                deg.append(d)
                weight.append(tuple((1 if k == i else 0) - (1 if k == j else 0) for k in range(n)))
    idx = lambda d, i, j: d * n * n + i * n + j
    table = {}
    for d1 in range(D + 1):
        for d2 in range(D + 1 - d1):
            for i in range(n):
                for j in range(n):
                    for k in range(n):
                        table[(idx(d1, i, j), idx(d2, j, k))] = {idx(d1 + d2, i, k): F.one}
    N = len(labels)
    A = GradedAlgebra(F, ("*",), labels, [0] * N, [0] * N, deg, [0] * N, weight, table, [], D,
                      f"End(k^{n})[z]")
    A.units = []  # the unit sum(E_ii) is not a basis element
    A.unit_vector = {idx(0, i, i): F.one for i in range(n)}
    return A


# ---------------------------------------------------------------- checks

def _component_dims(a, d):
    return len(a.by_deg.get(d, ()))


def check_koszul(p: QuadraticPresentation, D: int):
    """Exactness of the Koszul complex A (x) (A^!)^* in internal degrees 1..D.

    Returns ``(True, None)`` or ``(False, (degree, position))`` for the first
    failure.  This certifies Koszulness only up to D.
    """
    A = truncated_algebra(p, D)
    Ad = truncated_algebra(quadratic_dual(p), D)
    for d in range(1, D + 1):
        bad = koszul_homology(A, Ad, d)
        if bad is not None:
            return False, (d, bad)
    return True, None


def koszul_homology(A, Ad, d):
    """First homological position with nonzero homology in internal degree d, or None.

    Term m is A_{d-m} (x) (A^!_m)^*, spanned by pairs (a, psi) with
    src(a) == src(psi).  The differential is
    a (x) psi^* -> sum_i sum_psi' [psi' v_i^*]_psi  a v_i (x) psi'^*.
    """
    F = A.field
    ngen = len(A.gens)

    def key(a, psi):
        return (A.tgt[a], Ad.tgt[psi], wadd(A.weight[a], wneg(Ad.weight[psi])),
                A.cdeg[a] - Ad.cdeg[psi])

    terms = []
    for m in range(d + 1):
        blocks = defaultdict(list)
        for a in A.by_deg.get(d - m, ()):
            for psi in Ad.by_deg.get(m, ()):
                if A.src[a] == Ad.src[psi]:
                    blocks[key(a, psi)].append((a, psi))
        terms.append(blocks)
    # maps d_m : term m -> term m-1
    ranks = [0] * (d + 2)
    for m in range(1, d + 1):
        total = 0
        for k, dom in terms[m].items():
            cod = terms[m - 1].get(k, [])
            if not cod:
                continue
            cpos = {x: i for i, x in enumerate(cod)}
            # precompute, for psi' in A^!_{m-1}: psi' v_i^* expansions
            cols = []
            for (a, psi) in dom:
                col = {}
                for i in range(ngen):
                    ai = A.mul(a, A.gens[i]) if A.src[a] == A.tgt[A.gens[i]] else {}
                    if not ai:
                        continue
                    for psi2 in _left_factors(Ad, m - 1, i, psi):
                        c = psi2[1]
                        for a2, c2 in ai.items():
                            pos = cpos.get((a2, psi2[0]))
                            if pos is not None:
                                axpy(col, c * c2, {pos: F.one})
                cols.append(col)
            total += rank_of(F, cols, len(cod))
        ranks[m] = total
    for m in range(d + 1):
        dim = sum(len(v) for v in terms[m].values())
        if dim - ranks[m] - ranks[m + 1] != 0:
            return m
    return None


def _transpose_cols(cols, nrows):
    rows = [dict() for _ in range(nrows)]
    for j, c in enumerate(cols):
        for i, x in c.items():
            rows[i][j] = x
    return rows


def _left_factors(Ad, m1, i, psi):
    """Pairs (psi', c) with psi' in degree m1 and c = coefficient of psi in psi' * v_i^*."""
    cache = Ad.__dict__.setdefault("_lf_cache", {})
    key = (m1, i)
    if key not in cache:
        inv = defaultdict(list)
        gi = Ad.gens[i]
        for p2 in Ad.by_deg.get(m1, ()):
            if Ad.src[p2] != Ad.tgt[gi]:
                continue
            for q, c in Ad.mul(p2, gi).items():
                inv[q].append((p2, c))
        cache[key] = inv
    return cache[key].get(psi, ())


def generation_check(a: GradedAlgebra, generator_degrees, D: int) -> bool:
    """Is every component of degree <= D spanned by products of the given components?"""
    degs = sorted(set(generator_degrees))
    if D < max(degs):
        raise ValueError("D must be at least the largest generator degree")
    F = a.field
    span = {0: [{i: F.one} for i in a.by_deg.get(0, ())]}
    for d in range(1, D + 1):
        comp = a.by_deg.get(d, [])
        pos = {x: k for k, x in enumerate(comp)}
        vecs = [{pos[x]: F.one} for x in comp] if d in degs else []
        for i in degs:
            if i >= d or i not in degs:
                continue
            for x in a.by_deg.get(i, ()):
                for v in span.get(d - i, ()):
                    prod = a.mul_vec({x: F.one}, v)
                    if prod:
                        vecs.append({pos[k]: c for k, c in prod.items()})
        basis = echelon(F, vecs, len(comp))
        if len(basis) != len(comp):
            return False
        span[d] = [{comp[k]: c for k, c in r.items()} for r in basis]
    return True


def derivation_space(a: GradedAlgebra, m: int, D: int):
    """Derivations (ungraded Leibniz rule) of degree m <= -1, on degrees <= D.

    Unknowns are all the components A_d -> A_{d+m}; the Leibniz rule is imposed
    on every pair of basis elements with total degree <= D.  Returns
    ``(dim, basis)`` where each basis derivation is a dict
    ``basis element -> sparse image vector``.
    """
    if m > -1:
        raise ValueError("only negative degrees are supported")
    if not generation_check(a, {1, 2}, D):
        raise ValueError("algebra is not generated in degrees <= 2 up to D")
    F = a.field
    one = F.one
    var = {}
    for d in range(1, D + 1):
        if d + m < 0:
            continue
        for x in a.by_deg.get(d, ()):
            for y in a.by_deg.get(d + m, ()):
                if a.src[x] == a.src[y] and a.tgt[x] == a.tgt[y]:
                    var[(x, y)] = len(var)
    if not var:
        return 0, []
    images = defaultdict(dict)  # x -> {y: variable}
    for (x, y), k in var.items():
        images[x][y] = k
    eqs = []
    for x in range(a.dim):
        for y in range(a.dim):
            if a.deg[x] + a.deg[y] > D or a.src[x] != a.tgt[y]:
                continue
            if a.deg[x] == 0 or a.deg[y] == 0:
                continue
            # D(xy) - D(x) y - x D(y) = 0, coefficientwise
            eq = defaultdict(dict)
            for z, c in a.mul(x, y).items():
                for w, k in images.get(z, {}).items():
                    axpy(eq[w], c, {k: one})
            for w, k in images.get(x, {}).items():
                for z, c in a.mul(w, y).items():
                    axpy(eq[z], -c, {k: one})
            for w, k in images.get(y, {}).items():
                for z, c in a.mul(x, w).items():
                    axpy(eq[z], -c, {k: one})
            eqs.extend(e for e in eq.values() if e)
    nvar = len(var)
    if eqs:
        sol = kernel_flint(F, to_flint(F, eqs, len(eqs), nvar))
    else:
        sol = [{k: one} for k in range(nvar)]
    inv = {k: xy for xy, k in var.items()}
    basis = []
    for v in sol:
        der = defaultdict(dict)
        for k, c in v.items():
            x, y = inv[k]
            der[x][y] = c
        basis.append(dict(der))
    return len(basis), basis


def apply_derivation(der, vec):
    out = {}
    for x, c in vec.items():
        img = der.get(x)
        if img:
            axpy(out, c, img)
    return out


def right_mult_injectivity(a: GradedAlgebra, x_component, multiplier, D=None) -> bool:
    """Is x -> x * multiplier injective on the component (degree, source vertex)?"""
    d, vertex = x_component
    if D is not None and d > D:
        raise ValueError("component beyond D")
    F = a.field
    if not isinstance(multiplier, dict):
        multiplier = {multiplier: F.one}
    dom = a.component(d, src=vertex)
    if not dom:
        return True
    imgs = [a.mul_vec({x: F.one}, multiplier) for x in dom]
    return rank_of(F, imgs, a.dim) == len(dom)


def conjugation_on_extension(E: GradedAlgebra, R: GradedAlgebra, u: Mat):
    """a z^k t^l -> (u^-1 a u) z^k t^l on R = E[t], as a function basis index -> vector."""
    F = E.field
    ui = u.inverse()
    pos = {b: p for p, b in enumerate(R.basis_pairs)}

    def phi(r):
        i, k = R.basis_pairs[r]
        X = ui @ Mat(F, E.mats[i]) @ u
        return {pos[(j, k)]: c for j, c in E.coords([list(row) for row in X.rows], E.deg[i]).items()}
    return phi


def koszul_failure_presentation() -> QuadraticPresentation:
    """Two loops over F_101 with two random relations; not Koszul (found by random search).

    Its Koszul complex is first non-exact in internal degree 4.
    """
    F = FieldSpec(101)
    gens = [Generator("x1", 0, 0), Generator("x2", 0, 0)]
    rels = [{(0, 0): 58, (1, 0): 35}, {(0, 1): 41, (1, 0): 4, (0, 0): 3}]
    return QuadraticPresentation(F, ("*",), gens, rels, "koszul-failure")

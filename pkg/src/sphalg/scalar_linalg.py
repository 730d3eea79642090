"""Exact scalars over Q and F_p, and dense linear algebra on top of python-flint.

Field elements are flint scalars (``fmpq`` or ``nmod``), so ordinary Python
operators work on them.  Matrices are small immutable row tuples (:class:`Mat`);
heavy lifting is delegated to ``fmpq_mat`` / ``nmod_mat``.

Internally most modules work with *sparse vectors*: plain dicts mapping an
index to a nonzero field element.  The helpers at the bottom of this module
(`rank_of`, `kernel_of`, `solve_vectors` ...) accept lists of such dicts.
"""
from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

from flint import fmpq, fmpq_mat, fmpz, fmpz_mat, nmod, nmod_mat


class FieldSpec:
    """Q (``p == 0``) or the prime field F_p."""

    __slots__ = ("p", "zero", "one")

    def __init__(self, p: int = 0):
        p = int(p)
        if p != 0 and (p < 2 or not fmpz(p).is_prime()):
            raise ValueError(f"{p} is not prime")
        self.p = p
        self.zero = self(0)
        self.one = self(1)

    @classmethod
    def parse(cls, tag) -> "FieldSpec":
        if isinstance(tag, FieldSpec):
            return tag
        s = str(tag).strip()
        if s in ("Q", "QQ"):
            return QQ
        if s[:1] in ("F", "f") and s[1:].isdigit():
            return GF(int(s[1:]))
        raise ValueError(f"unknown field tag {tag!r}")

    @property
    def tag(self) -> str:
        return "Q" if self.p == 0 else f"F{self.p}"

    @property
    def char(self) -> int:
        return self.p

    def __call__(self, x):
        p = self.p
        if p == 0:
            if isinstance(x, fmpq):
                return x
            if isinstance(x, Fraction):
                return fmpq(x.numerator, x.denominator)
            if isinstance(x, str):
                f = Fraction(x.strip())
                return fmpq(f.numerator, f.denominator)
            if isinstance(x, nmod):
                raise TypeError("cannot lift a residue to Q")
            return fmpq(int(x))
        if isinstance(x, nmod):
            if x.modulus() != p:
                raise TypeError("residue from another field")
            return x
        if isinstance(x, (str, Fraction, fmpq)):
            f = Fraction(str(x).strip()) if not isinstance(x, Fraction) else x
            return nmod(f.numerator, p) / nmod(f.denominator, p)
        return nmod(int(x), p)

    def fmt(self, x):
        """Canonical JSON scalar: "p/q" strings over Q, integers in [0, p)."""
        if self.p == 0:
            return str(x)
        return int(x)

    def elements(self):
        if self.p == 0:
            raise ValueError("Q is infinite")
        return [nmod(i, self.p) for i in range(self.p)]

    def __eq__(self, other):
        return isinstance(other, FieldSpec) and other.p == self.p

    def __hash__(self):
        return hash(("field", self.p))

    def __repr__(self):
        return self.tag


QQ = FieldSpec(0)


@lru_cache(maxsize=None)
def GF(p: int) -> FieldSpec:
    return FieldSpec(p)


# ---------------------------------------------------------------- matrices

class Mat:
    """Immutable dense matrix over a FieldSpec."""

    __slots__ = ("field", "rows", "ncols")

    def __init__(self, field: FieldSpec, rows, ncols: int | None = None):
        rows = tuple(tuple(field(x) for x in r) for r in rows)
        if ncols is None:
            ncols = len(rows[0]) if rows else 0
        if any(len(r) != ncols for r in rows):
            raise ValueError("ragged matrix")
        self.field = field
        self.rows = rows
        self.ncols = ncols

    @classmethod
    def zeros(cls, field, m, n):
        return cls(field, [[0] * n for _ in range(m)], n)

    @classmethod
    def identity(cls, field, n):
        return cls(field, [[int(i == j) for j in range(n)] for i in range(n)], n)

    @classmethod
    def from_flint(cls, field, M):
        return cls(field, [list(r) for r in M.tolist()], M.ncols())

    @classmethod
    def from_json(cls, field, data):
        return cls(field, data)

    @property
    def nrows(self):
        return len(self.rows)

    @property
    def shape(self):
        return (len(self.rows), self.ncols)

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def __eq__(self, other):
        return (isinstance(other, Mat) and self.field == other.field
                and self.ncols == other.ncols and self.rows == other.rows)

    def __hash__(self):
        return hash((self.field, self.ncols, self.rows))

    def __repr__(self):
        body = "; ".join(" ".join(str(x) for x in r) for r in self.rows)
        return f"Mat[{self.field}]({body})"

    def to_flint(self):
        return to_flint(self.field, self.rows, self.nrows, self.ncols)

    def to_json(self):
        return [[self.field.fmt(x) for x in r] for r in self.rows]

    @property
    def T(self):
        return Mat(self.field, list(zip(*self.rows)) if self.rows else [], self.nrows)

    def __add__(self, other):
        return Mat(self.field, [[a + b for a, b in zip(r, s)] for r, s in zip(self.rows, other.rows)],
                   self.ncols)

    def __sub__(self, other):
        return Mat(self.field, [[a - b for a, b in zip(r, s)] for r, s in zip(self.rows, other.rows)],
                   self.ncols)

    def __neg__(self):
        return Mat(self.field, [[-a for a in r] for r in self.rows], self.ncols)

    def scale(self, c):
        c = self.field(c)
        return Mat(self.field, [[c * a for a in r] for r in self.rows], self.ncols)

    def __matmul__(self, other):
        if self.ncols != other.nrows:
            raise ValueError("shape mismatch")
        cols = list(zip(*other.rows)) if other.rows else [()] * other.ncols
        z = self.field.zero
        out = []
        for r in self.rows:
            out.append([sum((a * b for a, b in zip(r, c) if a and b), z) for c in cols])
        return Mat(self.field, out, other.ncols)

    def trace(self):
        return sum((self.rows[i][i] for i in range(min(self.shape))), self.field.zero)

    def is_zero(self):
        return all(not x for r in self.rows for x in r)

    def det(self):
        if self.nrows != self.ncols:
            raise ValueError("det of non-square matrix")
        if self.nrows == 0:
            return self.field.one
        return self.field(self.to_flint().det())

    def inverse(self):
        if self.det() == 0:
            raise ZeroDivisionError("singular matrix")
        return Mat.from_flint(self.field, self.to_flint().inv())


def to_flint(field: FieldSpec, rows, m: int, n: int):
    """Dense flint matrix from a row iterable (dense rows or sparse dicts)."""
    M = fmpq_mat(m, n) if field.p == 0 else nmod_mat(m, n, field.p)
    for i, r in enumerate(rows):
        items = r.items() if isinstance(r, dict) else enumerate(r)
        for j, x in items:
            if x:
                M[i, j] = x
    return M


def _rref_flint(field, M):
    """Reduced row echelon form of a flint matrix: (rows as dicts, pivots)."""
    R, rk = M.rref()
    out, piv = [], []
    n = M.ncols()
    for i in range(rk):
        row = {}
        for j in range(n):
            x = R[i, j]
            if x:
                row[j] = field(x) if field.p == 0 else x
        out.append(row)
        piv.append(min(row))
    return out, piv


# ---------------------------------------------------------------- subspaces

class Subspace:
    """A subspace of field^ambient, stored by its reduced row echelon basis.

    The echelon basis is unique, so equality of subspaces is equality of
    ``rows``.  (Viewing the rows as columns gives the reduced column echelon
    form.)
    """

    __slots__ = ("field", "ambient", "rows", "pivots")

    def __init__(self, field, ambient, vectors=(), _canonical=False):
        self.field = field
        self.ambient = ambient
        vectors = [v if isinstance(v, dict) else _densedict(v) for v in vectors]
        if not _canonical:
            vectors = [{k: field(x) for k, x in v.items() if x} for v in vectors]
        if _canonical:
            self.rows = tuple(vectors)
        else:
            self.rows = tuple(echelon(field, vectors, ambient))
        self.pivots = tuple(min(r) for r in self.rows)

    @property
    def dim(self):
        return len(self.rows)

    def basis(self) -> Mat:
        """Basis vectors as the columns of a Mat."""
        cols = [dense(r, self.ambient, self.field) for r in self.rows]
        return Mat(self.field, list(zip(*cols)) if cols else [[] for _ in range(self.ambient)],
                   len(cols))

    def vectors(self):
        return [dict(r) for r in self.rows]

    def __eq__(self, other):
        return (isinstance(other, Subspace) and other.ambient == self.ambient
                and [sorted(r.items()) for r in self.rows] == [sorted(r.items()) for r in other.rows])

    def __hash__(self):
        return hash((self.ambient, tuple(tuple(sorted(r.items())) for r in self.rows)))

    def __repr__(self):
        return f"Subspace(dim={self.dim}, ambient={self.ambient}, {self.field})"

    def contains(self, v) -> bool:
        v = v if isinstance(v, dict) else _densedict(v)
        return not reduce_vec(v, self.rows, self.pivots)

    def __le__(self, other):
        return all(other.contains(r) for r in self.rows)

    def __add__(self, other):
        return Subspace(self.field, self.ambient, list(self.rows) + list(other.rows))

    def intersect(self, other) -> "Subspace":
        # kernel of [A ; -B]^T restricted to the A-coordinates
        a, b = list(self.rows), list(other.rows)
        if not a or not b:
            return Subspace(self.field, self.ambient)
        cols = a + [{k: -x for k, x in r.items()} for r in b]
        M = to_flint(self.field, _transpose(cols, self.ambient), self.ambient, len(cols))
        ker = kernel_flint(self.field, M)
        vecs = []
        for kv in ker:
            w = {}
            for i, c in kv.items():
                if i < len(a):
                    axpy(w, c, a[i])
            vecs.append(w)
        return Subspace(self.field, self.ambient, vecs)

    def coordinates(self, v):
        """Coordinates of v in the echelon basis (v must lie in the span)."""
        v = dict(v)
        coords = []
        for r, p in zip(self.rows, self.pivots):
            c = v.get(p)
            coords.append(c if c is not None else self.field.zero)
            if c:
                axpy(v, -c, r)
        if v:
            raise ValueError("vector not in subspace")
        return coords


def _densedict(v):
    return {i: x for i, x in enumerate(v) if x}


def _transpose(vectors, ambient):
    rows = [dict() for _ in range(ambient)]
    for j, v in enumerate(vectors):
        for i, x in v.items():
            rows[i][j] = x
    return rows


def dense(v: dict, n: int, field):
    out = [field.zero] * n
    for i, x in v.items():
        out[i] = x
    return out


def axpy(y: dict, a, x: dict):
    """y += a*x in place (sparse)."""
    if not a:
        return y
    for k, v in x.items():
        s = y.get(k)
        s = a * v if s is None else s + a * v
        if s:
            y[k] = s
        else:
            y.pop(k, None)
    return y


def reduce_vec(v: dict, rows, pivots):
    """Reduce v against echelon rows (each with a 1 at its pivot)."""
    v = dict(v)
    for r, p in zip(rows, pivots):
        c = v.get(p)
        if c:
            axpy(v, -c, r)
    return v


def echelon(field, vectors, ambient=None):
    """Reduced row echelon basis (list of dicts, sorted by pivot) of a span."""
    vectors = [v for v in vectors if v]
    if not vectors:
        return []
    if ambient is None:
        ambient = 1 + max(max(v) for v in vectors)
    if len(vectors) * ambient <= 400:
        return _echelon_py(vectors)
    M = to_flint(field, vectors, len(vectors), ambient)
    rows, _ = _rref_flint(field, M)
    return rows


def _echelon_py(vectors):
    rows, piv = [], []
    for v in vectors:
        v = reduce_vec(v, rows, piv)
        if not v:
            continue
        p = min(v)
        inv = 1 / v[p]
        v = {k: x * inv for k, x in v.items()}
        for r in rows:
            c = r.get(p)
            if c:
                axpy(r, -c, v)
        rows.append(v)
        piv.append(p)
    order = sorted(range(len(rows)), key=piv.__getitem__)
    return [rows[i] for i in order]


def kernel_flint(field, M):
    """Canonical right kernel basis (free-variable normalized) of a flint matrix."""
    n = M.ncols()
    if M.nrows() == 0:
        return [{j: field.one} for j in range(n)]
    rows, piv = _rref_flint(field, M)
    pset = set(piv)
    ker = []
    for f in range(n):
        if f in pset:
            continue
        v = {f: field.one}
        for r, p in zip(rows, piv):
            x = r.get(f)
            if x:
                v[p] = -x
        ker.append(v)
    return ker


# ---------------------------------------------------------------- operations

def rank(m: Mat) -> int:
    if m.nrows == 0 or m.ncols == 0:
        return 0
    return m.to_flint().rank()


def rref(m: Mat):
    """(reduced echelon Mat, pivot columns)."""
    if m.nrows == 0 or m.ncols == 0:
        return m, []
    rows, piv = _rref_flint(m.field, m.to_flint())
    out = [dense(r, m.ncols, m.field) for r in rows]
    out += [[m.field.zero] * m.ncols for _ in range(m.nrows - len(rows))]
    return Mat(m.field, out, m.ncols), piv


def kernel(m: Mat) -> Subspace:
    if m.nrows == 0:
        return Subspace(m.field, m.ncols, [{j: m.field.one} for j in range(m.ncols)])
    return Subspace(m.field, m.ncols, kernel_flint(m.field, m.to_flint()))


def image(m: Mat) -> Subspace:
    """Column space."""
    cols = [dict() for _ in range(m.ncols)]
    for i, r in enumerate(m.rows):
        for j, x in enumerate(r):
            if x:
                cols[j][i] = x
    return Subspace(m.field, m.nrows, cols)


def solve(m: Mat, b: Mat):
    """Some x with m @ x == b, or None.

    Free variables are set to zero, so the solution is determined by the
    leftmost pivot columns of the augmented echelon form.
    """
    if b.nrows != m.nrows:
        raise ValueError("b.rows must equal m.rows")
    F = m.field
    n, k = m.ncols, b.ncols
    aug = Mat(F, [list(r) + list(s) for r, s in zip(m.rows, b.rows)], n + k)
    if aug.nrows == 0:
        return Mat.zeros(F, n, k)
    rows, piv = _rref_flint(F, aug.to_flint())
    if any(p >= n for p in piv):
        return None
    x = [[F.zero] * k for _ in range(n)]
    for r, p in zip(rows, piv):
        for j in range(k):
            c = r.get(n + j)
            if c:
                x[p][j] = c
    return Mat(F, x, k)


def complement(s: Subspace, within: Subspace) -> Subspace:
    if not s <= within:
        raise ValueError("s is not contained in within")
    return Subspace(s.field, s.ambient, complement_vectors(s.field, s.rows, within.rows))


def complement_vectors(field, sub, within, ambient=None):
    """Greedy: those vectors of ``within`` (in order) independent modulo ``sub``.

    These are the pivot columns, beyond ``sub``, of the echelon form of the
    matrix with columns ``sub + within``.
    """
    sub = [v for v in sub if v]
    within = list(within)
    if not within:
        return []
    if ambient is None:
        ambient = 1 + max((max(v) for v in sub + within if v), default=-1)
    cols = sub + within
    if not ambient:
        return []
    M = to_flint(field, _transpose(cols, ambient), ambient, len(cols))
    _, piv = _rref_flint(field, M)
    k = len(sub)
    return [within[j - k] for j in piv if j >= k]


# ---------------------------------------------------------------- sparse helpers

def rank_of(field, vectors, ncols: int) -> int:
    """Rank of the matrix whose rows are the given sparse vectors."""
    vectors = [v for v in vectors if v]
    if not vectors or not ncols:
        return 0
    if field.p:
        return to_flint(field, vectors, len(vectors), ncols).rank()
    # fraction-free elimination over Z is far faster than fmpq_mat.rank
    M = fmpz_mat(len(vectors), ncols)
    for i, v in enumerate(vectors):
        den = 1
        for x in v.values():
            den = math.lcm(den, int(fmpq(x).q))
        for j, x in v.items():
            x = fmpq(x)
            M[i, j] = int(x.p) * (den // int(x.q))
    return M.rank()


def kernel_of(field, columns, nrows: int):
    """Kernel of the matrix with the given sparse *columns* (list of dicts).

    Returns canonical kernel vectors indexed by column position.
    """
    ncols = len(columns)
    if not ncols:
        return []
    if not nrows or not any(columns):
        return [{j: field.one} for j in range(ncols)]
    M = to_flint(field, _transpose(columns, nrows), nrows, ncols)
    return kernel_flint(field, M)


def solve_vectors(field, columns, nrows, targets):
    """For each target, coefficients c with sum c_j columns[j] == target, or None."""
    ncols = len(columns)
    k = len(targets)
    rows = _transpose(list(columns) + list(targets), nrows)
    if not nrows:
        return [dict() for _ in targets]
    M = to_flint(field, rows, nrows, ncols + k)
    R, piv = _rref_flint(field, M)
    out = []
    for j in range(k):
        sol = {}
        ok = True
        for r, p in zip(R, piv):
            c = r.get(ncols + j)
            if not c:
                continue
            if p >= ncols:
                ok = False
                break
            sol[p] = c
        out.append(sol if ok else None)
    return out

"""Bigraded Hochschild cohomology, graded modules, minimal resolutions and Tor.

Cells are indexed by (N, t): N is the total cohomological degree and t the
internal degree, so a cochain of arity s and internal degree t sits in
HH^{s+t}{t}.  All complexes are split by every grading the algebra carries
(path-length defect and torus weight) before any rank is taken.
"""
from __future__ import annotations

from collections import defaultdict

from .graded_quiver import GradedAlgebra, wadd, wneg
from .scalar_linalg import axpy, complement_vectors, kernel_of, rank_of


class HHTable:
    def __init__(self, dims, window, method=""):
        self.dims = dict(dims)
        self.window = frozenset(window)
        self.method = method

    def __getitem__(self, cell):
        if tuple(cell) not in self.window:
            raise KeyError(f"{cell} outside the computed window")
        return self.dims.get(tuple(cell), 0)

    def items(self):
        return sorted((c, self.dims.get(c, 0)) for c in self.window)

    def to_json(self):
        return [{"bidegree": list(c), "dim": d} for c, d in self.items()]

    def __eq__(self, other):
        return isinstance(other, HHTable) and self.items() == other.items()

    def __repr__(self):
        return f"HHTable({self.method}, {dict(self.items())})"


def window_cells(Nmax, tmin, tmax, Nmin=0):
    return [(N, t) for N in range(Nmin, Nmax + 1) for t in range(tmin, tmax + 1) if N - t >= 0]


# ---------------------------------------------------------------- Koszul side

def koszul_cochains(S: GradedAlgebra, Sd: GradedAlgebra, ell: int):
    """Basis pairs (psi, s) of S^!_ell (x)_{K^e} S, grouped by cell key.

    key = (t, deg(s) - ell, weight); t = cdeg(psi) + cdeg(s).
    """
    cells = defaultdict(list)
    for psi in Sd.by_deg.get(ell, ()):
        for s in range(S.dim):
            if S.src[s] == Sd.tgt[psi] and S.tgt[s] == Sd.src[psi]:
                key = (Sd.cdeg[psi] + S.cdeg[s], S.deg[s] - ell, wadd(Sd.weight[psi], S.weight[s]))
                cells[key].append((psi, s))
    return cells


def koszul_differential(S, Sd, ell, dom, cod, signs=True):
    """Columns of delta: C^ell -> C^{ell+1} restricted to one cell.

    delta(psi (x) s) = sum_i (-1)^{(deg psi + deg s) deg v_i} psi v_i^* (x) v_i s
                       + (-1)^{ell+1} sum_i v_i^* psi (x) s v_i
    with deg the cohomological degree.
    """
    F = S.field
    one = F.one
    cpos = {x: k for k, x in enumerate(cod)}
    cols = []
    ng = len(S.gens)
    sgn2 = one if (ell + 1) % 2 == 0 else -one
    for psi, s in dom:
        col = {}
        t = Sd.cdeg[psi] + S.cdeg[s]
        for i in range(ng):
            v, vs = S.gens[i], Sd.gens[i]
            e = (t * S.cdeg[v]) % 2 if signs else 0
            sg = -one if e else one
            left = Sd.mul(psi, vs) if Sd.src[psi] == Sd.tgt[vs] else {}
            if left:
                vsv = S.mul(v, s) if S.src[v] == S.tgt[s] else {}
                for p2, c1 in left.items():
                    for s2, c2 in vsv.items():
                        k = cpos.get((p2, s2))
                        if k is not None:
                            axpy(col, sg * c1 * c2, {k: one})
            right = Sd.mul(vs, psi) if Sd.src[vs] == Sd.tgt[psi] else {}
            if right:
                sv = S.mul(s, v) if S.src[s] == S.tgt[v] else {}
                for p2, c1 in right.items():
                    for s2, c2 in sv.items():
                        k = cpos.get((p2, s2))
                        if k is not None:
                            axpy(col, sgn2 * c1 * c2, {k: one})
        cols.append(col)
    return cols


def hh_koszul(S: GradedAlgebra, Sd: GradedAlgebra, window, signs=True) -> HHTable:
    """HH^N{t} via the complex S^!_* (x) S with the explicit Koszul differential."""
    window = [tuple(c) for c in window]
    need = max((N - t for N, t in window), default=0) + 1
    if Sd.bound is not None and need > Sd.bound:
        raise ValueError(f"window needs S^! up to degree {need}, truncation is {Sd.bound}")
    F = S.field
    cochains = {}

    def cells(ell):
        if ell < 0:
            return {}
        if ell not in cochains:
            cochains[ell] = koszul_cochains(S, Sd, ell)
        return cochains[ell]

    rank_cache = {}

    def rank(ell, key):
        if (ell, key) not in rank_cache:
            dom = cells(ell).get(key, [])
            cod = cells(ell + 1).get(key, [])
            if not dom or not cod:
                r = 0
            else:
                r = rank_of(F, koszul_differential(S, Sd, ell, dom, cod, signs), len(cod))
            rank_cache[(ell, key)] = r
        return rank_cache[(ell, key)]

    dims = {}
    for N, t in window:
        ell = N - t
        total = 0
        for key, basis in cells(ell).items():
            if key[0] != t:
                continue
            total += len(basis) - rank(ell, key) - (rank(ell - 1, key) if ell > 0 else 0)
        dims[(N, t)] = total
    return HHTable(dims, window, "koszul")


def koszul_d_squared(S, Sd, ell, signs=True) -> bool:
    """Check delta_{ell+1} o delta_ell == 0 on every cell."""
    c0, c1, c2 = (koszul_cochains(S, Sd, e) for e in (ell, ell + 1, ell + 2))
    for key, dom in c0.items():
        mid, cod = c1.get(key, []), c2.get(key, [])
        if not mid or not cod:
            continue
        d1 = koszul_differential(S, Sd, ell, dom, mid, signs)
        d2 = koszul_differential(S, Sd, ell + 1, mid, cod, signs)
        for col in d1:
            out = {}
            for k, c in col.items():
                axpy(out, c, d2[k])
            if out:
                return False
    return True


# ---------------------------------------------------------------- bar side

def _bar_chains(A: GradedAlgebra, s: int):
    """Composable tuples (a1..as) of augmentation-ideal basis elements.

    For s == 0 the 'chains' are the vertices (as one-element tuples (-1-v,)).
    """
    plus = [x for x in range(A.dim) if A.deg[x] > 0]
    if s == 0:
        return [(-1 - v,) for v in range(len(A.vertices))]
    chains = [(x,) for x in plus]
    for _ in range(s - 1):
        chains = [c + (y,) for c in chains for y in plus if A.src[c[-1]] == A.tgt[y]]
    return chains


def _chain_ends(A, c):
    if c[0] < 0:
        v = -1 - c[0]
        return v, v
    return A.tgt[c[0]], A.src[c[-1]]


def bar_cochains(A: GradedAlgebra, s: int, tset=None, cap=None):
    """Basis (chain, b) of normalized Hom_{K-K}(A+^{(x)s}, A), grouped by cell key."""
    cells = defaultdict(list)
    count = 0
    for c in _bar_chains(A, s):
        tg, sr = _chain_ends(A, c)
        if c[0] < 0:
            cd, dg, wt = 0, 0, ()
        else:
            cd = sum(A.cdeg[x] for x in c)
            dg = sum(A.deg[x] for x in c)
            wt = ()
            for x in c:
                wt = wadd(wt, A.weight[x])
        for b in range(A.dim):
            if A.tgt[b] != tg or A.src[b] != sr:
                continue
            t = A.cdeg[b] - cd
            if tset is not None and t not in tset:
                continue
            key = (t, A.deg[b] - dg, wadd(A.weight[b], wneg(wt)))
            cells[key].append((c, b))
            count += 1
            if cap is not None and count > cap:
                raise MemoryError(f"bar cochain space in arity {s} exceeds cap {cap}")
    return cells


def bar_differential(A: GradedAlgebra, s: int, dom, cod):
    """Columns of the Hochschild differential C^s -> C^{s+1} on one cell.

    (df)(a1..a_{s+1}) = (-1)^{|a1||f|} a1 f(a2..) + sum_i (-1)^i f(..a_i a_{i+1}..)
                        + (-1)^{s+1} f(a1..a_s) a_{s+1}
    """
    F = A.field
    one = F.one
    dpos = {x: k for k, x in enumerate(dom)}
    bychain = defaultdict(list)
    for k, (cc, b) in enumerate(dom):
        bychain[cc].append((b, k))
    cols = [dict() for _ in dom]
    for r, (c, b2) in enumerate(cod):
        # first term: f evaluated on c[1:], multiplied by a1 on the left
        a1 = c[0]
        rest = c[1:] if len(c) > 1 else (-1 - A.src[a1],)
        for b, k in bychain.get(rest, ()):
            tf = A.cdeg[b] - _cd(A, rest)
            sg = -one if (A.cdeg[a1] * tf) % 2 else one
            if A.src[a1] != A.tgt[b]:
                continue
            coef = A.mul(a1, b).get(b2)
            if coef:
                axpy(cols[k], sg * coef, {r: one})
        # middle terms
        for i in range(len(c) - 1):
            prod = A.mul(c[i], c[i + 1])
            sg = -one if (i + 1) % 2 else one
            for x, coef in prod.items():
                if A.deg[x] == 0:
                    continue
                k = dpos.get((c[:i] + (x,) + c[i + 2:], b2))
                if k is not None:
                    axpy(cols[k], sg * coef, {r: one})
        # last term
        alast = c[-1]
        head = c[:-1] if len(c) > 1 else (-1 - A.tgt[alast],)
        sg = -one if len(c) % 2 else one
        for b, k in bychain.get(head, ()):
            if A.src[b] != A.tgt[alast]:
                continue
            coef = A.mul(b, alast).get(b2)
            if coef:
                axpy(cols[k], sg * coef, {r: one})
    return cols


def _cd(A, c):
    return 0 if c[0] < 0 else sum(A.cdeg[x] for x in c)


def hh_bar(A: GradedAlgebra, window, cap=200000) -> HHTable:
    """HH^N{t} from the normalized bar complex (cochain arity s = N - t)."""
    window = [tuple(c) for c in window]
    F = A.field
    by_s = defaultdict(set)
    for N, t in window:
        by_s[N - t].add(t)
    cochains = {}

    def cells(s, ts):
        key = (s, frozenset(ts))
        if key not in cochains:
            cochains[key] = bar_cochains(A, s, ts, cap) if s >= 0 else {}
        return cochains[key]

    dims = {}
    for s, ts in by_s.items():
        here = cells(s, ts)
        nxt = cells(s + 1, ts)
        prv = cells(s - 1, ts) if s > 0 else {}
        for t in ts:
            total = 0
            for key, basis in here.items():
                if key[0] != t:
                    continue
                r_out = 0
                if nxt.get(key):
                    r_out = rank_of(F, bar_differential(A, s, basis, nxt[key]), len(nxt[key]))
                r_in = 0
                if prv.get(key):
                    r_in = rank_of(F, bar_differential(A, s - 1, prv[key], basis), len(basis))
                total += len(basis) - r_out - r_in
            dims[(s + t, t)] = total
    return HHTable(dims, window, "bar")


def bar_d_squared(A, s) -> bool:
    c0, c1, c2 = bar_cochains(A, s), bar_cochains(A, s + 1), bar_cochains(A, s + 2)
    for key, dom in c0.items():
        mid, cod = c1.get(key, []), c2.get(key, [])
        if not mid or not cod:
            continue
        d1 = bar_differential(A, s, dom, mid)
        d2 = bar_differential(A, s + 1, mid, cod)
        for col in d1:
            out = {}
            for k, c in col.items():
                axpy(out, c, d2[k])
            if out:
                return False
    return True


def graded_center_dims(A: GradedAlgebra):
    """Dimensions of the graded center per (internal cdeg, deg-defect, weight) -- HH^0 check."""
    F = A.field
    one = F.one
    out = defaultdict(int)
    loops = defaultdict(list)
    for b in range(A.dim):
        if A.src[b] == A.tgt[b]:
            loops[(A.cdeg[b], A.deg[b], A.weight[b])].append(b)
    for key, basis in loops.items():
        # z = sum c_b b with a z = (-1)^{|a||z|} z a for all a
        eqs = []
        t = key[0]
        for a in range(A.dim):
            rows = defaultdict(dict)
            for k, b in enumerate(basis):
                sg = -one if (A.cdeg[a] * t) % 2 else one
                if A.src[a] == A.tgt[b]:
                    for x, c in A.mul(a, b).items():
                        axpy(rows[x], c, {k: one})
                if A.src[b] == A.tgt[a]:
                    for x, c in A.mul(b, a).items():
                        axpy(rows[x], -sg * c, {k: one})
            eqs.extend(r for r in rows.values() if r)
        out[(key[0], 0)] += len(basis) - rank_of(F, eqs, len(basis))
    return dict(out)


# ---------------------------------------------------------------- modules

class GradedModule:
    """A graded module given by a basis and an action function.

    ``side`` is "right", "left" or "bimodule".  Basis element m has internal
    degree ``deg[m]``, weight ``weight[m]`` and vertex ``vertex[m]`` (m = m e_v
    for right modules, m = e_v m for left modules; for bimodules ``vertex`` is
    the pair (left, right)).  ``act_right(m, r)`` and ``act_left(r, m)`` return
    sparse vectors.
    """

    def __init__(self, ring, side, labels, deg, weight, vertex, act_left=None, act_right=None,
                 name=""):
        self.ring = ring
        self.field = ring.field
        self.side = side
        self.labels = list(labels)
        self.deg = list(deg)
        self.weight = [tuple(w) for w in weight]
        self.vertex = list(vertex)
        self.act_left = act_left
        self.act_right = act_right
        self.name = name
        self.by_grade = defaultdict(list)
        for i in range(len(self.labels)):
            self.by_grade[(self.deg[i], self.weight[i])].append(i)

    @property
    def dim(self):
        return len(self.labels)

    def left_vertex(self, m):
        v = self.vertex[m]
        return v[0] if self.side == "bimodule" else v

    def right_vertex(self, m):
        v = self.vertex[m]
        return v[1] if self.side == "bimodule" else v

    def check_actions(self, max_deg=None) -> bool:
        """Associativity and unitality of the action(s) on all basis triples."""
        R = self.ring
        one = self.field.one
        rs = [r for r in range(R.dim) if max_deg is None or R.deg[r] <= max_deg]
        for m in range(self.dim):
            if self.act_right:
                for u in R.units:
                    exp = {m: one} if R.src[u] == self.right_vertex(m) else {}
                    if self.act_right(m, u) != exp:
                        return False
                for r in rs:
                    mr = self.act_right(m, r)
                    for s in rs:
                        if R.src[r] != R.tgt[s] or not R.known(R.deg[r] + R.deg[s]):
                            continue
                        lhs = {}
                        for x, c in mr.items():
                            axpy(lhs, c, self.act_right(x, s))
                        rhs = {}
                        for y, c in R.mul(r, s).items():
                            axpy(rhs, c, self.act_right(m, y))
                        if lhs != rhs:
                            return False
            if self.act_left:
                for u in R.units:
                    exp = {m: one} if R.tgt[u] == self.left_vertex(m) else {}
                    if self.act_left(u, m) != exp:
                        return False
                for r in rs:
                    for s in rs:
                        if R.src[r] != R.tgt[s] or not R.known(R.deg[r] + R.deg[s]):
                            continue
                        sm = self.act_left(s, m)
                        lhs = {}
                        for x, c in sm.items():
                            axpy(lhs, c, self.act_left(r, x))
                        rhs = {}
                        for y, c in R.mul(r, s).items():
                            axpy(rhs, c, self.act_left(y, m))
                        if lhs != rhs:
                            return False
            if self.act_left and self.act_right:
                for r in rs:
                    for s in rs:
                        lhs = {}
                        for x, c in self.act_left(r, m).items():
                            axpy(lhs, c, self.act_right(x, s))
                        rhs = {}
                        for x, c in self.act_right(m, s).items():
                            axpy(rhs, c, self.act_left(r, x))
                        if lhs != rhs:
                            return False
        return True


def trivial_module(R: GradedAlgebra, side="right") -> GradedModule:
    """k = R/R_+, one basis vector per vertex in degree 0."""
    one = R.field.one
    nv = len(R.vertices)
    wz = tuple(0 for _ in R.weight[R.units[0]]) if R.units else ()

    def act_r(m, r):
        return {m: one} if (R.deg[r] == 0 and r == R.units[m]) else {}

    def act_l(r, m):
        return {m: one} if (R.deg[r] == 0 and r == R.units[m]) else {}

    return GradedModule(R, side, [f"k_{v}" for v in R.vertices], [0] * nv, [wz] * nv, list(range(nv)),
                        act_l if side == "left" else None, act_r if side == "right" else None, "k")


def free_module(R: GradedAlgebra, side="left") -> GradedModule:
    """R itself, as a left or right module."""
    def act_l(r, m):
        return R.mul(r, m) if R.src[r] == R.tgt[m] else {}

    def act_r(m, r):
        return R.mul(m, r) if R.src[m] == R.tgt[r] else {}

    vertex = R.tgt if side == "left" else R.src
    return GradedModule(R, side, R.labels, R.deg, R.weight, vertex,
                        act_l if side == "left" else None, act_r if side == "right" else None, "R")


def opposite_module(M: GradedModule, Rop: GradedAlgebra) -> GradedModule:
    """A left R-module is a right R^op-module and vice versa."""
    side = {"left": "right", "right": "left"}[M.side]
    al = (lambda r, m: M.act_right(m, r)) if M.act_right else None
    ar = (lambda m, r: M.act_left(r, m)) if M.act_left else None
    return GradedModule(Rop, side, M.labels, M.deg, M.weight, M.vertex, al, ar, M.name + "^op")


# ---------------------------------------------------------------- resolutions

class FreeResolution:
    """Minimal graded free resolution of a right module, degreewise.

    ``gens[i]`` is a list of (deg, weight, vertex); ``diff[i][g]`` is the image of
    generator g of F_i, as a sparse vector keyed by (generator of F_{i-1},
    ring basis element), or by module basis element for i == 0.
    """

    def __init__(self, module, H, D):
        self.module = module
        self.ring = module.ring
        self.H = H
        self.D = D
        self.gens = []
        self.diff = []
        self.minimal = True

    def betti(self):
        out = defaultdict(int)
        for i, gs in enumerate(self.gens):
            for d, _, _ in gs:
                out[(i, d)] += 1
        return dict(out)

    def betti_numbers(self):
        return [len(g) for g in self.gens]

    def to_json(self):
        return [{"bidegree": [i, d], "dim": c} for (i, d), c in sorted(self.betti().items())]


def _free_basis(R, gens, deg, wt):
    """Basis pairs (g, r) of a free right module in grade (deg, wt)."""
    out = []
    for gi, (gd, gw, gv) in enumerate(gens):
        if gd > deg:
            continue
        for r in R.by_deg.get(deg - gd, ()):
            if R.tgt[r] == gv and wadd(gw, R.weight[r]) == wt:
                out.append((gi, r))
    return out


def _grades(R, gens_or_module, D, module=None):
    """All (deg, weight) grades up to D reachable as gen grade + ring grade."""
    out = set()
    if module is not None:
        for m in range(module.dim):
            out.add((module.deg[m], module.weight[m]))
        base = [(module.deg[m], module.weight[m]) for m in range(module.dim)]
    else:
        base = [(d, w) for d, w, _ in gens_or_module]
    rgr = {(R.deg[r], R.weight[r]) for r in range(R.dim)}
    for d, w in base:
        for rd, rw in rgr:
            if d + rd <= D:
                out.add((d + rd, wadd(w, rw)))
    return out


def minimal_free_resolution(M: GradedModule, H: int, D: int) -> FreeResolution:
    """Right module M over M.ring, homological degrees <= H, internal degrees <= D."""
    if M.side not in ("right", "bimodule") or M.act_right is None:
        raise ValueError("need a right module")
    R = M.ring
    F = R.field
    one = F.one
    if R.bound is not None and D - min(M.deg) > R.bound:
        raise ValueError("ring truncation too small for D")
    res = FreeResolution(M, H, D)

    # Z[(deg, wt)] : kernel vectors of the previous level in that grade
    # level 0: the "kernel" is all of M (generators cover M)
    Z = {}
    for m in range(M.dim):
        if M.deg[m] <= D:
            Z.setdefault((M.deg[m], M.weight[m]), []).append({m: one})
    for i in range(H + 1):
        gens, diffs = [], []
        res.gens.append(gens)
        res.diff.append(diffs)
        for grade in sorted(Z, key=lambda g: (g[0], g[1])):
            zvecs = Z[grade]
            if not zvecs:
                continue
            d, wt = grade
            # image of the generators already chosen at lower degree
            imgs = []
            for gi, (gd, gw, gv) in enumerate(gens):
                if gd >= d:
                    continue
                for r in R.by_deg.get(d - gd, ()):
                    if R.tgt[r] == gv and wadd(gw, R.weight[r]) == wt:
                        v = image_of(res, i, gi, r, M, R)
                        if v:
                            imgs.append(v)
            keys = sorted({k for v in zvecs + imgs for k in v}, key=repr)
            kpos = {k: j for j, k in enumerate(keys)}
            loc = lambda v: {kpos[k]: c for k, c in v.items()}
            new = complement_vectors(F, [loc(v) for v in imgs], [loc(v) for v in zvecs], len(keys))
            for v in new:
                back = {keys[j]: c for j, c in v.items()}
                vert = _vertex_of(M, R, i, back)
                gens.append((d, wt, vert))
                diffs.append(back)
        if i == H:
            break
        # kernel of d_i : F_i -> F_{i-1}, grade by grade
        Znew = {}
        for grade in sorted(_grades(R, gens, D)):
            d, wt = grade
            basis = _free_basis(R, gens, d, wt)
            if not basis:
                continue
            cols = [image_of(res, i, gi, r, M, R) for gi, r in basis]
            keys = sorted({k for v in cols for k in v}, key=repr)
            kpos = {k: j for j, k in enumerate(keys)}
            ker = kernel_of(F, [{kpos[k]: c for k, c in v.items()} for v in cols], len(keys))
            if ker:
                Znew[grade] = [{basis[j]: c for j, c in v.items()} for v in ker]
        Z = Znew
    return res


def _mod_act(M, vec, r):
    out = {}
    for m, c in vec.items():
        if M.right_vertex(m) != M.ring.tgt[r]:
            continue
        axpy(out, c, M.act_right(m, r))
    return out


def image_of(res, level, gi, r, M, R):
    """d(g r) = d(g) r for generator gi of F_level."""
    one = R.field.one
    if level == 0:
        return _mod_act(M, res.diff[0][gi], r)
    out = {}
    for (g2, r2), c in res.diff[level][gi].items():
        if R.src[r2] != R.tgt[r]:
            continue
        for r3, c2 in R.mul(r2, r).items():
            axpy(out, c * c2, {(g2, r3): one})
    return out


def _vertex_of(M, R, level, vec):
    k = next(iter(vec))
    if level == 0:
        return M.right_vertex(k)
    g, r = k
    return R.src[r]


def check_resolution_minimal(res: FreeResolution) -> bool:
    R = res.ring
    for i in range(1, len(res.diff)):
        for v in res.diff[i]:
            if any(R.deg[r] == 0 for (_, r) in v):
                return False
    return True


def graded_tor(M: GradedModule, N: GradedModule, window, res: FreeResolution | None = None):
    """Tor^R_i(M, N)_j for (i, j) in window; M a right module, N a left module.

    The resolution of M is computed up to homological degree max(i)+1.
    Returns a dict (i, j) -> dim.
    """
    R = M.ring
    F = R.field
    one = F.one
    window = [tuple(c) for c in window]
    H = max(i for i, _ in window) + 1
    jmax = max(j for _, j in window)
    if res is None:
        D = jmax - min(N.deg) if N.dim else jmax
        res = minimal_free_resolution(M, H, max(D, H))
    if len(res.gens) < H + 1:
        raise ValueError("resolution too short for the window")

    ngrades = defaultdict(list)
    for f in range(N.dim):
        ngrades[N.deg[f]].append(f)

    def chains(i, j):
        """Basis g (x) f of (F_i (x) N) in internal degree j, grouped by weight."""
        cells = defaultdict(list)
        for gi, (gd, gw, gv) in enumerate(res.gens[i]):
            for f in ngrades.get(j - gd, ()):
                if N.left_vertex(f) == gv:
                    cells[wadd(gw, N.weight[f])].append((gi, f))
        return cells

    def dmat(i, dom, cod):
        cpos = {x: k for k, x in enumerate(cod)}
        cols = []
        for gi, f in dom:
            col = {}
            for (g2, r2), c in res.diff[i][gi].items():
                for f2, c2 in N.act_left(r2, f).items():
                    k = cpos.get((g2, f2))
                    if k is not None:
                        axpy(col, c * c2, {k: one})
            cols.append(col)
        return cols

    cache = {}

    def term(i, j):
        if (i, j) not in cache:
            cache[(i, j)] = chains(i, j) if 0 <= i < len(res.gens) else {}
        return cache[(i, j)]

    out = {}
    for i, j in window:
        total = 0
        for wt, basis in term(i, j).items():
            r_out = 0
            if i > 0:
                cod = term(i - 1, j).get(wt, [])
                if cod:
                    r_out = rank_of(F, dmat(i, basis, cod), len(cod))
            r_in = 0
            dom = term(i + 1, j).get(wt, [])
            if dom:
                r_in = rank_of(F, dmat(i + 1, dom, basis), len(basis))
            total += len(basis) - r_out - r_in
        out[(i, j)] = total
    return out


def twisted_dual(R: GradedAlgebra, phi=None, name="R*") -> GradedModule:
    """Restricted dual of the bimodule 1_R_phi (left action plain, right action through phi).

    Basis f_y dual to the basis y of R, in degree -deg(y).  Actions:
    (r.f)(x) = f(x phi(r)) and (f.r)(x) = f(r x).  ``phi`` maps a basis index to
    a sparse vector (None means the identity).
    """
    F = R.field
    one = F.one
    D = R.bound if R.bound is not None else R.top
    phi = phi or (lambda r: {r: one})
    left_cache, right_cache = {}, {}

    def _table(cache, r, prod):
        if r not in cache:
            tab = defaultdict(list)
            for x in range(R.dim):
                if R.deg[x] + R.deg[r] > D:
                    continue
                for y, c in prod(x, r).items():
                    tab[y].append((x, c))
            cache[r] = tab
        return cache[r]

    def act_l(r, f):
        tab = _table(left_cache, r, lambda x, r: R.mul_vec({x: one}, phi(r)))
        return {x: c for x, c in tab.get(f, ())}

    def act_r(f, r):
        tab = _table(right_cache, r, lambda x, r: R.mul(r, x) if R.src[r] == R.tgt[x] else {})
        return {x: c for x, c in tab.get(f, ())}

    return GradedModule(R, "bimodule", [f"{l}^" for l in R.labels], [-d for d in R.deg],
                        [wneg(w) for w in R.weight], list(zip(R.src, R.tgt)), act_l, act_r, name)


def left_part(M: GradedModule) -> GradedModule:
    vert = [M.left_vertex(m) for m in range(M.dim)]
    return GradedModule(M.ring, "left", M.labels, M.deg, M.weight, vert, M.act_left, None, M.name)


def right_part(M: GradedModule) -> GradedModule:
    vert = [M.right_vertex(m) for m in range(M.dim)]
    return GradedModule(M.ring, "right", M.labels, M.deg, M.weight, vert, None, M.act_right, M.name)


def tor_with_twisted_dual(R: GradedAlgebra, phi, window, mirrored=False, D=None):
    """Tor^R(k, R*_phi) or, mirrored, Tor^R(R*_phi, k), over a truncated R.

    The right-module version is computed as Tor over R^op.  ``D`` caps the
    internal degree of the resolution of k (generators of a linear resolution
    sit in degree i, so D >= max i + 1 suffices for Koszul R).
    """
    M = twisted_dual(R, phi)
    H = max(i for i, _ in window) + 1
    D = D if D is not None else H + 1
    if not mirrored:
        k = trivial_module(R, "right")
        return graded_tor(k, left_part(M), window, minimal_free_resolution(k, H, D))
    from .graded_quiver import opposite
    Rop = opposite(R)
    k = trivial_module(Rop, "right")
    N = opposite_module(right_part(M), Rop)
    return graded_tor(k, N, window, minimal_free_resolution(k, H, D))

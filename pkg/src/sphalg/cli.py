"""Command-line driver: verification suites, golden fixtures and dumps.

    python -m sphalg verify pipeline --n 2 --g diag:1,2 --field Q --D 10 --arity 4
    python -m sphalg fixture hh_f2 --check
    python -m sphalg dump S --n 3 --g identity

Exit status: 0 when every check passes, 1 on a failed check (or fixture
mismatch), 2 on a configuration error.
"""
from __future__ import annotations

import argparse
import hashlib
import itertools
import json
import random
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from .scalar_linalg import QQ, FieldSpec, GF, Mat
from .graded_quiver import (GMatrix, build_E, build_S, check_koszul, conjugation_on_extension,
                            derivation_space, E_presentation, generation_check, koszul_failure_presentation,
                            polynomial_extension,
                            opposite, quadratic_dual, truncated_algebra)
from . import hochschild as hh
from . import filtered_rees as fr
from . import cusp_order as co

SCHEMA = "sphalg-report/1"
SUITES = ("algebra", "hochschild", "derivations", "tor", "rees", "cusp", "pipeline")
FIXTURE_DIR = Path(__file__).resolve().parents[2] / "tests" / "fixtures"


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    field: FieldSpec = QQ
    n: int = 2
    g_spec: str = "diag"
    g: GMatrix | None = None
    D: int = 6
    arity: int = 4
    seed: int = 0
    suite: str = "all"
    out: str | None = None

    def inputs(self):
        return {"field": self.field.tag, "n": self.n, "g": self.g.to_json() if self.g else None,
                "D": self.D, "arity": self.arity, "seed": self.seed}


def parse_g(spec: str, n: int, F: FieldSpec, seed: int = 0) -> GMatrix:
    """identity | diag | diag:1,2,.. | companion | random | explicit:1,2;3,4 | 1,2;3,4"""
    spec = str(spec).strip()
    try:
        if spec == "identity":
            return GMatrix.identity(n, F)
        if spec == "diag":
            return GMatrix.diag(list(range(1, n + 1)), F)
        if spec.startswith("diag:"):
            entries = [F(x) for x in spec[5:].split(",")]
            if len(entries) != n:
                raise ConfigError(f"diag needs {n} entries")
            return GMatrix.diag(entries, F)
        if spec == "companion":
            return GMatrix.companion(n, F)
        if spec == "random":
            # 64-bit seed, entrywise draw, rejection-sampled to invertibility
            return GMatrix.random(n, F, random.Random(seed & (2 ** 64 - 1)))
        body = spec[9:] if spec.startswith("explicit:") else spec
        rows = [[F(x) for x in r.split(",")] for r in body.split(";")]
    except (ValueError, ZeroDivisionError) as e:
        raise ConfigError(f"bad g {spec!r}: {e}") from e
    if len(rows) != n or any(len(r) != n for r in rows):
        raise ConfigError(f"g must be {n}x{n}")
    return GMatrix.of(F, rows)


def load_config_file(path) -> dict:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"no such config file {path}")
    if p.suffix == ".toml":
        import tomli
        with p.open("rb") as fh:
            return tomli.load(fh)
    return json.loads(p.read_text())


def make_config(args) -> RunConfig:
    data = load_config_file(args.config) if getattr(args, "config", None) else {}
    for key in ("n", "g", "field", "D", "arity", "seed", "out", "suite"):
        v = getattr(args, key, None)
        if v is not None:
            data[key] = v
    try:
        F = FieldSpec.parse(data.get("field", "Q"))
    except ValueError as e:
        raise ConfigError(str(e)) from e
    cfg = RunConfig(field=F, n=int(data.get("n", 2)), g_spec=str(data.get("g", "diag")),
                    D=int(data.get("D", 6)), arity=int(data.get("arity", 4)),
                    seed=int(data.get("seed", 0)), suite=str(data.get("suite", "all")),
                    out=data.get("out"))
    if cfg.n < 2:
        raise ConfigError("n must be at least 2")
    if cfg.suite not in SUITES + ("all",):
        raise ConfigError(f"unknown suite {cfg.suite!r}")
    cfg.g = parse_g(cfg.g_spec, cfg.n, F, cfg.seed)
    needs_invertible = cfg.suite in ("tor", "rees", "cusp", "pipeline", "all")
    if needs_invertible and not cfg.g.invertible:
        raise ConfigError("this suite needs an invertible g")
    return cfg


# ---------------------------------------------------------------- records

def _digest(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()[:16]


class Recorder:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.records = []

    def check(self, check_id, anchor, fn, **inputs):
        """Run fn() -> (ok, payload) and store a record."""
        t0 = time.time()
        allin = dict(self.cfg.inputs(), **inputs)
        try:
            ok, payload = fn()
        except (ArithmeticError, ValueError) as e:
            ok, payload = False, {"error": f"{type(e).__name__}: {e}"}
        self.records.append({"check": check_id, "anchor": anchor, "inputs": allin,
                             "inputs_digest": _digest(allin), "outcome": "pass" if ok else "fail",
                             "payload": _jsonable(payload), "wall_time": round(time.time() - t0, 3)})
        return ok


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (bool, int, float, str)) or x is None:
        return x
    if isinstance(x, Mat):
        return x.to_json()
    return str(x)


def _cells(table):
    return {f"{i},{j}": d for (i, j), d in sorted(table.items()) if d}


# ---------------------------------------------------------------- suites

def suite_algebra(rec: Recorder):
    cfg = rec.cfg
    n, g, F, D = cfg.n, cfg.g, cfg.field, cfg.D
    S = build_S(n, g, F)
    rec.check("algebra.S.dimension", "S is a (2n+4)-dimensional algebra",
              lambda: (S.dim == 2 * n + 4 and S.check_associative(), {"dim": S.dim}))
    rec.check("algebra.S.koszul", "S is Koszul",
              lambda: _koszul(S.presentation, D))
    if g.invertible:
        # E^! grows exponentially once n >= 3; keep the certificate affordable
        DE = D if n == 2 else min(D, 5 if g.diagonal else 4)
        rec.check("algebra.E.koszul", "E(V,g) is Koszul for invertible g",
                  lambda: _koszul(E_presentation(n, g, F), DE))
    E = build_E(n, g, F, D)
    rec.check("algebra.E.generated", "E(V,g) is generated in degrees 1 and 2",
              lambda: (generation_check(E, {1, 2}, D), {"degree_one_only": generation_check(E, {1}, D),
                                                        "dims": E.hilbert()}))


def _koszul(p, D):
    ok, where = check_koszul(p, D)
    return ok, {"certified_up_to": D, "first_failure": where}


def hh_window():
    """Cells (m, j) with j < -m, m <= 3, plus HH^1{-1}."""
    return [(m, -m - 1) for m in range(4)] + [(m, -m - 2) for m in range(3)] + [(1, -1)]


def hh_hypotheses(n, g: GMatrix):
    scalar = co.is_scalar(g)
    return n >= 3 or not scalar or g.field.p != 2


def suite_hochschild(rec: Recorder):
    cfg = rec.cfg
    n, g, F = cfg.n, cfg.g, cfg.field
    S = build_S(n, g, F)
    Sd = truncated_algebra(quadratic_dual(S.presentation), 8)
    table = hh.hh_koszul(S, Sd, hh_window())
    below = {c: d for c, d in table.items() if c[1] < -c[0]}
    rec.check("hochschild.vanishing_below_diagonal", "HH^m(S){<-m} = 0",
              lambda: (not any(below.values()), {"cells": _cells(below)}))
    v = table[(1, -1)]
    if hh_hypotheses(n, g):
        rec.check("hochschild.HH1_minus1", "HH^1(S){-1} = 0",
                  lambda: (v == 0, {"HH1{-1}": v}))
    else:
        rec.check("hochschild.HH1_minus1_char2", "HH^1(S){-1} outside the vanishing hypotheses",
                  lambda: (True, {"HH1{-1}": v, "expected_nonzero": True}))
    if n == 2:
        win = hh.window_cells(2, -3, 0)
        rec.check("hochschild.koszul_vs_bar", "Koszul and bar complexes compute the same HH",
                  lambda: _agree(hh.hh_koszul(S, Sd, win), hh.hh_bar(S, win)))


def _agree(a, b):
    return a == b, {"koszul": _cells(dict(a.items())), "bar": _cells(dict(b.items()))}


def derivation_hypotheses(n, g: GMatrix):
    """(n >= 3, g invertible) or (tr g invertible and some invertible h1 with tr(g h1) = 0)."""
    if n >= 3:
        return g.invertible
    if not g.trace():
        return False
    if g.invertible:
        return True  # h1 = g^-1 [[0, 1], [-1, 0]]
    F = g.field
    for a, b, c, d in itertools.product(range(-2, 3), repeat=4):
        h = Mat(F, [[a, b], [c, d]])
        if h.det() and not (g.mat @ h).trace():
            return True
    return False


def suite_derivations(rec: Recorder):
    cfg = rec.cfg
    n, g, F, D = cfg.n, cfg.g, cfg.field, max(cfg.D, 4)
    E = build_E(n, g, F, D)
    dim, _ = derivation_space(E, -1, D)
    if derivation_hypotheses(n, g):
        rec.check("derivations.vanish", "derivations of negative degree vanish",
                  lambda: (dim == 0, {"dim": dim}))
    elif F.p == 2 and co.is_scalar(g) and n == 2:
        rec.check("derivations.char2_example", "nonzero derivations of E in characteristic 2",
                  lambda: (dim > 0, {"dim": dim, "expected_nonzero": True}))
    else:
        rec.check("derivations.recorded", "derivations of negative degree (no hypothesis)",
                  lambda: (True, {"dim": dim}))


def suite_tor(rec: Recorder):
    cfg = rec.cfg
    n, g, F = cfg.n, cfg.g, cfg.field
    E = build_E(n, g, F, 8)
    R = polynomial_extension(E, 8)
    phi = conjugation_on_extension(E, R, g.mat)  # Ad(g^-1), t -> t
    window = [(i, j) for i in range(4) for j in range(-4, 5)]
    for mirrored in (False, True):
        def run(mirrored=mirrored):
            tor = hh.tor_with_twisted_dual(R, phi, window, mirrored=mirrored)
            nz = {c: d for c, d in tor.items() if d}
            return nz == {(2, 0): 1}, {"nonzero": _cells(nz)}
        name = "tor.dual_k" if mirrored else "tor.k_dual"
        rec.check(name, "Tor of k with the twisted dual is concentrated in bidegree (2, 0)", run,
                  mirrored=mirrored)


def suite_rees(rec: Recorder):
    cfg = rec.cfg
    n, g, F, D = cfg.n, cfg.g, cfg.field, min(cfg.D, 5)

    def sections():
        Sec = co.sections_ring(n, g, D)
        ref = opposite(polynomial_extension(build_E(n, g, F, D), D))
        same = all(Sec.table.get(k, {}) == ref.table.get(k, {}) for k in set(Sec.table) | set(ref.table))
        h0 = [co.twist_cohomology(m, n, g, D + 2)[0] for m in range(D + 1)]
        ok = same and h0 == [1] + [m * n * n for m in range(1, D + 1)]
        return ok, {"h0": h0, "structure_constants_equal": same}
    rec.check("rees.sections_ring", "graded sections of the order form E(V,g)^op[t]", sections)

    def zero_data():
        T = fr.E_op_t(n, g, D)
        Rb, report = fr.build_rees_from_products(g, fr.ProductData.zero(g), D)
        iso = fr.isomorphic_via_generators(Rb.algebra, T.algebra, rees_genmap(T, n), D)
        return iso and report["flat"], dict(report, isomorphic=iso)
    rec.check("rees.zero_products", "zero higher products give back E(V,g)^op[t]", zero_data)

    def automorphism():
        E = build_E(n, g, F, D)
        A = fr.FilteredAlgebra.trivially_filtered(opposite(E), E)
        sym = fr.ad_symbol(A, g.inverse())
        try:
            phi = fr.solve_filtered_automorphism(A, sym)
        except ValueError:
            res = fr.solve_filtered_automorphism(A, sym, force=True)
            return res["linear_kernel_dim"] > 0, {"outside_hypotheses": True,
                                                  "linear_kernel_dim": res["linear_kernel_dim"],
                                                  "solutions": res["count"]}
        return phi is not None and phi.check(), {"unique": phi is not None}
    rec.check("rees.filtered_automorphism", "a filtered automorphism with symbol Ad(g^-1) is unique",
              automorphism)


def rees_genmap(T, n):
    one = T.algebra.field.one
    pos = {bm: i for i, bm in enumerate(T.algebra.basis_pairs)}
    k = n * n - 1
    genmap = {a: {pos[(1 + a, 1)]: one} for a in range(k)}
    genmap[k] = {T.t: one}
    return genmap


def suite_cusp(rec: Recorder):
    cfg = rec.cfg
    n, g, F = cfg.n, cfg.g, cfg.field
    D = max(cfg.D, 8)

    def numerology():
        a = [co.twist_cohomology(m, n, g, D) for m in range(-1, 6)]
        b = [co.twist_cohomology(m, n, g, D + 2) for m in range(-1, 6)]
        h0 = [x[0] for x in a]
        h1 = [x[1] for x in a]
        ok = (a == b and h0 == [0, 1] + [m * n * n for m in range(1, 6)]
              and h1[1] == 1 and h1[2] == 0)
        return ok, {"m": list(range(-1, 6)), "h0": h0, "h1": h1, "stable": a == b}
    rec.check("cusp.cohomology", "h0(A(m)) = m n^2, h0(A) = h1(A) = 1, h1(A(1)) = 0", numerology)

    def serre():
        ranks = {m: co.serre_pairing_rank(m, n, g, 12) for m in range(-4, 5)}
        ok = all(r == a == b for r, a, b in ranks.values())
        return ok, {str(m): list(v) for m, v in ranks.items()}
    rec.check("cusp.serre", "the Serre pairing is perfect", serre)

    def nakayama():
        res = co.nakayama(n, g, F, 4)
        ok = res["multiplicative"] and res["identity"] == res["scalar_g"] and res["symbol_is_Ad_g"]
        mats = {str(m): M.to_json() for m, M in res.pop("matrices").items() if m <= 1}
        return ok, dict(res, kappa_levels_0_1=mats)
    rec.check("cusp.nakayama", "kappa is trivial exactly when g is scalar", nakayama)


def default_h0s(n, F):
    """Two trace-zero invertible matrices."""
    if n == 2:
        return [Mat(F, [[0, 1], [-1, 0]]), Mat(F, [[1, 0], [0, -1]])]
    a = Mat(F, [[1 if j == (i + 1) % n else 0 for j in range(n)] for i in range(n)])
    b = Mat(F, [[(1 if i < n - 1 else -(n - 1)) if i == j else 0 for j in range(n)] for i in range(n)])
    return [a, b] if b.det() else [a]


def suite_pipeline(rec: Recorder):
    cfg = rec.cfg
    n, g, F = cfg.n, cfg.g, cfg.field
    D = max(cfg.D, 8)
    h0s = default_h0s(n, F)
    values = []
    for k, h0 in enumerate(h0s):
        def run(h0=h0):
            A, rep = co.minimal_model_pipeline(n, g, h0, N=2, arity=cfg.arity, D=D, product="tw")
            m3 = rep["m3_gamma_beta_alpha"]
            values.append(m3)
            ok = (rep["stasheff"] and rep["cyclic"] and rep["units"] and rep["m2_beta_alpha_zero"]
                  and m3 is not None and m3 in (F.one, -F.one))
            rep.pop("cohomology")
            rep.pop("timings")
            return ok, dict(rep, m3_gamma_beta_alpha=None if m3 is None else F.fmt(m3))
        rec.check(f"pipeline.h0_{k}", "the minimal model is cyclic with m3(gamma, beta, alpha) = +-1",
                  run, h0=h0.to_json())
    if len(h0s) > 1:
        rec.check("pipeline.h0_independence", "m3(gamma, beta, alpha) does not depend on h0",
                  lambda: (len(set(map(str, values))) == 1, {"values": [str(v) for v in values]}))


SUITE_FUNCS = {"algebra": suite_algebra, "hochschild": suite_hochschild,
               "derivations": suite_derivations, "tor": suite_tor, "rees": suite_rees,
               "cusp": suite_cusp, "pipeline": suite_pipeline}


def cmd_verify(cfg: RunConfig) -> dict:
    rec = Recorder(cfg)
    for name in (SUITES if cfg.suite == "all" else (cfg.suite,)):
        SUITE_FUNCS[name](rec)
    records = sorted(rec.records, key=lambda r: r["check"])
    return {"schema": SCHEMA, "suite": cfg.suite, "config": cfg.inputs(),
            "passed": all(r["outcome"] == "pass" for r in records), "records": records}


# ---------------------------------------------------------------- fixtures

def fixture_koszul_failure():
    p = koszul_failure_presentation()
    ok, where = check_koszul(p, 5)
    return {"presentation": p.to_json(), "koszul_up_to_5": ok, "first_failure": list(where) if where else None,
            "hilbert": truncated_algebra(p, 5).hilbert()}


def fixture_hh_f2():
    F2 = GF(2)
    S = build_S(2, GMatrix.identity(2, F2), F2)
    Sd = truncated_algebra(quadratic_dual(S.presentation), 8)
    win = hh.window_cells(2, -3, 0)
    return {"koszul": hh.hh_koszul(S, Sd, win).to_json(), "bar": hh.hh_bar(S, win).to_json()}


def fixture_generation():
    F2 = GF(2)
    cases = [("E(Q^3,I)", 3, GMatrix.identity(3), 5),
             ("E(Q^2,[[0,1],[-1,0]])", 2, GMatrix.of(QQ, [[0, 1], [-1, 0]]), 4),
             ("E(F2^2,I)", 2, GMatrix.identity(2, F2), 4),
             ("E(Q^2,diag(1,2))", 2, GMatrix.diag([1, 2]), 5)]
    out = {}
    for name, n, g, D in cases:
        E = build_E(n, g, g.field, D)
        out[name] = {"degree_1": generation_check(E, {1}, D), "degrees_1_2": generation_check(E, {1, 2}, D),
                     "D": D, "dims": E.hilbert()}
    return out


def fixture_derivations_f2():
    F2 = GF(2)
    E = build_E(2, GMatrix.identity(2, F2), F2, 5)
    return {str(m): derivation_space(E, m, 5)[0] for m in (-1, -2, -3)}


def fixture_filtered_aut_f2():
    F2 = GF(2)
    g = GMatrix.identity(2, F2)
    E = build_E(2, g, F2, 4)
    A = fr.FilteredAlgebra.trivially_filtered(opposite(E), E)
    res = fr.solve_filtered_automorphism(A, fr.ad_symbol(A, g.inverse()), force=True)
    return {"linear_kernel_dim": res["linear_kernel_dim"], "solutions": res["count"]}


def fixture_betti():
    out = {}
    for n, F, DD in ((2, QQ, 6), (3, GF(101), 5)):
        g = GMatrix.diag(list(range(1, n + 1)), F)
        R = polynomial_extension(build_E(n, g, F, 8), 8)
        res = hh.minimal_free_resolution(hh.trivial_module(R, "right"), 4, DD)
        out[f"n={n},{F.tag}"] = _cells(res.betti())
    return out


def fixture_kappa():
    out = {}
    for name, g in (("I", GMatrix.identity(2)), ("diag(1,2)", GMatrix.diag([1, 2]))):
        res = co.nakayama(2, g, QQ, 3)
        out[name] = {str(m): M.to_json() for m, M in res["matrices"].items()}
    return out


def fixture_m3():
    out = {}
    g = GMatrix.diag([1, 2])
    for h0 in default_h0s(2, QQ):
        _, rep = co.minimal_model_pipeline(2, g, h0, N=2, arity=3, D=10, product="tw")
        out[json.dumps(h0.to_json())] = QQ.fmt(rep["m3_gamma_beta_alpha"])
    return out


FIXTURES = {"koszul_failure": fixture_koszul_failure, "hh_f2": fixture_hh_f2,
            "generation": fixture_generation, "derivations_f2": fixture_derivations_f2,
            "filtered_aut_f2": fixture_filtered_aut_f2, "betti": fixture_betti,
            "kappa": fixture_kappa, "m3": fixture_m3}


def canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1) + "\n"


def _diff(a, b, path=""):
    if isinstance(a, dict) and isinstance(b, dict):
        out = []
        for k in sorted(set(a) | set(b)):
            out += _diff(a.get(k), b.get(k), f"{path}/{k}")
        return out
    return [] if a == b else [f"{path or '/'}: expected {json.dumps(a)} got {json.dumps(b)}"]


def cmd_fixture(name, directory=None, check=False):
    """Regenerate a fixture, or compare with the stored one.  Returns (status, messages)."""
    if name not in FIXTURES:
        raise ConfigError(f"unknown fixture {name!r}; choose from {sorted(FIXTURES)}")
    directory = Path(directory) if directory else FIXTURE_DIR
    path = directory / f"{name}.json"
    data = json.loads(canonical(FIXTURES[name]()))
    if check:
        if not path.exists():
            return 1, [f"missing fixture {path}"]
        diffs = _diff(json.loads(path.read_text()), data)
        return (1, diffs) if diffs else (0, [f"{name}: ok"])
    directory.mkdir(parents=True, exist_ok=True)
    path.write_text(canonical(data))
    return 0, [f"wrote {path}"]


# ---------------------------------------------------------------- dump

def cmd_dump(what, cfg: RunConfig):
    n, g, F, D = cfg.n, cfg.g, cfg.field, cfg.D
    if what == "S":
        return build_S(n, g, F).to_json()
    if what == "S_dual":
        return truncated_algebra(quadratic_dual(build_S(n, g, F).presentation), D).to_json()
    if what == "E":
        return build_E(n, g, F, D).to_json()
    if what == "presentation":
        return build_S(n, g, F).presentation.to_json()
    if what == "ainf":
        A, rep = co.minimal_model_pipeline(n, g, default_h0s(n, F)[0], N=2, arity=min(cfg.arity, 3),
                                           D=max(D, 8), product="tw")
        return {"labels": A.labels, "cdeg": A.cdeg, "src": A.src, "tgt": A.tgt,
                "products": A.to_json()}
    raise ConfigError(f"unknown object {what!r}")


# ---------------------------------------------------------------- entry point

def build_parser():
    ap = argparse.ArgumentParser(prog="sphalg", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="TOML or JSON file with the same keys as the flags")
        p.add_argument("--n", type=int)
        p.add_argument("--g")
        p.add_argument("--field")
        p.add_argument("--D", type=int)
        p.add_argument("--arity", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--out")

    v = sub.add_parser("verify", help="run verification suites")
    v.add_argument("suite_pos", nargs="?", choices=SUITES + ("all",))
    v.add_argument("--suite", choices=SUITES + ("all",))
    common(v)
    f = sub.add_parser("fixture", help="regenerate or compare golden fixtures")
    f.add_argument("name", choices=sorted(FIXTURES) + ["all"])
    f.add_argument("--dir")
    f.add_argument("--check", action="store_true")
    d = sub.add_parser("dump", help="serialize an algebra or structure")
    d.add_argument("what", choices=["S", "S_dual", "E", "presentation", "ainf"])
    common(d)
    return ap


def _emit(obj, out):
    text = canonical(obj)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code else 0
    try:
        if args.command == "verify":
            if args.suite is None:
                args.suite = args.suite_pos
            cfg = make_config(args)
            report = cmd_verify(cfg)
            _emit(report, cfg.out)
            if not report["passed"]:
                first = next(r for r in report["records"] if r["outcome"] != "pass")
                print(json.dumps(first, sort_keys=True), file=sys.stderr)
                return 1
            return 0
        if args.command == "fixture":
            names = sorted(FIXTURES) if args.name == "all" else [args.name]
            status = 0
            for name in names:
                s, msgs = cmd_fixture(name, args.dir, args.check)
                status = max(status, s)
                for m in msgs:
                    print(m, file=sys.stderr if s else sys.stdout)
            return status
        cfg = make_config(args)
        _emit(cmd_dump(args.what, cfg), cfg.out)
        return 0
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2

"""Command-line entry point: ``indexiter <command> ...``.

Every command prints a JSON report (or a TSV table) to stdout.  Reports are
deterministic for a fixed seed and inputs; wall-clock timing is only added
with ``--timing``.  Exit codes: 2 parse, 3 precondition, 4 search exhausted,
5 guard.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from fractions import Fraction

from . import __version__
from . import numeric as nm
from . import kronecker as kr
from . import modsolve as ms
from . import morse as mo
from . import oracle as orc
from . import symplectic as sp
from .iteration import HypothesisUnmet, InvalidPathData, PathIndexData, iterate, mean_index, rho_contribution

EXIT_PARSE, EXIT_PRECONDITION, EXIT_EXHAUSTED, EXIT_GUARD = 2, 3, 4, 5

GUARD_ENV = "INDEXITER_GUARD"

_PRECONDITION = (HypothesisUnmet, mo.DegeneratePath, mo.MeanIndexTooSmall, mo.PreconditionUnmet,
                 ms.CaseUnsupported, ms.ShapeMismatch, kr.InconsistentRelations, kr.DegenerateTangentSpace,
                 kr.EmptyA, orc.UndeclaredArithmetic)
_EXHAUSTED = (kr.SearchExhausted, ms.NotFound, ms.WindowSearchExhausted, orc.NoStabilization,
              orc.ResolutionFailure)
_GUARD = (nm.GuardViolation, nm.UnsupportedArithmetic)


class SchemaError(ValueError):
    pass


class _Inputs:
    """Loads input files and remembers their digests for the report."""

    def __init__(self):
        self.digests: dict[str, str] = {}

    def load(self, path: str):
        with open(path, "rb") as fh:
            raw = fh.read()
        self.digests[path] = hashlib.sha256(raw).hexdigest()
        try:
            return json.loads(raw)
        except json.JSONDecodeError as e:
            raise SchemaError(f"{path}: line {e.lineno} column {e.colno}: {e.msg}") from e


# schemas -------------------------------------------------------------------

def problem_from_json(obj: dict) -> ms.CongruenceProblem:
    _keys(obj, {"alphas", "N", "targets", "relations"}, {"alphas", "N", "targets"})
    rels = tuple(ms.AffineRelation.from_json(r) for r in obj.get("relations", []))
    return ms.CongruenceProblem(tuple(nm.from_json(a) for a in obj["alphas"]), int(obj["N"]),
                                tuple(obj["targets"]), rels)


def problem_to_json(p: ms.CongruenceProblem) -> dict:
    out = {"alphas": [nm.to_json(a) for a in p.alphas], "N": p.N, "targets": list(p.targets)}
    if p.relations:
        out["relations"] = [r.to_json() for r in p.relations]
    return out


CONFIG_KEYS = {"command", "format", "seed", "guard", "t_bound", "i_max", "eps"}


def _keys(obj, allowed: set, required: set = frozenset()):
    if not isinstance(obj, dict):
        raise SchemaError(f"expected an object, got {type(obj).__name__}")
    extra = set(obj) - allowed
    if extra:
        raise SchemaError(f"unknown keys {sorted(extra)}")
    missing = set(required) - set(obj)
    if missing:
        raise SchemaError(f"missing keys {sorted(missing)}")


def _config(obj):
    _keys(obj, CONFIG_KEYS, {"command"})
    if obj["command"] not in COMMANDS:
        raise SchemaError(f"unknown command {obj['command']!r}")
    for k in ("t_bound", "i_max"):
        if k in obj and (not isinstance(obj[k], int) or obj[k] <= 0):
            raise SchemaError(f"{k} must be a positive integer")
    if "eps" in obj and Fraction(str(obj["eps"])) <= 0:
        raise SchemaError("eps must be positive")
    if obj.get("format", "json") not in ("json", "tsv"):
        raise SchemaError("format must be json or tsv")
    return obj


_KINDS = {
    "path-data": PathIndexData.from_json,
    "census": mo.census_from_json,
    "problem": problem_from_json,
    "config": _config,
}


def schema_validate(doc, kind: str) -> tuple[bool, str]:
    """Strict validation by parsing.  Returns (ok, message)."""
    if kind not in _KINDS:
        raise ValueError(f"unknown schema kind {kind!r}")
    try:
        _KINDS[kind](doc)
    except (ValueError, KeyError, TypeError, ArithmeticError) as e:
        return False, f"{type(e).__name__}: {e}"
    return True, ""


# helpers -------------------------------------------------------------------

def parse_range(text: str) -> list[int]:
    if ".." in text:
        a, b = text.split("..", 1)
        lo, hi = int(a), int(b)
    else:
        lo = hi = int(text)
    if lo < 1 or hi < lo:
        raise SchemaError(f"bad range {text!r}")
    return list(range(lo, hi + 1))


def _scalar_out(x) -> str:
    return nm.format_scalar(x)


def _load_path(inp: _Inputs, path: str) -> PathIndexData:
    return PathIndexData.from_json(inp.load(path))


def _load_paths(inp: _Inputs, path: str) -> list[PathIndexData]:
    doc = inp.load(path)
    if isinstance(doc, dict):
        doc = [doc]
    return [PathIndexData.from_json(d) for d in doc]


def _positive(text: str) -> Fraction:
    v = Fraction(text)
    if v <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _pos_int(text: str) -> int:
    v = int(text)
    if v <= 0:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


# commands ------------------------------------------------------------------

def cmd_iterate(a, inp):
    d = _load_path(inp, a.path)
    rows = []
    for m in parse_range(a.m):
        r = iterate(d, m)
        rows.append({"m": m, "i": r.i_m, "nu": r.nu_m, "i_ekeland": r.i_ekeland, "band_top": r.band_top})
    return rows


def cmd_mean(a, inp):
    d = _load_path(inp, a.path)
    mh = mean_index(d)
    return {"mean_index": _scalar_out(mh), "float": float(nm.to_mpf(mh)), "K": mo.compute_K(d),
            "rho": rho_contribution(d)}


def _jump_problem(a, inp) -> kr.JumpProblem:
    paths = _load_paths(inp, a.paths)
    return kr.build_problem(paths, a.eps, a.M0)


def cmd_jump(a, inp):
    p = _jump_problem(a, inp)
    c = kr.pick_vertex(p, a.seed)
    tuples = kr.find_tuples(p, c, a.count, a.t_bound)
    return {"M": p.M, "v": [_scalar_out(x) for x in p.v], "vertex": c.to_json(),
            "tuples": [t.to_json() for t in tuples]}


def cmd_commute(a, inp):
    p = _jump_problem(a, inp)
    res = kr.commutation_experiment(p, a.alpha, a.beta, a.t_bound)
    out = {"found": res.found, "reason": res.reason,
           "diagnostic": None if res.diagnostic is None else _scalar_out(res.diagnostic)}
    if res.witness:
        v, up, down = res.witness
        out["witness"] = {"vertex": v.to_json(), "above": up.to_json(), "below": down.to_json()}
    return out


def cmd_solve_mod(a, inp):
    p = ms.with_relations(problem_from_json(inp.load(a.problem)))
    if a.strategy == "brute":
        sol = ms.solve_brute(p, a.bound)
    else:
        sol = ms.solve_window(p, a.bound)
    return sol.to_json()


def cmd_morse(a, inp):
    census = mo.census_from_json(inp.load(a.census))
    s = mo.assemble_series(census, a.imax)
    rep = mo.morse_inequalities(s)
    rows = [{"i": r.i, "M": r.M, "b": r.b, "alt_M": r.alt_M, "alt_b": r.alt_b,
             "ok": r.weak and r.strong} for r in rep.rows]
    if a.format == "tsv":
        return rows
    return {"ok": rep.ok, "first_failure": rep.first_failure, "rows": rows,
            "contributions": [[c.orbit, c.m, c.degree, c.rank] for c in s.contributions]}


def cmd_ellipsoid(a, inp):
    radii = [nm.parse_scalar(x) for x in a.radii.split(";")]
    system = orc.build_ellipsoid(radii, check_index=a.check_all)
    n = system.n
    orbits = []
    ok = True
    for o in system.orbits:
        d = o.data
        one = iterate(d, 1)
        mh = mean_index(d)
        checks = {
            "elliptic": d.decomposition.off_circle_dim == 0,
            "nondegenerate": one.nu_m == 1,
            "e_full": sp.total_circle_multiplicity(d.decomposition) == 2 * n,
            "mean_above_2": nm.compare(mh, 2) > 0,
        }
        if a.check_all:
            got = orc.crossing_indices(o.path, 0, a.m_max)
            checks["oracle_matches"] = got == [iterate(d, m).i_m for m in range(1, a.m_max + 1)]
        ok = ok and all(checks.values())
        orbits.append({"plane": o.plane + 1, "period": o.period.dec[:20], "i1": d.i1,
                       "mean_index": _scalar_out(mh), "rho": rho_contribution(d), "checks": checks})
    census = [mo.nondegenerate_profile(o.data) for o in system.orbits]
    s = mo.assemble_series(census, a.imax)
    rep = mo.morse_inequalities(s)
    odd_zero = all(s.at(i) == 0 for i in range(1, a.imax + 1, 2))
    ok = ok and rep.ok and odd_zero
    return {"n": n, "orbits": orbits, "morse_ok": rep.ok, "odd_degrees_empty": odd_zero, "ok": ok}


def cmd_oracle(a, inp):
    path = orc.LinearPath.from_json(inp.load(a.linear_path))
    omega = nm.parse_scalar(a.omega)
    got = orc.crossing_indices(path, omega, a.m_max)
    return [{"m": m, "i_omega": v} for m, v in enumerate(got, 1)]


def cmd_splitting(a, inp):
    d = _load_path(inp, a.path).decomposition if a.path else sp.NormalFormDecomposition.from_json(
        json.loads(a.decomposition))
    rows = []
    for w in a.omega:
        omega = nm.parse_scalar(w)
        table = sp.splitting_numbers(d, omega)
        row = {"omega": _scalar_out(omega), "table": list(table)}
        if a.probe:
            row["probe"] = list(orc.splitting_probe(orc.decomposition_path(d), omega))
        rows.append(row)
    return rows


COMMANDS = {
    "iterate": cmd_iterate,
    "mean": cmd_mean,
    "jump": cmd_jump,
    "commute": cmd_commute,
    "solve-mod": cmd_solve_mod,
    "morse": cmd_morse,
    "ellipsoid": cmd_ellipsoid,
    "oracle": cmd_oracle,
    "splitting": cmd_splitting,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="indexiter", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "tsv"), default="json")
    common.add_argument("--seed", type=int, default=1)
    common.add_argument("--guard", default=None, help=f"default guard for x: scalars (env {GUARD_ENV})")
    common.add_argument("--timing", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("iterate", parents=[common])
    p.add_argument("--path", required=True)
    p.add_argument("--m", default="1..10")

    p = sub.add_parser("mean", parents=[common])
    p.add_argument("--path", required=True)

    for name in ("jump", "commute"):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("--paths", required=True, help="JSON list of path data")
        p.add_argument("--eps", type=_positive, default=Fraction(1, 1000))
        p.add_argument("--M0", type=_pos_int, default=1)
        p.add_argument("--t-bound", type=_pos_int, default=10 ** 8)
        if name == "jump":
            p.add_argument("--count", type=_pos_int, default=3)
        else:
            p.add_argument("--alpha", type=int, default=0)
            p.add_argument("--beta", type=int, default=1)

    p = sub.add_parser("solve-mod", parents=[common])
    p.add_argument("--problem", required=True)
    p.add_argument("--strategy", choices=("window", "brute"), default="window")
    p.add_argument("--bound", type=_pos_int, default=10 ** 7)

    p = sub.add_parser("morse", parents=[common])
    p.add_argument("--census", required=True)
    p.add_argument("--imax", type=_pos_int, default=200)
    p.add_argument("--report", dest="format", choices=("json", "tsv"), default=argparse.SUPPRESS)

    p = sub.add_parser("ellipsoid", parents=[common])
    p.add_argument("--radii", required=True, help="squared radii separated by ';'")
    p.add_argument("--check-all", action="store_true")
    p.add_argument("--m-max", type=_pos_int, default=10)
    p.add_argument("--imax", type=_pos_int, default=200)

    p = sub.add_parser("oracle", parents=[common])
    p.add_argument("--linear-path", required=True)
    p.add_argument("--omega", default="0")
    p.add_argument("--m-max", type=_pos_int, default=10)

    p = sub.add_parser("splitting", parents=[common])
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--path")
    g.add_argument("--decomposition", help="decomposition as inline JSON")
    p.add_argument("--omega", nargs="+", default=["0"])
    p.add_argument("--probe", action="store_true")
    return ap


def _tsv(rows) -> str:
    if isinstance(rows, dict):
        rows = [rows]
    if not rows:
        return ""
    cols = list(rows[0])
    lines = ["\t".join(cols)]
    for r in rows:
        lines.append("\t".join(json.dumps(r[c]) if isinstance(r[c], (list, dict)) else str(r[c]) for c in cols))
    return "\n".join(lines) + "\n"


def run(argv=None, out=None) -> int:
    out = out or sys.stdout
    ap = build_parser()
    try:
        a = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_PARSE if e.code else 0
    guard = a.guard or os.environ.get(GUARD_ENV)
    if guard:
        nm.DEFAULT_GUARD = nm._parse_guard(guard)
    inp = _Inputs()
    t0 = time.perf_counter()
    try:
        result = COMMANDS[a.command](a, inp)
    except _GUARD as e:
        return _fail(EXIT_GUARD, e)
    except _PRECONDITION as e:
        return _fail(EXIT_PRECONDITION, e)
    except _EXHAUSTED as e:
        return _fail(EXIT_EXHAUSTED, e)
    except (SchemaError, InvalidPathData, sp.InvalidDecomposition, mo.RuleViolation, ms.InvalidRelation,
            ValueError, KeyError, TypeError, OSError) as e:
        return _fail(EXIT_PARSE, e)
    if a.format == "tsv":
        out.write(_tsv(result))
        return 0
    report = {"command": a.command, "version": __version__,
              "args": {k: (str(v) if isinstance(v, Fraction) else v) for k, v in sorted(vars(a).items())
                       if k not in ("timing",)},
              "inputs": inp.digests, "result": result}
    if a.timing:
        report["seconds"] = round(time.perf_counter() - t0, 6)
    out.write(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return 0


def _fail(code: int, e: Exception) -> int:
    print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
    return code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()

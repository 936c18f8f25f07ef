"""Ceiling congruences  sum_j E(p' alpha_j) = l  (mod N),  E = ceiling.

``solve_brute`` scans p' upward.  ``solve_window`` builds p' = n*P from a
single Kronecker-type choice of n that puts a few fractional parts
``{n b_i}`` into explicit windows; inside those windows every ceiling is
known, so the residue l follows without computing anything large.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import numeric as nm
from .iteration import PathIndexData, iterate
from .kronecker import null_space, _rref
from .numeric import Approx, Scalar


class NotFound(RuntimeError):
    def __init__(self, bound):
        super().__init__(f"no solution with p' <= {bound}")
        self.bound = bound


class CaseUnsupported(ValueError):
    pass


class WindowSearchExhausted(RuntimeError):
    def __init__(self, msg, window=None):
        super().__init__(msg)
        self.window = window


class ShapeMismatch(ValueError):
    pass


class InvalidRelation(ValueError):
    pass


def E(x) -> int:
    return nm.ceil(x)


@dataclass(frozen=True)
class AffineRelation:
    """sum_j coeffs[j] * alpha_j + const = 0."""

    coeffs: tuple
    const: Fraction = Fraction(0)

    def to_json(self) -> dict:
        return {"coeffs": [str(c) for c in self.coeffs], "const": str(self.const)}

    @classmethod
    def from_json(cls, obj) -> "AffineRelation":
        return cls(tuple(Fraction(c) for c in obj["coeffs"]), Fraction(obj.get("const", 0)))


def _is_zero(x: Scalar) -> bool:
    if isinstance(x, Approx):
        try:
            x.sign()
        except nm.GuardViolation:
            return True
        return False
    return nm.sign(x) == 0


@dataclass(frozen=True)
class CongruenceProblem:
    alphas: tuple
    N: int
    targets: tuple
    relations: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(nm.scalar(a) for a in self.alphas))
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        if self.N < 1:
            raise ValueError("N must be positive")
        if not self.targets:
            raise ValueError("empty target set")
        for a in self.alphas:
            if nm.sign(a) == 0:
                raise ValueError("alphas must be nonzero")
        for r in self.relations:
            if len(r.coeffs) != len(self.alphas):
                raise InvalidRelation("relation length does not match alphas")
            total: Scalar = Fraction(r.const)
            for c, a in zip(r.coeffs, self.alphas):
                total = total + a * Fraction(c)
            if not _is_zero(total):
                raise InvalidRelation(f"relation {r} does not hold")

    def residues(self) -> set[int]:
        return {t % self.N for t in self.targets}

    def value(self, p: int) -> int:
        return sum(E(a * p) for a in self.alphas)

    def hit(self, p: int) -> int | None:
        r = self.value(p) % self.N
        for t in self.targets:
            if t % self.N == r:
                return t
        return None


def derive_relations(alphas: Sequence[Scalar]) -> tuple:
    """All affine rational relations among exact alphas, as a basis."""
    if any(isinstance(a, Approx) for a in alphas):
        raise InvalidRelation("approximate alphas need declared relations")
    radicals = sorted({d for a in alphas for d in nm.radical_parts(a)})
    rows = [[nm.radical_parts(a).get(d, Fraction(0)) for a in alphas] for d in radicals]
    out = []
    for c in null_space(rows, len(alphas)):
        const = -sum((nm.rational_part(a) * k for a, k in zip(alphas, c)), Fraction(0))
        out.append(AffineRelation(tuple(c), const))
    return tuple(out)


def with_relations(p: CongruenceProblem) -> CongruenceProblem:
    if p.relations or any(isinstance(a, Approx) for a in p.alphas):
        return p
    return CongruenceProblem(p.alphas, p.N, p.targets, derive_relations(p.alphas))


@dataclass(frozen=True)
class CongruenceSolution:
    p_prime: int
    l_hit: int
    strategy: str
    detail: dict = field(default_factory=dict, compare=False)

    def to_json(self) -> dict:
        out = {"p_prime": self.p_prime, "l_hit": self.l_hit, "strategy": self.strategy}
        if self.detail:
            out["detail"] = self.detail
        return out


def _checked(p: CongruenceProblem, p_prime: int, strategy: str, detail=None) -> CongruenceSolution:
    t = p.hit(p_prime)
    if t is None:
        raise AssertionError(f"p'={p_prime} does not solve the congruence")
    return CongruenceSolution(p_prime, t, strategy, detail or {})


def solve_brute(p: CongruenceProblem, bound: int = 10 ** 6, chunk: int = 1 << 16) -> CongruenceSolution:
    """Smallest p' <= bound hitting a target."""
    if p.N == 1:
        return _checked(p, 1, "brute")
    af = np.array([float(nm.to_mpf(a, 128)) for a in p.alphas])
    want = np.array(sorted(p.residues()))
    for lo in range(1, bound + 1, chunk):
        ps = np.arange(lo, min(bound, lo + chunk - 1) + 1, dtype=np.int64)
        x = ps[:, None].astype(float) * af[None, :]
        c = np.ceil(x)
        # near-integers are decided exactly below
        unsure = np.any(np.abs(x - np.rint(x)) < 1e-7 * np.maximum(1.0, np.abs(x)), axis=1)
        s = c.sum(axis=1).astype(np.int64) % p.N
        maybe = np.isin(s, want) | unsure
        for q in ps[maybe]:
            if p.hit(int(q)) is not None:
                return _checked(p, int(q), "brute")
    raise NotFound(bound)


# windows -------------------------------------------------------------------

@dataclass(frozen=True)
class Constraint:
    """lo < sum_i w_i eps_i < hi (either bound may be None)."""

    w: tuple
    lo: Fraction | None
    hi: Fraction | None


@dataclass(frozen=True)
class WindowPlan:
    subcase: str
    bases: tuple          # eps_i = {n * bases[i]} shifted into (-1, 0) when signs[i] < 0
    signs: tuple
    constraints: tuple
    P: int                # p' = n * P
    l: int
    terms: tuple          # per term, weights on eps: sum_k E(N-scaled terms) = l

    def describe(self) -> dict:
        return {"subcase": self.subcase,
                "constraints": [{"w": [str(x) for x in c.w],
                                 "lo": None if c.lo is None else str(c.lo),
                                 "hi": None if c.hi is None else str(c.hi)} for c in self.constraints]}


def _box(i: int, k: int, lo, hi) -> Constraint:
    w = [Fraction(0)] * k
    w[i] = Fraction(1)
    return Constraint(tuple(w), None if lo is None else Fraction(lo), None if hi is None else Fraction(hi))


def _plan_1_1(a, N) -> WindowPlan:
    return WindowPlan("1.1", (a[0] / N, a[1] / N), (1, -1),
                      (_box(0, 2, 0, Fraction(1, N)), _box(1, 2, Fraction(-1, N), 0)),
                      1, 1, ((N, 0), (0, N)))


def _plan_1_2(c: Fraction, d: Fraction, a, N) -> WindowPlan:
    r2, s2 = c.numerator, c.denominator
    s3 = d.denominator
    base = (s3 * a[0],)
    terms = ((s2 * N,), (r2 * N,))
    P = s2 * s3 * N
    if c < 0:
        hi = min(Fraction(1, s2 * N), Fraction(-1, r2 * N))
        return WindowPlan("1.2(i)", base, (1,), (_box(0, 1, 0, hi),), P, 1, terms)
    if c == 1:
        return WindowPlan("1.2(ii-a)", base, (1,), (_box(0, 1, Fraction(1, s2 * N), Fraction(2, s2 * N)),),
                          P, 4, terms)
    lo = max(Fraction(-1, s2 * N), Fraction(-2, r2 * N))
    return WindowPlan("1.2(ii-b)", base, (-1,), (_box(0, 1, lo, Fraction(-1, r2 * N)),), P, -1, terms)


def _plan_2_1(a, N) -> WindowPlan:
    return WindowPlan("2.1", tuple(x / N for x in a), (-1, -1, -1),
                      tuple(_box(i, 3, Fraction(-1, N), 0) for i in range(3)), 1, 0,
                      tuple(tuple(N if j == i else 0 for j in range(3)) for i in range(3)))


def _plan_2_2(c1: Fraction, c2: Fraction, d: Fraction, a, N) -> WindowPlan:
    r1, s1, r2, s2 = c1.numerator, c1.denominator, c2.numerator, c2.denominator
    s3 = d.denominator
    bases = (s3 * a[0], s3 * a[1])
    P = s1 * s2 * s3 * N
    terms = ((s1 * s2 * N, 0), (0, s1 * s2 * N), (r1 * s2 * N, s1 * r2 * N))
    k = r1 * s2 + r2 * s1
    if c1 >= 0 and c2 >= 0:
        lo = max(Fraction(-1, k * N), Fraction(-1, s1 * s2 * N))
        return WindowPlan("2.2(i)", bases, (-1, -1), (_box(0, 2, lo, 0), _box(1, 2, lo, 0)), P, 0, terms)
    if c1 <= 0 and c2 <= 0:
        hi = min(Fraction(-1, k * N), Fraction(1, s1 * s2 * N))
        return WindowPlan("2.2(ii)", bases, (1, 1), (_box(0, 2, 0, hi), _box(1, 2, 0, hi)), P, 2, terms)
    # c1 > 0 > c2: eps1 first, then eps2 in a window depending on eps1
    kappa = Fraction(s2 * r1, s1 * r2)
    e1 = min(Fraction(-r2, 2 * r1 * s2 * s2 * N), Fraction(1, s1 * s2 * N))
    cons = (_box(0, 2, 0, e1), _box(1, 2, 0, Fraction(1, s1 * s2 * N)),
            Constraint((kappa, Fraction(1)), Fraction(0), Fraction(-1, s1 * r2 * N)))
    return WindowPlan("2.2(iii)", bases, (1, 1), cons, P, 2, terms)


def _plan_2_3(c1: Fraction, d1: Fraction, c3: Fraction, d3: Fraction, a, N) -> WindowPlan:
    r1, s1, s2 = c1.numerator, c1.denominator, d1.denominator
    r3, s3, s4 = c3.numerator, c3.denominator, d3.denominator
    base = (s2 * s4 * a[0],)
    P = s1 * s2 * s3 * s4 * N
    terms = ((s1 * s3 * N,), (r1 * s3 * N,), (s1 * r3 * N,))
    if c1 > 0 and c3 > 0:
        lo = max(Fraction(-1, r1 * s3 * N), Fraction(-1, r3 * s1 * N), Fraction(-1, s1 * s3 * N))
        return WindowPlan("2.3(i)", base, (-1,), (_box(0, 1, lo, 0),), P, 0, terms)
    if c1 < 0 and c3 < 0:
        lo = max(Fraction(1, r1 * s3 * N), Fraction(1, r3 * s1 * N), Fraction(-1, s1 * s3 * N))
        return WindowPlan("2.3(ii)", base, (-1,), (_box(0, 1, lo, 0),), P, 2, terms)
    hi = min(Fraction(1, r1 * s3 * N), Fraction(-1, r3 * s1 * N), Fraction(1, s1 * s3 * N))
    return WindowPlan("2.3(iii)", base, (1,), (_box(0, 1, 0, hi),), P, 2, terms)


def _solve_for(rel_rows: list[list[Fraction]], dep: list[int], free: list[int], J: int):
    """Express alphas[dep] through alphas[free] and 1 from the relation rows."""
    order = dep + free + [J]
    rows = [[r[j] for j in order] for r in rel_rows]
    red, piv = _rref(rows)
    if piv[:len(dep)] != list(range(len(dep))):
        return None
    out = {}
    for i, j in enumerate(dep):
        row = red[i]
        coeffs = {free[k]: -row[len(dep) + k] for k in range(len(free))}
        out[j] = (coeffs, -row[-1])
    return out


def plan_window(p: CongruenceProblem) -> tuple[WindowPlan, tuple]:
    """The sub-case plan and the permutation of alphas it applies to."""
    p = with_relations(p)
    J = len(p.alphas)
    N = p.N
    if J not in (2, 3):
        raise CaseUnsupported(f"J={J}: only two or three alphas are handled")
    for a in p.alphas:
        if nm.is_rational(a):
            raise CaseUnsupported("window strategies need irrational alphas")
    rows = [list(r.coeffs) + [r.const] for r in p.relations]
    red, _ = _rref(rows) if rows else ([], [])
    rank = len(red)
    a = p.alphas
    if J == 2:
        if rank == 0:
            return _plan_1_1(a, N), (0, 1)
        sol = _solve_for(red, [1], [0], 2)
        c, d = sol[1][0][0], sol[1][1]
        perm = (0, 1)
        if 0 < c < 1:
            perm = (1, 0)
            c, d = 1 / c, -d / c
        return _plan_1_2(c, d, [a[i] for i in perm], N), perm
    if rank == 0:
        return _plan_2_1(a, N), (0, 1, 2)
    if rank == 1:
        for perm in ((0, 1, 2), (0, 2, 1), (1, 2, 0)):
            sol = _solve_for(red, [perm[2]], [perm[0], perm[1]], 3)
            if sol is None:
                continue
            coeffs, d = sol[perm[2]]
            c1, c2 = coeffs[perm[0]], coeffs[perm[1]]
            mirrored = c1 < 0 < c2
            if mirrored:
                perm, c1, c2 = (perm[1], perm[0], perm[2]), c2, c1
            plan = _plan_2_2(c1, c2, d, [a[i] for i in perm], N)
            return (replace(plan, subcase="2.2(iv)") if mirrored else plan), perm
        raise CaseUnsupported("could not isolate a dependent alpha")
    if rank == 2:
        for perm in ((0, 1, 2), (1, 0, 2), (2, 0, 1)):
            sol = _solve_for(red, [perm[1], perm[2]], [perm[0]], 3)
            if sol is None:
                continue
            (c1d, d1), (c3d, d3) = sol[perm[1]], sol[perm[2]]
            c1, c3 = c1d[perm[0]], c3d[perm[0]]
            mirrored = c1 < 0 < c3
            if mirrored:
                perm, c1, d1, c3, d3 = (perm[0], perm[2], perm[1]), c3, d3, c1, d1
            plan = _plan_2_3(c1, d1, c3, d3, [a[i] for i in perm], N)
            return (replace(plan, subcase="2.3(iv)") if mirrored else plan), perm
        raise CaseUnsupported("could not isolate a free alpha")
    raise CaseUnsupported("alphas are rational")


def _eps_exact(plan: WindowPlan, n: int) -> list[Scalar]:
    out = []
    for b, s in zip(plan.bases, plan.signs):
        f = nm.frac(b * n)
        out.append(f if s > 0 else f - 1)
    return out


def _inside(plan: WindowPlan, eps: Sequence[Scalar]) -> bool:
    for c in plan.constraints:
        x: Scalar = Fraction(0)
        for w, e in zip(c.w, eps):
            if w:
                x = x + e * w
        if c.lo is not None and nm.compare(x, c.lo) <= 0:
            return False
        if c.hi is not None and nm.compare(x, c.hi) >= 0:
            return False
    return True


def window_terms(plan: WindowPlan, eps: Sequence[Scalar]) -> list[int]:
    """The ceilings the window pins down; they sum to plan.l."""
    out = []
    for t in plan.terms:
        x: Scalar = Fraction(0)
        for w, e in zip(t, eps):
            if w:
                x = x + e * w
        out.append(E(x))
    return out


def _scan(plan: WindowPlan, n_bound: int, chunk: int = 1 << 16):
    bf = np.array([float(nm.to_mpf(b, 128)) for b in plan.bases])
    sg = np.array(plan.signs)
    tol = 1e-9
    for lo in range(1, n_bound + 1, chunk):
        ns = np.arange(lo, min(n_bound, lo + chunk - 1) + 1, dtype=np.int64)
        x = ns[:, None].astype(float) * bf[None, :]
        f = x - np.floor(x)
        eps = np.where(sg[None, :] > 0, f, f - 1)
        ok = np.ones(len(ns), dtype=bool)
        for c in plan.constraints:
            v = eps @ np.array([float(w) for w in c.w])
            if c.lo is not None:
                ok &= v > float(c.lo) - tol
            if c.hi is not None:
                ok &= v < float(c.hi) + tol
        for n in ns[ok]:
            yield int(n)


def solve_window(p: CongruenceProblem, n_bound: int = 10 ** 7) -> CongruenceSolution:
    plan, perm = plan_window(p)
    for n in _scan(plan, n_bound):
        eps = _eps_exact(plan, n)
        if not _inside(plan, eps):
            continue
        pinned = window_terms(plan, eps)
        if sum(pinned) != plan.l:
            raise AssertionError(f"window {plan.subcase} gives ceilings {pinned}, expected sum {plan.l}")
        p_prime = n * plan.P
        if (p.value(p_prime) - plan.l) % p.N:
            raise AssertionError(f"sub-case {plan.subcase}: p'={p_prime} misses l={plan.l}")
        if plan.l % p.N not in p.residues():
            raise CaseUnsupported(f"sub-case {plan.subcase} reaches l={plan.l}, not a target")
        detail = {"n": n, "P": plan.P, "l": plan.l, "eps": [nm.format_scalar(e) for e in eps],
                  "pinned": pinned, "perm": list(perm)}
        sol = _checked(p, p_prime, f"kronecker_window({plan.subcase})", detail)
        return CongruenceSolution(sol.p_prime, plan.l, sol.strategy, sol.detail)
    raise WindowSearchExhausted(f"no n <= {n_bound} in the {plan.subcase} window", plan.describe())


# the two-orbit instance -------------------------------------------------------

@dataclass(frozen=True)
class SharedDegreeInstance:
    case: str
    problem: CongruenceProblem
    r: int
    s: int
    r1: int = 0
    s1: int = 1
    path1: PathIndexData | None = None
    path2: PathIndexData | None = None

    def back_substitute(self, p_prime: int, L: int) -> "BackSubstitution":
        return back_substitute(self, p_prime, L)


@dataclass(frozen=True)
class BackSubstitution:
    p: int
    q: int
    l: int
    k: int      # iteration of the second orbit
    m: int      # iteration of the first orbit
    lhs: int
    rhs: int
    two_K_first: int
    two_K_second: int

    @property
    def ok(self) -> bool:
        return self.lhs == self.rhs and self.two_K_first == self.two_K_second and self.q >= 1 and self.m >= 1


def _first_path_shape(d) -> Fraction:
    ok = (d.p_minus == 1 and d.p_plus == 2 and d.p_zero == 0 and len(d.rotations) == 1
          and not (d.q_minus or d.q_zero or d.q_plus or d.nontrivial_n2 or d.trivial_n2 or d.off_circle_dim))
    if not ok or not nm.is_rational(d.rotations[0]):
        raise ShapeMismatch("first orbit must be N1(1,1) + N1(1,-1)^2 + R(theta) with rational theta/2pi")
    return d.rotations[0]


def shared_degree_instance(path1: PathIndexData, path2: PathIndexData) -> SharedDegreeInstance:
    """The congruence that decides whether the two orbits share a critical degree."""
    rs = _first_path_shape(path1.decomposition)
    if path1.i1 != 4:
        raise ShapeMismatch(f"first orbit needs i(gamma,1) = 4, got {path1.i1}")
    r, s = rs.numerator, rs.denominator
    two_s_r = 2 * s + r
    d = path2.decomposition
    if d.p_minus != 1 or d.nontrivial_n2 or d.trivial_n2 or d.off_circle_dim or d.q_plus:
        raise ShapeMismatch("second orbit must be N1(1,1) with three rotation-type blocks")
    irr = [x for x in d.rotations if not nm.is_rational(x)]
    rat = [x for x in d.rotations if nm.is_rational(x)]
    extra = d.p_zero + d.q_zero + d.q_minus + d.p_plus + len(rat)
    if len(irr) + extra != 3 or len(irr) < 2:
        raise ShapeMismatch("second orbit must carry two or three irrational rotations and one more block")
    if d.p_plus == 1 and len(irr) == 2:
        raise ShapeMismatch("N1(1,-1) as third block forces an odd index for the second orbit, "
                            "but the index must be 4")
    if path2.i1 != 4:
        raise ShapeMismatch(f"second orbit needs i(gamma,1) = 4, got {path2.i1}")
    if len(irr) == 3:
        N = two_s_r
        alphas = tuple(two_s_r * x for x in irr)
        return SharedDegreeInstance("2", CongruenceProblem(alphas, N, (0, 2, 5)), r, s, 0, 1, path1, path2)
    if d.q_minus == 1:
        N = 3 * two_s_r
        alphas = tuple(two_s_r * 2 * x for x in irr)
        return SharedDegreeInstance("3", CongruenceProblem(alphas, N, (-1, 1, 4)), r, s, 0, 1, path1, path2)
    if d.p_zero == 1:
        r1s1 = Fraction(1)
    elif d.q_zero == 1:
        r1s1 = Fraction(1, 2)
    elif len(rat) == 1:
        r1s1 = rat[0]
    else:
        raise ShapeMismatch("unsupported third block")
    r1, s1 = r1s1.numerator, r1s1.denominator
    N = (s1 + r1) * two_s_r
    alphas = tuple(two_s_r * s1 * x for x in irr)
    return SharedDegreeInstance("1", CongruenceProblem(alphas, N, (-1, 1, 4)), r, s, r1, s1, path1, path2)


_M_SHIFT = {-4: -1, -2: 0, 1: 1}


def _band_top(data: PathIndexData, m: int) -> int:
    it = iterate(data, m)
    return it.i_ekeland + it.nu_m - 1


def back_substitute(inst: SharedDegreeInstance, p_prime: int, L: int) -> BackSubstitution:
    """Turn a congruence solution into iteration counts with equal critical degree."""
    prob = inst.problem
    N = prob.N
    two_s_r = 2 * inst.s + inst.r
    sum_e = prob.value(p_prime)
    if inst.case == "2":
        l = L - 4 if (L - 4) in _M_SHIFT else None
    else:
        l = L - 3 if (L - 3) in _M_SHIFT else None
    if l is None:
        # any representative of L mod N that maps into the allowed l-set
        base = -4 if inst.case == "2" else -3
        cands = [x for x in _M_SHIFT if (x - base - L) % N == 0]
        if not cands:
            raise ValueError(f"L={L} does not correspond to an allowed offset")
        l = cands[0]
    if inst.case == "1":
        num = sum_e + p_prime * N - 3 - l
        q = (num // N) * (inst.s1 + inst.r1)
        p = two_s_r * p_prime
        k = p * inst.s1
        lhs = 2 * sum_e + 2 * p * (inst.s1 + inst.r1) - 6
    elif inst.case == "2":
        num = sum_e + p_prime * N - 4 - l
        q = num // N
        p = p_prime
        k = N * p_prime
        lhs = 2 * sum_e + 2 * k - 8
    else:
        num = sum_e + p_prime * N - 3 - l
        q = (num // N) * 3
        p = two_s_r * p_prime
        k = 2 * p
        lhs = 2 * sum_e + 6 * p - 6
    if num % N:
        raise AssertionError("congruence does not hold for this p'")
    rhs = 2 * q * two_s_r + 2 * l
    m = q * inst.s + _M_SHIFT[l]
    two_k_first = two_k_second = 0
    if inst.path1 is not None and inst.path2 is not None and m >= 1:
        two_k_first = _band_top(inst.path1, m) - (2 if l == -2 else 0)
        two_k_second = _band_top(inst.path2, k)
    return BackSubstitution(p, q, l, k, m, lhs, rhs, two_k_first, two_k_second)

"""Common index jumps for several symplectic paths.

The vector ``v`` holds ``1/(M i_k)`` for every path followed by
``alpha/i_k`` for every elliptic angle ``theta = alpha*pi`` with a positive
S^- splitting number.  A Kronecker-type approximation ``{T v}`` close to a
0/1 vector ``chi`` gives iteration counts ``m_k`` at which all paths show
the same index jump around ``2T``.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import numeric as nm
from .iteration import HypothesisUnmet, PathIndexData, jump_window, mean_index
from .numeric import Approx, Scalar, Surd


class InconsistentRelations(ValueError):
    pass


class DegenerateTangentSpace(ValueError):
    pass


class EmptyA(AssertionError):
    pass


class SearchExhausted(RuntimeError):
    def __init__(self, msg, t_bound=None):
        super().__init__(msg)
        self.t_bound = t_bound


# exact linear algebra over Q ---------------------------------------------

def _rref(rows: list[list[Fraction]]) -> tuple[list[list[Fraction]], list[int]]:
    m = [list(r) for r in rows]
    pivots: list[int] = []
    if not m:
        return m, pivots
    ncols = len(m[0])
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = 1 / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m[:r], pivots


def row_space(rows: list[list[Fraction]]) -> list[list[Fraction]]:
    return _rref(rows)[0]


def null_space(rows: list[list[Fraction]], ncols: int) -> list[list[Fraction]]:
    red, pivots = _rref(rows)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        x = [Fraction(0)] * ncols
        x[f] = Fraction(1)
        for row, p in zip(red, pivots):
            x[p] = -row[f]
        basis.append(x)
    return basis


def _integral(vec: Sequence[Fraction]) -> list[int]:
    den = 1
    for x in vec:
        den = den * x.denominator // math.gcd(den, x.denominator)
    ints = [int(x * den) for x in vec]
    g = 0
    for x in ints:
        g = math.gcd(g, x)
    return [x // g for x in ints] if g else ints


def _lcm(values) -> int:
    out = 1
    for v in values:
        out = out * v // math.gcd(out, v)
    return out


# problem -------------------------------------------------------------------

def elliptic_alphas(data: PathIndexData) -> list[Scalar]:
    """theta/pi for every angle in (0, 2pi) with a positive S^- splitting number."""
    d = data.decomposition
    out: list[Scalar] = []
    out += [2 * x for x in d.rotations]
    for x in d.nontrivial_n2:
        out += [2 * x, 2 - 2 * x]
    out += [Fraction(1)] * (d.q_minus + d.q_zero)
    return out


@dataclass(frozen=True)
class JumpProblem:
    paths: tuple
    M: int
    M0: int
    eps: Fraction
    v: tuple
    relations: tuple
    mean_indices: tuple
    alphas: tuple  # per path
    exact: bool

    @property
    def q(self) -> int:
        return len(self.paths)

    @property
    def h(self) -> int:
        return len(self.v)


def _auto_relations(v: Sequence[Scalar]) -> list[list[int]]:
    """Integer vectors k with k.v an integer spanning all such relations over Q."""
    h = len(v)
    radicals = sorted({d for x in v for d in nm.radical_parts(x)})
    rows = [[nm.radical_parts(x).get(d, Fraction(0)) for x in v] for d in radicals]
    out = []
    for k in null_space(rows, h):
        ks = _integral(k)
        rat = sum((nm.rational_part(x) * c for x, c in zip(v, ks)), Fraction(0))
        ks = [c * rat.denominator for c in ks]
        out.append(ks)
    return out


def build_problem(paths: Sequence[PathIndexData], eps, M0: int = 1, relations=None) -> JumpProblem:
    eps = Fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    if M0 < 1:
        raise ValueError("M0 must be positive")
    means, alphas = [], []
    for k, p in enumerate(paths):
        if p.decomposition.p_minus < 1:
            raise HypothesisUnmet(f"path {k + 1} has no N1(1,1) factor")
        mi = mean_index(p)
        if nm.sign(mi) <= 0:
            raise HypothesisUnmet(f"path {k + 1} has non-positive mean index")
        means.append(mi)
        alphas.append(tuple(elliptic_alphas(p)))
    dens = [a.denominator for al in alphas for a in al if nm.is_rational(a)]
    dens += [m.denominator for m in means if nm.is_rational(m)]
    M = _lcm(dens)
    v: list[Scalar] = [1 / (M * mi) for mi in means]
    for mi, al in zip(means, alphas):
        v += [a / mi for a in al]
    exact = not any(isinstance(x, Approx) for x in v)
    if relations is None:
        if not exact:
            raise InconsistentRelations("approximate components need declared relations")
        rels = _auto_relations(v)
    else:
        rels = [list(map(int, k)) for k in relations]
        for k in rels:
            if len(k) != len(v):
                raise InconsistentRelations(f"relation {k} has wrong length")
            if not nm.rational_relation_check(k, v):
                raise InconsistentRelations(f"k.v is not an integer for k={k}")
    return JumpProblem(tuple(paths), M, M0, eps, tuple(v), tuple(tuple(k) for k in rels),
                       tuple(means), tuple(alphas), exact)


def tangent_space(p: JumpProblem) -> list[list[Fraction]]:
    """Exact basis of V, the common kernel of the relations."""
    rows = [[Fraction(c) for c in k] for k in p.relations]
    if p.exact:
        # identical to the kernel of the relations but with a readable basis
        radicals = sorted({d for x in p.v for d in nm.radical_parts(x)})
        vecs = [[nm.radical_parts(x).get(d, Fraction(0)) for x in p.v] for d in radicals]
        basis = row_space(vecs)
        for b in basis:
            if any(sum((Fraction(c) * y for c, y in zip(k, b)), Fraction(0)) for k in p.relations):
                raise InconsistentRelations("relations do not annihilate V")
        return basis
    return null_space(rows, p.h)


def _irrational_coords(p: JumpProblem) -> list[int]:
    return [k for k, x in enumerate(p.v) if not nm.is_rational(x)]


@dataclass(frozen=True)
class VertexChoice:
    a: tuple
    chi: tuple

    def to_json(self) -> dict:
        return {"a": [nm.format_scalar(x) for x in self.a], "chi": list(self.chi)}


def psi(x) -> int:
    return 1 if nm.sign(x) < 0 else 0


def vertex_from(a: Sequence) -> VertexChoice:
    a = tuple(nm.scalar(x) for x in a)
    return VertexChoice(a, tuple(psi(x) for x in a))


def pick_vertex(p: JumpProblem, seed: int = 1, basis=None) -> VertexChoice:
    basis = tangent_space(p) if basis is None else basis
    if not basis:
        raise DegenerateTangentSpace("V = 0: every component of v is rational")
    need = _irrational_coords(p)
    rng = random.Random(abs(seed))
    for attempt in range(1000):
        if attempt == 0 and len(basis) == 1:
            coeffs = [1]
        else:
            coeffs = [rng.randint(-7, 7) for _ in basis]
        if not any(coeffs):
            continue
        a = [sum((c * b[k] for c, b in zip(coeffs, basis)), Fraction(0)) for k in range(p.h)]
        if all(a[k] != 0 for k in need):
            if seed < 0:
                a = [-x for x in a]
            return vertex_from(a)
    raise EmptyA("no point of V avoids the coordinate hyperplanes")


@dataclass(frozen=True)
class JumpTuple:
    T: int
    m: tuple
    residual: Scalar

    def to_json(self) -> dict:
        return {"T": self.T, "m": list(self.m), "residual": nm.format_scalar(self.residual)}


def _floats(v: Sequence[Scalar]) -> np.ndarray:
    return np.array([float(nm.to_mpf(x, 128)) for x in v])


def tuple_for(p: JumpProblem, c: VertexChoice, T: int) -> JumpTuple | None:
    """The tuple at T if {Tv} is within eps of chi, checked exactly."""
    worst: Scalar = Fraction(0)
    for x, chi in zip(p.v, c.chi):
        fr = nm.frac(x * T)
        dev = fr - chi if chi == 0 else chi - fr
        if nm.compare(dev, p.eps) >= 0:
            return None
        if nm.compare(dev, worst) > 0:
            worst = dev
    m = tuple((nm.floor(Fraction(T, p.M) / mi) + chi) * p.M for mi, chi in zip(p.mean_indices, c.chi))
    return JumpTuple(T, m, worst)


def tuple_problems(p: JumpProblem, t: JumpTuple) -> list[str]:
    """Reasons a tuple fails the jump pattern or the angle smallness bound; empty if it passes."""
    bad = []
    delta = (2 * p.M + 1) * p.eps
    for k, (data, mk, al) in enumerate(zip(p.paths, t.m, p.alphas)):
        w = jump_window(data, mk, t.T)
        bad += [f"path {k + 1}: {c.name}" for c in w.checks if not c.ok]
        for a in al:
            fr = nm.frac(a * mk)
            if nm.compare(fr, delta) >= 0 and nm.compare(1 - fr, delta) >= 0:
                bad.append(f"path {k + 1}: angle {nm.format_scalar(a)} pi not small at m={mk}")
    return bad


def candidate_T(p: JumpProblem, c: VertexChoice, t_bound: int, start: int = 1, chunk: int = 1 << 18):
    """Ascending T <= t_bound, M0 | T, passing a floating-point prefilter."""
    vf = _floats(p.v)
    chi = np.array(c.chi, dtype=float)
    slack = float(p.eps) + 1e-6
    order = np.argsort([nm.is_rational(x) for x in p.v], kind="stable")
    first = -(-start // p.M0) * p.M0
    for lo in range(first, t_bound + 1, chunk * p.M0):
        T = np.arange(lo, min(t_bound, lo + (chunk - 1) * p.M0) + 1, p.M0, dtype=np.int64)
        Tf = T.astype(float)
        for k in order:
            x = Tf * vf[k]
            fr = x - np.floor(x)
            dev = np.abs(fr - chi[k]) if chi[k] == 0 else np.abs(chi[k] - fr)
            keep = dev < slack
            T, Tf = T[keep], Tf[keep]
            if len(T) == 0:
                break
        for t in T:
            yield int(t)


def find_tuples(p: JumpProblem, c: VertexChoice, count: int = 1, t_bound: int = 10 ** 6,
                start: int = 1, rejected: list | None = None) -> list[JumpTuple]:
    if len(c.chi) != p.h:
        raise ValueError("vertex has the wrong length")
    out = []
    for T in candidate_T(p, c, t_bound, start):
        t = tuple_for(p, c, T)
        if t is None:
            continue
        bad = tuple_problems(p, t)
        if bad:
            if rejected is not None:
                rejected.append((T, bad))
            continue
        out.append(t)
        if len(out) >= count:
            return out
    if not out:
        raise SearchExhausted(f"no T <= {t_bound} with |{{Tv}} - chi| < {p.eps}", t_bound)
    return out


# commutation ---------------------------------------------------------------

@dataclass(frozen=True)
class CommutationResult:
    found: bool
    witness: tuple | None  # (VertexChoice, JumpTuple under chi(a), JumpTuple under chi(-a))
    diagnostic: Scalar | None  # a_alpha i_alpha - a_beta i_beta for the vertex used
    reason: str = ""


def _order(p: JumpProblem, t: JumpTuple, al: int, be: int) -> int:
    return nm.compare(t.m[al] * p.mean_indices[al], t.m[be] * p.mean_indices[be])


def commutation_experiment(p: JumpProblem, alpha: int, beta: int, t_bound: int = 10 ** 6,
                           seeds: int = 8, per_vertex: int = 50) -> CommutationResult:
    """Look for tuples putting m_alpha i_alpha above m_beta i_beta and below it.

    ``alpha`` and ``beta`` are 0-based path indices.  If every direction of
    V has a_alpha i_alpha = a_beta i_beta the two products always coincide
    and the search is skipped.
    """
    if p.q < 2:
        raise ValueError("need at least two paths")
    basis = tangent_space(p)
    ia, ib = p.mean_indices[alpha], p.mean_indices[beta]
    diag = lambda a: a[alpha] * ia - a[beta] * ib
    if not basis:
        return CommutationResult(False, None, None, "V = 0")
    if all(nm.sign(diag(b)) == 0 for b in basis):
        return CommutationResult(False, None, Fraction(0),
                                 "a_alpha i_alpha - a_beta i_beta = 0 on all of V")
    last = None
    for seed in range(1, seeds + 1):
        c = pick_vertex(p, seed, basis)
        d = diag(c.a)
        if nm.sign(d) == 0:
            continue
        last = d
        neg = vertex_from([-x for x in c.a])
        try:
            pos_t = find_tuples(p, c, per_vertex, t_bound)
            neg_t = find_tuples(p, neg, per_vertex, t_bound)
        except SearchExhausted:
            continue
        for first, second, vert, dd in ((pos_t, neg_t, c, d), (neg_t, pos_t, neg, -d)):
            up = next((t for t in first if _order(p, t, alpha, beta) > 0), None)
            down = next((t for t in second if _order(p, t, alpha, beta) < 0), None)
            if up is not None and down is not None:
                return CommutationResult(True, (vert, up, down), dd)
    return CommutationResult(False, None, last, f"no witness with T <= {t_bound}")

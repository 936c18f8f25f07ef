"""Equivariant Morse bookkeeping for closed characteristics.

Critical type numbers are inputs here.  A profile stores ``k_0 .. k_{nu-1}``
for each iterate residue modulo the period ``K`` and is checked against the
structural rules at construction.  A census of profiles assembles into the
Morse series ``M_i`` which is compared with the Betti numbers of the
free-loop-space quotient (1 in every even degree, 0 otherwise).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from . import numeric as nm
from .iteration import PathIndexData, iterate, mean_index


class RuleViolation(ValueError):
    pass


class DegeneratePath(ValueError):
    pass


class MeanIndexTooSmall(ValueError):
    pass


class PreconditionUnmet(ValueError):
    pass


def _lcm(xs: Iterable[int]) -> int:
    out = 1
    for x in xs:
        out = out * x // math.gcd(out, x)
    return out


def _denominator(x) -> int | None:
    if nm.is_rational(x):
        return nm.rational_part(x).denominator
    return None


def compute_K(data: PathIndexData) -> int:
    """Iteration period of the critical type numbers."""
    d = data.decomposition
    dens = []
    if d.p_minus or d.p_zero or d.p_plus:
        dens.append(1)
    if d.q_minus or d.q_zero or d.q_plus:
        dens.append(2)
    for x in (*d.rotations, *d.nontrivial_n2, *d.trivial_n2):
        s = _denominator(x)
        if s is not None:
            dens.append(s)
    k1 = _lcm(dens)
    odd_step = (iterate(data, 2).i_m - iterate(data, 1).i_m) % 2 == 1
    return 2 * k1 if odd_step and k1 % 2 == 1 else k1


def critical_band(data: PathIndexData, m: int) -> tuple[int, int]:
    """Degrees where the m-th iterate can carry critical modules (Ekeland grading)."""
    r = iterate(data, m)
    return r.i_ekeland, r.band_top


def beta(data: PathIndexData, m: int) -> int:
    return 1 if (iterate(data, m).i_m - data.i1) % 2 == 0 else -1


def check_rules(k: Sequence[int], nu: int, b: int) -> None:
    """Raise RuleViolation unless k is admissible for nullity nu and parity b."""
    if len(k) != nu:
        raise RuleViolation(f"expected {nu} entries, got {len(k)}")
    if any((not isinstance(x, int)) or x < 0 for x in k):
        raise RuleViolation("entries must be nonnegative integers")
    if nu == 0:
        return
    if k[0] > 1 or k[-1] > 1:
        raise RuleViolation("k_0 and k_{nu-1} must be 0 or 1")
    if k[0] == 1 and any(k[1:]):
        raise RuleViolation("k_0 = 1 forces every other entry to vanish")
    if nu > 1 and k[-1] == 1 and any(k[:-1]):
        raise RuleViolation("k_{nu-1} = 1 forces every other entry to vanish")
    if any(k[1:-1]) and (k[0] or k[-1]):
        raise RuleViolation("a nonzero middle entry forces both ends to vanish")
    if b == -1 and k[0]:
        raise RuleViolation("k_0 must vanish when i(y^m) - i(y) is odd")


def admissible_k(nu: int, b: int, max_rank: int = 1) -> list[tuple]:
    """All rule-compliant tuples with middle entries bounded by max_rank."""
    if nu == 0:
        return [()]
    out = []
    if nu == 1:
        cands = [(0,), (1,)]
    else:
        mids = itertools.product(range(max_rank + 1), repeat=nu - 2)
        cands = [(a, *mid, c) for mid in mids for a in (0, 1) for c in (0, 1)]
    for k in cands:
        try:
            check_rules(k, nu, b)
        except RuleViolation:
            continue
        out.append(tuple(k))
    return sorted(set(out))


@dataclass(frozen=True)
class CriticalTypeProfile:
    orbit: PathIndexData
    K: int
    k_table: dict  # residue 1..K -> tuple of k_l

    def __post_init__(self):
        if not isinstance(self.K, int) or self.K < 1:
            raise RuleViolation("K must be a positive integer")
        table = {int(r): tuple(v) for r, v in self.k_table.items()}
        if set(table) != set(range(1, self.K + 1)):
            raise RuleViolation(f"k_table must have keys 1..{self.K}")
        object.__setattr__(self, "k_table", table)
        d = self.orbit
        K = self.K
        for m in range(1, K + 1):
            a, b = iterate(d, m), iterate(d, m + K)
            if a.nu_m != b.nu_m or (b.i_m - a.i_m) % 2:
                raise RuleViolation(f"K={K} is not a period of the nullity and parity at m={m}")
            check_rules(table[m], a.nu_m, beta(d, m))
        # equal nullity and parity between m and pm forces equal type numbers
        for m in range(1, K + 1):
            for p in range(2, K + 1):
                pm = m * p
                if iterate(d, m).nu_m == iterate(d, pm).nu_m and beta(d, m) == beta(d, pm):
                    if self.k(m) != self.k(pm):
                        raise RuleViolation(f"iterates {m} and {pm} share nullity but differ in type numbers")

    def k(self, m: int) -> tuple:
        return self.k_table[(m - 1) % self.K + 1]

    def to_json(self) -> dict:
        return {"K": self.K, "k": {str(r): list(v) for r, v in sorted(self.k_table.items())}}

    @classmethod
    def from_json(cls, orbit: PathIndexData, obj: dict) -> "CriticalTypeProfile":
        extra = set(obj) - {"K", "k"}
        if extra:
            raise RuleViolation(f"unknown keys {sorted(extra)}")
        return cls(orbit, obj["K"], {int(r): tuple(v) for r, v in obj["k"].items()})


def nondegenerate_profile(data: PathIndexData) -> CriticalTypeProfile:
    K = compute_K(data)
    table = {}
    for m in range(1, K + 1):
        if iterate(data, m).nu_m != 1:
            raise DegeneratePath(f"nu(y^{m}) != 1")
        table[m] = (1,) if beta(data, m) == 1 else (0,)
    return CriticalTypeProfile(data, K, table)


def betti(i: int) -> int:
    return 1 if i >= 0 and i % 2 == 0 else 0


@dataclass(frozen=True)
class Contribution:
    orbit: int
    m: int
    degree: int
    rank: int


@dataclass
class MorseSeries:
    i_max: int
    M: dict
    contributions: list = field(default_factory=list)

    def at(self, i: int) -> int:
        return self.M.get(i, 0)


def _last_m(data: PathIndexData, i_max: int) -> int:
    # |i(gamma, m) - m * mean| <= n, so i(y^m) >= m * mean - 2n
    mh = float(nm.to_mpf(mean_index(data)))
    return max(1, math.ceil((i_max + 2 * data.n + 2) / mh))


def assemble_series(census: Sequence[CriticalTypeProfile], i_max: int) -> MorseSeries:
    M = {i: 0 for i in range(i_max + 1)}
    contribs = []
    for idx, prof in enumerate(census):
        if nm.compare(mean_index(prof.orbit), 2) <= 0:
            raise MeanIndexTooSmall(f"orbit {idx} has mean index <= 2")
        for m in range(1, _last_m(prof.orbit, i_max) + 1):
            lo = iterate(prof.orbit, m).i_ekeland
            for l, rank in enumerate(prof.k(m)):
                deg = lo + l
                if rank and 0 <= deg <= i_max:
                    M[deg] += rank
                    contribs.append(Contribution(idx, m, deg, rank))
                elif rank and deg < 0:
                    raise RuleViolation(f"orbit {idx} contributes in negative degree {deg}")
    contribs.sort(key=lambda c: (c.orbit, c.m, c.degree))
    return MorseSeries(i_max, M, contribs)


@dataclass(frozen=True)
class InequalityRow:
    i: int
    M: int
    b: int
    alt_M: int
    alt_b: int

    @property
    def weak(self) -> bool:
        return self.M >= self.b

    @property
    def strong(self) -> bool:
        return self.alt_M >= self.alt_b


@dataclass(frozen=True)
class InequalityReport:
    rows: tuple

    @property
    def failures(self) -> list[int]:
        return [r.i for r in self.rows if not (r.weak and r.strong)]

    @property
    def first_failure(self) -> int | None:
        f = self.failures
        return f[0] if f else None

    @property
    def ok(self) -> bool:
        return not self.failures


def morse_inequalities(s: MorseSeries, upto: int | None = None) -> InequalityReport:
    top = s.i_max if upto is None else upto
    rows = []
    alt_M = alt_b = 0
    for i in range(top + 1):
        alt_M = s.at(i) - alt_M
        alt_b = betti(i) - alt_b
        rows.append(InequalityRow(i, s.at(i), betti(i), alt_M, alt_b))
    return InequalityReport(tuple(rows))


def _window(values, i1: int, i2: int) -> int:
    return sum((-1) ** (i2 - j) * values(j) for j in range(i1, i2 + 1))


def squeeze_sum(s: MorseSeries, i1: int, i2: int) -> int:
    """M_{i2} - M_{i2-1} + ... +- M_{i1}, after checking the squeeze preconditions."""
    if not 0 <= i1 <= i2 <= s.i_max:
        raise PreconditionUnmet("need 0 <= i1 <= i2 <= i_max")
    for i in (i1, i2):
        if s.at(i) != betti(i):
            raise PreconditionUnmet(f"M_{i} = {s.at(i)} differs from b_{i} = {betti(i)}")
    rep = morse_inequalities(s, i2)
    if not rep.ok:
        raise PreconditionUnmet(f"Morse inequalities fail at degree {rep.first_failure}")
    return _window(s.at, i1, i2)


def squeeze(s: MorseSeries, i1: int, i2: int) -> bool:
    return squeeze_sum(s, i1, i2) == _window(betti, i1, i2)


def gap_window_sum(s: MorseSeries, T: int) -> int:
    """M_{2T-3} - M_{2T-4} + M_{2T-5}, obtained by adding the squeezes over
    [0, 2T-3] and [0, 2T-6].  Needs M = b at degrees 2T-6 and 2T-2."""
    for i in (2 * T - 6, 2 * T - 2):
        if s.at(i) != betti(i):
            raise PreconditionUnmet(f"M_{i} = {s.at(i)} differs from b_{i}")
    if not morse_inequalities(s, 2 * T - 2).ok:
        raise PreconditionUnmet("Morse inequalities fail below 2T-2")
    total = squeeze_sum(s, 0, 2 * T - 3) + squeeze_sum(s, 0, 2 * T - 6)
    assert total == s.at(2 * T - 3) - s.at(2 * T - 4) + s.at(2 * T - 5)
    return total


def alternating_sum(profile: CriticalTypeProfile, m: int) -> int:
    lo = iterate(profile.orbit, m).i_ekeland
    return sum((-1) ** (lo + l) * k for l, k in enumerate(profile.k(m)))


def census_from_json(doc: list) -> list[CriticalTypeProfile]:
    out = []
    for item in doc:
        extra = set(item) - {"path", "profile"}
        if extra:
            raise RuleViolation(f"unknown keys {sorted(extra)}")
        data = PathIndexData.from_json(item["path"])
        if "profile" in item and item["profile"] is not None:
            out.append(CriticalTypeProfile.from_json(data, item["profile"]))
        else:
            out.append(nondegenerate_profile(data))
    return out


def census_to_json(census: Sequence[CriticalTypeProfile]) -> list:
    return [{"path": p.orbit.to_json(), "profile": p.to_json()} for p in census]

"""Index iteration formulas for a symplectic path with known endpoint normal form.

Given ``i(gamma, 1)`` and the normal-form decomposition of ``gamma(tau)`` the
indices of every iterate follow in closed form.  All parity factors are
integer branches; the only brackets are exact ones from ``numeric``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from . import numeric as nm
from .numeric import Scalar
from .symplectic import NormalFormDecomposition, splitting_numbers, total_circle_multiplicity


class InvalidPathData(ValueError):
    pass


class HypothesisUnmet(ValueError):
    pass


@dataclass(frozen=True)
class PathIndexData:
    i1: int
    decomposition: NormalFormDecomposition
    nu1: int | None = None
    n: int | None = None

    def __post_init__(self):
        d = self.decomposition
        if self.nu1 is None:
            object.__setattr__(self, "nu1", d.nu1)
        if self.n is None:
            object.__setattr__(self, "n", d.n)
        if self.n != d.n:
            raise InvalidPathData(f"n={self.n} but decomposition has dimension 2*{d.n}")
        if self.nu1 != d.nu1:
            raise InvalidPathData(f"nu1={self.nu1} but decomposition gives {d.nu1}")
        if d.off_circle_dim == 0 and (self.i1 - odd_block_count(d)) % 2:
            raise InvalidPathData(f"i1={self.i1} has the wrong parity for this endpoint")

    def to_json(self) -> dict:
        return {"i1": self.i1, "nu1": self.nu1, "n": self.n, "decomposition": self.decomposition.to_json()}

    @classmethod
    def from_json(cls, obj: dict) -> "PathIndexData":
        extra = set(obj) - {"i1", "nu1", "n", "decomposition"}
        if extra:
            raise InvalidPathData(f"unknown keys {sorted(extra)}")
        return cls(obj["i1"], NormalFormDecomposition.from_json(obj["decomposition"]),
                   obj.get("nu1"), obj.get("n"))


def odd_block_count(d: NormalFormDecomposition) -> int:
    """Blocks forcing an odd index: N1(1,1), I2, N1(-1,b), -I2 and rotations."""
    return d.p_minus + d.p_zero + d.q_minus + d.q_zero + d.q_plus + d.r


@dataclass(frozen=True)
class IterationResult:
    m: int
    i_m: int
    nu_m: int
    i_ekeland: int

    @property
    def band_top(self) -> int:
        return self.i_ekeland + self.nu_m - 1


def iterate(data: PathIndexData, m: int) -> IterationResult:
    if m < 1:
        raise ValueError("m must be positive")
    d = data.decomposition
    even = 1 if m % 2 == 0 else 0
    e_rot = phi_rot = 0
    for x in d.rotations:
        b = nm.brackets(x * m)
        e_rot += b.ceil
        phi_rot += b.phi
    phi_n2 = sum(nm.phi(x * m) for x in d.nontrivial_n2)
    phi_n2t = sum(nm.phi(x * m) for x in d.trivial_n2)
    i_m = (m * (data.i1 + d.p_minus + d.p_zero - d.r) + 2 * e_rot - d.r - d.p_minus - d.p_zero
           - even * (d.q_zero + d.q_plus) + 2 * (phi_n2 - d.r_star))
    nu_m = (data.nu1 + even * (d.q_minus + 2 * d.q_zero + d.q_plus) + 2 * (d.r + d.r_star + d.r_zero)
            - 2 * (phi_rot + phi_n2 + phi_n2t))
    return IterationResult(m, i_m, nu_m, i_m - data.n)


def mean_index(data: PathIndexData) -> Scalar:
    d = data.decomposition
    total: Scalar = Fraction(data.i1 + d.p_minus + d.p_zero - d.r)
    for x in d.rotations:
        total = total + 2 * x
    return total


def s_plus_at_one(data: PathIndexData) -> int:
    return splitting_numbers(data.decomposition, 0)[0]


def bott_inequalities(i_m: int, i_m1: int, i_1: int, nu_m: int, nu_m1: int, nu_1: int, e: int) -> bool:
    """nu_m - e/2 + 1 <= i_{m+1} - i_m - i_1 <= nu_1 - nu_{m+1} + e/2, in doubled form."""
    mid = i_m1 - i_m - i_1
    return 2 * nu_m - e + 2 <= 2 * mid <= 2 * nu_1 - 2 * nu_m1 + e


def bott_estimate_check(data: PathIndexData, m: int) -> bool:
    if data.decomposition.p_minus < 1:
        raise HypothesisUnmet("the estimate needs an N1(1,1) factor (p_minus >= 1)")
    e = total_circle_multiplicity(data.decomposition)
    a, b, one = iterate(data, m), iterate(data, m + 1), iterate(data, 1)
    return bott_inequalities(a.i_m, b.i_m, one.i_m, a.nu_m, b.nu_m, one.nu_m, e)


def rho_contribution(data: PathIndexData) -> int:
    return (data.i1 + 2 * s_plus_at_one(data) - data.nu1 + data.n) // 2


@dataclass(frozen=True)
class WindowCheck:
    name: str
    lhs: int
    rhs: int
    relation: str  # "==", ">=", "<="
    ok: bool


@dataclass(frozen=True)
class JumpWindow:
    m: int
    T: int
    checks: tuple

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)


def _check(name, lhs, rhs, rel) -> WindowCheck:
    ok = {"==": lhs == rhs, ">=": lhs >= rhs, "<=": lhs <= rhs}[rel]
    return WindowCheck(name, lhs, rhs, rel, ok)


def jump_window(data: PathIndexData, m_center: int, T: int) -> JumpWindow:
    """The index pattern expected around 2*m_center for a common jump at T."""
    m = m_center
    lo = iterate(data, 2 * m - 1) if m >= 1 else None
    mid = iterate(data, 2 * m)
    hi = iterate(data, 2 * m + 1)
    e = total_circle_multiplicity(data.decomposition)
    s_plus = s_plus_at_one(data)
    checks = (
        _check("nu(2m-1) = nu(1)", lo.nu_m, data.nu1, "=="),
        _check("nu(2m+1) = nu(1)", hi.nu_m, data.nu1, "=="),
        _check("i(2m-1) + nu(2m-1) = 2T - (i(1) + 2S+(1) - nu(1))", lo.i_m + lo.nu_m,
               2 * T - (data.i1 + 2 * s_plus - data.nu1), "=="),
        _check("i(2m+1) = 2T + i(1)", hi.i_m, 2 * T + data.i1, "=="),
        # doubled to keep e/2 integral-free
        _check("2 i(2m) >= 4T - e", 2 * mid.i_m, 4 * T - e, ">="),
        _check("2 (i(2m) + nu(2m)) <= 4T + e - 2", 2 * (mid.i_m + mid.nu_m), 4 * T + e - 2, "<="),
    )
    return JumpWindow(m, T, checks)

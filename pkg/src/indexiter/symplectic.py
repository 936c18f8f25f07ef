"""Symplectic matrices, the diamond product and basic normal forms.

Coordinates are ``(x_1..x_n, y_1..y_n)`` and ``J = [[0, -I], [I, 0]]``.
A 2x2 block placed in plane ``j`` acts on ``(x_j, y_j)``; the diamond
product interleaves blocks this way, so a diamond product of 2x2 blocks is a
direct sum over planes.

Rotation angles always enter as the ratio ``theta / 2pi``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence, Union

import mpmath

from . import numeric as nm
from .numeric import Approx, Scalar, Surd, compare, scalar

HALF = Fraction(1, 2)
WORK_DPS = 60


class DimensionMismatch(ValueError):
    pass


class UnresolvableSpectrum(ArithmeticError):
    pass


class InvalidDecomposition(ValueError):
    pass


# basic normal forms -------------------------------------------------------

@dataclass(frozen=True)
class N1:
    lam: int  # +1 or -1
    b: int  # -1, 0, 1; b = 0 is the scalar matrix lam * I2

    dim = 2


@dataclass(frozen=True)
class D:
    lam: int  # +2 or -2

    dim = 2


@dataclass(frozen=True)
class R:
    ratio: Scalar

    dim = 2


@dataclass(frozen=True)
class N2:
    ratio: Scalar
    kind: str  # "trivial" or "nontrivial"

    dim = 4


@dataclass(frozen=True)
class OffCircleBlock:
    dim: int


BasicNormalForm = Union[N1, D, R, N2, OffCircleBlock]


def check_ratio(x) -> Scalar:
    """Angle ratios must lie in (0, 1) and differ from 1/2."""
    x = scalar(x)
    if compare(x, 0) <= 0 or compare(x, 1) >= 0 or compare(x, HALF) == 0:
        raise InvalidDecomposition(f"angle ratio {nm.format_scalar(x)} outside (0,1) minus 1/2")
    return x


def _sorted_ratios(xs) -> tuple:
    import functools
    return tuple(sorted((check_ratio(x) for x in xs), key=functools.cmp_to_key(compare)))


@dataclass(frozen=True)
class NormalFormDecomposition:
    p_minus: int = 0
    p_zero: int = 0
    p_plus: int = 0
    q_minus: int = 0
    q_zero: int = 0
    q_plus: int = 0
    rotations: tuple = ()
    nontrivial_n2: tuple = ()
    trivial_n2: tuple = ()
    off_circle_dim: int = 0

    def __post_init__(self):
        for name in ("p_minus", "p_zero", "p_plus", "q_minus", "q_zero", "q_plus", "off_circle_dim"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 0:
                raise InvalidDecomposition(f"{name} must be a nonnegative integer")
        if self.off_circle_dim % 2:
            raise InvalidDecomposition("off_circle_dim must be even")
        object.__setattr__(self, "rotations", _sorted_ratios(self.rotations))
        object.__setattr__(self, "nontrivial_n2", _sorted_ratios(self.nontrivial_n2))
        object.__setattr__(self, "trivial_n2", _sorted_ratios(self.trivial_n2))
        if self.n == 0:
            raise InvalidDecomposition("empty decomposition")

    @property
    def r(self) -> int:
        return len(self.rotations)

    @property
    def r_star(self) -> int:
        return len(self.nontrivial_n2)

    @property
    def r_zero(self) -> int:
        return len(self.trivial_n2)

    @property
    def n(self) -> int:
        twice = (2 * (self.p_minus + self.p_zero + self.p_plus + self.q_minus + self.q_zero + self.q_plus)
                 + 2 * self.r + 4 * self.r_star + 4 * self.r_zero + self.off_circle_dim)
        return twice // 2

    @property
    def nu1(self) -> int:
        return self.p_minus + 2 * self.p_zero + self.p_plus

    def blocks(self) -> list:
        out: list = []
        out += [N1(1, 1)] * self.p_minus + [N1(1, 0)] * self.p_zero + [N1(1, -1)] * self.p_plus
        out += [N1(-1, 1)] * self.q_minus + [N1(-1, 0)] * self.q_zero + [N1(-1, -1)] * self.q_plus
        out += [R(x) for x in self.rotations]
        out += [N2(x, "nontrivial") for x in self.nontrivial_n2]
        out += [N2(x, "trivial") for x in self.trivial_n2]
        out += [D(2)] * (self.off_circle_dim // 2)
        return out

    def to_json(self) -> dict:
        return {
            "p": [self.p_minus, self.p_zero, self.p_plus],
            "q": [self.q_minus, self.q_zero, self.q_plus],
            "rot": [nm.to_json(x) for x in self.rotations],
            "n2n": [nm.to_json(x) for x in self.nontrivial_n2],
            "n2t": [nm.to_json(x) for x in self.trivial_n2],
            "off": self.off_circle_dim,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "NormalFormDecomposition":
        extra = set(obj) - {"p", "q", "rot", "n2n", "n2t", "off"}
        if extra:
            raise InvalidDecomposition(f"unknown keys {sorted(extra)}")
        p = obj.get("p", [0, 0, 0])
        q = obj.get("q", [0, 0, 0])
        if len(p) != 3 or len(q) != 3:
            raise InvalidDecomposition("p and q need three entries")
        return cls(*p, *q,
                   rotations=tuple(nm.from_json(x) for x in obj.get("rot", [])),
                   nontrivial_n2=tuple(nm.from_json(x) for x in obj.get("n2n", [])),
                   trivial_n2=tuple(nm.from_json(x) for x in obj.get("n2t", [])),
                   off_circle_dim=obj.get("off", 0))


def decomposition_from_blocks(blocks: Iterable) -> NormalFormDecomposition:
    counts = {}
    rot, n2n, n2t = [], [], []
    off = 0
    for b in blocks:
        if isinstance(b, N1):
            counts[(b.lam, b.b)] = counts.get((b.lam, b.b), 0) + 1
        elif isinstance(b, R):
            rot.append(b.ratio)
        elif isinstance(b, N2):
            (n2n if b.kind == "nontrivial" else n2t).append(b.ratio)
        elif isinstance(b, (D, OffCircleBlock)):
            off += 2 if isinstance(b, D) else b.dim
        else:
            raise TypeError(b)
    c = lambda lam, bb: counts.get((lam, bb), 0)
    return NormalFormDecomposition(c(1, 1), c(1, 0), c(1, -1), c(-1, 1), c(-1, 0), c(-1, -1),
                                   tuple(rot), tuple(n2n), tuple(n2t), off)


# matrices -----------------------------------------------------------------

class SymplecticMatrix:
    """A 2n x 2n matrix of scalars.

    ``blocks`` records the basic normal forms it was assembled from, when
    known; exact spectral data is then read off the blocks.
    """

    def __init__(self, entries, blocks: Sequence | None = None, check: bool = True):
        rows = [tuple(scalar(x) if not isinstance(x, (Approx, Surd)) else x for x in row) for row in entries]
        size = len(rows)
        if size == 0 or size % 2 or any(len(r) != size for r in rows):
            raise DimensionMismatch("need a square matrix of even size")
        self.entries = tuple(rows)
        self.blocks = tuple(blocks) if blocks is not None else None
        self._mp = None
        if check and not is_symplectic(self):
            raise ValueError("matrix is not symplectic")

    @property
    def n(self) -> int:
        return len(self.entries) // 2

    @property
    def exact(self) -> bool:
        return all(not isinstance(x, Approx) for row in self.entries for x in row)

    def mp(self) -> mpmath.matrix:
        if self._mp is None:
            with mpmath.workdps(WORK_DPS):
                self._mp = mpmath.matrix([[nm.to_mpf(x, 4 * WORK_DPS) for x in row] for row in self.entries])
        return self._mp

    def numpy(self):
        import numpy as np
        return np.array([[float(x) for x in row] for row in self.entries])

    def __eq__(self, other):
        return isinstance(other, SymplecticMatrix) and self.entries == other.entries

    def __repr__(self):
        return f"SymplecticMatrix(n={self.n}, blocks={self.blocks})"


def j_matrix(n: int) -> list:
    z = Fraction(0)
    out = [[z] * (2 * n) for _ in range(2 * n)]
    for i in range(n):
        out[i][n + i] = Fraction(-1)
        out[n + i][i] = Fraction(1)
    return out


def _matmul(a, b):
    size = len(a)
    return [[sum((a[i][k] * b[k][j] for k in range(size) if a[i][k] != 0 and b[k][j] != 0), Fraction(0))
             for j in range(size)] for i in range(size)]


def is_symplectic(m: SymplecticMatrix, tol: float = 1e-35) -> bool:
    n = m.n
    if m.exact:
        e = m.entries
        jm = j_matrix(n)
        mt = [list(r) for r in zip(*e)]
        lhs = _matmul(_matmul(mt, jm), [list(r) for r in e])
        return all(compare(lhs[i][j], jm[i][j]) == 0 for i in range(2 * n) for j in range(2 * n))
    with mpmath.workdps(WORK_DPS):
        a = m.mp()
        jm = mpmath.matrix(j_matrix_float(n))
        diff = a.T * jm * a - jm
        return mpmath.mnorm(diff, 1) < tol


def j_matrix_float(n: int):
    return [[float(x) for x in row] for row in j_matrix(n)]


def diamond(a: SymplecticMatrix, b: SymplecticMatrix) -> SymplecticMatrix:
    """Interleave the blocks of a (2m1) and b (2m2) into a 2(m1+m2) matrix."""
    m1, m2 = a.n, b.n
    n = m1 + m2
    z = Fraction(0)
    out = [[z] * (2 * n) for _ in range(2 * n)]
    # index maps into the big matrix
    ia = list(range(m1)) + [n + i for i in range(m1)]
    ib = [m1 + i for i in range(m2)] + [n + m1 + i for i in range(m2)]
    for r in range(2 * m1):
        for c in range(2 * m1):
            out[ia[r]][ia[c]] = a.entries[r][c]
    for r in range(2 * m2):
        for c in range(2 * m2):
            out[ib[r]][ib[c]] = b.entries[r][c]
    blocks = None
    if a.blocks is not None and b.blocks is not None:
        blocks = a.blocks + b.blocks
    return SymplecticMatrix(out, blocks, check=False)


_EXACT_TRIG = {}


def _init_trig():
    s3 = nm.surd(0, HALF, 3)
    s2 = nm.surd(0, HALF, 2)
    h = HALF
    table = {
        Fraction(1, 4): (0, 1), Fraction(3, 4): (0, -1),
        Fraction(1, 6): (h, s3), Fraction(5, 6): (h, -s3),
        Fraction(1, 3): (-h, s3), Fraction(2, 3): (-h, -s3),
        Fraction(1, 8): (s2, s2), Fraction(3, 8): (-s2, s2),
        Fraction(5, 8): (-s2, -s2), Fraction(7, 8): (s2, -s2),
        Fraction(1, 12): (s3, h), Fraction(5, 12): (-s3, h),
        Fraction(7, 12): (-s3, -h), Fraction(11, 12): (s3, -h),
    }
    _EXACT_TRIG.update({k: (scalar(c) if isinstance(c, int) else c, scalar(s) if isinstance(s, int) else s)
                        for k, (c, s) in table.items()})


_init_trig()


def cos_sin(ratio) -> tuple:
    """cos and sin of 2*pi*ratio, exact when a closed form is known."""
    ratio = scalar(ratio)
    if isinstance(ratio, Fraction) and ratio in _EXACT_TRIG:
        return _EXACT_TRIG[ratio]
    with mpmath.workdps(WORK_DPS + 10):
        t = 2 * mpmath.pi * nm.to_mpf(ratio, 4 * WORK_DPS)
        c, s = mpmath.cos(t), mpmath.sin(t)
        fmt = lambda v: mpmath.nstr(v, WORK_DPS, strip_zeros=False, min_fixed=-math.inf, max_fixed=math.inf)
        return Approx(fmt(c)), Approx(fmt(s))


def block_matrix(b) -> SymplecticMatrix:
    F = Fraction
    if isinstance(b, N1):
        e = [[F(b.lam), F(b.b)], [F(0), F(b.lam)]]
    elif isinstance(b, D):
        e = [[F(b.lam), F(0)], [F(0), F(1, b.lam)]]
    elif isinstance(b, R):
        c, s = cos_sin(check_ratio(b.ratio))
        e = [[c, -s], [s, c]]
    elif isinstance(b, N2):
        c, s = cos_sin(check_ratio(b.ratio))
        # b-part is k*R(theta): (b2 - b3) sin(theta) = -2k sin^2(theta),
        # so k = +1 gives the nontrivial sign and k = -1 the trivial one
        k = 1 if b.kind == "nontrivial" else -1
        z = F(0)
        e = [[c, -s, k * c, -k * s],
             [s, c, k * s, k * c],
             [z, z, c, -s],
             [z, z, s, c]]
    elif isinstance(b, OffCircleBlock):
        m = block_matrix(D(2))
        for _ in range(b.dim // 2 - 1):
            m = diamond(m, block_matrix(D(2)))
        return SymplecticMatrix(m.entries, (b,), check=False)
    else:
        raise TypeError(b)
    return SymplecticMatrix(e, (b,), check=False)


def diamond_all(ms: Sequence[SymplecticMatrix]) -> SymplecticMatrix:
    out = ms[0]
    for m in ms[1:]:
        out = diamond(out, m)
    return out


def realize(d: NormalFormDecomposition, i_gamma_1: int | None = None, n: int | None = None) -> SymplecticMatrix:
    """A concrete endpoint matrix with decomposition ``d``.

    The index ``i_gamma_1`` does not affect the endpoint; it is accepted so
    callers can pass path data straight through.
    """
    if n is not None and n != d.n:
        raise DimensionMismatch(f"decomposition has dimension 2*{d.n}, expected 2*{n}")
    return diamond_all([block_matrix(b) for b in d.blocks()])


def conjugate(m: SymplecticMatrix, p: SymplecticMatrix) -> SymplecticMatrix:
    """P^-1 M P computed at working precision."""
    with mpmath.workdps(WORK_DPS):
        out = mpmath.inverse(p.mp()) * m.mp() * p.mp()
    return from_mp(out)


def from_mp(a: mpmath.matrix) -> SymplecticMatrix:
    fmt = lambda v: mpmath.nstr(v, WORK_DPS - 5, strip_zeros=False, min_fixed=-math.inf, max_fixed=math.inf)
    rows = [[Approx(fmt(a[i, j])) for j in range(a.cols)] for i in range(a.rows)]
    return SymplecticMatrix(rows, check=False)


def power(m: SymplecticMatrix, k: int) -> SymplecticMatrix:
    with mpmath.workdps(WORK_DPS):
        out = m.mp() ** k
    return from_mp(out)


# decomposition recovery ---------------------------------------------------

def _snap_ratio(x, candidates=()) -> Scalar:
    with mpmath.workdps(WORK_DPS):
        for c in candidates:
            if abs(nm.to_mpf(c) - x) < mpmath.mpf(10) ** -25:
                return c
        q = Fraction(str(mpmath.nstr(x, 40))).limit_denominator(10**4)
        if abs(mpmath.mpf(q.numerator) / q.denominator - x) < mpmath.mpf(10) ** -25:
            return q
        return Approx(mpmath.nstr(x, 45, strip_zeros=False, min_fixed=-math.inf, max_fixed=math.inf))


def decompose(m: SymplecticMatrix, p: SymplecticMatrix | None = None, candidates=()) -> NormalFormDecomposition:
    """Recover the decomposition of P M P^-1 when it is a diamond product of basic blocks.

    Only block-assembled matrices are supported; rotation ratios are snapped
    to ``candidates`` (or small-denominator rationals) when they agree to 25
    digits.
    """
    if p is not None:
        with mpmath.workdps(WORK_DPS):
            a = p.mp() * m.mp() * mpmath.inverse(p.mp())
    else:
        a = m.mp()
    n = m.n
    with mpmath.workdps(WORK_DPS):
        tol = mpmath.mpf(10) ** -30
        coords = lambda j: (j, n + j)
        # planes coupled by nonzero entries form the blocks
        parent = list(range(n))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for j in range(n):
            for k in range(j + 1, n):
                if any(abs(a[r, c]) > tol for r in coords(j) for c in coords(k)) or \
                        any(abs(a[r, c]) > tol for r in coords(k) for c in coords(j)):
                    parent[find(j)] = find(k)
        groups: dict[int, list[int]] = {}
        for j in range(n):
            groups.setdefault(find(j), []).append(j)
        blocks = []
        for planes in groups.values():
            if len(planes) == 1:
                j = planes[0]
                blk = [[a[r, c] for c in coords(j)] for r in coords(j)]
                blocks.append(_classify2(blk, candidates, tol))
            elif len(planes) == 2:
                j, k = planes
                idx = [j, k, n + j, n + k]
                blk = [[a[r, c] for c in idx] for r in idx]
                blocks.append(_classify4(blk, candidates, tol))
            else:
                raise InvalidDecomposition("coupled block larger than 4x4")
    return decomposition_from_blocks(blocks)


def _near(x, y, tol):
    return abs(x - y) < tol


def _classify2(b, candidates, tol):
    (p, q), (r, s) = b
    if _near(r, 0, tol) and _near(p, s, tol) and (_near(p, 1, tol) or _near(p, -1, tol)):
        lam = 1 if p > 0 else -1
        for bb in (-1, 0, 1):
            if _near(q, bb, tol):
                return N1(lam, bb)
    if _near(q, 0, tol) and _near(r, 0, tol) and _near(p * s, 1, tol) and abs(p) > 1 + tol:
        return D(2 if p > 0 else -2)
    if _near(p, s, tol) and _near(q, -r, tol) and _near(p * p + r * r, 1, tol):
        ratio = mpmath.atan2(r, p) / (2 * mpmath.pi)
        if ratio < 0:
            ratio += 1
        return R(_snap_ratio(ratio, candidates))
    raise InvalidDecomposition("2x2 block is not a basic normal form")


def _classify4(b, candidates, tol):
    # [[R, k R], [0, R]] in (x_j, x_k, y_j, y_k) coordinates
    a_ = [[b[i][j] for j in range(2)] for i in range(2)]
    d_ = [[b[i][j] for j in range(2, 4)] for i in range(2, 4)]
    c_ = [[b[i][j] for j in range(2)] for i in range(2, 4)]
    bb = [[b[i][j] for j in range(2, 4)] for i in range(2)]
    if any(not _near(c_[i][j], 0, tol) for i in range(2) for j in range(2)):
        raise InvalidDecomposition("4x4 block is not upper block triangular")
    if any(not _near(a_[i][j], d_[i][j], tol) for i in range(2) for j in range(2)):
        raise InvalidDecomposition("4x4 block diagonal parts differ")
    rot = _classify2(a_, candidates, tol)
    if not isinstance(rot, R):
        raise InvalidDecomposition("4x4 block diagonal part is not a rotation")
    s = a_[1][0]
    val = (bb[0][1] - bb[1][0]) * s
    if _near(val, 0, tol):
        raise InvalidDecomposition("N2 block needs (b2 - b3) sin(theta) != 0")
    return N2(rot.ratio, "nontrivial" if val < 0 else "trivial")


# spectra ------------------------------------------------------------------

def _block_spectrum(b) -> list:
    if isinstance(b, N1):
        w = Fraction(0) if b.lam == 1 else HALF
        return [(w, 2 if b.b == 0 else 1)]
    if isinstance(b, R):
        return [(b.ratio, 1), (1 - b.ratio, 1)]
    if isinstance(b, N2):
        return [(b.ratio, 1), (1 - b.ratio, 1)]
    return []


def circle_spectrum(m: SymplecticMatrix) -> list:
    """Unit-circle eigenvalues as (ratio in [0,1), geometric multiplicity)."""
    import functools
    if m.blocks is not None:
        acc: list = []
        for b in m.blocks:
            for w, k in _block_spectrum(b):
                for i, (w2, k2) in enumerate(acc):
                    if compare(w, w2) == 0:
                        acc[i] = (w2, k2 + k)
                        break
                else:
                    acc.append((w, k))
        return sorted(acc, key=functools.cmp_to_key(lambda x, y: compare(x[0], y[0])))
    return _numeric_spectrum(m)


def _numeric_spectrum(m: SymplecticMatrix) -> list:
    size = 2 * m.n
    with mpmath.workdps(WORK_DPS):
        a = m.mp()
        eig = mpmath.eig(a, left=False, right=False)
        on, seen = [], []
        for lam in eig:
            dev = abs(abs(lam) - 1)
            if dev < mpmath.mpf(10) ** -20:
                on.append(lam)
            elif dev < mpmath.mpf(10) ** -8:
                raise UnresolvableSpectrum(f"eigenvalue modulus {mpmath.nstr(abs(lam), 30)} not certified")
        out = []
        for lam in on:
            if any(abs(lam - s) < mpmath.mpf(10) ** -15 for s in seen):
                continue
            seen.append(lam)
            sv = mpmath.svd_c(a - lam * mpmath.eye(size), compute_uv=False)
            scale = max(1, mpmath.mnorm(a, 1))
            nu = sum(1 for x in sv if x < mpmath.mpf(10) ** -18 * scale)
            ratio = mpmath.arg(lam) / (2 * mpmath.pi)
            if ratio < 0:
                ratio += 1
            if ratio > 1 - mpmath.mpf(10) ** -25:
                ratio = mpmath.mpf(0)
            out.append((_snap_ratio(ratio), nu))
    import functools
    return sorted(out, key=functools.cmp_to_key(lambda x, y: compare(x[0], y[0])))


def nu_omega(m: SymplecticMatrix, omega_ratio) -> int:
    for w, k in circle_spectrum(m):
        if compare(w, omega_ratio) == 0:
            return k
    return 0


def _block_splitting(b, w) -> tuple[int, int]:
    if isinstance(b, N1):
        at = Fraction(0) if b.lam == 1 else HALF
        if compare(w, at) != 0:
            return 0, 0
        if b.lam == 1:
            return (1, 1) if b.b >= 0 else (0, 0)
        # at -1 the sign of b flips relative to +1
        return (1, 1) if b.b <= 0 else (0, 0)
    if isinstance(b, R):
        if compare(w, b.ratio) == 0:
            return 0, 1
        if compare(w, 1 - b.ratio) == 0:
            return 1, 0
        return 0, 0
    if isinstance(b, N2):
        if compare(w, b.ratio) == 0 or compare(w, 1 - b.ratio) == 0:
            return (1, 1) if b.kind == "nontrivial" else (0, 0)
        return 0, 0
    return 0, 0


def splitting_numbers(d: NormalFormDecomposition, omega_ratio) -> tuple[int, int]:
    """(S^+, S^-) at exp(2 pi i * omega_ratio), summed over the blocks."""
    w = scalar(omega_ratio)
    if compare(w, 0) < 0 or compare(w, 1) >= 0:
        raise ValueError("omega ratio must lie in [0, 1)")
    sp = sm = 0
    for b in d.blocks():
        a, c = _block_splitting(b, w)
        sp += a
        sm += c
    return sp, sm


def block_splitting(b, omega_ratio) -> tuple[int, int]:
    return _block_splitting(b, scalar(omega_ratio))


def total_circle_multiplicity(d: NormalFormDecomposition) -> int:
    return 2 * d.n - d.off_circle_dim

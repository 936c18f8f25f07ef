"""Index of concrete linear symplectic paths by direct crossing counting.

The path ``gamma(t) = exp(t J B) exp(t J A)`` (``B`` defaults to zero) is
preceded by the hyperbolic segment ``xi_n`` from ``diag(2, 1/2)`` to the
identity and the whole concatenation is right-multiplied by a small generic
negative rotation ``K = exp(-delta J S)``.  ``K`` moves degenerate endpoints
in the negative direction and breaks the non-generic identity passage at
the junction, so every crossing with the degenerate set at ``omega`` is a
simple sign change of

    D_omega(M) = (-1)^(n-1) conj(omega)^n det(M - omega I).

Each sign change is weighted by the side towards which ``M exp(h J)`` moves,
which is the positive co-orientation.  The count is repeated with ``delta``
halved until two consecutive values agree.

This module is deliberately independent of the closed-form iteration
formulas; it is the ground truth they are tested against.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np
from scipy.linalg import expm
from scipy.optimize import brentq

from . import numeric as nm
from .iteration import PathIndexData
from .numeric import Approx, Scalar, scalar
from .symplectic import D, N1, N2, R, NormalFormDecomposition, OffCircleBlock

TWO_PI = 2 * math.pi


class ResolutionFailure(RuntimeError):
    def __init__(self, msg, interval=None):
        super().__init__(msg if interval is None else f"{msg} on t in [{interval[0]:.17g}, {interval[1]:.17g}]")
        self.interval = interval


class NoStabilization(RuntimeError):
    pass


class UndeclaredArithmetic(ValueError):
    pass


def _mp_text(v) -> str:
    return mpmath.nstr(v, 50, strip_zeros=False, min_fixed=-math.inf, max_fixed=math.inf)


def approx(v) -> Approx:
    with mpmath.workdps(60):
        return Approx(_mp_text(mpmath.mpf(v) if not isinstance(v, mpmath.mpf) else v))


def _as_rows(a) -> tuple:
    return tuple(tuple(scalar(x) if not isinstance(x, float) else approx(x) for x in row) for row in a)


@dataclass(frozen=True)
class LinearPath:
    """``gamma(t) = exp(t J B) exp(t J A)`` on ``[0, tau]``, iterated ``m`` times.

    Iteration follows ``gamma^m(t) = gamma(t - j tau) gamma(tau)^j`` for
    ``j tau <= t <= (j+1) tau``.  ``B`` is an optional rotating-frame
    generator; with ``B = 0`` this is the plain linear Hamiltonian flow.
    """

    n: int
    A: tuple
    tau: Scalar = Fraction(1)
    B: tuple | None = None
    m: int = 1

    def __post_init__(self):
        object.__setattr__(self, "A", _as_rows(self.A))
        if self.B is not None:
            object.__setattr__(self, "B", _as_rows(self.B))
        object.__setattr__(self, "tau", scalar(self.tau))
        size = 2 * self.n
        for name in ("A", "B"):
            mat = getattr(self, name)
            if mat is None:
                continue
            if len(mat) != size or any(len(r) != size for r in mat):
                raise ValueError(f"{name} must be {size}x{size}")
            for i in range(size):
                for j in range(i + 1, size):
                    if nm.compare(mat[i][j], mat[j][i]) != 0 if not isinstance(mat[i][j], Approx) \
                            else abs(float(mat[i][j]) - float(mat[j][i])) > 1e-30:
                        raise ValueError(f"{name} must be symmetric")
        if nm.sign(self.tau) <= 0:
            raise ValueError("duration must be positive")

    def iterate(self, m: int) -> "LinearPath":
        return replace(self, m=self.m * m)

    def to_json(self) -> dict:
        out = {"n": self.n, "A": [[nm.to_json(x) for x in r] for r in self.A], "tau": nm.to_json(self.tau)}
        if self.B is not None:
            out["B"] = [[nm.to_json(x) for x in r] for r in self.B]
        if self.m != 1:
            out["m"] = self.m
        return out

    @classmethod
    def from_json(cls, obj) -> "LinearPath":
        extra = set(obj) - {"n", "A", "tau", "B", "m"}
        if extra:
            raise ValueError(f"unknown keys {sorted(extra)}")
        conv = lambda rows: tuple(tuple(nm.from_json(x) for x in r) for r in rows)
        return cls(obj["n"], conv(obj["A"]), nm.from_json(obj.get("tau", {"rat": [1, 1]})),
                   conv(obj["B"]) if obj.get("B") is not None else None, obj.get("m", 1))


def j_float(n: int) -> np.ndarray:
    j = np.zeros((2 * n, 2 * n))
    j[:n, n:] = -np.eye(n)
    j[n:, :n] = np.eye(n)
    return j


def diamond_float(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    m1, m2 = a.shape[0] // 2, b.shape[0] // 2
    n = m1 + m2
    out = np.zeros((2 * n, 2 * n), dtype=np.result_type(a, b))
    ia = list(range(m1)) + [n + i for i in range(m1)]
    ib = [m1 + i for i in range(m2)] + [n + m1 + i for i in range(m2)]
    out[np.ix_(ia, ia)] = a
    out[np.ix_(ib, ib)] = b
    return out


def diamond_paths(p: LinearPath, q: LinearPath) -> LinearPath:
    if nm.compare(p.tau, q.tau) != 0 or p.m != q.m:
        raise ValueError("paths must share duration and iteration count")

    def dia(x, y, nx, ny):
        z = Fraction(0)
        xs = x if x is not None else tuple((z,) * (2 * nx) for _ in range(2 * nx))
        ys = y if y is not None else tuple((z,) * (2 * ny) for _ in range(2 * ny))
        n = nx + ny
        out = [[z] * (2 * n) for _ in range(2 * n)]
        ia = list(range(nx)) + [n + i for i in range(nx)]
        ib = [nx + i for i in range(ny)] + [n + nx + i for i in range(ny)]
        for r in range(2 * nx):
            for c in range(2 * nx):
                out[ia[r]][ia[c]] = xs[r][c]
        for r in range(2 * ny):
            for c in range(2 * ny):
                out[ib[r]][ib[c]] = ys[r][c]
        return tuple(tuple(r) for r in out)

    B = None
    if p.B is not None or q.B is not None:
        B = dia(p.B, q.B, p.n, q.n)
    return LinearPath(p.n + q.n, dia(p.A, q.A, p.n, q.n), p.tau, B, p.m)


# numeric evaluation --------------------------------------------------------

def _to_float(rows) -> np.ndarray:
    return np.array([[float(x) for x in r] for r in rows], dtype=float)


def _components(n: int, mats: Sequence[np.ndarray]) -> list[np.ndarray]:
    """Groups of planes coupled by any of the given matrices."""
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a in mats:
        nz = np.abs(a) > 0
        for r, c in zip(*np.nonzero(nz)):
            pr, pc = r % n, c % n
            if pr != pc:
                parent[find(pr)] = find(pc)
    groups: dict[int, list[int]] = {}
    for j in range(n):
        groups.setdefault(find(j), []).append(j)
    return [np.array(g + [n + j for j in g]) for g in groups.values()]


def _expm_batch(x: np.ndarray, t: np.ndarray) -> np.ndarray:
    """exp(t_k X) for every k; closed form for traceless 2x2 X."""
    k = len(t)
    if x.shape[0] == 2:
        q = -(x[0, 0] * x[1, 1] - x[0, 1] * x[1, 0])
        if abs(q) < 1e-300:
            c, s = np.ones(k), t.astype(float)
        elif q > 0:
            w = math.sqrt(q)
            c, s = np.cosh(w * t), np.sinh(w * t) / w
        else:
            w = math.sqrt(-q)
            c, s = np.cos(w * t), np.sin(w * t) / w
        return c[:, None, None] * np.eye(2) + s[:, None, None] * x
    if not np.any(x):
        return np.broadcast_to(np.eye(x.shape[0]), (k,) + x.shape).copy()
    return expm(t[:, None, None] * x)


class _Evaluator:
    def __init__(self, path: LinearPath, m_max: int):
        n = path.n
        self.n = n
        self.tau = float(path.tau)
        J = j_float(n)
        self.JA = J @ _to_float(path.A)
        self.JB = J @ _to_float(path.B) if path.B is not None else np.zeros_like(self.JA)
        self.comps = _components(n, [self.JA, self.JB])
        self.m_max = m_max
        self.gen = []
        for c in self.comps:
            ja = self.JA[np.ix_(c, c)]
            jb = self.JB[np.ix_(c, c)]
            end = _expm_batch(jb, np.array([self.tau]))[0] @ _expm_batch(ja, np.array([self.tau]))[0]
            powers = [np.eye(len(c))]
            for _ in range(m_max):
                powers.append(powers[-1] @ end)
            self.gen.append((ja, jb, np.array(powers)))

    def gamma_comp(self, ci: int, t: np.ndarray) -> np.ndarray:
        ja, jb, powers = self.gen[ci]
        j = np.minimum(np.floor(t / self.tau).astype(int), self.m_max - 1)
        j = np.maximum(j, 0)
        s = t - j * self.tau
        g = _expm_batch(jb, s) @ _expm_batch(ja, s)
        return g @ powers[j]

    def gamma(self, t: float) -> np.ndarray:
        size = 2 * self.n
        out = np.zeros((size, size))
        for ci, c in enumerate(self.comps):
            out[np.ix_(c, c)] = self.gamma_comp(ci, np.array([t]))[0]
        return out


# S is diagonal with distinct entries in every plane, so K = exp(-delta J S)
# has no symmetry that could align crossings of different planes.
def _generic_weights(n: int) -> np.ndarray:
    sx = np.array([1.0 + 0.6180339887 * ((j * 0.7548776662) % 1.0) for j in range(n)])
    sy = np.array([1.9 + 0.4142135624 * ((j * 0.5698402910 + 0.31) % 1.0) for j in range(n)])
    return np.concatenate([sx, sy])


def _perturbation(n: int, delta: float) -> np.ndarray:
    s = _generic_weights(n)
    k = np.zeros((2 * n, 2 * n))
    for j in range(n):
        x = j_float(1) @ np.diag([s[j], s[n + j]])
        blk = _expm_batch(-delta * x, np.array([1.0]))[0]
        idx = np.array([j, n + j])
        k[np.ix_(idx, idx)] = blk
    return k


class _Counter:
    """Crossings of the perturbed concatenated path at one omega.

    D_omega of a matrix that is block diagonal over coupled groups of planes
    is, up to a constant sign, the product of the D_omega of the blocks, and
    every block is itself symplectic.  Sign changes are therefore located
    block by block, which keeps simultaneous crossings in different planes
    apart.
    """

    def __init__(self, ev: _Evaluator, omega: complex, delta: float, density: float = 1.0):
        self.ev = ev
        self.omega = omega
        self.K = _perturbation(ev.n, delta)
        self.Kc = [self.K[np.ix_(c, c)] for c in ev.comps]
        self.density = density
        self.real = abs(omega.imag) < 1e-300

    def _dval(self, mc: np.ndarray) -> np.ndarray:
        size = mc.shape[-1]
        h = size // 2
        pre = (-1) ** (h - 1) * np.conj(self.omega) ** h
        if self.real:
            return pre.real * np.linalg.det(mc - self.omega.real * np.eye(size))
        return np.real(pre * np.linalg.det(mc.astype(complex) - self.omega * np.eye(size)))

    def matrices(self, ci: int, seg: int, x: np.ndarray) -> np.ndarray:
        kc = self.Kc[ci]
        if seg == 0:
            h = kc.shape[0] // 2
            a = 2.0 - x
            diag = np.zeros((len(x), 2 * h, 2 * h))
            for i in range(h):
                diag[:, i, i] = a
                diag[:, h + i, h + i] = 1.0 / a
            return diag @ kc
        return self.ev.gamma_comp(ci, x) @ kc

    def coorientation(self, mc: np.ndarray) -> int:
        h = mc.shape[0] // 2
        jf = j_float(h)
        eps = 1e-7
        rot = lambda s: math.cos(s) * np.eye(2 * h) + math.sin(s) * jf
        up, down = self._dval(mc @ rot(eps)), self._dval(mc @ rot(-eps))
        if up == down:
            raise ResolutionFailure("co-orientation undetermined at a crossing")
        return 1 if up > down else -1

    def crossings(self, seg: int, a: float, b: float, n0: int) -> list[tuple[float, int]]:
        found = []
        for ci in range(len(self.ev.comps)):
            found += self._component_crossings(ci, seg, a, b, n0)
        return sorted(found)

    # adaptive search -------------------------------------------------
    def _component_crossings(self, ci, seg, a, b, n0) -> list[tuple[float, int]]:
        f = lambda x: self._dval(self.matrices(ci, seg, x))
        n0 = max(8, int(n0 * self.density))
        grid = np.linspace(a, b, n0 + 1)
        pts = np.concatenate([grid, (grid[:-1] + grid[1:]) / 2, grid[:-1] * 0.75 + grid[1:] * 0.25,
                              grid[:-1] * 0.25 + grid[1:] * 0.75])
        vals = f(pts)
        m = n0 + 1
        g = vals[:m]
        mid = vals[m:m + n0]
        q1 = vals[m + n0:m + 2 * n0]
        q3 = vals[m + 2 * n0:]
        pending = [(grid[i], grid[i + 1], (g[i], q1[i], mid[i], q3[i], g[i + 1])) for i in range(n0)]
        found: list[tuple[float, int]] = []
        min_width = (b - a) * 1e-13
        while pending:
            new_pts, splits = [], []
            for lo, hi, fv in pending:
                verdict = self._classify(fv)
                if verdict == "none":
                    continue
                if verdict == "one":
                    found.append(self._polish(ci, seg, f, lo, hi, fv))
                    continue
                if hi - lo < min_width:
                    raise ResolutionFailure("crossings could not be isolated", (lo, hi))
                m_ = (lo + hi) / 2
                splits.append((lo, m_, hi, fv))
                new_pts += [lo * 0.875 + hi * 0.125, lo * 0.625 + hi * 0.375,
                            lo * 0.375 + hi * 0.625, lo * 0.125 + hi * 0.875]
            if not splits:
                break
            nv = f(np.array(new_pts)).reshape(-1, 4)
            pending = []
            for (lo, m_, hi, fv), extra in zip(splits, nv):
                pending.append((lo, m_, (fv[0], extra[0], fv[1], extra[1], fv[2])))
                pending.append((m_, hi, (fv[2], extra[2], fv[3], extra[3], fv[4])))
        return found

    @staticmethod
    def _classify(fv) -> str:
        fv = np.asarray(fv)
        if np.any(fv == 0):
            return "split"
        s = np.sign(fv)
        changes = int(np.sum(s[1:] != s[:-1]))
        spread = fv.max() - fv.min()
        if changes == 0:
            return "none" if np.min(np.abs(fv)) > 2 * spread else "split"
        if changes == 1:
            d = np.diff(fv)
            line = fv[0] + (fv[4] - fv[0]) * np.linspace(0, 1, 5)
            # a single simple root: monotone and close to linear on the interval
            if (np.all(d > 0) or np.all(d < 0)) and np.max(np.abs(fv - line)) < 0.25 * abs(fv[4] - fv[0]):
                return "one"
        return "split"

    def _polish(self, ci, seg, f, lo, hi, fv) -> tuple[float, int]:
        xs = np.linspace(lo, hi, 5)
        s = np.sign(fv)
        k = int(np.nonzero(s[1:] != s[:-1])[0][0])
        a, b = xs[k], xs[k + 1]
        g = lambda x: float(f(np.array([x]))[0])
        root = brentq(g, a, b, xtol=1e-15, rtol=1e-15, maxiter=200)
        direction = 1 if fv[k + 1] > fv[k] else -1
        mc = self.matrices(ci, seg, np.array([root]))[0]
        return root, direction * self.coorientation(mc)


def _grid_size(ev: _Evaluator, t_end: float) -> int:
    rate = np.linalg.norm(ev.JA, 2) + np.linalg.norm(ev.JB, 2)
    return int(min(2_000_000, max(64, 40 * rate * t_end)))


def _omega(ratio) -> complex:
    with mpmath.workdps(40):
        t = 2 * mpmath.pi * nm.to_mpf(scalar(ratio))
        return complex(float(mpmath.cos(t)), float(mpmath.sin(t)))


def _endpoint_gap(ev: _Evaluator, omega: complex, ms: Sequence[int]) -> float:
    """Smallest angular distance from omega to endpoint eigenvalues on the circle that are not omega."""
    gap = math.pi
    w = math.atan2(omega.imag, omega.real)
    for m in ms:
        for ci, c in enumerate(ev.comps):
            g = ev.gamma_comp(ci, np.array([m * ev.tau]))[0]
            for lam in np.linalg.eigvals(g):
                if abs(abs(lam) - 1) > 1e-6:
                    continue
                d = abs((math.atan2(lam.imag, lam.real) - w + math.pi) % TWO_PI - math.pi)
                # Jordan blocks at omega split to O(sqrt(eps)) in floating point
                if d > 1e-6:
                    gap = min(gap, d)
    return gap


def crossing_indices(path: LinearPath, omega_ratio, m_max: int, density: float = 1.0,
                     max_halvings: int = 12) -> list[int]:
    """i_omega of the iterates gamma^(k*path.m) for k = 1..m_max in one sweep."""
    total = path.m * m_max
    ev = _Evaluator(path, total)
    omega = _omega(omega_ratio)
    ms = [path.m * k for k in range(1, m_max + 1)]
    gap = _endpoint_gap(ev, omega, ms)
    smax = float(np.max(_generic_weights(path.n)))
    t_end = total * ev.tau
    n_grid = _grid_size(ev, t_end)
    prev = None
    for k in range(1, max_halvings + 1):
        # Jordan blocks move eigenvalues by O(sqrt(delta)), hence the square
        delta = (gap / 8) ** 2 * 2.0 ** (-k) / smax
        counter = _Counter(ev, omega, delta, density)
        xi = sum(s for _, s in counter.crossings(0, 0.0, 1.0, 64))
        hits = counter.crossings(1, 0.0, t_end, n_grid)
        out = []
        for m in ms:
            cut = m * ev.tau
            if any(abs(t - cut) < 1e-9 * max(1.0, cut) for t, _ in hits):
                raise ResolutionFailure("crossing too close to an iterate endpoint", (cut, cut))
            out.append(xi + sum(s for t, s in hits if t < cut))
        if out == prev:
            return out
        prev = out
    raise NoStabilization(f"index did not stabilize after {max_halvings} halvings")


def crossing_index(path: LinearPath, omega_ratio=Fraction(0), density: float = 1.0) -> int:
    return crossing_indices(path, omega_ratio, 1, density)[0]


def splitting_probe(path: LinearPath, omega_ratio, eps_steps: int = 6) -> tuple[int, int]:
    """(S^+, S^-) at omega as limits of index jumps under omega -> omega exp(+-i eps)."""
    w = scalar(omega_ratio)
    ev = _Evaluator(path, path.m)
    omega = _omega(w)
    gap = _endpoint_gap(ev, omega, [path.m])
    base = crossing_index(path, w)
    wf = float(nm.to_mpf(w))
    seq = []
    for k in range(1, eps_steps + 1):
        eps = gap / 8 * 2.0 ** (-k) / TWO_PI
        up = crossing_index(path, approx((wf + eps) % 1.0))
        down = crossing_index(path, approx((wf - eps) % 1.0))
        seq.append((up - base, down - base))
    if len(seq) < 3 or len(set(seq[-3:])) != 1:
        raise NoStabilization(f"splitting numbers did not stabilize: {seq}")
    return seq[-1]


# block paths ---------------------------------------------------------------

def _two_pi(x) -> Approx:
    with mpmath.workdps(60):
        return approx(2 * mpmath.pi * nm.to_mpf(scalar(x)))


def block_path(b) -> LinearPath:
    """A path on [0, 1] whose endpoint is the basic normal form ``b``."""
    z = Fraction(0)
    if isinstance(b, N1):
        shear = lambda c: ((z, z), (z, Fraction(-c)))  # exp(J A) = [[1, c], [0, 1]]
        if b.lam == 1:
            if b.b == 0:
                t = _two_pi(1)
                return LinearPath(1, ((t, z), (z, t)))
            return LinearPath(1, shear(b.b))
        half = _two_pi(Fraction(1, 2))
        # R(pi) [[1, -b], [0, 1]] = [[-1, b], [0, -1]]
        return LinearPath(1, shear(-b.b), B=((half, z), (z, half)))
    if isinstance(b, D):
        with mpmath.workdps(60):
            c = approx(-mpmath.log(2))
        a = ((z, c), (c, z))
        if b.lam == 2:
            return LinearPath(1, a)
        half = _two_pi(Fraction(1, 2))
        return LinearPath(1, a, B=((half, z), (z, half)))
    if isinstance(b, R):
        t = _two_pi(b.ratio)
        return LinearPath(1, ((t, z), (z, t)))
    if isinstance(b, N2):
        # X = [[theta J2, k I], [0, theta J2]] in (x1, x2, y1, y2), A = -J X
        k = 1 if b.kind == "nontrivial" else -1
        th = _two_pi(b.ratio)
        with mpmath.workdps(60):
            t = mpmath.mpf(th.dec)
            X = mpmath.matrix([[0, -t, k, 0], [t, 0, 0, k], [0, 0, 0, -t], [0, 0, t, 0]])
            J = mpmath.matrix([[0, 0, -1, 0], [0, 0, 0, -1], [1, 0, 0, 0], [0, 1, 0, 0]])
            A = -J * X
            rows = tuple(tuple(approx(A[i, j]) if A[i, j] != 0 else z for j in range(4)) for i in range(4))
        return LinearPath(2, rows)
    if isinstance(b, OffCircleBlock):
        p = block_path(D(2))
        for _ in range(b.dim // 2 - 1):
            p = diamond_paths(p, block_path(D(2)))
        return p
    raise TypeError(b)


def decomposition_path(d: NormalFormDecomposition) -> LinearPath:
    blocks = d.blocks()
    p = block_path(blocks[0])
    for b in blocks[1:]:
        p = diamond_paths(p, block_path(b))
    return p


# ellipsoid -----------------------------------------------------------------

@dataclass(frozen=True)
class EllipsoidOrbit:
    plane: int
    period: Approx  # 4 pi r^2 for H = sum (x^2 + y^2) / (2 r^2)
    ratios: tuple  # r_i^2 / r_j^2 for j != i, exact
    path: LinearPath
    data: PathIndexData


@dataclass(frozen=True)
class EllipsoidSystem:
    radii_sq: tuple
    orbits: tuple

    @property
    def n(self) -> int:
        return len(self.radii_sq)


def ellipsoid_path(radii_sq: Sequence, i: int) -> LinearPath:
    """Linearized flow along the orbit in plane ``i`` over one period, time scaled to [0, 1].

    Plane ``i`` turns once in a rotating frame with a unit shear, ending at
    N1(1, 1); plane ``j`` rotates by ``2 pi r_i^2 / r_j^2``.
    """
    n = len(radii_sq)
    z = Fraction(0)
    A = [[z] * (2 * n) for _ in range(2 * n)]
    B = [[z] * (2 * n) for _ in range(2 * n)]
    for j in range(n):
        if j == i:
            A[n + i][n + i] = Fraction(-1)
            B[i][i] = B[n + i][n + i] = _two_pi(1)
        else:
            t = _two_pi(radii_sq[i] / radii_sq[j])
            A[j][j] = A[n + j][n + j] = t
    return LinearPath(n, tuple(map(tuple, A)), Fraction(1), tuple(map(tuple, B)))


def build_ellipsoid(radii_sq: Sequence, check_index: bool = True) -> EllipsoidSystem:
    """All closed characteristics of the ellipsoid with the given squared radii.

    Inputs are the squared radii ``r_j^2``: a radius ``2^(1/4)`` is passed as
    the surd ``sqrt(2)``.  Squared ratios must be exactly irrational.
    """
    rs = tuple(scalar(r) for r in radii_sq)
    n = len(rs)
    if n < 1:
        raise ValueError("need at least one radius")
    for r in rs:
        if isinstance(r, Approx):
            raise UndeclaredArithmetic("approximate radii cannot certify non-resonance")
        if nm.sign(r) <= 0:
            raise ValueError("radii must be positive")
    for i in range(n):
        for j in range(i + 1, n):
            if nm.is_rational(rs[i] / rs[j]):
                raise UndeclaredArithmetic(
                    f"r_{i + 1}^2 / r_{j + 1}^2 is rational: resonant ellipsoid is out of scope")
    orbits = []
    for i in range(n):
        ratios = tuple(rs[i] / rs[j] for j in range(n) if j != i)
        d = NormalFormDecomposition(p_minus=1, rotations=tuple(nm.frac(x) for x in ratios))
        path = ellipsoid_path(rs, i)
        i1 = crossing_index(path, 0) if check_index else n + 2 * sum(nm.floor(x) for x in ratios)
        with mpmath.workdps(60):
            period = approx(4 * mpmath.pi * nm.to_mpf(rs[i]))
        orbits.append(EllipsoidOrbit(i, period, ratios, path, PathIndexData(i1, d)))
    return EllipsoidSystem(rs, tuple(orbits))

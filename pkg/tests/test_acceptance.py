"""Acceptance criteria 1-9, each at its stated tolerance and time budget."""
import math
import random
import time
from fractions import Fraction as F

import mpmath
import numpy as np
from hypothesis import given, settings, strategies as st

from indexiter import kronecker as kr
from indexiter import modsolve as ms
from indexiter import morse as mo
from indexiter import numeric as nm
from indexiter import oracle as orc
from indexiter.iteration import (PathIndexData, bott_estimate_check, iterate, jump_window, mean_index,
                                 rho_contribution)
from indexiter.symplectic import (D, N1, N2, R, NormalFormDecomposition as NFD, decompose,
                                  decomposition_from_blocks, realize, splitting_numbers)

from instances import SUBCASES, instance, random_path_data

S2, S3, S5, S7 = nm.sqrt(2), nm.sqrt(3), nm.sqrt(5), nm.sqrt(7)

RADIUS_SETS = [
    [1, S2],
    [1, S3, S5],
    [1, S2, 1 + S2],
    [1, S2, 1 + S2, 2 + S2],
    [1, S3, S5, S7],
]


def _ceil_div(a, b):
    return -((-a) // b)


def _ceil_m_sqrt2_minus_1(m):
    # E(m (sqrt2 - 1)) = ceil(m sqrt2) - m, and m sqrt2 is never an integer
    return math.isqrt(2 * m * m) + 1 - m


# 1 -------------------------------------------------------------------------

def test_criterion_1_closed_forms(criterion):
    with criterion(1):
        t0 = time.perf_counter()
        ms_ = range(1, 1001)
        l51 = PathIndexData(5, NFD(p_minus=1, p_plus=3))
        l52 = PathIndexData(4, NFD(p_minus=1, p_plus=2, off_circle_dim=2))
        third = PathIndexData(4, NFD(p_minus=1, p_plus=2, rotations=(F(1, 3),)))
        irr = PathIndexData(4, NFD(p_minus=1, p_plus=2, rotations=(S2 - 1,)))
        minus = PathIndexData(4, NFD(p_minus=1, p_plus=2, q_minus=1))
        ident = PathIndexData(4, NFD(p_minus=1, p_plus=2, p_zero=1))
        for m in ms_:
            r = iterate(l51, m)
            assert (r.i_ekeland, r.nu_m) == (6 * m - 5, 4)
            r = iterate(l52, m)
            assert (r.i_ekeland, r.nu_m) == (5 * m - 5, 3)
            r = iterate(third, m)
            assert r.i_ekeland == 4 * m + 2 * _ceil_div(m, 3) - 6
            assert r.nu_m == (5 if m % 3 == 0 else 3)
            r = iterate(irr, m)
            assert (r.i_ekeland, r.nu_m) == (4 * m + 2 * _ceil_m_sqrt2_minus_1(m) - 6, 3)
            r = iterate(minus, m)
            assert (r.i_ekeland, r.nu_m) == (5 * m - 5, 3 + (1 + (-1) ** m) // 2)
            r = iterate(ident, m)
            assert (r.i_ekeland, r.nu_m) == (6 * m - 6, 5)
        for r_, s_ in ((1, 3), (2, 5), (3, 7), (5, 8)):
            d = PathIndexData(4, NFD(p_minus=1, p_plus=2, rotations=(F(r_, s_),)))
            for q in range(1, 60):
                tops = [iterate(d, q * s_ + k).band_top for k in (-1, 0, 1)]
                base = 2 * q * (2 * s_ + r_)
                assert tops == [base - 8, base - 2, base + 2]
        assert time.perf_counter() - t0 < 1.0


# 2 -------------------------------------------------------------------------

SPLIT_CASES = [
    ([N1(1, 1)], 0, (1, 1)),
    ([N1(1, 0)], 0, (1, 1)),
    ([N1(1, -1)], 0, (0, 0)),
    ([N1(-1, 1)], F(1, 2), (0, 0)),
    ([N1(-1, 0)], F(1, 2), (1, 1)),
    ([N1(-1, -1)], F(1, 2), (1, 1)),
    ([R(F(1, 3))], F(1, 3), (0, 1)),
    ([R(F(1, 3))], F(2, 3), (1, 0)),
    ([R(S2 - 1)], S2 - 1, (0, 1)),
    ([R(S2 - 1)], 2 - S2, (1, 0)),
    ([N2(F(1, 3), "nontrivial")], F(1, 3), (1, 1)),
    ([N2(F(1, 3), "nontrivial")], F(2, 3), (1, 1)),
    ([N2(F(1, 3), "trivial")], F(1, 3), (0, 0)),
    ([N2(F(1, 3), "trivial")], F(2, 3), (0, 0)),
    ([N1(1, 1)], F(1, 3), (0, 0)),
    ([D(2)], 0, (0, 0)),
    ([N1(1, 1), R(F(1, 3))], 0, (1, 1)),
    ([N1(1, 1), R(F(1, 3))], F(1, 3), (0, 1)),
    ([N1(1, -1), N1(-1, 0)], F(1, 2), (1, 1)),
]


def test_criterion_2_splitting_table(criterion):
    with criterion(2):
        t0 = time.perf_counter()
        for blocks, w, expected in SPLIT_CASES:
            d = decomposition_from_blocks(blocks)
            assert d.n <= 2
            assert splitting_numbers(d, w) == expected
            parts = [splitting_numbers(decomposition_from_blocks([b]), w) for b in blocks]
            assert tuple(map(sum, zip(*parts))) == expected
            assert orc.splitting_probe(orc.decomposition_path(d), w) == expected, (blocks, w)
        assert time.perf_counter() - t0 < 30


# 3 -------------------------------------------------------------------------

def test_criterion_3_oracle_equivalence(criterion):
    with criterion(3):
        t0 = time.perf_counter()
        assert {len(r) for r in RADIUS_SETS} == {2, 3, 4}
        for radii in RADIUS_SETS:
            system = orc.build_ellipsoid(radii, check_index=False)
            for o in system.orbits:
                got = orc.crossing_indices(o.path, 0, 20)
                assert got == [iterate(o.data, m).i_m for m in range(1, 21)], (radii, o.plane)
        assert time.perf_counter() - t0 < 120


# 4 -------------------------------------------------------------------------

def test_criterion_4_ellipsoid_census(criterion):
    with criterion(4):
        t0 = time.perf_counter()
        for radii in RADIUS_SETS:
            n = len(radii)
            system = orc.build_ellipsoid(radii, check_index=True)
            assert len(system.orbits) == n
            for o in system.orbits:
                d = o.data
                assert d.i1 == n + 2 * sum(nm.floor(x) for x in o.ratios)
                assert d.decomposition.off_circle_dim == 0
                assert d.nu1 == 1
                assert 2 * d.n - d.decomposition.off_circle_dim == 2 * n
                assert all(iterate(d, m).nu_m == 1 for m in range(1, 50))
                assert nm.compare(mean_index(d), 2) > 0
            census = [mo.nondegenerate_profile(o.data) for o in system.orbits]
            s = mo.assemble_series(census, 200)
            assert mo.morse_inequalities(s).ok
            assert all(s.at(i) == 0 for i in range(1, 201, 2))
            rho = min(rho_contribution(o.data) for o in system.orbits)
            assert rho >= n // 2 + 1
            assert len(system.orbits) >= rho
        assert time.perf_counter() - t0 < 60


# 5 -------------------------------------------------------------------------

def _small_angle(a, m, delta):
    with mpmath.workdps(60):
        x = nm.to_mpf(a, 256) * m
        fr = x - mpmath.floor(x)
        return fr < delta or fr > 1 - delta


def test_criterion_5_common_jump(criterion):
    with criterion(5):
        t0 = time.perf_counter()
        system = orc.build_ellipsoid(RADIUS_SETS[3], check_index=False)
        p = kr.build_problem([o.data for o in system.orbits], F(1, 1000), 1)
        c = kr.pick_vertex(p, 1)
        tuples = kr.find_tuples(p, c, 3, 10 ** 8)
        assert len(tuples) >= 3
        delta = float((2 * p.M + 1) * p.eps)
        for t in tuples:
            assert t.T <= 10 ** 8
            for data, m, alphas in zip(p.paths, t.m, p.alphas):
                lo, mid, hi, one = (iterate(data, 2 * m - 1), iterate(data, 2 * m), iterate(data, 2 * m + 1),
                                    iterate(data, 1))
                s_plus = splitting_numbers(data.decomposition, 0)[0]
                e = 2 * data.n - data.decomposition.off_circle_dim
                assert lo.nu_m == one.nu_m and hi.nu_m == one.nu_m
                assert lo.i_m + lo.nu_m == 2 * t.T - (one.i_m + 2 * s_plus - one.nu_m)
                assert hi.i_m == 2 * t.T + one.i_m
                assert 2 * mid.i_m >= 4 * t.T - e
                assert 2 * (mid.i_m + mid.nu_m) <= 4 * t.T + e - 2
                assert jump_window(data, m, t.T).ok
                for a in alphas:
                    assert _small_angle(a, m, delta)

        # one irrational rotation: the two vertices and the 4-versus-6 gap
        rho = S2 - 1
        d = PathIndexData(4, NFD(p_minus=1, p_plus=2, rotations=(rho,)))
        p = kr.build_problem([d], F(1, 1000))
        assert p.M == 1
        basis = kr.tangent_space(p)
        assert len(basis) == 1
        seen = set()
        for seed in (1, -1):
            c = kr.pick_vertex(p, seed)
            chi1, chi11 = c.chi
            assert chi1 + chi11 == 1
            seen.add(c.chi)
            delta = (2 * p.M + 1) * p.eps
            for t in kr.find_tuples(p, c, 3, 10 ** 7):
                (m1,) = t.m
                fr = nm.frac(2 * rho * m1)
                if c.chi == (1, 0):
                    assert nm.compare(fr, delta) < 0
                    gap = 4
                else:
                    assert nm.compare(fr, 1 - delta) > 0
                    gap = 6
                assert iterate(d, 2 * m1 + 1).i_m - iterate(d, 2 * m1).i_m == gap
                assert iterate(d, 2 * m1 + 1).i_m == 2 * t.T + d.i1
                top = iterate(d, 2 * m1).band_top
                assert top == (2 * t.T - 2 if gap == 4 else 2 * t.T - 4)
        assert seen == {(1, 0), (0, 1)}
        assert time.perf_counter() - t0 < 300


# 6 -------------------------------------------------------------------------

def _rot_path(i1, rho):
    return PathIndexData(i1, NFD(p_minus=1, rotations=(rho,)))


def test_criterion_6_commutation(criterion):
    with criterion(6):
        t0 = time.perf_counter()
        p = kr.build_problem([_rot_path(2, S2 - 1), _rot_path(2, S3 - 1), _rot_path(2, S5 - 2)], F(1, 100))
        res = kr.commutation_experiment(p, 0, 1, 10 ** 8)
        assert res.found
        vert, up, down = res.witness
        i0, i1 = p.mean_indices[0], p.mean_indices[1]
        assert nm.compare(up.m[0] * i0, up.m[1] * i1) > 0
        assert nm.compare(down.m[0] * i0, down.m[1] * i1) < 0
        assert up.T <= 10 ** 8 and down.T <= 10 ** 8
        for t in (up, down):
            assert not kr.tuple_problems(p, t)

        # second orbit has exactly twice the first one's mean index
        rigged = kr.build_problem([_rot_path(2, S2 - 1), _rot_path(4, 2 * S2 - 2), _rot_path(2, S3 - 1)],
                                  F(1, 100))
        assert nm.compare(rigged.mean_indices[1], 2 * rigged.mean_indices[0]) == 0
        res = kr.commutation_experiment(rigged, 0, 1, 10 ** 8)
        assert not res.found
        assert res.diagnostic == 0
        assert "= 0 on all of V" in res.reason
        assert time.perf_counter() - t0 < 300


# 7 -------------------------------------------------------------------------

def test_criterion_7_congruences(criterion):
    with criterion(7):
        t0 = time.perf_counter()
        for sc in SUBCASES:
            rng = random.Random(sum(map(ord, sc)))
            for _ in range(100):
                p = instance(sc, rng)
                w = ms.solve_window(p, 10 ** 8)
                assert w.strategy == f"kronecker_window({sc})"
                # exact re-verification independent of the solver
                total = sum(nm.ceil(a * w.p_prime) for a in p.alphas)
                assert (total - w.l_hit) % p.N == 0 and w.l_hit in p.targets
                b = ms.solve_brute(p, 10 ** 7)
                assert b.p_prime <= 10 ** 7
                assert (sum(nm.ceil(a * b.p_prime) for a in p.alphas) - b.l_hit) % p.N == 0
                assert b.p_prime <= w.p_prime
        first = PathIndexData(4, NFD(p_minus=1, p_plus=2, rotations=(F(1, 3),)))
        second = PathIndexData(5, NFD(p_minus=1, p_plus=1, rotations=(S2 - 1, S3 - 1)))
        try:
            ms.shared_degree_instance(first, second)
        except ms.ShapeMismatch as e:
            assert "odd index" in str(e)
        else:
            raise AssertionError("odd-index shape was accepted")
        assert time.perf_counter() - t0 < 600


# 8 -------------------------------------------------------------------------

def gap_census():
    """Degenerate rational-rotation orbit plus two nondegenerate orbits filling
    the remaining even degrees up to 12, with the middle type number at 10."""
    first = PathIndexData(4, NFD(p_minus=1, p_plus=2, rotations=(F(1, 3),)))
    o1 = mo.CriticalTypeProfile(first, 3, {1: (0, 0, 1), 2: (0, 0, 1), 3: (0, 0, 1, 0, 0)})
    o2 = mo.nondegenerate_profile(PathIndexData(16, NFD(p_minus=1, off_circle_dim=6)))
    o3 = mo.nondegenerate_profile(PathIndexData(4, NFD(p_minus=1, rotations=(2 - S3,), off_circle_dim=4)))
    return [o1, o2, o3]


def test_criterion_8_morse_algebra(criterion):
    with criterion(8):
        t0 = time.perf_counter()
        checked = 0
        for radii in RADIUS_SETS:
            system = orc.build_ellipsoid(radii, check_index=False)
            s = mo.assemble_series([mo.nondegenerate_profile(o.data) for o in system.orbits], 80)
            for i1 in range(0, 81):
                for i2 in range(i1, 81):
                    if s.at(i1) == mo.betti(i1) and s.at(i2) == mo.betti(i2):
                        assert mo.squeeze(s, i1, i2)
                        checked += 1
        assert checked > 1000

        census = gap_census()
        T = 7
        assert mo.critical_band(census[0].orbit, 3) == (2 * T - 6, 2 * T - 2)
        s = mo.assemble_series(census, 2 * T - 2)
        assert mo.gap_window_sum(s, T) == -1
        assert s.at(2 * T - 3) - s.at(2 * T - 4) + s.at(2 * T - 5) == -1
        for m in range(1, 31):
            assert mo.alternating_sum(census[0], m) == 1

        # random rule-compliant middle assignments: squeeze holds whenever it applies
        rng = random.Random(5)
        first = census[0].orbit
        for _ in range(200):
            k3 = rng.choice(mo.admissible_k(5, 1, 2))
            k1 = rng.choice(mo.admissible_k(3, 1, 2))
            try:
                prof = mo.CriticalTypeProfile(first, 3, {1: k1, 2: k1, 3: k3})
            except mo.RuleViolation:
                continue
            s = mo.assemble_series([prof, census[1], census[2]], 12)
            for i1 in range(13):
                for i2 in range(i1, 13):
                    try:
                        ok = mo.squeeze(s, i1, i2)
                    except mo.PreconditionUnmet:
                        continue
                    assert ok
        assert time.perf_counter() - t0 < 30


# 9 -------------------------------------------------------------------------

_surds = st.builds(lambda a, b, d: nm.surd(a, b, d),
                   st.fractions(min_value=-50, max_value=50, max_denominator=50),
                   st.fractions(min_value=-20, max_value=20, max_denominator=20).filter(lambda x: x != 0),
                   st.sampled_from([2, 3, 5, 6, 7, 10, 11]))


@settings(max_examples=300, deadline=None)
@given(_surds, st.integers(-30, 30))
def _bracket_laws(x, k):
    b = nm.brackets(x)
    with mpmath.workdps(80):
        v = nm.to_mpf(x, 300)
        assert b.floor == int(mpmath.floor(v))
        assert b.ceil == int(mpmath.ceil(v))
    assert b.phi == 1
    assert nm.ceil(x + k) == b.ceil + k
    assert nm.floor(-x) == -b.ceil
    assert 0 < float(nm.to_mpf(b.frac)) < 1


def _roundtrip(rng):
    d = random_path_data(rng).decomposition
    assert NFD.from_json(d.to_json()) == d
    if d.n <= 6 and all(nm.is_rational(x) for x in d.rotations + d.nontrivial_n2 + d.trivial_n2):
        ratios = tuple(d.rotations + d.nontrivial_n2 + d.trivial_n2)
        back = decompose(realize(d), candidates=ratios)
        assert back == d, (d, back)


def test_criterion_9_properties(criterion):
    with criterion(9):
        t0 = time.perf_counter()
        _bracket_laws()
        rng = random.Random(11)
        for _ in range(200):
            _roundtrip(rng)
        rng = random.Random(7)
        for _ in range(1000):
            d = random_path_data(rng)
            for m in range(1, 8):
                assert bott_estimate_check(d, m)
        # {k alpha} equidistributes: empirical CDF within 0.02 of uniform
        k = np.arange(1, 10 ** 6 + 1, dtype=np.float64)
        for alpha in (math.sqrt(2), math.sqrt(3) - 1, (math.sqrt(5) - 1) / 2):
            fr = np.sort(np.mod(k * alpha, 1.0))
            ecdf = np.arange(1, len(fr) + 1) / len(fr)
            assert np.max(np.abs(ecdf - fr)) < 0.02
        pair = np.stack([np.mod(k * math.sqrt(2), 1.0), np.mod(k * math.sqrt(3), 1.0)])
        hist, _, _ = np.histogram2d(pair[0], pair[1], bins=10, range=[[0, 1], [0, 1]])
        assert np.max(np.abs(hist / (len(k) / 100) - 1)) < 0.02
        assert time.perf_counter() - t0 < 300

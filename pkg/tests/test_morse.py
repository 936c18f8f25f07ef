import json
from fractions import Fraction as F
from pathlib import Path

import pytest

from indexiter import morse as mo
from indexiter import numeric as nm
from indexiter import oracle as orc
from indexiter.iteration import PathIndexData
from indexiter.symplectic import NormalFormDecomposition as NFD

S2, S3 = nm.sqrt(2), nm.sqrt(3)
FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
THIRD = PathIndexData(4, NFD(p_minus=1, p_plus=2, rotations=(F(1, 3),)))


def _census(name):
    return mo.census_from_json(json.loads((FIXTURES / name).read_text()))


def _ellipsoid_census(radii):
    return [mo.nondegenerate_profile(o.data) for o in orc.build_ellipsoid(radii, check_index=False).orbits]


def test_K_values():
    assert mo.compute_K(PathIndexData(5, NFD(p_minus=1, p_plus=3))) == 1
    assert mo.compute_K(PathIndexData(4, NFD(p_minus=1, q_plus=1))) == 2
    assert mo.compute_K(THIRD) == 3
    assert mo.compute_K(PathIndexData(2, NFD(p_minus=1, rotations=(S2 - 1,)))) == 1


def test_band_and_beta():
    assert mo.critical_band(THIRD, 1) == (0, 2)
    assert mo.beta(THIRD, 1) == 1


def test_rules():
    mo.check_rules((0, 1, 0), 3, 1)
    mo.check_rules((1, 0, 0), 3, 1)
    with pytest.raises(mo.RuleViolation):
        mo.check_rules((2, 0), 2, 1)
    with pytest.raises(mo.RuleViolation):
        mo.check_rules((1, 0, 1), 3, 1)
    with pytest.raises(mo.RuleViolation):
        mo.check_rules((0, 1, 1), 3, 1)
    with pytest.raises(mo.RuleViolation):
        mo.check_rules((1, 0), 2, -1)
    with pytest.raises(mo.RuleViolation):
        mo.check_rules((0,), 2, 1)


def test_admissible_enumeration():
    ks = mo.admissible_k(3, 1)
    assert (1, 0, 0) in ks and (0, 1, 0) in ks and (0, 0, 1) in ks and (0, 0, 0) in ks
    assert (1, 0, 0) not in mo.admissible_k(3, -1)
    for k in ks:
        mo.check_rules(k, 3, 1)


def test_profile_validation():
    with pytest.raises(mo.RuleViolation):
        mo.CriticalTypeProfile(THIRD, 2, {1: (0, 0, 1), 2: (0, 0, 1)})
    with pytest.raises(mo.RuleViolation):
        mo.CriticalTypeProfile(THIRD, 3, {1: (0, 0, 1), 2: (0, 0, 1)})
    p = mo.CriticalTypeProfile(THIRD, 3, {1: (0, 0, 1), 2: (0, 0, 1), 3: (0, 0, 1, 0, 0)})
    assert p.k(4) == p.k(1)
    assert mo.CriticalTypeProfile.from_json(THIRD, p.to_json()) == p


def test_degenerate_path_rejected():
    with pytest.raises(mo.DegeneratePath):
        mo.nondegenerate_profile(THIRD)


def test_betti():
    assert [mo.betti(i) for i in range(-1, 5)] == [0, 1, 0, 1, 0, 1]


def test_ellipsoid_series():
    s = mo.assemble_series(_census("ellipsoid2_census.json"), 40)
    rep = mo.morse_inequalities(s)
    assert rep.ok
    assert all(s.at(i) == mo.betti(i) for i in range(41))


def test_empty_census_fails_at_zero():
    assert mo.morse_inequalities(mo.assemble_series([], 10)).first_failure == 0


def test_deleted_orbit_fails():
    census = _ellipsoid_census([F(1), S2, 1 + S2])
    assert mo.morse_inequalities(mo.assemble_series(census, 60)).ok
    for k in range(3):
        rest = census[:k] + census[k + 1:]
        assert not mo.morse_inequalities(mo.assemble_series(rest, 60)).ok


def test_mean_index_too_small():
    slow = PathIndexData(1, NFD(p_minus=1, off_circle_dim=2))  # mean index exactly 2
    with pytest.raises(mo.MeanIndexTooSmall):
        mo.assemble_series([mo.nondegenerate_profile(slow)], 10)


def test_squeeze_and_gap_window():
    census = _census("gap_census.json")
    s = mo.assemble_series(census, 12)
    assert mo.squeeze(s, 0, 10)
    assert mo.gap_window_sum(s, 7) == -1
    for m in range(1, 7):
        assert mo.alternating_sum(census[0], m) == 1


def test_squeeze_preconditions():
    census = _census("gap_census.json")
    s = mo.assemble_series(census, 12)
    assert mo.squeeze_sum(s, 1, 12) == mo.squeeze_sum(s, 0, 12) - 1
    with pytest.raises(mo.PreconditionUnmet):
        mo.squeeze_sum(mo.assemble_series(census[1:], 12), 0, 12)
    with pytest.raises(mo.PreconditionUnmet):
        mo.squeeze_sum(s, 0, 13)


def test_deterministic_and_json_roundtrip():
    census = _census("gap_census.json")
    again = mo.census_from_json(mo.census_to_json(census))
    assert again == census
    a, b = mo.assemble_series(census, 12), mo.assemble_series(again, 12)
    assert a.M == b.M and a.contributions == b.contributions

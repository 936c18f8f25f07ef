from fractions import Fraction as F

import pytest

from indexiter import kronecker as kr
from indexiter import numeric as nm
from indexiter.iteration import HypothesisUnmet, PathIndexData, iterate, jump_window
from indexiter.symplectic import NormalFormDecomposition as NFD

S2, S3 = nm.sqrt(2), nm.sqrt(3)
FLAT3 = PathIndexData(5, NFD(p_minus=1, p_plus=3))
ROT = PathIndexData(4, NFD(p_minus=1, p_plus=2, rotations=(S2 - 1,)))


def test_rref_null_space():
    rows = [[F(1), F(2), F(3)], [F(2), F(4), F(6)]]
    assert len(kr.row_space(rows)) == 1
    ns = kr.null_space(rows, 3)
    assert len(ns) == 2
    for v in ns:
        assert sum(a * b for a, b in zip(rows[0], v)) == 0


def test_rational_problem():
    p = kr.build_problem([FLAT3], F(1, 1000))
    assert p.v == (F(1, 6),)
    assert kr.tangent_space(p) == []
    with pytest.raises(kr.DegenerateTangentSpace):
        kr.pick_vertex(p)
    ts = kr.find_tuples(p, kr.vertex_from([0]), 3, 100)
    assert [t.T for t in ts] == [6, 12, 18]
    for t in ts:
        assert jump_window(FLAT3, t.m[0], t.T).ok


def test_single_rotation_v():
    p = kr.build_problem([ROT], F(1, 1000))
    assert p.M == 1
    assert p.v == (1 / (4 + 2 * (S2 - 1)), 2 * (S2 - 1) / (4 + 2 * (S2 - 1)))
    assert len(kr.tangent_space(p)) == 1


def test_tuples_are_exact():
    p = kr.build_problem([ROT], F(1, 1000))
    c = kr.pick_vertex(p)
    for t in kr.find_tuples(p, c, 3, 10 ** 6):
        assert kr.tuple_for(p, c, t.T) == t
        assert not kr.tuple_problems(p, t)
        assert iterate(ROT, 2 * t.m[0] + 1).i_m == 2 * t.T + ROT.i1


def test_search_exhausted():
    p = kr.build_problem([ROT], F(1, 1000))
    with pytest.raises(kr.SearchExhausted) as e:
        kr.find_tuples(p, kr.pick_vertex(p), 1, 5)
    assert e.value.t_bound == 5


def test_needs_shear_factor():
    with pytest.raises(HypothesisUnmet):
        kr.build_problem([PathIndexData(3, NFD(p_plus=1, rotations=(S2 - 1,)))], F(1, 10))


def test_bad_relations():
    with pytest.raises(kr.InconsistentRelations):
        kr.build_problem([ROT], F(1, 10), relations=[[1, 1]])
    with pytest.raises(kr.InconsistentRelations):
        kr.build_problem([ROT], F(1, 10), relations=[[1]])


def test_eps_must_be_positive():
    with pytest.raises(ValueError):
        kr.build_problem([ROT], 0)


def test_vertex_sign_flip():
    p = kr.build_problem([ROT], F(1, 1000))
    a, b = kr.pick_vertex(p, 1), kr.pick_vertex(p, -1)
    assert all(x == -y for x, y in zip(a.a, b.a))
    assert {a.chi, b.chi} == {(1, 0), (0, 1)}


def test_commutation_needs_two_paths():
    with pytest.raises(ValueError):
        kr.commutation_experiment(kr.build_problem([ROT], F(1, 10)), 0, 1)


def test_commutation_blocked_by_proportional_means():
    a = PathIndexData(2, NFD(p_minus=1, rotations=(S2 - 1,)))
    b = PathIndexData(4, NFD(p_minus=1, rotations=(2 * S2 - 2,)))
    res = kr.commutation_experiment(kr.build_problem([a, b], F(1, 100)), 0, 1, 1000)
    assert not res.found and res.diagnostic == 0

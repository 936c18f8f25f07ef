"""Random congruence instances aimed at each window sub-case."""
import random
from fractions import Fraction

from indexiter import numeric as nm
from indexiter.modsolve import CongruenceProblem

RADICANDS = (2, 3, 5, 6, 7, 10, 11, 13)
CASE1_TARGETS = (-1, 1, 4)
CASE2_TARGETS = (0, 2, 5)


def _q(rng, lo=1, hi=4, signed=True):
    x = Fraction(rng.randint(lo, hi), rng.randint(1, 4))
    return -x if signed and rng.random() < 0.5 else x


def _irr(rng, d):
    return Fraction(rng.randint(0, 3), rng.randint(1, 3)) + _q(rng, signed=False) * nm.sqrt(d)


def _free(rng, k):
    return [_irr(rng, d) for d in rng.sample(RADICANDS, k)]


def _coef(rng, sign):
    return sign * _q(rng, signed=False)


def instance(subcase: str, rng: random.Random) -> CongruenceProblem:
    N = rng.randint(2, 9)
    if subcase == "1.1":
        return CongruenceProblem(tuple(_free(rng, 2)), N, CASE1_TARGETS)
    if subcase.startswith("1.2"):
        (a1,) = _free(rng, 1)
        if subcase == "1.2(i)":
            c = _coef(rng, -1)
        elif subcase == "1.2(ii-a)":
            c = Fraction(1)
        else:
            c = _coef(rng, 1)
            while c == 1:
                c = _coef(rng, 1)
        return CongruenceProblem((a1, c * a1 + _q(rng, 0, 3)), N, CASE1_TARGETS)
    if subcase == "2.1":
        return CongruenceProblem(tuple(_free(rng, 3)), N, CASE2_TARGETS)
    signs = {"(i)": (1, 1), "(ii)": (-1, -1), "(iii)": (1, -1), "(iv)": (-1, 1)}[subcase[3:]]
    c1, c2 = _coef(rng, signs[0]), _coef(rng, signs[1])
    if subcase.startswith("2.2"):
        a1, a2 = _free(rng, 2)
        a3 = c1 * a1 + c2 * a2 + _q(rng, 0, 3)
        return CongruenceProblem((a1, a2, a3), N, CASE2_TARGETS)
    (a1,) = _free(rng, 1)
    return CongruenceProblem((a1, c1 * a1 + _q(rng, 0, 3), c2 * a1 + _q(rng, 0, 3)), N, CASE2_TARGETS)


SUBCASES = ("1.1", "1.2(i)", "1.2(ii-a)", "1.2(ii-b)", "2.1",
            "2.2(i)", "2.2(ii)", "2.2(iii)", "2.2(iv)", "2.3(i)", "2.3(ii)", "2.3(iii)", "2.3(iv)")


def random_ratio(rng):
    if rng.random() < 0.5:
        s = rng.randint(3, 12)
        r = rng.randint(1, s - 1)
        x = Fraction(r, s)
        return x if x != Fraction(1, 2) else Fraction(1, 3)
    d = rng.choice(RADICANDS)
    x = nm.frac(rng.randint(1, 5) * nm.sqrt(d) / rng.randint(1, 4))
    return x


def random_path_data(rng, p_minus_min: int = 1):
    """A valid PathIndexData with a random endpoint and an index of the right parity."""
    from indexiter.iteration import PathIndexData, odd_block_count
    from indexiter.symplectic import NormalFormDecomposition

    counts = [rng.randint(p_minus_min, 2)] + [rng.choice((0, 0, 1)) for _ in range(5)]
    d = NormalFormDecomposition(
        *counts,
        rotations=tuple(random_ratio(rng) for _ in range(rng.randint(0, 2))),
        nontrivial_n2=tuple(random_ratio(rng) for _ in range(rng.choice((0, 0, 1)))),
        trivial_n2=tuple(random_ratio(rng) for _ in range(rng.choice((0, 0, 1)))),
        off_circle_dim=2 * rng.choice((0, 0, 1)),
    )
    i1 = rng.randint(-3, 12)
    if d.off_circle_dim == 0 and (i1 - odd_block_count(d)) % 2:
        i1 += 1
    return PathIndexData(i1, d)

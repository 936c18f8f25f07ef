"""Exact scalars and the bracket functions floor, ceiling, phi and frac.

Three kinds of scalar are supported:

* ``Fraction`` for rationals (ints are accepted and promoted),
* ``Surd`` for ``a + b*sqrt(d)`` with ``d`` square-free, so provably irrational,
* ``Approx`` for a high-precision decimal carrying a guard band.

Every integrality decision (floor, ceiling, comparison) is exact for the
first two kinds and guarded for the third.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering
from typing import Iterable, Sequence, Union

import mpmath

DEFAULT_GUARD = Fraction(1, 10**30)
APPROX_MIN_BITS = 128


class GuardViolation(ArithmeticError):
    """An approximate value is too close to a decision boundary."""


class UnsupportedArithmetic(ArithmeticError):
    """Operation leaves the supported number tower."""


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"not a rational: {x!r}")


def _squarefree_split(d: int) -> tuple[int, int]:
    """Return (k, e) with d = k*k*e and e square-free."""
    if d <= 0:
        raise ValueError("radicand must be positive")
    k, e = 1, d
    p = 2
    while p * p <= e:
        while e % (p * p) == 0:
            e //= p * p
            k *= p
        p += 1
    return k, e


def _sign_single(a: Fraction, b: Fraction, d: int) -> int:
    # sign of a + b*sqrt(d) with b != 0 and d square-free > 1
    sa = (a > 0) - (a < 0)
    sb = (b > 0) - (b < 0)
    if sa == 0 or sa == sb:
        return sb
    c = a * a - b * b * d
    return sa if c > 0 else sb


@total_ordering
class Surd:
    """``a + sum(b_d * sqrt(d))`` over distinct square-free ``d > 1``.

    Almost every value in practice has a single radical; a few constructed
    test problems need two (sums such as c1*sqrt(2) + c2*sqrt(3)).
    Instances always carry at least one nonzero radical term.
    """

    __slots__ = ("a", "terms")

    def __init__(self, a, terms: Iterable[tuple[int, Fraction]]):
        self.a = _frac(a)
        self.terms = tuple(terms)

    # construction -----------------------------------------------------
    @staticmethod
    def make(a, terms: Iterable[tuple[int, object]]) -> "Scalar":
        acc: dict[int, Fraction] = {}
        a = _frac(a)
        for d, b in terms:
            b = _frac(b)
            if b == 0:
                continue
            k, e = _squarefree_split(int(d))
            if e == 1:
                a += b * k
                continue
            acc[e] = acc.get(e, Fraction(0)) + b * k
        items = tuple(sorted((d, b) for d, b in acc.items() if b != 0))
        if not items:
            return a
        return Surd(a, items)

    @property
    def b(self) -> Fraction:
        if len(self.terms) != 1:
            raise UnsupportedArithmetic("value has several radicals")
        return self.terms[0][1]

    @property
    def d(self) -> int:
        if len(self.terms) != 1:
            raise UnsupportedArithmetic("value has several radicals")
        return self.terms[0][0]

    @property
    def single(self) -> bool:
        return len(self.terms) == 1

    # arithmetic -------------------------------------------------------
    def __neg__(self):
        return Surd(-self.a, tuple((d, -b) for d, b in self.terms))

    def __pos__(self):
        return self

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            return Surd(self.a + other, self.terms)
        if isinstance(other, Surd):
            return Surd.make(self.a + other.a, self.terms + other.terms)
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, (int, Fraction, Surd)):
            return self + (-other)
        return NotImplemented

    def __rsub__(self, other):
        if isinstance(other, (int, Fraction)):
            return (-self) + other
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            if other == 0:
                return Fraction(0)
            return Surd(self.a * other, tuple((d, b * other) for d, b in self.terms))
        if isinstance(other, Surd):
            parts = [(d, self.a * b) for d, b in other.terms]
            parts += [(d, other.a * b) for d, b in self.terms]
            const = self.a * other.a
            for d1, b1 in self.terms:
                for d2, b2 in other.terms:
                    g = math.gcd(d1, d2)
                    parts.append(((d1 // g) * (d2 // g), b1 * b2 * g))
            return Surd.make(const, parts)
        return NotImplemented

    __rmul__ = __mul__

    def inverse(self):
        if not self.single:
            raise UnsupportedArithmetic("inverse of a multi-radical surd")
        d, b = self.terms[0]
        den = self.a * self.a - b * b * d
        return Surd(self.a / den, ((d, -b / den),))

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return self * (1 / _frac(other))
        if isinstance(other, Surd):
            return self * other.inverse()
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.inverse() * other
        return NotImplemented

    # order ------------------------------------------------------------
    def sign(self) -> int:
        if self.single:
            d, b = self.terms[0]
            return _sign_single(self.a, b, d)
        return _sign_multi(self)

    def __eq__(self, other):
        if isinstance(other, Surd):
            return self.a == other.a and self.terms == other.terms
        if isinstance(other, (int, Fraction)):
            return False
        return NotImplemented

    def __hash__(self):
        return hash((self.a, self.terms))

    def __lt__(self, other):
        if isinstance(other, (int, Fraction, Surd)):
            return sign(self - other) < 0
        return NotImplemented

    def __float__(self):
        return float(self.a) + sum(float(b) * math.sqrt(d) for d, b in self.terms)

    def __repr__(self):
        parts = [str(self.a)] + [f"{b}*sqrt({d})" for d, b in self.terms]
        return "Surd(" + " + ".join(parts) + ")"


def _sign_multi(x: Surd) -> int:
    # Square roots of distinct square-free integers are linearly independent
    # over Q, so x != 0 and interval refinement must terminate.
    iv = mpmath.iv
    saved = iv.prec
    prec = 64
    try:
        while prec <= 1 << 16:
            iv.prec = prec
            v = iv.mpf(x.a.numerator) / x.a.denominator
            for d, b in x.terms:
                v += iv.mpf(b.numerator) / b.denominator * iv.sqrt(d)
            if v.a > 0:
                return 1
            if v.b < 0:
                return -1
            prec *= 2
    finally:
        iv.prec = saved
    raise ArithmeticError("sign refinement did not terminate")


@total_ordering
class Approx:
    """High-precision decimal with a guard band.

    ``dec`` is the canonical decimal text; it is what gets serialized, so a
    JSON round trip is bit exact.
    """

    __slots__ = ("dec", "guard", "_mpf", "_bits")

    def __init__(self, dec, guard=DEFAULT_GUARD):
        if isinstance(dec, mpmath.mpf):
            dec = mpmath.nstr(dec, 60, strip_zeros=False, min_fixed=-math.inf, max_fixed=math.inf)
        self.dec = str(dec).strip()
        self.guard = _frac(guard)
        if self.guard <= 0:
            raise ValueError("guard must be positive")
        digits = sum(ch.isdigit() for ch in self.dec)
        self._bits = max(APPROX_MIN_BITS, int(digits * 3.33) + 16)
        with mpmath.workprec(self._bits):
            self._mpf = mpmath.mpf(self.dec)

    @property
    def value(self) -> mpmath.mpf:
        return self._mpf

    def _wrap(self, v, guard) -> "Approx":
        with mpmath.workprec(self._bits):
            text = mpmath.nstr(v, max(40, int(self._bits / 3.33)), strip_zeros=False,
                               min_fixed=-math.inf, max_fixed=math.inf)
        return Approx(text, guard)

    def _coerce(self, other):
        if isinstance(other, Approx):
            return other.value, other.guard
        if isinstance(other, (int, Fraction, Surd)):
            return to_mpf(other, self._bits + 32), Fraction(0)
        return None

    def __neg__(self):
        return Approx(self.dec[1:] if self.dec.startswith("-") else "-" + self.dec, self.guard)

    def __add__(self, other):
        c = self._coerce(other)
        if c is None:
            return NotImplemented
        with mpmath.workprec(self._bits + 32):
            return self._wrap(self.value + c[0], self.guard + c[1])

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        c = self._coerce(other)
        if c is None:
            return NotImplemented
        with mpmath.workprec(self._bits + 32):
            # first-order error propagation, rounded up to an integer factor
            g = self.guard * (int(abs(c[0])) + 1) + c[1] * (int(abs(self.value)) + 1)
            return self._wrap(self.value * c[0], g)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return self * (1 / _frac(other))
        c = self._coerce(other)
        if c is None:
            return NotImplemented
        with mpmath.workprec(self._bits + 32):
            return self * self._wrap(mpmath.mpf(1) / c[0], c[1] if c[1] else self.guard)

    def __rtruediv__(self, other):
        if self._coerce(other) is None:
            return NotImplemented
        with mpmath.workprec(self._bits + 32):
            inv = self._wrap(mpmath.mpf(1) / self.value, self.guard)
        return inv * other

    def sign(self) -> int:
        with mpmath.workprec(self._bits):
            if abs(self.value) <= to_mpf(self.guard, self._bits):
                raise GuardViolation(f"sign of {self.dec} is inside guard {self.guard}")
            return 1 if self.value > 0 else -1

    def __eq__(self, other):
        if isinstance(other, Approx):
            return self.dec == other.dec and self.guard == other.guard
        return False

    def __hash__(self):
        return hash((self.dec, self.guard))

    def __lt__(self, other):
        return sign(self - other) < 0

    def __float__(self):
        return float(self.value)

    def __repr__(self):
        return f"Approx({self.dec!r}, guard={self.guard})"


Scalar = Union[Fraction, Surd, Approx]


def scalar(x) -> Scalar:
    """Coerce ints and strings to Fraction, pass other scalars through."""
    if isinstance(x, (Fraction, Surd, Approx)):
        return x
    if isinstance(x, (int, str)):
        return Fraction(x)
    raise TypeError(f"cannot make a scalar from {x!r}")


def surd(a, b, d: int) -> Scalar:
    """``a + b*sqrt(d)``, normalized; collapses to a Fraction when rational."""
    return Surd.make(a, [(d, b)])


def sqrt(n) -> Scalar:
    n = _frac(n)
    # sqrt(p/q) = sqrt(p*q)/q
    return surd(0, Fraction(1, n.denominator), n.numerator * n.denominator)


def is_rational(x) -> bool:
    return isinstance(x, (int, Fraction))


def sign(x) -> int:
    if isinstance(x, (int, Fraction)):
        return (x > 0) - (x < 0)
    return x.sign()


def compare(x, y) -> int:
    """-1, 0 or 1 as x <, =, > y."""
    return sign(scalar(x) - scalar(y))


def to_mpf(x, bits: int = 200) -> mpmath.mpf:
    with mpmath.workprec(bits):
        if isinstance(x, int):
            return mpmath.mpf(x)
        if isinstance(x, Fraction):
            return mpmath.mpf(x.numerator) / x.denominator
        if isinstance(x, Surd):
            v = mpmath.mpf(x.a.numerator) / x.a.denominator
            for d, b in x.terms:
                v += mpmath.mpf(b.numerator) / b.denominator * mpmath.sqrt(d)
            return v
        if isinstance(x, Approx):
            return +x.value
    raise TypeError(x)


def floor(x) -> int:
    if isinstance(x, int):
        return x
    if isinstance(x, Fraction):
        return x.numerator // x.denominator
    if isinstance(x, Surd):
        if x.single:
            k = math.floor(float(x))
            # float guess can be off by one near integers or for huge values
            while sign(x - k) < 0:
                k -= 1
            while sign(x - (k + 1)) >= 0:
                k += 1
            return k
        k = int(mpmath.floor(to_mpf(x, 128)))
        while sign(x - k) < 0:
            k -= 1
        while sign(x - (k + 1)) >= 0:
            k += 1
        return k
    if isinstance(x, Approx):
        with mpmath.workprec(x._bits):
            v = x.value
            k = int(mpmath.nint(v))
            if abs(v - k) <= to_mpf(x.guard, x._bits):
                raise GuardViolation(f"{x.dec} lies within {x.guard} of {k}")
            return int(mpmath.floor(v))
    raise TypeError(x)


def ceil(x) -> int:
    if isinstance(x, (int, Fraction)):
        return -floor(-_frac(x))
    if isinstance(x, Surd):
        return floor(x) + 1
    return -floor(-x)


def phi(x) -> int:
    """phi(x) = ceil(x) - floor(x): 0 on integers, 1 elsewhere."""
    return ceil(x) - floor(x)


def frac(x) -> Scalar:
    return scalar(x) - floor(x)


@dataclass(frozen=True)
class BracketResult:
    floor: int
    ceil: int
    phi: int
    frac: Scalar


def brackets(x) -> BracketResult:
    x = scalar(x)
    f = floor(x)
    c = ceil(x)
    return BracketResult(f, c, c - f, x - f)


def rational_relation_check(coeffs: Sequence[int], values: Sequence) -> bool:
    """True iff sum(coeffs[i] * values[i]) is an integer."""
    if len(coeffs) != len(values):
        raise ValueError("length mismatch")
    total: Scalar = Fraction(0)
    for c, v in zip(coeffs, values):
        if c:
            total = total + scalar(v) * c
    if isinstance(total, Fraction):
        return total.denominator == 1
    if isinstance(total, Surd):
        return False
    floor(total)  # raises GuardViolation when near an integer
    return False


def rational_part(x) -> Fraction:
    if isinstance(x, (int, Fraction)):
        return _frac(x)
    if isinstance(x, Surd):
        return x.a
    raise UnsupportedArithmetic("approximate value has no exact rational part")


def radical_parts(x) -> dict[int, Fraction]:
    if isinstance(x, (int, Fraction)):
        return {}
    if isinstance(x, Surd):
        return dict(x.terms)
    raise UnsupportedArithmetic("approximate value has no exact radical part")


# JSON --------------------------------------------------------------------

def to_json(x):
    x = scalar(x)
    if isinstance(x, Fraction):
        return {"rat": [x.numerator, x.denominator]}
    if isinstance(x, Surd):
        out = [x.a.numerator, x.a.denominator]
        for d, b in x.terms:
            out += [b.numerator, b.denominator, d]
        return {"surd": out}
    g = x.guard
    guard = f"1e-{len(str(g.denominator)) - 1}" if g.numerator == 1 and str(g.denominator).strip("0") == "1" \
        else f"{g.numerator}/{g.denominator}"
    return {"approx": {"dec": x.dec, "guard": guard}}


def _parse_guard(text) -> Fraction:
    text = str(text)
    if "e" in text.lower() or "." in text:
        from decimal import Decimal
        return Fraction(Decimal(text))
    return Fraction(text)


def from_json(obj) -> Scalar:
    if isinstance(obj, int) and not isinstance(obj, bool):
        return Fraction(obj)
    if not isinstance(obj, dict) or len(obj) != 1:
        raise ValueError(f"bad scalar encoding: {obj!r}")
    (kind, body), = obj.items()
    if kind == "rat":
        num, den = body
        if not isinstance(num, int) or not isinstance(den, int) or den <= 0:
            raise ValueError(f"bad rational: {body!r}")
        q = Fraction(num, den)
        if (q.numerator, q.denominator) != (num, den):
            raise ValueError(f"rational not in lowest terms: {body!r}")
        return q
    if kind == "surd":
        if len(body) < 5 or (len(body) - 2) % 3:
            raise ValueError(f"bad surd: {body!r}")
        if not all(isinstance(v, int) for v in body):
            raise ValueError(f"bad surd: {body!r}")
        a = Fraction(body[0], body[1])
        terms = []
        for i in range(2, len(body), 3):
            bn, bd, d = body[i:i + 3]
            if bd <= 0 or bn == 0 or d <= 1 or _squarefree_split(d)[0] != 1:
                raise ValueError(f"bad surd term: {body[i:i + 3]!r}")
            terms.append((d, Fraction(bn, bd)))
        if len({d for d, _ in terms}) != len(terms):
            raise ValueError("repeated radicand")
        return Surd(a, tuple(sorted(terms)))
    if kind == "approx":
        if set(body) != {"dec", "guard"}:
            raise ValueError(f"bad approx: {body!r}")
        return Approx(body["dec"], _parse_guard(body["guard"]))
    raise ValueError(f"unknown scalar kind {kind!r}")


def parse_scalar(text: str) -> Scalar:
    """Command-line syntax: ``3/2``, ``-4``, ``s:a,b,d`` or ``x:decimal[@guard]``."""
    text = text.strip()
    if text.startswith("s:"):
        parts = [p.strip() for p in text[2:].split(",")]
        if len(parts) != 3:
            raise ValueError(f"surd needs a,b,d: {text!r}")
        return surd(Fraction(parts[0]), Fraction(parts[1]), int(parts[2]))
    if text.startswith("x:"):
        body = text[2:]
        guard = DEFAULT_GUARD
        if "@" in body:
            body, g = body.split("@", 1)
            guard = _parse_guard(g)
        return Approx(body, guard)
    return Fraction(text)


def format_scalar(x) -> str:
    x = scalar(x)
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, Surd):
        parts = [] if x.a == 0 else [str(x.a)]
        parts += [f"{b}*sqrt({d})" for d, b in x.terms]
        return " + ".join(parts)
    return x.dec

"""Exact arithmetic over rationals and real quadratic irrationals.

Every number the core manipulates is either a `fractions.Fraction` or a
`Surd` representing a + b*sqrt(d) with rational a, b and squarefree d > 1.
All order comparisons are exact integer comparisons; floating point only
appears when a caller explicitly asks for an approximation.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Union

from sympy import factorint

ExactReal = Union[Fraction, "Surd"]


def squarefree_split(n: int) -> tuple[int, int]:
    """Write n > 0 as s*s*d with d squarefree; return (s, d)."""
    if n <= 0:
        raise ValueError(f"expected a positive integer, got {n}")
    s, d = 1, 1
    for p, e in factorint(n).items():
        s *= p ** (e // 2)
        if e % 2:
            d *= p
    return s, d


def make_surd(a, b, d: int) -> ExactReal:
    """Build a + b*sqrt(d), collapsing to a Fraction when the value is rational."""
    a, b = Fraction(a), Fraction(b)
    if d <= 0:
        raise ValueError("radicand must be positive")
    if b == 0:
        return a
    s, d0 = squarefree_split(d)
    if d0 == 1:
        return a + b * s
    return Surd(a, b * s, d0)


def _sign_triplet(a: Fraction, b: Fraction, d: int) -> int:
    """Sign of a + b*sqrt(d) for squarefree d > 1 (so the value is 0 only if a = b = 0)."""
    if b == 0:
        return (a > 0) - (a < 0)
    if a == 0:
        return (b > 0) - (b < 0)
    if a > 0 and b > 0:
        return 1
    if a < 0 and b < 0:
        return -1
    # opposite signs: compare a^2 against b^2 d, the larger magnitude wins
    lhs = a * a
    rhs = b * b * d
    if lhs == rhs:  # would mean sqrt(d) rational
        raise ArithmeticError(f"sqrt({d}) behaved rationally; radicand not squarefree?")
    if a > 0:
        return 1 if lhs > rhs else -1
    return 1 if rhs > lhs else -1


class Surd:
    """a + b*sqrt(d) with Fraction coefficients, b != 0 and d squarefree > 1.

    Arithmetic stays inside the field Q(sqrt(d)) and collapses to Fraction
    whenever the radical part cancels.  Mixing two different radicands is an
    error rather than a silent approximation.
    """

    __slots__ = ("a", "b", "d")

    def __init__(self, a: Fraction, b: Fraction, d: int):
        self.a = a
        self.b = b
        self.d = d

    def conjugate(self) -> "Surd":
        return Surd(self.a, -self.b, self.d)

    def _coerce(self, other) -> tuple[Fraction, Fraction]:
        """Return (a, b) of the other operand inside this Surd's field."""
        if isinstance(other, Surd):
            if other.d != self.d:
                raise ValueError(f"cannot mix sqrt({self.d}) with sqrt({other.d})")
            return other.a, other.b
        if isinstance(other, (int, Fraction)):
            return Fraction(other), Fraction(0)
        raise TypeError(f"unsupported operand {type(other).__name__}")

    @staticmethod
    def _wrap(a: Fraction, b: Fraction, d: int) -> ExactReal:
        return a if b == 0 else Surd(a, b, d)

    def __add__(self, other) -> ExactReal:
        oa, ob = self._coerce(other)
        return self._wrap(self.a + oa, self.b + ob, self.d)

    __radd__ = __add__

    def __sub__(self, other) -> ExactReal:
        oa, ob = self._coerce(other)
        return self._wrap(self.a - oa, self.b - ob, self.d)

    def __rsub__(self, other) -> ExactReal:
        oa, ob = self._coerce(other)
        return self._wrap(oa - self.a, ob - self.b, self.d)

    def __neg__(self) -> "Surd":
        return Surd(-self.a, -self.b, self.d)

    def __mul__(self, other) -> ExactReal:
        oa, ob = self._coerce(other)
        return self._wrap(
            self.a * oa + self.b * ob * self.d,
            self.a * ob + self.b * oa,
            self.d,
        )

    __rmul__ = __mul__

    def _inverse(self) -> "Surd":
        # 1/(a + b sqrt d) = (a - b sqrt d) / (a^2 - b^2 d); denominator is
        # nonzero because sqrt(d) is irrational
        norm = self.a * self.a - self.b * self.b * self.d
        return Surd(self.a / norm, -self.b / norm, self.d)

    def __truediv__(self, other) -> ExactReal:
        if isinstance(other, (int, Fraction)):
            if other == 0:
                raise ZeroDivisionError("division by zero")
            return Surd(self.a / other, self.b / other, self.d)
        oa, ob = self._coerce(other)
        return self * Surd(oa, ob, self.d)._inverse()

    def __rtruediv__(self, other) -> ExactReal:
        if not isinstance(other, (int, Fraction)):
            return NotImplemented
        inv = self._inverse()
        return self._wrap(inv.a * other, inv.b * other, self.d)

    def _cmp_sign(self, other) -> int:
        oa, ob = self._coerce(other)
        return _sign_triplet(self.a - oa, self.b - ob, self.d)

    def __eq__(self, other) -> bool:
        if isinstance(other, Surd):
            return self.d == other.d and self.a == other.a and self.b == other.b
        if isinstance(other, (int, Fraction)):
            return False  # a surd is irrational
        return NotImplemented

    def __hash__(self):
        return hash((self.a, self.b, self.d))

    def __lt__(self, other):
        return self._cmp_sign(other) < 0

    def __le__(self, other):
        return self._cmp_sign(other) <= 0

    def __gt__(self, other):
        return self._cmp_sign(other) > 0

    def __ge__(self, other):
        return self._cmp_sign(other) >= 0

    def __float__(self) -> float:
        lo, _ = fraction_bounds(self, 96)
        return float(lo)

    def __repr__(self):
        return f"Surd({self.a!r}, {self.b!r}, {self.d})"

    def __str__(self):
        sign = "+" if self.b >= 0 else "-"
        return f"{self.a} {sign} {abs(self.b)}*sqrt({self.d})"


def fraction_bounds(x: ExactReal, prec_bits: int = 96) -> tuple[Fraction, Fraction]:
    """Exact enclosure lo <= x <= hi with hi - lo <= |b| / 2^prec_bits."""
    if isinstance(x, (int, Fraction)):
        f = Fraction(x)
        return f, f
    num = math.isqrt(x.d << (2 * prec_bits))
    scale = Fraction(1, 1 << prec_bits)
    root_lo = num * scale
    root_hi = (num + 1) * scale
    if x.b >= 0:
        return x.a + x.b * root_lo, x.a + x.b * root_hi
    return x.a + x.b * root_hi, x.a + x.b * root_lo


def exact_floor(x: ExactReal) -> int:
    """Largest integer <= x, decided exactly."""
    if isinstance(x, (int, Fraction)):
        return math.floor(x)
    n = math.floor(float(x))
    while x < n:
        n -= 1
    while x >= n + 1:
        n += 1
    return n


def exact_ceil(x: ExactReal) -> int:
    return -exact_floor(-x)


def _log_fraction(f: Fraction) -> float:
    # math.log accepts arbitrary-size ints, so this stays accurate for the
    # huge numerators exact trajectories produce
    return math.log(f.numerator) - math.log(f.denominator)


def exact_log(x: ExactReal) -> float:
    """Natural log of a positive exact value, accurate to ~1e-15 relative."""
    if isinstance(x, (int, Fraction)):
        f = Fraction(x)
        if f <= 0:
            raise ValueError("log of a non-positive value")
        return _log_fraction(f)
    if x <= 0:
        raise ValueError("log of a non-positive value")
    prec = 96
    while True:
        lo, hi = fraction_bounds(x, prec)
        # tighten until the enclosure is relatively sharp; cancellation in
        # a + b*sqrt(d) can make the first pass too loose
        if lo > 0 and (hi - lo) * (10**18) < lo:
            return _log_fraction(lo)
        prec *= 2


def exact_str(x: ExactReal) -> str:
    """Compact exact rendering, e.g. '3/7' or '-1 + 1*sqrt(2)'."""
    return str(x)

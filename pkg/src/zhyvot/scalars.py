"""Exact scalars: rationals and elements of a real quadratic field Q(sqrt d).

Values are either ``fractions.Fraction`` or :class:`QuadraticNumber`.
Arithmetic that lands back in Q returns a plain Fraction, so rational
code paths never see the quadratic type.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from numbers import Rational


def squarefree_part(n: int) -> tuple[int, int]:
    """Return (s, d) with n == s*s*d and d squarefree (n > 0)."""
    if n <= 0:
        raise ValueError("squarefree_part needs a positive integer")
    s, d = 1, 1
    p = 2
    m = n
    while p * p <= m:
        while m % (p * p) == 0:
            m //= p * p
            s *= p
        if m % p == 0:
            m //= p
            d *= p
        p += 1
    return s, d * m


class QuadraticNumber:
    """a + b*sqrt(d) with rational a, b and squarefree d > 1."""

    __slots__ = ("a", "b", "d")

    def __init__(self, a, b, d: int):
        self.a = Fraction(a)
        self.b = Fraction(b)
        self.d = int(d)
        if self.d <= 1 or squarefree_part(self.d)[0] != 1:
            raise ValueError(f"sqrt({d}) is not a squarefree radical")

    @staticmethod
    def make(a, b, d):
        """Build a + b*sqrt(d), collapsing to a Fraction when b == 0."""
        if b == 0:
            return Fraction(a)
        return QuadraticNumber(a, b, d)

    def _coerce(self, other):
        if isinstance(other, QuadraticNumber):
            if other.d != self.d:
                raise ValueError(f"mixed radicals sqrt({self.d}) and sqrt({other.d})")
            return other.a, other.b
        if isinstance(other, (int, Rational)):
            return Fraction(other), Fraction(0)
        return None

    def __add__(self, other):
        c = self._coerce(other)
        if c is None:
            return NotImplemented
        return self.make(self.a + c[0], self.b + c[1], self.d)

    __radd__ = __add__

    def __neg__(self):
        return QuadraticNumber(-self.a, -self.b, self.d)

    def __pos__(self):
        return self

    def __sub__(self, other):
        c = self._coerce(other)
        if c is None:
            return NotImplemented
        return self.make(self.a - c[0], self.b - c[1], self.d)

    def __rsub__(self, other):
        c = self._coerce(other)
        if c is None:
            return NotImplemented
        return self.make(c[0] - self.a, c[1] - self.b, self.d)

    def __mul__(self, other):
        c = self._coerce(other)
        if c is None:
            return NotImplemented
        a, b = c
        return self.make(self.a * a + self.b * b * self.d, self.a * b + self.b * a, self.d)

    __rmul__ = __mul__

    def norm(self) -> Fraction:
        return self.a * self.a - self.b * self.b * self.d

    def conjugate(self):
        return QuadraticNumber(self.a, -self.b, self.d)

    def inverse(self):
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("division by zero in quadratic field")
        return self.make(self.a / n, -self.b / n, self.d)

    def __truediv__(self, other):
        c = self._coerce(other)
        if c is None:
            return NotImplemented
        if c[1] == 0:
            if c[0] == 0:
                raise ZeroDivisionError("division by zero")
            return self.make(self.a / c[0], self.b / c[0], self.d)
        return self * QuadraticNumber(c[0], c[1], self.d).inverse()

    def __rtruediv__(self, other):
        c = self._coerce(other)
        if c is None:
            return NotImplemented
        return self.inverse() * c[0]

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return self.inverse() ** (-k)
        result, base = Fraction(1), self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def sign(self) -> int:
        """Exact sign of a + b*sqrt(d)."""
        sa = (self.a > 0) - (self.a < 0)
        sb = (self.b > 0) - (self.b < 0)
        if sa == sb or sb == 0:
            return sa
        if sa == 0:
            return sb
        # opposite signs: compare a^2 with b^2 d
        diff = self.a * self.a - self.b * self.b * self.d
        return sa if diff > 0 else sb

    def _cmp(self, other):
        if self._coerce(other) is None:
            return None
        return sign(self - other)

    def __eq__(self, other):
        c = self._coerce(other)
        if c is None:
            return NotImplemented
        return self.a == c[0] and self.b == c[1]

    def __hash__(self):
        return hash((self.a, self.b, self.d))

    def __lt__(self, other):
        s = self._cmp(other)
        return NotImplemented if s is None else s < 0

    def __le__(self, other):
        s = self._cmp(other)
        return NotImplemented if s is None else s <= 0

    def __gt__(self, other):
        s = self._cmp(other)
        return NotImplemented if s is None else s > 0

    def __ge__(self, other):
        s = self._cmp(other)
        return NotImplemented if s is None else s >= 0

    def __float__(self):
        return float(self.a) + float(self.b) * math.sqrt(self.d)

    def __bool__(self):
        return True  # b != 0 by construction

    def __repr__(self):
        return f"QuadraticNumber({self.a}, {self.b}, {self.d})"

    def __str__(self):
        return format_exact(self)


def _fsign(x: Fraction) -> int:
    return (x > 0) - (x < 0)


def sign(x) -> int:
    if isinstance(x, QuadraticNumber):
        return x.sign()
    return _fsign(Fraction(x))


def exact_sqrt(x):
    """Square root of a non-negative rational, exact in Q or Q(sqrt d)."""
    x = Fraction(x)
    if x < 0:
        raise ValueError("square root of a negative number")
    if x == 0:
        return Fraction(0)
    # sqrt(p/q) = sqrt(p*q)/q
    s, d = squarefree_part(x.numerator * x.denominator)
    if d == 1:
        return Fraction(s, x.denominator)
    return QuadraticNumber(0, Fraction(s, x.denominator), d)


def is_exact(x) -> bool:
    return isinstance(x, (int, Fraction, QuadraticNumber))


def format_exact(x) -> str:
    """Render ``p/q`` (or ``p``) for rationals, ``(a+b*sqrt(d))/c`` otherwise."""
    if isinstance(x, QuadraticNumber):
        c = math.lcm(x.a.denominator, x.b.denominator)
        a = int(x.a * c)
        b = int(x.b * c)
        op = "+" if b >= 0 else "-"
        return f"({a}{op}{abs(b)}*sqrt({x.d}))/{c}"
    if isinstance(x, float):
        return repr(x)
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


_QUAD = re.compile(
    r"^\(\s*([+-]?\d+)\s*([+-])\s*(\d+)\s*\*\s*sqrt\(\s*(\d+)\s*\)\s*\)\s*(?:/\s*(\d+))?$"
)
_SQRT = re.compile(r"^([+-]?)(?:(\d+)\s*\*\s*)?sqrt\(\s*(\d+)\s*\)\s*(?:/\s*(\d+))?$")


def parse_exact(text: str):
    """Parse ``p``, ``p/q``, a decimal, ``(a+b*sqrt(d))/c`` or ``b*sqrt(d)/c``."""
    t = text.strip()
    m = _QUAD.match(t)
    if m:
        a, op, b, d, c = m.groups()
        c = int(c) if c else 1
        bval = int(b) if op == "+" else -int(b)
        return Fraction(int(a), c) + Fraction(bval, c) * exact_sqrt(int(d))
    m = _SQRT.match(t)
    if m:
        sgn, b, d, c = m.groups()
        val = Fraction(int(b) if b else 1, int(c) if c else 1) * exact_sqrt(int(d))
        return -val if sgn == "-" else val
    try:
        return Fraction(t)
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"not an exact value: {text!r}") from None

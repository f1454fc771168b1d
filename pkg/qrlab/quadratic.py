"""Exact arithmetic in Q(sqrt 2) and its reductions modulo primes."""
from dataclasses import dataclass
from fractions import Fraction
from typing import Tuple, Union

from qrlab.residue_core import check_odd_prime


Rational = Union[int, Fraction]


class SqrtTwoAbsentError(ValueError):
    """Raised when 2 is a non-residue mod p, so sqrt 2 has no reduction."""


def modular_sqrt(a: int, p: int) -> int:
    """Returns the smaller square root of a mod an odd prime p.

    Uses Tonelli-Shanks. Raises ValueError when a is a non-residue.
    """
    a %= p
    if a == 0:
        return 0
    if pow(a, (p - 1) // 2, p) != 1:
        raise ValueError(f"{a} is not a square mod {p}")
    if p % 4 == 3:
        root = pow(a, (p + 1) // 4, p)
        return min(root, p - root)
    s, e = p - 1, 0
    while s % 2 == 0:
        s //= 2
        e += 1
    n = 2
    while pow(n, (p - 1) // 2, p) != p - 1:
        n += 1
    x = pow(a, (s + 1) // 2, p)
    b = pow(a, s, p)
    g = pow(n, s, p)
    r = e
    while b != 1:
        m, t = 0, b
        while t != 1:
            t = t * t % p
            m += 1
        gs = pow(g, 1 << (r - m - 1), p)
        g = gs * gs % p
        x = x * gs % p
        b = b * g % p
        r = m
    return min(x, p - x)


def sqrt2_mod(p: int) -> Tuple[int, int]:
    """Returns both square roots of 2 mod p, smaller first.

    Raises:
        SqrtTwoAbsentError: If (2/p) = -1, i.e. p = 3, 5 mod 8.
    """
    check_odd_prime(p)
    if p % 8 in (3, 5):
        raise SqrtTwoAbsentError(f"2 is not a square mod {p}")
    root = modular_sqrt(2, p)
    return root, p - root


@dataclass(frozen=True)
class QuadRational:
    """An element a + b*sqrt(2) of Q(sqrt 2) with reduced rational parts."""

    a: Fraction = Fraction(0)
    b: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "a", Fraction(self.a))
        object.__setattr__(self, "b", Fraction(self.b))

    @classmethod
    def coerce(cls, value: Union["QuadRational", Rational]) -> "QuadRational":
        """Wraps ints and Fractions; passes QuadRationals through."""
        if isinstance(value, QuadRational):
            return value
        return cls(Fraction(value))

    @property
    def is_rational(self) -> bool:
        return self.b == 0

    def conjugate(self) -> "QuadRational":
        return QuadRational(self.a, -self.b)

    def norm(self) -> Fraction:
        """Returns a^2 - 2 b^2, the field norm to Q."""
        return self.a * self.a - 2 * self.b * self.b

    def __add__(self, other):
        try:
            other = QuadRational.coerce(other)
        except TypeError:
            return NotImplemented
        return QuadRational(self.a + other.a, self.b + other.b)

    __radd__ = __add__

    def __neg__(self):
        return QuadRational(-self.a, -self.b)

    def __sub__(self, other):
        return self + (-QuadRational.coerce(other))

    def __rsub__(self, other):
        return QuadRational.coerce(other) - self

    def __mul__(self, other):
        try:
            other = QuadRational.coerce(other)
        except TypeError:
            return NotImplemented
        return QuadRational(
            self.a * other.a + 2 * self.b * other.b,
            self.a * other.b + self.b * other.a,
        )

    __rmul__ = __mul__

    def inverse(self) -> "QuadRational":
        norm = self.norm()
        if norm == 0:
            raise ZeroDivisionError("QuadRational division by zero")
        return QuadRational(self.a / norm, -self.b / norm)

    def __truediv__(self, other):
        return self * QuadRational.coerce(other).inverse()

    def __rtruediv__(self, other):
        return QuadRational.coerce(other) * self.inverse()

    def __pow__(self, exponent: int):
        if exponent < 0:
            return self.inverse() ** (-exponent)
        result = QuadRational(Fraction(1))
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            base = base * base
            exponent >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.b == 0 and self.a == other
        if not isinstance(other, QuadRational):
            return NotImplemented
        return self.a == other.a and self.b == other.b

    def __hash__(self):
        if self.b == 0:
            return hash(self.a)
        return hash((self.a, self.b))

    def denominators(self) -> Tuple[int, int]:
        return self.a.denominator, self.b.denominator

    def reduce(self, p: int, sqrt2: int = 0) -> int:
        """Reduces mod p, mapping sqrt 2 to the residue `sqrt2`.

        Raises:
            ValueError: If a denominator is divisible by p.
            SqrtTwoAbsentError: If b != 0 and no square root of 2 was given.
        """
        if any(d % p == 0 for d in self.denominators()):
            raise ValueError(f"{self} has a denominator divisible by {p}")
        value = self.a.numerator * pow(self.a.denominator, -1, p)
        if self.b != 0:
            if sqrt2 * sqrt2 % p != 2 % p:
                raise SqrtTwoAbsentError(f"{sqrt2} is not a square root of 2 mod {p}")
            value += self.b.numerator * pow(self.b.denominator, -1, p) * sqrt2
        return value % p

    def tagged(self) -> str:
        """Serialises as `a` or `a+b*r2`, the registry table format."""
        if self.b == 0:
            return str(self.a)
        return f"{self.a}{'+' if self.b >= 0 else '-'}{abs(self.b)}*r2"

    def __str__(self):
        if self.b == 0:
            return str(self.a)
        return f"{self.a} + {self.b}*sqrt(2)"

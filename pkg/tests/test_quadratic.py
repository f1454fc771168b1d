"""Test arithmetic in Q(sqrt 2)."""
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from qrlab.quadratic import QuadRational, SqrtTwoAbsentError, modular_sqrt, sqrt2_mod
from tests.utils import naive_primes


fractions = st.fractions(min_value=-1000, max_value=1000, max_denominator=50)
elements = st.builds(QuadRational, fractions, fractions)


class TestModularSqrt:
    """Test square roots mod p."""

    def test_sqrt2(self):
        """Test the roots of 2 for small primes."""
        assert sqrt2_mod(7) == (3, 4)
        assert sqrt2_mod(17) == (6, 11)

    @pytest.mark.parametrize("p", [3, 5, 11, 13])
    def test_sqrt2_absent(self, p):
        """Test primes 3 and 5 mod 8."""
        with pytest.raises(SqrtTwoAbsentError):
            sqrt2_mod(p)

    def test_every_residue(self):
        """Test Tonelli-Shanks on every residue, including p = 1 mod 8."""
        for p in [q for q in naive_primes(300) if q > 2]:
            for a in {x * x % p for x in range(1, p)}:
                root = modular_sqrt(a, p)
                assert root * root % p == a
                assert root <= p - root

    def test_non_residue(self):
        """Test that non-residues are rejected."""
        with pytest.raises(ValueError):
            modular_sqrt(3, 7)


class TestQuadRational:
    """Test the field operations."""

    def test_basic_arithmetic(self):
        """Test products and inverses of simple elements."""
        r2 = QuadRational(0, 1)
        assert r2 * r2 == 2
        assert (1 + r2) * (1 - r2) == -1
        assert (1 + r2).inverse() == QuadRational(-1, 1)
        assert QuadRational(Fraction(3, 2)).is_rational
        assert (r2 / 2) ** 2 == Fraction(1, 2)

    def test_zero_division(self):
        """Test division by zero."""
        with pytest.raises(ZeroDivisionError):
            QuadRational(0).inverse()

    def test_hash_agrees_with_rationals(self):
        """Test that rational elements hash like Fractions."""
        assert hash(QuadRational(Fraction(1, 3))) == hash(Fraction(1, 3))
        assert len({QuadRational(2), QuadRational(2, 0)}) == 1

    @given(elements, elements)
    def test_norm_multiplicative(self, x, y):
        """Test N(xy) = N(x) N(y)."""
        assert (x * y).norm() == x.norm() * y.norm()

    @given(elements)
    def test_conjugate_product_is_norm(self, x):
        """Test x * conj(x) = N(x)."""
        assert x * x.conjugate() == x.norm()

    def test_reduce(self):
        """Test reduction with both roots of 2."""
        x = QuadRational(Fraction(1, 2), 3)
        for root in sqrt2_mod(17):
            assert x.reduce(17, root) == (9 + 3 * root) % 17
        with pytest.raises(ValueError):
            QuadRational(Fraction(1, 7)).reduce(7)
        with pytest.raises(SqrtTwoAbsentError):
            x.reduce(17, 5)

    def test_tagged(self):
        """Test the registry serialisation."""
        assert QuadRational(3).tagged() == "3"
        assert QuadRational(0, Fraction(3, 2)).tagged() == "0+3/2*r2"
        assert QuadRational(-18, -2).tagged() == "-18-2*r2"

"""Prime generation, Legendre-character tables and residue words.

A residue word W_p spells out, for i = 1, ..., p - 1, whether i is a nonzero
square mod p ("R") or not ("N"). Pattern counts n_p(S) are computed directly
from the character table with a sliding window; the product formula is an
independent evaluation used to cross-check the counts.
"""
import functools
import math
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Optional

import numpy as np

from qrlab.constants import NON_RESIDUE, RESIDUE


def is_prime(n: int) -> bool:
    """Returns whether n is prime (trial division)."""
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    for d in range(3, math.isqrt(n) + 1, 2):
        if n % d == 0:
            return False
    return True


def check_odd_prime(p: int):
    """Raises ValueError unless p is an odd prime."""
    if p == 2 or not is_prime(p):
        raise ValueError(f"{p} is not an odd prime")


def primes_in_range(lo: int, hi: int) -> List[int]:
    """Returns the sorted primes in the closed interval [lo, hi].

    Args:
        lo: Lower end of the interval (inclusive).
        hi: Upper end of the interval (inclusive).

    Returns:
        The primes in [lo, hi], possibly empty.
    """
    if lo < 0:
        raise ValueError(f"Lower bound must be nonnegative, got {lo}")
    if hi < 2 or lo > hi:
        return []
    sieve = np.ones(hi + 1, dtype=bool)
    sieve[:2] = False
    for i in range(2, math.isqrt(hi) + 1):
        if sieve[i]:
            sieve[i * i :: i] = False
    return (np.flatnonzero(sieve[lo:]) + lo).tolist()


@dataclass(frozen=True, eq=False)
class ChiTable:
    """Legendre symbol table for an odd prime.

    Attributes:
        p: The odd prime.
        chi: Read-only int8 array of length p; chi[a] is (a/p).
    """

    p: int
    chi: np.ndarray

    def __call__(self, a: int) -> int:
        """Returns the Legendre symbol (a/p)."""
        return int(self.chi[a % self.p])

    @property
    def residue_mask(self) -> np.ndarray:
        """Boolean array of length p - 1; entry i - 1 tells if i is a residue."""
        return self.chi[1:] == 1

    def shifted(self, shift: int) -> np.ndarray:
        """Returns the array x -> (x + shift / p) over x = 0, ..., p - 1."""
        return np.roll(self.chi, -(shift % self.p))

    def values(self, residues: np.ndarray) -> np.ndarray:
        """Returns the Legendre symbols of an integer array."""
        return self.chi[np.mod(residues, self.p)]


@functools.lru_cache(maxsize=64)
def chi_table(p: int) -> ChiTable:
    """Builds the Legendre symbol table of p by marking the squares x^2 mod p.

    Raises:
        ValueError: If p is 2 or composite.
    """
    check_odd_prime(p)
    chi = np.full(p, -1, dtype=np.int8)
    chi[0] = 0
    x = np.arange(1, (p - 1) // 2 + 1, dtype=np.int64)
    chi[x * x % p] = 1
    chi.setflags(write=False)
    return ChiTable(p=p, chi=chi)


@dataclass(frozen=True)
class ResidueClassWord:
    """The R/N word W_p of length p - 1."""

    p: int
    letters: str

    def __str__(self) -> str:
        return self.letters

    def __len__(self) -> int:
        return len(self.letters)


def residue_word(p: int) -> ResidueClassWord:
    """Returns the residue word W_p."""
    mask = chi_table(p).residue_mask
    letters = "".join(np.where(mask, RESIDUE, NON_RESIDUE).tolist())
    return ResidueClassWord(p=p, letters=letters)


def parse_pattern(text: str) -> str:
    """Validates a pattern over {R, N} and returns it upper-cased."""
    pattern = text.strip().upper()
    if not pattern:
        raise ValueError("Pattern must be nonempty")
    invalid = set(pattern) - {RESIDUE, NON_RESIDUE}
    if invalid:
        raise ValueError(f"Pattern {text!r} has symbols outside R/N: {sorted(invalid)}")
    return pattern


def count_pattern(p: int, pattern: str) -> int:
    """Counts the occurrences of a pattern as a contiguous subword of W_p.

    Args:
        p: An odd prime.
        pattern: A nonempty string over {R, N}.

    Returns:
        n_p(S), the number of windows of W_p equal to the pattern.
    """
    pattern = parse_pattern(pattern)
    t = len(pattern)
    if t > p - 1:
        raise ValueError(f"Pattern of length {t} is longer than W_{p}")
    mask = chi_table(p).residue_mask
    n = p - t
    hits = np.ones(n, dtype=bool)
    for k, letter in enumerate(pattern):
        window = mask[k : k + n]
        hits &= window if letter == RESIDUE else ~window
    return int(np.count_nonzero(hits))


def pattern_histogram(p: int, t: int) -> Dict[str, int]:
    """Counts every pattern of length t in W_p in a single pass.

    Returns:
        A dict mapping each of the 2^t patterns to n_p(S). The values sum
        to p - t, the number of windows.
    """
    if not 1 <= t <= p - 1:
        raise ValueError(f"Pattern length {t} out of range for p={p}")
    mask = chi_table(p).residue_mask.astype(np.int64)
    n = p - t
    codes = np.zeros(n, dtype=np.int64)
    for k in range(t):
        codes = (codes << 1) | mask[k : k + n]
    counts = np.bincount(codes, minlength=1 << t)
    histogram = {}
    for code, count in enumerate(counts.tolist()):
        bits = format(code, f"0{t}b")
        histogram[bits.replace("1", RESIDUE).replace("0", NON_RESIDUE)] = count
    return histogram


class UpperLimit(str, Enum):
    """Upper summation limit of the product formula."""

    # The printed limit j <= p - t - 1
    PAPER = "paper"
    # All windows, j <= p - t
    EXACT = "exact"


def product_formula_count(
    p: int, t: int, upper: UpperLimit = UpperLimit.EXACT
) -> Fraction:
    """Evaluates 2^-t * sum_j prod_{i=1..t} (1 + (i + j - 1 / p)).

    Each window product is evaluated exactly from the number of factors
    equal to 0 and 2, so the result is an exact rational for any t.

    Args:
        p: An odd prime.
        t: Run length, 1 <= t <= p - 2.
        upper: Summation limit; EXACT sums over j in [1, p - t] and then
            equals count_pattern(p, "R" * t).

    Returns:
        The value of the formula as a Fraction.
    """
    upper = UpperLimit(upper)
    if not 1 <= t <= p - 2:
        raise ValueError(f"t={t} out of range [1, {p - 2}] for p={p}")
    last = p - t - 1 if upper == UpperLimit.PAPER else p - t
    table = chi_table(p)
    # factors[m] = 1 + (m / p) for m = 0, ..., p
    factors = 1 + table.values(np.arange(p + 1, dtype=np.int64)).astype(np.int64)
    zeros = np.concatenate(([0], np.cumsum(factors == 0)))
    twos = np.concatenate(([0], np.cumsum(factors == 2)))
    starts = np.arange(1, last + 1)
    window_zeros = zeros[starts + t] - zeros[starts]
    window_twos = twos[starts + t] - twos[starts]
    exponents: Counter = Counter(window_twos[window_zeros == 0].tolist())
    total = sum(count << exponent for exponent, count in exponents.items())
    return Fraction(total, 1 << t)


def last_window_contribution(p: int, t: int) -> Fraction:
    """Returns the difference between the EXACT and PAPER evaluations."""
    return product_formula_count(p, t, UpperLimit.EXACT) - product_formula_count(
        p, t, UpperLimit.PAPER
    )


def legendre(a: int, p: int, table: Optional[ChiTable] = None) -> int:
    """Returns (a/p), reusing a table when given."""
    table = table or chi_table(p)
    return table(a)

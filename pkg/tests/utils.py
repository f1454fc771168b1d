"""Test utilities: brute-force oracles independent of the library code."""
from typing import List


def euler_symbol(a: int, p: int) -> int:
    """Return (a/p) by Euler's criterion."""
    a %= p
    if a == 0:
        return 0
    return 1 if pow(a, (p - 1) // 2, p) == 1 else -1


def naive_primes(hi: int) -> List[int]:
    """Return the primes up to hi by trial division."""
    return [n for n in range(2, hi + 1) if all(n % d for d in range(2, n))]


def naive_word(p: int) -> str:
    """Return the residue word W_p from the set of squares."""
    squares = {x * x % p for x in range(1, p)}
    return "".join("R" if i in squares else "N" for i in range(1, p))


def naive_count(p: int, pattern: str) -> int:
    """Count the occurrences of a pattern in W_p, overlaps included."""
    word = naive_word(p)
    return sum(
        word[i : i + len(pattern)] == pattern
        for i in range(len(word) - len(pattern) + 1)
    )


def naive_char_sum(shifts, p: int) -> int:
    """Return sum_x (prod (x + i) / p) over F_p."""
    total = 0
    for x in range(p):
        value = 1
        for i in shifts:
            value = value * (x + i) % p
        total += euler_symbol(value, p)
    return total

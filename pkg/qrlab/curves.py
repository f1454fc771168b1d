"""Curve models over Q and Q(sqrt 2), character sums and curve invariants.

Every model is a monic polynomial f with y^2 = f(x). The primitive computed
at a prime is the character sum N = sum_x (f(x) / p). The Frobenius trace of
the smooth model follows from N and the number of points at infinity:
a = -N for odd degree and a = -N - (lc / p) for even degree.
"""
import itertools
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np

from qrlab.quadratic import QuadRational, SqrtTwoAbsentError, sqrt2_mod
from qrlab.residue_core import check_odd_prime, chi_table, primes_in_range


SQRT2 = QuadRational(0, 1)


class BadPrimeError(ValueError):
    """Raised when a model has bad reduction at the requested prime."""


def prime_factors(n: int) -> Set[int]:
    """Returns the set of prime factors of |n| (empty for 0 and +-1)."""
    n = abs(n)
    factors = set()
    d = 2
    while n > 1 and d * d <= n:
        while n % d == 0:
            factors.add(d)
            n //= d
        d += 1
    if n > 1:
        factors.add(n)
    return factors


def poly_from_roots(roots: Sequence[QuadRational]) -> Tuple[QuadRational, ...]:
    """Returns the ascending coefficients of prod (x - r)."""
    coeffs = [QuadRational(1)]
    for root in roots:
        shifted = [QuadRational(0)] + coeffs
        for i, c in enumerate(coeffs):
            shifted[i] = shifted[i] - root * c
        coeffs = shifted
    return tuple(coeffs)


def discriminant(roots: Sequence[QuadRational]) -> QuadRational:
    """Returns prod_{i<j} (r_i - r_j)^2."""
    disc = QuadRational(1)
    for r, s in itertools.combinations(roots, 2):
        disc = disc * (r - s) * (r - s)
    return disc


@dataclass(frozen=True)
class CurveModel:
    """A model y^2 = f(x) with f monic and squarefree.

    Attributes:
        id: Identifier such as "E4", "C" or "CT(1,2,4)".
        coeffs: Ascending coefficients of f; the last one is 1.
        roots: Exact roots of f when f splits into linear factors.
        bad_primes: Primes where f is not squarefree or not integral.
        description: Human-readable equation.
    """

    id: str
    coeffs: Tuple[QuadRational, ...]
    roots: Optional[Tuple[QuadRational, ...]] = None
    bad_primes: FrozenSet[int] = field(default_factory=frozenset)
    description: str = ""

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def genus(self) -> int:
        return (self.degree - 1) // 2

    @property
    def is_rational(self) -> bool:
        return all(c.is_rational for c in self.coeffs)

    def evaluate(self, x) -> QuadRational:
        value = QuadRational(0)
        for c in reversed(self.coeffs):
            value = value * x + c
        return value

    def conjugate(self) -> "CurveModel":
        """Returns the Galois-conjugate model (sqrt 2 -> -sqrt 2)."""
        roots = None
        if self.roots is not None:
            roots = tuple(r.conjugate() for r in self.roots)
        return CurveModel(
            id=f"{self.id}~",
            coeffs=tuple(c.conjugate() for c in self.coeffs),
            roots=roots,
            bad_primes=self.bad_primes,
            description=f"conjugate of {self.id}",
        )


def model_from_roots(
    curve_id: str, roots: Sequence[QuadRational], description: str = ""
) -> CurveModel:
    """Builds a model from its roots and derives the bad primes."""
    roots = tuple(QuadRational.coerce(r) for r in roots)
    if len(set(roots)) != len(roots):
        raise ValueError(f"{curve_id} has repeated roots")
    coeffs = poly_from_roots(roots)
    bad = {2}
    for c in coeffs:
        for d in c.denominators():
            bad |= prime_factors(d)
    if len(roots) > 1:
        norm = discriminant(roots).norm()
        bad |= prime_factors(norm.numerator) | prime_factors(norm.denominator)
    return CurveModel(
        id=curve_id,
        coeffs=coeffs,
        roots=roots,
        bad_primes=frozenset(bad),
        description=description,
    )


@dataclass(frozen=True)
class TraceValue:
    """Character sum and Frobenius trace of a curve at a prime."""

    p: int
    curve: str
    N: int
    trace: int

    @property
    def normalized(self) -> float:
        return self.trace / math.sqrt(self.p)


def _reduce_roots(model: CurveModel, p: int, root_choice: int) -> List[int]:
    assert model.roots is not None
    sqrt2 = 0
    if not model.is_rational:
        sqrt2 = sqrt2_mod(p)[root_choice]
    return [r.reduce(p, sqrt2) for r in model.roots]


def char_values(model: CurveModel, p: int, root_choice: int = 0) -> np.ndarray:
    """Returns the array x -> (f(x) / p) over F_p."""
    if p in model.bad_primes:
        raise BadPrimeError(f"{p} is a bad prime for {model.id}")
    check_odd_prime(p)
    table = chi_table(p)
    split = model.roots is not None and (
        not model.is_rational or all(r.is_rational for r in model.roots)
    )
    if split:
        values = np.ones(p, dtype=np.int8)
        for rho in _reduce_roots(model, p, root_choice):
            values = values * table.shifted(-rho)
        return values
    sqrt2 = 0 if model.is_rational else sqrt2_mod(p)[root_choice]
    x = np.arange(p, dtype=np.int64)
    acc = np.zeros(p, dtype=np.int64)
    for c in reversed(model.coeffs):
        acc = (acc * x + c.reduce(p, sqrt2)) % p
    return table.chi[acc]


def char_sum(model: CurveModel, p: int, root_choice: int = 0) -> TraceValue:
    """Computes N = sum_{x in F_p} (f(x) / p) in O(p).

    Args:
        model: The curve model.
        p: An odd prime of good reduction.
        root_choice: Which square root of 2 mod p to use for models over
            Q(sqrt 2); 0 picks the smaller one.

    Returns:
        The TraceValue with both N and the Frobenius trace.

    Raises:
        BadPrimeError: If p is bad for the model.
        SqrtTwoAbsentError: If the model needs sqrt 2 and (2/p) = -1.
    """
    n = int(char_values(model, p, root_choice).sum(dtype=np.int64))
    trace = -n
    if model.degree % 2 == 0:
        trace -= chi_table(p)(model.coeffs[-1].reduce(p))
    return TraceValue(p=p, curve=model.id, N=n, trace=trace)


def frobenius_trace(model: CurveModel, p: int, root_choice: int = 0) -> int:
    return char_sum(model, p, root_choice).trace


def weil_bound(model: CurveModel, p: int) -> float:
    """Returns (deg f - 1) * sqrt(p), the bound on |N|."""
    return (model.degree - 1) * math.sqrt(p)


def is_good_prime(model: CurveModel, p: int) -> bool:
    """Tells whether char_sum is defined at p (including the sqrt 2 check)."""
    if p == 2 or p in model.bad_primes:
        return False
    return model.is_rational or p % 8 in (1, 7)


# The global registry mapping curve ids to models.
CURVES: Dict[str, CurveModel] = {}

_SUBSET_ID = re.compile(r"^CT\((\d+(?:,\d+)*)\)$")


def subset_polynomial(subset: Iterable[int]) -> CurveModel:
    """Returns the model of f_T(X) = prod_{i + 1 in T} (X + i).

    Args:
        subset: A nonempty set T of positive integers.
    """
    members = sorted(set(subset))
    if not members:
        raise ValueError("Subset must be nonempty")
    if members[0] < 1:
        raise ValueError(f"Subset elements must be positive, got {members}")
    curve_id = "CT(" + ",".join(str(k) for k in members) + ")"
    factors = " ".join(f"(x+{k - 1})" if k > 1 else "x" for k in members)
    return model_from_roots(curve_id, [-(k - 1) for k in members], f"y^2 = {factors}")


def get_curve(curve_id: str) -> CurveModel:
    """Returns the registered model, building CT(...) models on demand."""
    match = _SUBSET_ID.match(curve_id.replace(" ", ""))
    if match:
        return subset_polynomial(int(k) for k in match.group(1).split(","))
    try:
        return CURVES[curve_id]
    except KeyError:
        raise KeyError(f"{curve_id} is not a registered curve.")


def _add(curve_id: str, roots: Sequence[QuadRational], description: str):
    CURVES[curve_id] = model_from_roots(curve_id, roots, description)


def _add_shifts(curve_id: str, shifts: Sequence[int]):
    factors = "".join(f"(x+{i})" if i else "x" for i in shifts)
    _add(curve_id, [-i for i in shifts], f"y^2 = {factors}")


# Cubic and quartic subset curves for t = 4 and t = 5.
_add_shifts("E0", (0, 1, 2))
_add_shifts("E1", (0, 1, 3))
_add_shifts("E2", (0, 2, 3))
_add_shifts("E3", (1, 2, 3))
_add_shifts("E4", (0, 1, 2, 3))
_add_shifts("E5", (0, 1, 4))
_add_shifts("E6", (0, 2, 4))
_add_shifts("E7", (0, 3, 4))
_add_shifts("E8", (1, 2, 4))
_add_shifts("E9", (1, 3, 4))
_add_shifts("E10", (2, 3, 4))
_add_shifts("E11", (0, 1, 2, 4))
_add_shifts("E12", (0, 1, 3, 4))
_add_shifts("E13", (0, 2, 3, 4))
_add_shifts("E14", (1, 2, 3, 4))
# Genus 2 quintic
_add_shifts("C", (0, 1, 2, 3, 4))
# (x + 2 sqrt 2)(x^2 - 9)
_add("E15", [-2 * SQRT2, 3, -3], "y^2 = x^3 + 2*sqrt(2)*x^2 - 9x - 18*sqrt(2)")
# (x + 2)(x^2 - 9/2)
_add(
    "E16",
    [-2, Fraction(3, 2) * SQRT2, Fraction(-3, 2) * SQRT2],
    "y^2 = x^3 + 2x^2 - 9x/2 - 9",
)


def genus_of_subset(size: int) -> int:
    """Returns floor((s - 1) / 2), the genus of C_T for |T| = s."""
    if size < 1:
        raise ValueError(f"Subset size must be positive, got {size}")
    return (size - 1) // 2


def genus_sum(t: int) -> int:
    """Returns g_t, the sum of g_T over nonempty T in [1, t].

    The explicit sum is checked against 2^(t-2) (t-3) + 1.
    """
    if t < 2:
        raise ValueError(f"t must be at least 2, got {t}")
    total = sum(math.comb(t, s) * genus_of_subset(s) for s in range(1, t + 1))
    closed = 2 ** (t - 2) * (t - 3) + 1
    assert total == closed, f"Genus sum {total} != {closed} for t={t}"
    return total


def j_from_roots(roots: Sequence[QuadRational]) -> QuadRational:
    """Computes j = 256 (l^2 - l + 1)^3 / (l^2 (l - 1)^2) from the roots.

    For three roots l = (e3 - e1) / (e2 - e1); for four roots l is the cross
    ratio (r3 - r1)(r4 - r2) / ((r3 - r2)(r4 - r1)).
    """
    roots = [QuadRational.coerce(r) for r in roots]
    if len(set(roots)) != len(roots):
        raise ValueError("j-invariant needs distinct roots")
    if len(roots) == 3:
        e1, e2, e3 = roots
        lam = (e3 - e1) / (e2 - e1)
    elif len(roots) == 4:
        r1, r2, r3, r4 = roots
        lam = (r3 - r1) * (r4 - r2) / ((r3 - r2) * (r4 - r1))
    else:
        raise ValueError(f"j-invariant needs 3 or 4 roots, got {len(roots)}")
    numerator = 256 * (lam * lam - lam + 1) ** 3
    return numerator / (lam * lam * (lam - 1) * (lam - 1))


def j_invariant(model: CurveModel) -> QuadRational:
    """Returns the exact j-invariant of a genus one model with known roots."""
    if model.roots is None:
        raise ValueError(f"{model.id} has no known roots")
    if model.degree not in (3, 4):
        raise ValueError(f"{model.id} has degree {model.degree}, not 3 or 4")
    return j_from_roots(model.roots)


@dataclass
class TwistReport:
    """Outcome of comparing a_B(p) with (d/p) a_A(p) over a prime range."""

    curve_a: str
    curve_b: str
    d: int
    checked: int = 0
    counterexample: Optional[int] = None

    @property
    def passed(self) -> bool:
        return self.counterexample is None


def _common_good_primes(
    models: Sequence[CurveModel], lo: int, hi: int, avoid: int = 1
) -> List[int]:
    return [
        p
        for p in primes_in_range(max(lo, 3), hi)
        if all(is_good_prime(m, p) for m in models) and avoid % p != 0
    ]


def twist_check(
    id_a: str, id_b: str, d: int, prime_range: Tuple[int, int]
) -> TwistReport:
    """Checks a_B(p) = (d/p) a_A(p) at every common good prime in the range.

    Traces rather than raw sums are compared, so a cubic and a quartic model
    of the same curve agree.
    """
    model_a, model_b = get_curve(id_a), get_curve(id_b)
    report = TwistReport(curve_a=id_a, curve_b=id_b, d=d)
    for p in _common_good_primes([model_a, model_b], *prime_range, avoid=d):
        sign = chi_table(p)(d)
        if frobenius_trace(model_b, p) != sign * frobenius_trace(model_a, p):
            report.counterexample = p
            return report
        report.checked += 1
    return report


# Relations (base, other, d) claimed for the t = 5 curve list; d = -1 is the
# Q(i) twist and d = 2 the Q(sqrt 2) twist.
CLAIMED_RELATIONS: Tuple[Tuple[str, str, int], ...] = (
    ("E0", "E3", 1),
    ("E0", "E6", 2),
    ("E0", "E10", 1),
    ("E4", "E5", 1),
    ("E4", "E7", -1),
    ("E4", "E14", 1),
    ("E1", "E2", -1),
    ("E1", "E8", 1),
    ("E1", "E9", -1),
    ("E1", "E11", 1),
    ("E1", "E13", 1),
    ("E15", "E16", 2),
)

# Relations that hold but are missing from the claimed list.
OBSERVED_RELATIONS: Tuple[Tuple[str, str, int], ...] = (("E4", "E12", -1),)


@dataclass
class RelationResult:
    """A claimed relation, its check, and the twist that holds instead."""

    base: str
    other: str
    claimed_d: int
    report: TwistReport
    holding_d: Optional[int]


def isomorphism_report(prime_range: Tuple[int, int]) -> List[RelationResult]:
    """Checks every claimed relation; on failure searches d in {1, -1, 2, -2}."""
    results = []
    for base, other, d in CLAIMED_RELATIONS:
        report = twist_check(base, other, d, prime_range)
        holding = d if report.passed else None
        if holding is None:
            for alt in (1, -1, 2, -2):
                if alt != d and twist_check(base, other, alt, prime_range).passed:
                    holding = alt
                    break
        results.append(RelationResult(base, other, d, report, holding))
    return results


def non_isogeny_witness(
    id_a: str, id_b: str, bound: int, use_traces: bool = True
) -> Optional[int]:
    """Returns the smallest good prime p <= bound with |a_A(p)| != |a_B(p)|.

    A witness proves the curves are not isogenous; None is inconclusive.

    Args:
        id_a: First curve id.
        id_b: Second curve id.
        bound: Largest prime to try.
        use_traces: Compare Frobenius traces. With False the raw sums |N|
            are compared instead. For quartic models they differ from the
            traces by (lead / p), so the Q(i) twists E4 and E12, whose traces
            agree up to sign, get a witness at p = 11.
    """
    if bound < 3:
        raise ValueError(f"bound must be at least 3, got {bound}")
    model_a, model_b = get_curve(id_a), get_curve(id_b)
    value = frobenius_trace if use_traces else (lambda m, p: char_sum(m, p).N)
    for p in _common_good_primes([model_a, model_b], 3, bound):
        if abs(value(model_a, p)) != abs(value(model_b, p)):
            return p
    return None


def conjugate_traces(curve_id: str, p: int) -> Tuple[TraceValue, TraceValue]:
    """Returns the traces of a Q(sqrt 2) model under both embeddings."""
    model = get_curve(curve_id)
    return char_sum(model, p, root_choice=0), char_sum(model, p, root_choice=1)


INVOLUTION_VARIANTS = ("printed", "reciprocal")


def quintic_values(p: int) -> np.ndarray:
    """Returns F(x) = x(x + 1)(x + 2)(x + 3)(x + 4) mod p over F_p."""
    x = np.arange(p, dtype=np.int64)
    values = np.ones(p, dtype=np.int64)
    for i in range(5):
        values = values * (x + i) % p
    return values


def involution_verify(p: int, variant: str = "printed", root_choice: int = 0) -> bool:
    """Checks that a map sends every affine point of C(F_p) with x != -2 to C.

    Variants:
        printed: x -> -(2x + 6)/(x + 2).
        reciprocal: x -> 2/(x + 2) - 2.
    Both use y -> 2 sqrt(2) y / (x + 2)^3.

    Raises:
        SqrtTwoAbsentError: If 2 is not a square mod p.
        BadPrimeError: If p is bad for C.
    """
    if variant not in INVOLUTION_VARIANTS:
        raise ValueError(f"Unknown involution variant {variant}")
    if p in CURVES["C"].bad_primes:
        raise BadPrimeError(f"{p} is a bad prime for C")
    s = sqrt2_mod(p)[root_choice]
    values = quintic_values(p)
    roots_of: Dict[int, List[int]] = {}
    for y in range(p):
        roots_of.setdefault(y * y % p, []).append(y)
    for x in range(p):
        z = (x + 2) % p
        if z == 0:
            continue
        inv = pow(z, -1, p)
        if variant == "printed":
            x_image = -(2 * x + 6) * inv % p
        else:
            x_image = (2 * inv - 2) % p
        for y in roots_of.get(int(values[x]), []):
            y_image = 2 * s * y * pow(inv, 3, p) % p
            if y_image * y_image % p != values[x_image]:
                return False
    return True


def involution_report(p: int) -> Dict[str, Dict[int, bool]]:
    """Evaluates every variant with both square roots of 2 mod p."""
    return {
        variant: {
            root: involution_verify(p, variant, choice)
            for choice, root in enumerate(sqrt2_mod(p))
        }
        for variant in INVOLUTION_VARIANTS
    }


def format_registry(curve_ids: Optional[Iterable[str]] = None) -> str:
    """Serialises models as a plain-text table.

    Columns: id, ascending coefficients (sqrt 2 part tagged `*r2`), bad
    primes, j-invariant (genus one models only).
    """
    lines = ["id\tcoefficients\tbad_primes\tj"]
    for curve_id in curve_ids or CURVES:
        model = get_curve(curve_id)
        coeffs = ",".join(c.tagged() for c in model.coeffs)
        bad = ",".join(str(q) for q in sorted(model.bad_primes))
        j = j_invariant(model).tagged() if model.degree in (3, 4) else "-"
        lines.append(f"{model.id}\t{coeffs}\t{bad}\t{j}")
    return "\n".join(lines)

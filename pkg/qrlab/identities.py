"""Exact checks of the decomposition of n_p(t) into curve character sums.

The direct count n_p(t) = count_pattern(p, "R" * t) is the definition; every
closed form and coefficient table here is a hypothesis that is checked
against it up to a constant that may depend on the residue class of p.
"""
import csv
import itertools
import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import (
    Dict,
    Iterable,
    List,
    NamedTuple,
    Optional,
    Sequence,
    Set,
    TextIO,
    Tuple,
)

import numpy as np

from qrlab.constants import CLASS_MODULI, REFINE_MODULUS, RESIDUE
from qrlab.curves import (
    char_sum,
    conjugate_traces,
    get_curve,
    quintic_values,
    subset_polynomial,
)
from qrlab.quadratic import sqrt2_mod
from qrlab.residue_core import (
    check_odd_prime,
    chi_table,
    count_pattern,
    primes_in_range,
)


class InconsistentSystemError(ValueError):
    """Raised when no coefficient vector fits every sampled prime.

    Attributes:
        failing_primes: The shortest prefix of the sample that is already
            inconsistent.
    """

    def __init__(self, message: str, failing_primes: Sequence[int] = ()):
        super().__init__(message)
        self.failing_primes = list(failing_primes)


class UnderdeterminedSystemError(ValueError):
    """Raised when the sample does not determine the coefficients."""


class ResidualConvention(str, Enum):
    """Which subsets T enter the decomposition sum."""

    ALL_SUBSETS = "all_subsets"
    # Drops |T| <= 2, whose sums are the constants 0 and -1.
    PAPER = "paper"


def run_count(p: int, t: int) -> int:
    return count_pattern(p, RESIDUE * t)


def _check_decomposition_range(p: int, t: int):
    if not 1 <= t <= 7:
        raise ValueError(f"t={t} out of range [1, 7]")
    check_odd_prime(p)
    if p <= t + 2:
        raise ValueError(f"p={p} is too small for t={t}; need p > {t + 2}")


def subset_sums(p: int, t: int) -> Dict[Tuple[int, ...], int]:
    """Returns N_T(p) for every nonempty T in [1, t]."""
    _check_decomposition_range(p, t)
    sums = {}
    for size in range(1, t + 1):
        for subset in itertools.combinations(range(1, t + 1), size):
            sums[subset] = char_sum(subset_polynomial(subset), p).N
    return sums


def decomposition_residual(
    p: int, t: int, convention: ResidualConvention = ResidualConvention.ALL_SUBSETS
) -> Fraction:
    """Returns r = n_p(t) - 2^-t (p + sum_T N_T(p)).

    Args:
        p: An odd prime with p > t + 2.
        t: Run length, 1 <= t <= 7.
        convention: ALL_SUBSETS sums over every nonempty T; PAPER leaves out
            |T| <= 2, which shifts r by -C(t, 2) / 2^t.

    Returns:
        The exact residual.
    """
    convention = ResidualConvention(convention)
    sums = subset_sums(p, t)
    if convention == ResidualConvention.PAPER:
        total = sum(n for subset, n in sums.items() if len(subset) > 2)
    else:
        total = sum(sums.values())
    return run_count(p, t) - Fraction(p + total, 2**t)


def jacobsthal_a(p: int) -> int:
    """Returns J(k) = sum_{i=1}^{p-3} (i(i+1)(i+2) / p) for p = 4k + 1."""
    check_odd_prime(p)
    if p % 4 != 1:
        raise ValueError(f"{p} is not 1 mod 4")
    i = np.arange(1, p - 2, dtype=np.int64)
    values = i * (i + 1) % p * (i + 2) % p
    return int(chi_table(p).values(values).sum(dtype=np.int64))


class ClosedFormVariant(str, Enum):
    """Closed forms for t <= 3."""

    PAPER = "paper"
    # Exact t = 3 forms: a/8 when p = 1 mod 4, offset -1/4 removed otherwise.
    CORRECTED = "corrected"


def closed_form(
    t: int, p: int, variant: ClosedFormVariant = ClosedFormVariant.PAPER
) -> Fraction:
    """Predicts n_p(t) for t in {1, 2, 3}.

    Args:
        t: Run length.
        p: An odd prime (p != 3 for t = 3).
        variant: PAPER gives the printed formulas, CORRECTED the exact ones.

    Returns:
        The predicted value as a Fraction.
    """
    variant = ClosedFormVariant(variant)
    check_odd_prime(p)
    if t == 1:
        return Fraction(p - 1, 2)
    if t == 2:
        return Fraction(p - 5, 4) if p % 4 == 1 else Fraction(p - 3, 4)
    if t != 3:
        raise ValueError(f"No closed form for t={t}")
    if p == 3:
        raise ValueError("The t=3 closed form needs p != 3")
    chi2 = chi_table(p)(2)
    if p % 4 == 3:
        offset = 0 if variant == ClosedFormVariant.CORRECTED else 2
        return Fraction(p - 5 - 2 * chi2 + offset, 8)
    a = jacobsthal_a(p)
    corrected = variant == ClosedFormVariant.CORRECTED
    weight = Fraction(1, 8) if corrected else Fraction(1, 4)
    return Fraction(p - 11 - 4 * chi2, 8) + weight * a


class ResidualRow(NamedTuple):
    t: int
    residue_class: int
    p: int
    residual: Fraction


@dataclass
class ResidualReport:
    """Residuals grouped by residue class.

    Attributes:
        t: Run length.
        modulus: Class modulus m of the grouping.
        residuals: Class mod m -> set of observed residuals.
        threshold: Primes p <= threshold were excluded.
        samples: Every (p, residual) pair, in prime order.
    """

    t: int
    modulus: int
    residuals: Dict[int, Set[Fraction]]
    threshold: int
    samples: List[Tuple[int, Fraction]] = field(default_factory=list)

    @property
    def offending(self) -> List[int]:
        return sorted(c for c, values in self.residuals.items() if len(values) > 1)

    @property
    def class_constant(self) -> bool:
        return not self.offending

    def rows(self) -> List[ResidualRow]:
        return [ResidualRow(self.t, p % self.modulus, p, r) for p, r in self.samples]


def _group(
    samples: Sequence[Tuple[int, Fraction]], modulus: int
) -> Dict[int, Set[Fraction]]:
    groups: Dict[int, Set[Fraction]] = {}
    for p, r in samples:
        groups.setdefault(p % modulus, set()).add(r)
    return groups


def class_constant_scan(
    t: int,
    prime_range: Tuple[int, int],
    moduli: Sequence[int] = CLASS_MODULI,
    convention: ResidualConvention = ResidualConvention.ALL_SUBSETS,
) -> ResidualReport:
    """Finds the smallest modulus on whose classes the residual is constant.

    Returns the report for the first such modulus, or the report for the
    largest modulus with the offending classes listed.
    """
    lo, hi = prime_range
    threshold = t + 2
    primes = [p for p in primes_in_range(max(lo, threshold + 1), hi)]
    if not primes:
        raise ValueError(f"No primes above {threshold} in [{lo}, {hi}]")
    samples = [(p, decomposition_residual(p, t, convention)) for p in primes]
    report = None
    for modulus in sorted(moduli):
        groups = _group(samples, modulus)
        report = ResidualReport(t, modulus, groups, threshold, samples)
        if report.class_constant:
            return report
    assert report is not None
    logging.info("Residual for t=%d is not class-constant mod %d", t, report.modulus)
    return report


class HypothesisSource(str, Enum):
    PAPER = "paper"
    INFERRED = "inferred"
    DERIVED = "derived"


# Curve id used for the genus-2 terms of the t = 5 tables; it is evaluated
# as N_C / 2, the per-embedding share of the split trace.
GENUS2_TERM = "E15"

# Quartic curves that are the Q(i) twist of another basis curve. Their sums
# satisfy N_B = (-1/p)(N_A + 1) - 1, so on a class mod 4 the coefficient of
# B folds into that of A and the rest joins the class constant.
QI_TWISTS = {"E12": "E4"}


@dataclass
class CoefficientHypothesis:
    """A coefficient vector for n_p(t) - p / 2^t on one residue class.

    Attributes:
        t: Run length (4 or 5).
        residue_class: Class of p modulo `modulus`.
        coefficients: Curve id -> coefficient of its character sum.
        constant_allowed: Whether a class-constant offset is tolerated.
        source: Where the coefficients came from.
        constants: For inferred hypotheses, the offset per class mod the
            refinement modulus.
        undetermined: Basis curves whose sums vanish on the class.
    """

    t: int
    residue_class: int
    coefficients: Dict[str, Fraction]
    constant_allowed: bool = True
    source: HypothesisSource = HypothesisSource.PAPER
    constants: Dict[int, Fraction] = field(default_factory=dict)
    undetermined: List[str] = field(default_factory=list)

    @property
    def modulus(self) -> int:
        return 4 if self.t <= 4 else 8

    def effective(self) -> Dict[str, Fraction]:
        """Returns the nonzero coefficients of curves that do not vanish.

        Coefficients of Q(i) twists are folded into their base curve.
        """
        vanishing = vanishing_curves(self.t, self.residue_class)
        chi_m1 = 1 if self.residue_class % 4 == 1 else -1
        folded = dict(self.coefficients)
        for twist, base in QI_TWISTS.items():
            if twist in folded:
                share = chi_m1 * folded.pop(twist)
                folded[base] = folded.get(base, Fraction(0)) + share
        return {
            curve: c for curve, c in folded.items() if c != 0 and curve not in vanishing
        }

    def matches(self, other: "CoefficientHypothesis") -> bool:
        return self.effective() == other.effective()

    @property
    def dyadic(self) -> bool:
        """Tells whether every denominator divides 2^t."""
        return all((2**self.t) % c.denominator == 0 for c in self.coefficients.values())


def vanishing_curves(t: int, residue_class: int) -> Set[str]:
    """Returns ids whose character sums are identically zero on the class.

    N(E0) = 0 when p = 3 mod 4, and the genus-2 sum vanishes when p = 3, 5, 7
    mod 8. The genus-2 rule needs the class mod 8, so it applies only for t = 5.
    """
    vanishing = set()
    if residue_class % 4 == 3:
        vanishing.add("E0")
    if t >= 5 and residue_class % 8 in (3, 5, 7):
        vanishing |= {"C", GENUS2_TERM}
    return vanishing


def _fractions(table: Dict[str, Tuple[int, int]]) -> Dict[str, Fraction]:
    return {curve: Fraction(*value) for curve, value in table.items()}


_CLAIMED_T4 = {
    3: {"E4": (1, 16)},
    1: {"E0": (1, 8), "E1": (1, 8), "E4": (1, 16)},
}

_CLAIMED_T5 = {
    7: {"E0": (1, 16), "E1": (1, 16), "E4": (1, 16), "E12": (1, 32)},
    5: {"E0": (1, 16), "E1": (1, 8), "E4": (3, 16), "E12": (1, 32)},
    3: {
        "E0": (1, 8),
        "E1": (1, 16),
        "E4": (1, 16),
        "E12": (1, 32),
        GENUS2_TERM: (1, 16),
    },
    1: {
        "E0": (1, 8),
        "E1": (1, 8),
        "E4": (3, 16),
        "E12": (1, 32),
        GENUS2_TERM: (1, 16),
    },
}


def _normalize_class(t: int, residue_class: int) -> int:
    if t == 4 or t == 3:
        residue_class %= 4
        if residue_class not in (1, 3):
            raise ValueError(f"Class {residue_class} mod 4 holds no odd primes")
        return residue_class
    if t == 5:
        residue_class %= 8
        if residue_class not in (1, 3, 5, 7):
            raise ValueError(f"Class {residue_class} mod 8 holds no odd primes")
        return residue_class
    raise ValueError(f"No coefficient tables for t={t}")


def claimed_coefficients(t: int, residue_class: int) -> CoefficientHypothesis:
    """Returns the printed coefficient table (t = 4 by p mod 4, t = 5 by p mod 8)."""
    if t not in (4, 5):
        raise ValueError(f"No printed coefficients for t={t}")
    residue_class = _normalize_class(t, residue_class)
    table = _CLAIMED_T4 if t == 4 else _CLAIMED_T5
    return CoefficientHypothesis(
        t=t,
        residue_class=residue_class,
        coefficients=_fractions(table[residue_class]),
        source=HypothesisSource.PAPER,
    )


def derived_coefficients(t: int, residue_class: int) -> CoefficientHypothesis:
    """Returns the coefficients implied by the relations between the C_T.

    The cubic and quartic sums collapse onto E0, E1, E4 (and C for t = 5)
    through translations, the reflection x -> -x - (t - 1) (a factor (-1/p) on
    cubics), x -> 2x (a factor (2/p) on E6), E5 = E4, the 2-twist E11 = E1' and
    the Q(i) twist E12 of E4, which is folded into E4. Coefficients of curves
    vanishing on the class are left out.
    """
    residue_class = _normalize_class(t, residue_class)
    chi_m1 = 1 if residue_class % 4 == 1 else -1
    if t == 3:
        coefficients = {"E0": Fraction(1, 8)}
    elif t == 4:
        coefficients = {
            "E0": Fraction(2, 16),
            "E1": Fraction(1 + chi_m1, 16),
            "E4": Fraction(1, 16),
        }
    else:
        chi_2 = 1 if residue_class in (1, 7) else -1
        coefficients = {
            "E0": Fraction(3 + chi_2, 32),
            "E1": Fraction(2 + 2 * chi_m1 + 2 * chi_2, 32),
            "E4": Fraction(3 + chi_m1, 32),
            "E12": Fraction(1, 32),
            "C": Fraction(1, 32),
        }
    hypothesis = CoefficientHypothesis(
        t=t,
        residue_class=residue_class,
        coefficients=coefficients,
        source=HypothesisSource.DERIVED,
    )
    hypothesis.coefficients = hypothesis.effective()
    return hypothesis


def curve_sum(curve_id: str, p: int) -> Fraction:
    """Returns the value a hypothesis term takes at p."""
    if curve_id == GENUS2_TERM:
        return Fraction(genus2_char_sum(p), 2)
    return Fraction(char_sum(get_curve(curve_id), p).N)


def genus2_char_sum(p: int) -> int:
    """Returns sum_x (F(x) / p) for F = x(x+1)(x+2)(x+3)(x+4), at any odd p."""
    return int(chi_table(p).values(quintic_values(p)).sum(dtype=np.int64))


def class_primes(
    t: int,
    residue_class: int,
    modulus: int,
    prime_range: Tuple[int, int],
) -> List[int]:
    """Returns the primes p > t + 2 of the range with p = residue_class mod modulus."""
    lo, hi = prime_range
    return [
        p
        for p in primes_in_range(max(lo, t + 3, 5), hi)
        if p % modulus == residue_class % modulus
    ]


@dataclass
class VerificationReport:
    """Outcome of checking a hypothesis on the primes of its class.

    Attributes:
        hypothesis: The hypothesis checked.
        samples: (p, residual) for every prime checked.
        refine_modulus: Residuals may differ between classes of this modulus.
        first_failure: The first prime whose residual broke constancy.
        inferred: On failure, coefficients inferred from the same primes.
    """

    hypothesis: CoefficientHypothesis
    samples: List[Tuple[int, Fraction]]
    refine_modulus: int
    first_failure: Optional[int] = None
    inferred: Optional[CoefficientHypothesis] = None

    @property
    def passed(self) -> bool:
        return self.first_failure is None and bool(self.samples)

    @property
    def constants(self) -> Dict[int, Set[Fraction]]:
        return _group(self.samples, self.refine_modulus)

    def rows(self) -> List[ResidualRow]:
        return [
            ResidualRow(self.hypothesis.t, self.hypothesis.residue_class, p, r)
            for p, r in self.samples
        ]


def hypothesis_residual(hypothesis: CoefficientHypothesis, p: int) -> Fraction:
    """Returns n_p(t) - p / 2^t - sum_i c_i N_i(p)."""
    t = hypothesis.t
    residual = run_count(p, t) - Fraction(p, 2**t)
    for curve_id, c in hypothesis.coefficients.items():
        residual -= c * curve_sum(curve_id, p)
    return residual


def verify_coefficients(
    hypothesis: CoefficientHypothesis,
    prime_range: Tuple[int, int],
    refine_modulus: int = REFINE_MODULUS,
    attach_inferred: bool = True,
) -> VerificationReport:
    """Checks that a hypothesis leaves a class-constant residual.

    Residuals may take one constant per class of p mod refine_modulus inside
    the hypothesis class; the residual of t >= 4 depends on (3/p).
    """
    if refine_modulus % hypothesis.modulus:
        raise ValueError(
            f"Refinement modulus {refine_modulus} is not a multiple of "
            f"{hypothesis.modulus}"
        )
    primes = class_primes(
        hypothesis.t, hypothesis.residue_class, hypothesis.modulus, prime_range
    )
    report = VerificationReport(hypothesis, [], refine_modulus)
    seen: Dict[int, Fraction] = {}
    for p in primes:
        residual = hypothesis_residual(hypothesis, p)
        report.samples.append((p, residual))
        expected = seen.setdefault(p % refine_modulus, residual)
        if not hypothesis.constant_allowed:
            expected = Fraction(0)
        if residual != expected and report.first_failure is None:
            report.first_failure = p
    if report.first_failure is not None and attach_inferred:
        report.inferred = _infer_from_range(hypothesis, primes, refine_modulus)
        logging.warning(
            "Hypothesis t=%d class %d fails at p=%d; inferred %s",
            hypothesis.t,
            hypothesis.residue_class,
            report.first_failure,
            None if report.inferred is None else format_coefficients(report.inferred),
        )
    return report


def default_basis(t: int) -> List[str]:
    if t == 3:
        return ["E0"]
    if t == 4:
        return ["E0", "E1", "E4"]
    if t == 5:
        # E12 is left out: it is E4 plus a class constant on every class mod 4.
        return ["E0", "E1", "E4", "C"]
    raise ValueError(f"No curve basis for t={t}")


def _infer_from_range(
    hypothesis: CoefficientHypothesis, primes: Sequence[int], refine_modulus: int
) -> Optional[CoefficientHypothesis]:
    half = len(primes) // 2
    try:
        return infer_coefficients(
            hypothesis.t,
            hypothesis.residue_class,
            primes[:half],
            default_basis(hypothesis.t),
            holdout=primes[half:],
            refine_modulus=refine_modulus,
        )
    except ValueError as e:
        logging.warning("Coefficient inference failed: %s", e)
        return None


def _row_reduce(
    rows: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction]
) -> Tuple[List[List[Fraction]], List[int], bool]:
    matrix = [[Fraction(v) for v in row] + [Fraction(b)] for row, b in zip(rows, rhs)]
    n_cols = len(matrix[0]) - 1
    pivots: List[int] = []
    r = 0
    for c in range(n_cols):
        if r == len(matrix):
            break
        pivot = next((i for i in range(r, len(matrix)) if matrix[i][c] != 0), None)
        if pivot is None:
            continue
        matrix[r], matrix[pivot] = matrix[pivot], matrix[r]
        lead = matrix[r][c]
        matrix[r] = [v / lead for v in matrix[r]]
        for i in range(len(matrix)):
            if i != r and matrix[i][c] != 0:
                factor = matrix[i][c]
                matrix[i] = [v - factor * w for v, w in zip(matrix[i], matrix[r])]
        pivots.append(c)
        r += 1
    consistent = all(row[-1] == 0 for row in matrix[r:])
    return matrix, pivots, consistent


def rational_solve(
    rows: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction]
) -> List[Fraction]:
    """Solves rows * x = rhs exactly by Gauss-Jordan elimination.

    Raises:
        InconsistentSystemError: If no solution exists.
        UnderdeterminedSystemError: If the solution is not unique.
    """
    if not rows:
        raise UnderdeterminedSystemError("Empty system")
    if len(rows) != len(rhs):
        raise ValueError(f"{len(rows)} rows but {len(rhs)} right-hand sides")
    matrix, pivots, consistent = _row_reduce(rows, rhs)
    if not consistent:
        raise InconsistentSystemError("System is inconsistent")
    n_cols = len(rows[0])
    if len(pivots) < n_cols:
        raise UnderdeterminedSystemError(f"Rank {len(pivots)} < {n_cols} unknowns")
    return [matrix[i][-1] for i in range(n_cols)]


def infer_coefficients(
    t: int,
    residue_class: int,
    sample: Sequence[int],
    basis: Sequence[str],
    holdout: Optional[Sequence[int]] = None,
    refine_modulus: int = REFINE_MODULUS,
) -> CoefficientHypothesis:
    """Solves n_p(t) - p / 2^t = sum_i c_i N_i(p) + c exactly over a sample.

    Args:
        t: Run length.
        residue_class: Class of every sampled prime.
        sample: At least 2 (k + 2) primes of the class, k = len(basis).
        basis: Curve ids, one per isogeny class.
        holdout: Disjoint primes of the class the solution must also fit.
        refine_modulus: One constant c is solved for per class of p mod
            refine_modulus present in the sample.

    Returns:
        The inferred hypothesis. Basis curves whose sums are zero on every
        sampled prime are listed as undetermined.

    Raises:
        InconsistentSystemError: If the sample or hold-out admits no solution.
        UnderdeterminedSystemError: If the sample is too small or degenerate.
    """
    residue_class = _normalize_class(t, residue_class)
    modulus = 4 if t <= 4 else 8
    for p in list(sample) + list(holdout or []):
        if p % modulus != residue_class:
            raise ValueError(f"{p} is not {residue_class} mod {modulus}")
        if p <= t + 2:
            raise ValueError(f"p={p} is too small for t={t}")
    if holdout and set(sample) & set(holdout):
        raise ValueError("Sample and hold-out must be disjoint")
    if len(sample) < 2 * (len(basis) + 2):
        raise UnderdeterminedSystemError(
            f"Need at least {2 * (len(basis) + 2)} primes, got {len(sample)}"
        )
    values = {p: [curve_sum(curve_id, p) for curve_id in basis] for p in sample}
    kept = [i for i, _ in enumerate(basis) if any(values[p][i] != 0 for p in sample)]
    undetermined = [basis[i] for i in range(len(basis)) if i not in kept]
    subclasses = sorted({p % refine_modulus for p in sample})

    def row(p: int) -> List[Fraction]:
        constants = [Fraction(int(p % refine_modulus == s)) for s in subclasses]
        return [values[p][i] for i in kept] + constants

    def target(p: int) -> Fraction:
        return run_count(p, t) - Fraction(p, 2**t)

    rows = [row(p) for p in sample]
    rhs = [target(p) for p in sample]
    try:
        solution = rational_solve(rows, rhs)
    except InconsistentSystemError:
        for end in range(1, len(sample) + 1):
            if not _row_reduce(rows[:end], rhs[:end])[2]:
                raise InconsistentSystemError(
                    f"No coefficients fit primes {list(sample[:end])}", sample[:end]
                )
        raise
    coefficients = {basis[i]: solution[j] for j, i in enumerate(kept)}
    constants = dict(zip(subclasses, solution[len(kept) :]))
    hypothesis = CoefficientHypothesis(
        t=t,
        residue_class=residue_class,
        coefficients=coefficients,
        source=HypothesisSource.INFERRED,
        constants=constants,
        undetermined=undetermined,
    )
    for p in holdout or []:
        subclass = p % refine_modulus
        if subclass not in constants:
            logging.warning("Hold-out prime %d has no fitted constant; skipped", p)
            continue
        predicted = constants[subclass] + sum(
            c * curve_sum(curve_id, p) for curve_id, c in coefficients.items()
        )
        if predicted != target(p):
            raise InconsistentSystemError(
                f"Inferred coefficients fail on hold-out prime {p}", [p]
            )
    return hypothesis


SPLIT_CANDIDATES = ("conjugate_pair", "twist_pair", "vanishing")


@dataclass
class SplitReport:
    """Which genus-2 split identities hold on one class mod 8.

    `candidates` maps each identity to True/False, or None when it is not
    defined on the class (both pair identities need sqrt 2 in F_p).
    """

    residue_class: int
    primes: List[int] = field(default_factory=list)
    candidates: Dict[str, Optional[bool]] = field(default_factory=dict)

    @property
    def holding(self) -> List[str]:
        return [name for name, holds in self.candidates.items() if holds]


def _split_values(p: int) -> Dict[str, Optional[bool]]:
    n_c = genus2_char_sum(p)
    conjugate_pair = twist_pair = None
    if p % 8 in (1, 7):
        chi = chi_table(p)
        first, second = conjugate_traces("E15", p)
        conjugate_pair = n_c == first.N + second.N
        # f15(r u) = 2r f16(u) for r^2 = 2, so N15(r) = (2r/p) N16.
        n16 = char_sum(get_curve("E16"), p).N
        twist_pair = n_c == sum(chi(2 * r) for r in sqrt2_mod(p)) * n16
    return {
        "conjugate_pair": conjugate_pair,
        "twist_pair": twist_pair,
        "vanishing": n_c == 0,
    }


def genus2_split_test(prime_range: Tuple[int, int]) -> Dict[int, SplitReport]:
    """Tests candidate formulas for the genus-2 sum on every class mod 8.

    Candidates:
        conjugate_pair: N_C = N15(r1) + N15(r2) over both sqrt 2 embeddings.
        twist_pair: N_C = sum over r^2 = 2 of (2r/p) N16.
        vanishing: N_C = 0.
    """
    reports = {c: SplitReport(c) for c in (1, 3, 5, 7)}
    lo, hi = prime_range
    for p in primes_in_range(max(lo, 5), hi):
        report = reports[p % 8]
        report.primes.append(p)
        for name, holds in _split_values(p).items():
            if holds is None:
                report.candidates.setdefault(name, None)
            else:
                previous = report.candidates.get(name, True)
                report.candidates[name] = bool(previous) and holds
    return reports


def write_residual_csv(rows: Iterable[ResidualRow], stream: TextIO):
    """Writes residual rows as CSV with columns t,class,p,residual_num,residual_den."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["t", "class", "p", "residual_num", "residual_den"])
    for row in rows:
        residual = row.residual
        writer.writerow(
            [row.t, row.residue_class, row.p, residual.numerator, residual.denominator]
        )


def format_coefficients(hypothesis: CoefficientHypothesis) -> str:
    return ",".join(f"{curve}={c}" for curve, c in hypothesis.coefficients.items())


def format_summary(report: VerificationReport) -> str:
    """Renders a verification report as `key: value` lines."""
    hypothesis = report.hypothesis
    constants = ",".join(
        f"{c}:" + "|".join(str(v) for v in sorted(values))
        for c, values in sorted(report.constants.items())
    )
    lines = [
        f"t: {hypothesis.t}",
        f"class: {hypothesis.residue_class} mod {hypothesis.modulus}",
        f"source: {hypothesis.source.value}",
        f"coefficients: {format_coefficients(hypothesis)}",
        f"primes: {len(report.samples)}",
        f"constants: {constants}",
        f"passed: {str(report.passed).lower()}",
    ]
    if report.first_failure is not None:
        lines.append(f"first_failure: {report.first_failure}")
    if report.inferred is not None:
        lines.append(f"inferred: {format_coefficients(report.inferred)}")
    return "\n".join(lines)


def max_abs_residual(t: int, prime_range: Tuple[int, int]) -> Fraction:
    """Returns the largest |r_p| over the primes p > t + 2 of the range."""
    lo, hi = prime_range
    primes = primes_in_range(max(lo, t + 3), hi)
    return max((abs(decomposition_residual(p, t)) for p in primes), default=Fraction(0))


def residual_denominator_ok(residual: Fraction, t: int) -> bool:
    """Tells whether 2^t r is an integer."""
    return (residual * 2**t).denominator == 1


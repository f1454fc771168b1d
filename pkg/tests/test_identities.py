"""Test the exact decomposition checks."""
import io
from fractions import Fraction

import pytest

from qrlab.curves import char_sum, get_curve
from qrlab.identities import (
    GENUS2_TERM,
    ClosedFormVariant,
    CoefficientHypothesis,
    InconsistentSystemError,
    ResidualConvention,
    UnderdeterminedSystemError,
    class_constant_scan,
    class_primes,
    claimed_coefficients,
    closed_form,
    decomposition_residual,
    default_basis,
    derived_coefficients,
    format_summary,
    genus2_char_sum,
    genus2_split_test,
    infer_coefficients,
    jacobsthal_a,
    max_abs_residual,
    rational_solve,
    residual_denominator_ok,
    run_count,
    subset_sums,
    vanishing_curves,
    verify_coefficients,
    write_residual_csv,
)
from tests.utils import naive_primes


class TestDecomposition:
    """Test the residual of the subset decomposition."""

    def test_known_residuals(self):
        """Test the small hand-computed residuals."""
        assert decomposition_residual(11, 2) == Fraction(-1, 2)
        assert decomposition_residual(13, 3) == Fraction(-1, 2)
        for p in naive_primes(300)[2:]:
            assert decomposition_residual(p, 1) == Fraction(-1, 2)

    def test_t2_by_class(self):
        """Test both residual conventions for t = 2."""
        for p in naive_primes(300)[3:]:
            expected = Fraction(-1) if p % 4 == 1 else Fraction(-1, 2)
            assert decomposition_residual(p, 2) == expected
            paper = decomposition_residual(p, 2, ResidualConvention.PAPER)
            assert paper == expected - Fraction(1, 4)

    def test_t3_by_class(self):
        """Test the t = 3 residual on every class mod 8."""
        expected = {
            1: Fraction(-3, 2),
            3: Fraction(0),
            5: Fraction(-1, 2),
            7: Fraction(-1, 2),
        }
        for p in naive_primes(500)[3:]:
            assert decomposition_residual(p, 3) == expected[p % 8]

    def test_subset_sums(self):
        """Test the number of subsets and the constant sums of small subsets."""
        sums = subset_sums(17, 4)
        assert len(sums) == 15
        assert all(sums[(k,)] == 0 for k in range(1, 5))
        assert all(n == -1 for subset, n in sums.items() if len(subset) == 2)

    @pytest.mark.parametrize("p,t", [(5, 3), (7, 5), (11, 0), (11, 8), (9, 1)])
    def test_invalid_arguments(self, p, t):
        """Test primes too small for t and t out of range."""
        with pytest.raises(ValueError):
            decomposition_residual(p, t)

    @pytest.mark.parametrize("t", [1, 2, 3, 4, 5])
    def test_residual_bounds(self, t):
        """Test |r| <= 4 and the dyadic denominator."""
        assert max_abs_residual(t, (1, 600)) <= 4
        for p in naive_primes(300):
            if p > t + 2:
                assert residual_denominator_ok(decomposition_residual(p, t), t)


class TestClassConstantScan:
    """Test the class-constant scans."""

    def test_t1(self):
        """Test that the t = 1 residual is constant mod 4."""
        report = class_constant_scan(1, (1, 1000), [4, 8])
        assert report.modulus == 4
        assert report.residuals == {1: {Fraction(-1, 2)}, 3: {Fraction(-1, 2)}}
        assert report.threshold == 3

    def test_t3(self):
        """Test that the t = 3 residual needs the class mod 8."""
        report = class_constant_scan(3, (1, 1000), [4, 8])
        assert report.modulus == 8
        assert report.class_constant
        assert report.residuals[3] == {Fraction(0)}

    def test_t4(self):
        """Test that the t = 4 residual depends on (3/p)."""
        report = class_constant_scan(4, (1, 1000), [4, 8])
        assert not report.class_constant
        assert report.offending
        refined = class_constant_scan(4, (1, 1000))
        assert refined.modulus == 24
        assert refined.class_constant

    def test_rows_and_csv(self):
        """Test the CSV export of residual rows."""
        report = class_constant_scan(2, (5, 13))
        stream = io.StringIO()
        write_residual_csv(report.rows(), stream)
        lines = stream.getvalue().splitlines()
        assert lines[0] == "t,class,p,residual_num,residual_den"
        assert lines[1] == "2,1,5,-1,1"
        assert lines[-1] == "2,1,13,-1,1"

    def test_empty_range(self):
        """Test a range with no admissible primes."""
        with pytest.raises(ValueError):
            class_constant_scan(4, (1, 6))


class TestClosedForms:
    """Test the closed forms for t <= 3."""

    def test_known_values(self):
        """Test the small examples."""
        assert closed_form(2, 13) == 2 == run_count(13, 2)
        assert closed_form(2, 11) == 2 == run_count(11, 2)
        assert closed_form(3, 7) == Fraction(1, 4)
        assert run_count(7, 3) == 0

    def test_jacobsthal(self):
        """Test the Jacobsthal sums."""
        assert jacobsthal_a(5) == 2
        assert jacobsthal_a(13) == -6
        with pytest.raises(ValueError):
            jacobsthal_a(7)

    def test_exact_forms(self):
        """Test the exact forms for t <= 2 and the corrected t = 3 form."""
        for p in naive_primes(2000)[2:]:
            assert closed_form(1, p) == run_count(p, 1)
            assert closed_form(2, p) == run_count(p, 2)
            assert closed_form(3, p, ClosedFormVariant.CORRECTED) == run_count(p, 3)

    def test_printed_t3_offset(self):
        """Test the discrepancy of the printed t = 3 form."""
        for p in naive_primes(2000)[2:]:
            offset = closed_form(3, p) - run_count(p, 3)
            if p % 4 == 3:
                assert offset == Fraction(1, 4)
            else:
                assert offset == Fraction(jacobsthal_a(p), 8)

    def test_invalid(self):
        """Test unsupported arguments."""
        with pytest.raises(ValueError):
            closed_form(4, 13)
        with pytest.raises(ValueError):
            closed_form(3, 3)


class TestCoefficientTables:
    """Test the printed and derived coefficient tables."""

    def test_printed_tables(self):
        """Test the printed t = 4 and t = 5 rows."""
        assert claimed_coefficients(4, 3).coefficients == {"E4": Fraction(1, 16)}
        assert claimed_coefficients(4, 1).coefficients == {
            "E0": Fraction(1, 8),
            "E1": Fraction(1, 8),
            "E4": Fraction(1, 16),
        }
        assert claimed_coefficients(5, 7).coefficients == {
            "E0": Fraction(1, 16),
            "E1": Fraction(1, 16),
            "E4": Fraction(1, 16),
            "E12": Fraction(1, 32),
        }
        with pytest.raises(ValueError):
            claimed_coefficients(3, 1)
        with pytest.raises(ValueError):
            claimed_coefficients(5, 4)

    def test_derived_tables(self):
        """Test the derived coefficients by class."""
        assert derived_coefficients(4, 3).coefficients == {"E4": Fraction(1, 16)}
        assert derived_coefficients(5, 1).coefficients == {
            "E0": Fraction(1, 8),
            "E1": Fraction(3, 16),
            "E4": Fraction(5, 32),
            "C": Fraction(1, 32),
        }
        assert derived_coefficients(5, 3).coefficients == {
            "E1": Fraction(-1, 16),
            "E4": Fraction(1, 32),
        }
        assert all(derived_coefficients(5, c).dyadic for c in (1, 3, 5, 7))

    @pytest.mark.parametrize(
        "residue_class,expected",
        [(1, Fraction(5, 32)), (3, Fraction(1, 32)), (5, Fraction(5, 32))],
    )
    def test_qi_twist_folded(self, residue_class, expected):
        """Test that the E12 share is folded into E4 with the sign (-1/p)."""
        derived = derived_coefficients(5, residue_class)
        assert "E12" not in derived.coefficients
        assert derived.coefficients["E4"] == expected

    def test_claimed_row_folds_like_derived(self):
        """Test that the printed p = 7 mod 8 row folds onto the derived one."""
        claimed = claimed_coefficients(5, 7)
        assert claimed.effective() == {
            "E1": Fraction(1, 16),
            "E4": Fraction(1, 32),
        }
        assert claimed.matches(derived_coefficients(5, 7))
        assert not claimed_coefficients(5, 5).matches(derived_coefficients(5, 5))

    def test_vanishing_curves(self):
        """Test which sums vanish identically on a class."""
        assert vanishing_curves(4, 3) == {"E0"}
        assert vanishing_curves(4, 1) == set()
        assert vanishing_curves(5, 5) == {"C", GENUS2_TERM}

    def test_genus2_sum(self):
        """Test the genus-2 sum at the small primes."""
        assert [genus2_char_sum(p) for p in (3, 5, 7)] == [0, 0, 0]
        for p in naive_primes(600)[2:]:
            if p % 8 != 1:
                assert genus2_char_sum(p) == 0


class TestVerification:
    """Test hypothesis verification."""

    @pytest.mark.parametrize("residue_class", [1, 3])
    def test_printed_t4_passes(self, residue_class):
        """Test that the printed t = 4 tables leave class-constant residuals."""
        report = verify_coefficients(claimed_coefficients(4, residue_class), (7, 3000))
        assert report.passed
        assert report.inferred is None
        assert "passed: true" in format_summary(report)

    def test_zero_hypothesis_fails(self):
        """Test that leaving out the E4 term breaks constancy."""
        report = verify_coefficients(CoefficientHypothesis(4, 3, {}), (7, 3000))
        assert not report.passed
        assert report.first_failure is not None
        assert report.inferred is not None
        assert report.inferred.matches(derived_coefficients(4, 3))

    def test_printed_t5_class7_passes(self):
        """Test the printed row for p = 7 mod 8."""
        assert verify_coefficients(claimed_coefficients(5, 7), (11, 3000)).passed

    def test_printed_t5_class1_fails(self):
        """Test that a failing row carries the inferred coefficients."""
        report = verify_coefficients(claimed_coefficients(5, 1), (11, 4000))
        assert not report.passed
        assert report.inferred is not None
        assert report.inferred.matches(derived_coefficients(5, 1))
        assert "first_failure" in format_summary(report)

    @pytest.mark.parametrize(
        "t,residue_class", [(4, 1), (4, 3), (5, 1), (5, 3), (5, 5), (5, 7)]
    )
    def test_derived_tables_pass(self, t, residue_class):
        """Test the derived tables on every class."""
        report = verify_coefficients(
            derived_coefficients(t, residue_class), (t + 3, 3000), attach_inferred=False
        )
        assert report.passed

    def test_bad_refinement(self):
        """Test a refinement modulus that is not a multiple of the class modulus."""
        with pytest.raises(ValueError):
            verify_coefficients(
                claimed_coefficients(5, 1), (11, 100), refine_modulus=12
            )


class TestInference:
    """Test the exact coefficient inference."""

    def test_rational_solve(self):
        """Test the Gauss-Jordan solver."""
        one = Fraction(1)
        assert rational_solve([[one, one], [one, -one]], [3, 1]) == [2, 1]
        with pytest.raises(InconsistentSystemError):
            rational_solve([[one], [one]], [1, 2])
        with pytest.raises(UnderdeterminedSystemError):
            rational_solve([[one, one]], [1])

    def test_t4_class1(self):
        """Test inference of the t = 4 row for p = 1 mod 4 from 12 primes."""
        primes = class_primes(4, 1, 4, (7, 1000))
        inferred = infer_coefficients(
            4, 1, primes[:12], default_basis(4), holdout=primes[12:20]
        )
        assert inferred.coefficients == {
            "E0": Fraction(1, 8),
            "E1": Fraction(1, 8),
            "E4": Fraction(1, 16),
        }
        assert inferred.undetermined == []

    def test_t4_class3(self):
        """Test inference with a single basis curve."""
        primes = class_primes(4, 3, 4, (7, 1000))
        inferred = infer_coefficients(4, 3, primes[:12], ["E4"])
        assert inferred.coefficients == {"E4": Fraction(1, 16)}

    def test_vanishing_column(self):
        """Test that a basis curve vanishing on the class is undetermined."""
        primes = class_primes(4, 3, 4, (7, 1000))
        inferred = infer_coefficients(4, 3, primes[:12], default_basis(4))
        assert inferred.undetermined == ["E0"]
        assert inferred.matches(derived_coefficients(4, 3))

    def test_t5_basis_has_no_twists(self):
        """Test that the t = 5 basis leaves out E12, a Q(i) twist of E4."""
        assert default_basis(5) == ["E0", "E1", "E4", "C"]
        assert "E12" not in default_basis(5)

    @pytest.mark.parametrize("residue_class", [1, 3, 5, 7])
    def test_t5_every_class(self, residue_class):
        """Test that the t = 5 basis is determined on every class mod 8."""
        primes = class_primes(5, residue_class, 8, (11, 3000))
        inferred = infer_coefficients(
            5, residue_class, primes[:12], default_basis(5), holdout=primes[12:24]
        )
        assert inferred.matches(derived_coefficients(5, residue_class))

    def test_t5_twist_column_is_underdetermined(self):
        """Test that adding E12 back makes the t = 5 system singular."""
        primes = class_primes(5, 3, 8, (11, 3000))
        with pytest.raises(UnderdeterminedSystemError):
            infer_coefficients(5, 3, primes[:14], ["E1", "E4", "E12"])

    def test_missing_curve_is_inconsistent(self):
        """Test that a basis missing a needed curve has no solution."""
        primes = class_primes(4, 1, 4, (7, 1000))
        with pytest.raises(InconsistentSystemError) as info:
            infer_coefficients(4, 1, primes[:20], ["E4"])
        assert info.value.failing_primes

    def test_sample_checks(self):
        """Test sample size, class membership and disjointness checks."""
        primes = class_primes(4, 1, 4, (7, 1000))
        with pytest.raises(UnderdeterminedSystemError):
            infer_coefficients(4, 1, primes[:9], default_basis(4))
        with pytest.raises(ValueError):
            infer_coefficients(4, 1, [7] + primes[:11], default_basis(4))
        with pytest.raises(ValueError):
            infer_coefficients(4, 1, primes[:12], default_basis(4), holdout=primes[:2])


class TestGenus2Split:
    """Test the candidate formulas for the genus-2 sum."""

    def test_survivors(self):
        """Test which identities hold on each class mod 8."""
        reports = genus2_split_test((5, 2000))
        assert reports[1].holding == ["conjugate_pair", "twist_pair"]
        assert reports[3].holding == ["vanishing"]
        assert reports[5].holding == ["vanishing"]
        assert reports[7].holding == ["conjugate_pair", "twist_pair", "vanishing"]
        assert reports[3].candidates["conjugate_pair"] is None
        assert reports[5].candidates["twist_pair"] is None

    def test_twist_pair_is_not_twice_n16(self):
        """Test that the twist pair uses (2r/p), not N16 + (2/p)^2 N16."""
        reports = genus2_split_test((5, 2000))
        assert reports[7].candidates["twist_pair"]
        # On p = 7 mod 8 N_C = 0 while N16 is not always zero.
        assert any(
            char_sum(get_curve("E16"), p).N != 0 for p in reports[7].primes[:20]
        )

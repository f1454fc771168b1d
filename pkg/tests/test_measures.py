"""Test the measure algebra, sampling and KS distances."""
import io
from fractions import Fraction

import numpy as np
import pytest

from qrlab.measures import (
    EmpiricalSample,
    PredictionVariant,
    arcsine,
    atom,
    cdf,
    cdf_left,
    convolve,
    density,
    ks,
    ks_pvalue,
    lambda_cm,
    mass,
    moment,
    nu1,
    nu2,
    parse_expression,
    predicted_factors,
    predicted_measure,
    sample,
    sample_sum,
    scale,
    semicircle,
    support,
    variance,
    write_csv,
)


PREDICTIONS = [(4, 1), (4, 3), (5, 1), (5, 3), (5, 5), (5, 7)]


class TestPrimitives:
    """Test the primitive laws."""

    def test_mass_and_cdf(self):
        """Test masses and CDF values at 0."""
        assert mass(nu1()) == pytest.approx(1)
        assert mass(nu2()) == pytest.approx(1)
        assert cdf(nu2(), 0) == pytest.approx(0.5)
        assert cdf(nu1(), 0) == pytest.approx(0.75)
        assert cdf_left(nu1(), 0) == pytest.approx(0.25)
        assert cdf(nu2(), 2) == pytest.approx(1)
        assert cdf(nu2(), -3) == 0

    def test_moments(self):
        """Test the second moments of both laws."""
        assert moment(nu1(), 2) == pytest.approx(1)
        assert moment(nu2(), 2) == pytest.approx(1)
        assert moment(nu2(), 4) == pytest.approx(2)
        assert moment(nu1(), 1) == 0
        for m in (nu1(), nu2(), lambda_cm()):
            assert moment(m, 0) == pytest.approx(1)

    def test_density(self):
        """Test density values of the primitives."""
        assert density(nu2(), 0) == pytest.approx(1 / np.pi)
        assert density(arcsine(2), 0) == pytest.approx(1 / (2 * np.pi))
        assert density(nu2(), 2.5) == 0

    def test_invalid_parameters(self):
        """Test nonpositive radii and masses."""
        with pytest.raises(ValueError):
            semicircle(0)
        with pytest.raises(ValueError):
            atom(0, -1)

    def test_literal_lambda_cm(self):
        """Test the non-normalized CM law."""
        literal = lambda_cm(normalized=False)
        assert mass(literal) == pytest.approx(0.75)
        with pytest.raises(ValueError):
            convolve(literal, nu2())


class TestScale:
    """Test pushforwards under x -> c x."""

    def test_examples(self):
        """Test the scaled laws."""
        assert scale(nu2(), 2).components == semicircle(4, 1).components
        scaled = scale(nu1(), 2)
        assert scaled.atoms == ((Fraction(0), Fraction(1, 2)),)
        assert scaled.components == arcsine(4, Fraction(1, 2)).components
        assert scale(nu1(), 1).components == nu1().components
        assert support(scale(nu2(), 2)) == (-4, 4)

    def test_invalid_factor(self):
        """Test nonpositive factors."""
        with pytest.raises(ValueError):
            scale(nu2(), 0)


class TestConvolve:
    """Test convolutions."""

    def test_atom_identity(self):
        """Test that the point mass at 0 is the identity."""
        result = convolve(atom(0), nu2())
        assert result.components == nu2().components
        assert result.grid is None

    def test_atoms_exact(self):
        """Test that atoms convolve exactly."""
        result = convolve(nu1(), atom(3))
        assert result.atoms == ((Fraction(3), Fraction(1, 2)),)
        assert support(result) == (1, 5)

    def test_support_adds(self):
        """Test that the support endpoints add exactly."""
        result = convolve(scale(nu1(), 2), scale(nu2(), 2), nu2())
        assert support(result) == (-10, 10)
        assert mass(result) == pytest.approx(1, abs=1e-9)

    def test_second_moments_add(self):
        """Test that variances add up to the grid error."""
        factors = [scale(nu1(), 2), scale(nu2(), 2), nu2()]
        result = convolve(*factors)
        expected = sum(variance(m) for m in factors)
        tolerance = len(factors) * (1 / 512) ** 2 + 1e-9
        assert variance(result) == pytest.approx(expected, abs=tolerance)

    def test_symmetric(self):
        """Test that the convolution of even laws is even."""
        result = convolve(semicircle(4), arcsine(2))
        xs = np.linspace(0.1, 5.5, 50)
        assert np.allclose(density(result, xs), density(result, -xs), atol=1e-2)

    def test_monte_carlo(self):
        """Test the numeric convolution against summed draws."""
        factors = [arcsine(4), semicircle(4), semicircle(2)]
        draws = sample_sum(factors, 10**5, seed=1)
        assert ks(draws, convolve(*factors)) <= 0.01

    def test_empty(self):
        """Test that convolve needs an argument."""
        with pytest.raises(ValueError):
            convolve()


class TestSampling:
    """Test sampling and the KS distance."""

    def test_mean(self):
        """Test the sample mean of the semicircle law."""
        draws = sample(nu2(), 10**6, seed=0)
        assert abs(draws.values.mean()) <= 0.005

    def test_atom_fraction(self):
        """Test the share of exact zeros from the CM law."""
        draws = sample(nu1(), 10**6, seed=0)
        assert 0.498 <= np.mean(draws.values == 0) <= 0.502

    def test_reproducible(self):
        """Test that a seed fixes the sample."""
        a = sample(nu1(), 1000, seed=7)
        b = sample(nu1(), 1000, seed=7)
        assert np.array_equal(a.values, b.values)
        assert not np.array_equal(a.values, sample(nu1(), 1000, seed=8).values)

    def test_ks(self):
        """Test KS distances against the right and the wrong law."""
        draws = sample(nu2(), 10**5, seed=3)
        assert ks(draws, nu2()) <= 0.01
        assert ks(draws, nu1()) >= 0.2
        assert ks(EmpiricalSample(np.zeros(10)), atom(0)) == 0
        assert 0 <= ks_pvalue(0.01, 10**5) <= 1

    def test_invalid_samples(self):
        """Test empty and non-finite samples."""
        with pytest.raises(ValueError):
            sample(nu2(), 0)
        with pytest.raises(ValueError):
            EmpiricalSample(np.array([1.0, np.inf]))
        with pytest.raises(ValueError):
            ks(EmpiricalSample(np.zeros(0)), nu2())


class TestPredictedMeasure:
    """Test the predicted laws of delta."""

    def test_t4_class3(self):
        """Test that both variants reduce to the semicircle law."""
        for variant in PredictionVariant:
            result = predicted_measure(4, 3, variant)
            assert result.components == nu2().components
            assert result.grid is None

    def test_t4_class1(self):
        """Test the class-aware factors for p = 1 mod 4."""
        factors = predicted_factors(4, 1)
        assert [f.components for f in factors] == [
            arcsine(4).components,
            semicircle(4).components,
            semicircle(2).components,
        ]
        assert support(predicted_measure(4, 1)) == (-10, 10)

    def test_t5_class7(self):
        """Test the class-aware factors for p = 7 mod 8."""
        factors = predicted_factors(5, 7)
        assert factors[0].atoms == ((Fraction(0), Fraction(1)),)
        # E12 is folded into E4: 2/32 - 1/32.
        assert [f.components for f in factors[1:]] == [
            semicircle(4).components,
            semicircle(2).components,
        ]

    @pytest.mark.parametrize("t,residue_class", PREDICTIONS)
    def test_invariants(self, t, residue_class):
        """Test mass, support and variance of every predicted law."""
        factors = predicted_factors(t, residue_class)
        result = predicted_measure(t, residue_class)
        assert mass(result) == pytest.approx(1, abs=1e-9)
        lo, hi = support(result)
        assert lo == -hi
        assert hi == sum(support(f)[1] for f in factors)
        expected = sum(variance(f) for f in factors)
        tolerance = len(factors) * 2**-18 + 1e-9
        assert variance(result) == pytest.approx(expected, abs=tolerance)

    @pytest.mark.slow
    @pytest.mark.parametrize("t,residue_class", PREDICTIONS)
    def test_monte_carlo(self, t, residue_class):
        """Test every predicted law against 10^6 summed draws."""
        for variant in PredictionVariant:
            factors = predicted_factors(t, residue_class, variant)
            draws = sample_sum(factors, 10**6, seed=0)
            assert ks(draws, predicted_measure(t, residue_class, variant)) <= 0.01

    def test_invalid(self):
        """Test unsupported arguments."""
        with pytest.raises(ValueError):
            predicted_measure(6, 1, PredictionVariant.PAPER)
        with pytest.raises(ValueError):
            predicted_measure(5, 2, PredictionVariant.PAPER)


class TestExpressions:
    """Test the expression parser and the CSV export."""

    def test_parse(self):
        """Test a nested expression."""
        result = parse_expression("conv(scale(nu1, 2), scale(nu2, 2), nu2)")
        assert support(result) == (-10, 10)
        atoms = parse_expression("atom(1/2, 1)").atoms
        assert atoms == ((Fraction(1, 2), Fraction(1)),)
        components = parse_expression("semicircle(4,1)").components
        assert components == semicircle(4).components

    @pytest.mark.parametrize(
        "expr", ["nu3", "scale(nu2)", "nu2 nu1", "conv(nu2,", "atom(x,1)"]
    )
    def test_parse_errors(self, expr):
        """Test malformed expressions."""
        with pytest.raises(ValueError):
            parse_expression(expr)

    def test_write_csv(self):
        """Test the atom header and the density rows."""
        stream = io.StringIO()
        write_csv(nu1(), stream, Fraction(1, 2))
        lines = stream.getvalue().splitlines()
        assert lines[0] == "# atom 0 1/2"
        rows = [line.split(",") for line in lines[1:]]
        assert [float(x) for x, _ in rows] == [k / 2 for k in range(-4, 5)]
        assert float(rows[4][1]) == pytest.approx(1 / (4 * np.pi))

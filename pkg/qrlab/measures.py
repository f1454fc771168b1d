"""Limit laws for normalized traces and their convolutions.

A MeasureSpec is a finite sum of point masses, analytic primitives (the
semicircle and arcsine laws) and at most one lattice grid. Primitives stay
analytic under scaling and translation; convolving two continuous parts
discretises them onto the lattice k * step and convolves the node masses.
"""
import csv
import logging
import math
import re
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, TextIO, Tuple, Union

import numpy as np
from scipy import signal, stats

from qrlab.constants import DEFAULT_GRID_STEP, MASS_TOLERANCE, MAX_MASS_DRIFT
from qrlab.identities import derived_coefficients


Number = Union[int, Fraction, float]


class MassDriftError(ValueError):
    """Raised when a convolution loses more mass than renormalisation allows."""


class PrimitiveKind(str, Enum):
    SEMICIRCLE = "semicircle"
    ARCSINE = "arcsine"


@dataclass(frozen=True)
class Component:
    """An analytic primitive of mass `mass` on [center - radius, center + radius]."""

    kind: PrimitiveKind
    radius: Fraction
    mass: Fraction
    center: Fraction = Fraction(0)

    def cdf(self, x: np.ndarray) -> np.ndarray:
        y = np.asarray(x, dtype=float) - float(self.center)
        u = np.clip(y / float(self.radius), -1, 1)
        if self.kind == PrimitiveKind.SEMICIRCLE:
            share = 0.5 + (u * np.sqrt(1 - u * u) + np.arcsin(u)) / math.pi
        else:
            share = 0.5 + np.arcsin(u) / math.pi
        return float(self.mass) * share

    def first_moment(self, x: np.ndarray) -> np.ndarray:
        """Returns the integral of (y - center) over (-inf, x]."""
        radius = float(self.radius)
        u = np.clip((np.asarray(x, dtype=float) - float(self.center)) / radius, -1, 1)
        rest = np.sqrt(1 - u * u)
        if self.kind == PrimitiveKind.SEMICIRCLE:
            return -float(self.mass) * 2 * radius * rest**3 / (3 * math.pi)
        return -float(self.mass) * radius * rest / math.pi

    def density(self, x: np.ndarray) -> np.ndarray:
        radius = float(self.radius)
        y = np.asarray(x, dtype=float) - float(self.center)
        inside = np.abs(y) < radius
        gap = np.where(inside, radius * radius - y * y, 1.0)
        if self.kind == PrimitiveKind.SEMICIRCLE:
            values = 2 * float(self.mass) * np.sqrt(gap) / (math.pi * radius * radius)
        else:
            values = float(self.mass) / (math.pi * np.sqrt(gap))
        return np.where(inside, values, 0.0)

    def central_moment(self, k: int) -> Fraction:
        """Returns E[(X - center)^k] times the mass."""
        if k % 2:
            return Fraction(0)
        j = k // 2
        count = math.comb(2 * j, j)
        if self.kind == PrimitiveKind.SEMICIRCLE:
            count //= j + 1
        return self.mass * count * (self.radius / 2) ** k

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        radius = float(self.radius)
        if self.kind == PrimitiveKind.SEMICIRCLE:
            # x-coordinate of a uniform point in the disk of radius R
            r = np.sqrt(rng.random(n))
            values = radius * r * np.cos(2 * math.pi * rng.random(n))
        else:
            values = radius * np.sin(math.pi * (rng.random(n) - 0.5))
        return values + float(self.center)


@dataclass(frozen=True, eq=False)
class DensityGrid:
    """Node masses at (start + i) * step; each mass is spread over its cell.

    Attributes:
        start: Lattice index of the first node.
        step: Lattice spacing.
        masses: Nonnegative node masses.
        bounds: Exact support of the measure the grid approximates.
    """

    start: int
    step: float
    masses: np.ndarray
    bounds: Tuple[Fraction, Fraction]

    @property
    def nodes(self) -> np.ndarray:
        return (self.start + np.arange(len(self.masses))) * self.step

    def cdf(self, x: np.ndarray) -> np.ndarray:
        edges = self.nodes + self.step / 2
        cumulative = np.cumsum(self.masses)
        knots = np.concatenate(([edges[0] - self.step], edges))
        values = np.concatenate(([0.0], cumulative))
        return np.interp(np.asarray(x, dtype=float), knots, values)

    def density(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        index = np.floor(x / self.step + 0.5).astype(np.int64) - self.start
        inside = (index >= 0) & (index < len(self.masses))
        safe = np.clip(index, 0, len(self.masses) - 1)
        return np.where(inside, self.masses[safe] / self.step, 0.0)


@dataclass(frozen=True, eq=False)
class MeasureSpec:
    """A finite measure on the line.

    Attributes:
        atoms: (location, mass) pairs.
        components: Analytic primitives.
        grid: Lattice part produced by convolution.
    """

    atoms: Tuple[Tuple[Fraction, Fraction], ...] = ()
    components: Tuple[Component, ...] = ()
    grid: Optional[DensityGrid] = None


@dataclass(frozen=True, eq=False)
class EmpiricalSample:
    """Finite sample of real values."""

    values: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(values)):
            raise ValueError("Sample values must be finite")
        object.__setattr__(self, "values", values)

    @property
    def count(self) -> int:
        return len(self.values)


################################################
# Constructors


def _positive(value: Number, name: str) -> Fraction:
    value = Fraction(value)
    if value <= 0:
        raise ValueError(f"{name} must be positive, got {value}")
    return value


def atom(x: Number, m: Number = 1) -> MeasureSpec:
    return MeasureSpec(atoms=((Fraction(x), _positive(m, "Atom mass")),))


def semicircle(radius: Number, m: Number = 1) -> MeasureSpec:
    """Density 2m sqrt(R^2 - x^2) / (pi R^2) on [-R, R]."""
    component = Component(
        PrimitiveKind.SEMICIRCLE, _positive(radius, "Radius"), _positive(m, "Mass")
    )
    return MeasureSpec(components=(component,))


def arcsine(radius: Number, m: Number = 1) -> MeasureSpec:
    """Density m / (pi sqrt(R^2 - x^2)) on (-R, R)."""
    component = Component(
        PrimitiveKind.ARCSINE, _positive(radius, "Radius"), _positive(m, "Mass")
    )
    return MeasureSpec(components=(component,))


def mixture(*measures: MeasureSpec) -> MeasureSpec:
    """Returns the sum of measures (masses add)."""
    atoms: Dict[Fraction, Fraction] = {}
    components: List[Component] = []
    grid = None
    for m in measures:
        for x, w in m.atoms:
            atoms[x] = atoms.get(x, Fraction(0)) + w
        components.extend(m.components)
        if m.grid is not None:
            grid = m.grid if grid is None else _add_grids(grid, m.grid)
    return MeasureSpec(tuple(sorted(atoms.items())), tuple(components), grid)


def nu1() -> MeasureSpec:
    """The CM law: 1/2 delta_0 + 1/2 arcsine on [-2, 2]."""
    return mixture(atom(0, Fraction(1, 2)), arcsine(2, Fraction(1, 2)))


def nu2() -> MeasureSpec:
    """The semicircle law on [-2, 2]."""
    return semicircle(2, 1)


def lambda_cm(normalized: bool = True) -> MeasureSpec:
    """Pushforward of nu1 under x -> 2x.

    With normalized=False returns the literal delta_0/4 + dx/(2 pi sqrt(16 - x^2)),
    whose total mass is 3/4.
    """
    if normalized:
        return scale(nu1(), 2)
    return mixture(atom(0, Fraction(1, 4)), arcsine(4, Fraction(1, 2)))


def lambda_cm_prime() -> MeasureSpec:
    return scale(nu1(), 4)


def mu() -> MeasureSpec:
    return scale(nu2(), 2)


def mu_prime() -> MeasureSpec:
    return scale(nu2(), 6)


################################################
# Queries


def mass(m: MeasureSpec) -> float:
    total = float(sum((w for _, w in m.atoms), Fraction(0)))
    total += float(sum((c.mass for c in m.components), Fraction(0)))
    if m.grid is not None:
        total += float(m.grid.masses.sum())
    return total


def check_mass(m: MeasureSpec, tolerance: float = MASS_TOLERANCE):
    """Raises ValueError unless the measure has mass 1 within tolerance."""
    total = mass(m)
    if abs(total - 1) > tolerance:
        raise ValueError(f"Measure has mass {total}, expected 1")


def support(m: MeasureSpec) -> Tuple[Fraction, Fraction]:
    """Returns the exact support interval [lo, hi]."""
    lows, highs = [], []
    for x, _ in m.atoms:
        lows.append(x)
        highs.append(x)
    for c in m.components:
        lows.append(c.center - c.radius)
        highs.append(c.center + c.radius)
    if m.grid is not None:
        lows.append(m.grid.bounds[0])
        highs.append(m.grid.bounds[1])
    if not lows:
        raise ValueError("Empty measure has no support")
    return min(lows), max(highs)


def _as_output(x, values: np.ndarray):
    if np.ndim(x) == 0:
        return float(values)
    return values


def cdf(m: MeasureSpec, x):
    """Returns m((-inf, x]); accepts a scalar or an array."""
    points = np.asarray(x, dtype=float)
    values = np.zeros(points.shape)
    for loc, w in m.atoms:
        values = values + float(w) * (points >= float(loc))
    for c in m.components:
        values = values + c.cdf(points)
    if m.grid is not None:
        values = values + m.grid.cdf(points)
    return _as_output(x, values)


def cdf_left(m: MeasureSpec, x):
    """Returns m((-inf, x)), the left limit of the CDF."""
    points = np.asarray(x, dtype=float)
    values = np.asarray(cdf(m, points), dtype=float)
    for loc, w in m.atoms:
        values = values - float(w) * (points == float(loc))
    return _as_output(x, values)


def density(m: MeasureSpec, x):
    """Returns the density of the continuous part (atoms excluded)."""
    points = np.asarray(x, dtype=float)
    values = np.zeros(points.shape)
    for c in m.components:
        values = values + c.density(points)
    if m.grid is not None:
        values = values + m.grid.density(points)
    return _as_output(x, values)


def moment(m: MeasureSpec, k: int) -> float:
    """Returns the k-th raw moment; grids contribute their node masses."""
    if k < 0:
        raise ValueError(f"Moment order must be nonnegative, got {k}")
    total = sum((w * x**k for x, w in m.atoms), Fraction(0))
    for c in m.components:
        total += sum(
            math.comb(k, i) * c.center ** (k - i) * c.central_moment(i)
            for i in range(k + 1)
        )
    value = float(total)
    if m.grid is not None:
        value += float(np.dot(m.grid.masses, m.grid.nodes**k))
    return value


def variance(m: MeasureSpec) -> float:
    return moment(m, 2) / mass(m) - (moment(m, 1) / mass(m)) ** 2


################################################
# Transformations


def scale(m: MeasureSpec, c: Number) -> MeasureSpec:
    """Pushforward under x -> c x for c > 0; masses are unchanged."""
    c = _positive(c, "Scale factor")
    atoms = tuple((x * c, w) for x, w in m.atoms)
    components = tuple(
        replace(comp, radius=comp.radius * c, center=comp.center * c)
        for comp in m.components
    )
    grid = None
    if m.grid is not None:
        lo, hi = m.grid.bounds
        grid = replace(m.grid, step=m.grid.step * float(c), bounds=(lo * c, hi * c))
    return MeasureSpec(atoms, components, grid)


def _assign(
    positions: np.ndarray,
    weights: np.ndarray,
    step: float,
    bounds: Tuple[Fraction, Fraction],
) -> DensityGrid:
    """Cloud-in-cell: splits each weight linearly between its two lattice nodes."""
    scaled = positions / step
    index = np.floor(scaled).astype(np.int64)
    frac = scaled - index
    start = int(index.min())
    offset = index - start
    size = int(offset.max()) + 2
    masses = np.bincount(offset, weights=weights * (1 - frac), minlength=size)
    masses += np.bincount(offset + 1, weights=weights * frac, minlength=size)
    return DensityGrid(start, step, masses, bounds)


def _discretize(c: Component, step: float) -> DensityGrid:
    lo = float(c.center - c.radius)
    hi = float(c.center + c.radius)
    knots = np.arange(math.floor(lo / step), math.ceil(hi / step) + 1) * step
    edges = np.clip(knots, lo, hi)
    cell_mass = np.diff(c.cdf(edges))
    cell_moment = np.diff(c.first_moment(edges))
    keep = cell_mass > 0
    centroids = float(c.center) + cell_moment[keep] / cell_mass[keep]
    support = (c.center - c.radius, c.center + c.radius)
    return _assign(centroids, cell_mass[keep], step, support)


def _rebin(grid: DensityGrid, step: float) -> DensityGrid:
    if math.isclose(grid.step, step, rel_tol=1e-12):
        return grid
    return _assign(grid.nodes, grid.masses, step, grid.bounds)


def _shift(grid: DensityGrid, x: Fraction, weight: Fraction) -> DensityGrid:
    lo, hi = grid.bounds
    shifted = _assign(grid.nodes + float(x), grid.masses, grid.step, (lo + x, hi + x))
    return replace(shifted, masses=shifted.masses * float(weight))


def _add_grids(a: DensityGrid, b: DensityGrid) -> DensityGrid:
    b = _rebin(b, a.step)
    start = min(a.start, b.start)
    end = max(a.start + len(a.masses), b.start + len(b.masses))
    masses = np.zeros(end - start)
    masses[a.start - start : a.start - start + len(a.masses)] += a.masses
    masses[b.start - start : b.start - start + len(b.masses)] += b.masses
    bounds = (min(a.bounds[0], b.bounds[0]), max(a.bounds[1], b.bounds[1]))
    return DensityGrid(start, a.step, masses, bounds)


def _convolve_grids(a: DensityGrid, b: DensityGrid) -> DensityGrid:
    masses = np.clip(signal.fftconvolve(a.masses, b.masses), 0, None)
    bounds = (a.bounds[0] + b.bounds[0], a.bounds[1] + b.bounds[1])
    return DensityGrid(a.start + b.start, a.step, masses, bounds)


def _continuous_parts(m: MeasureSpec, step: float) -> List[DensityGrid]:
    parts = [_discretize(c, step) for c in m.components]
    if m.grid is not None:
        parts.append(_rebin(m.grid, step))
    return parts


def _convolve_pair(a: MeasureSpec, b: MeasureSpec, step: float) -> MeasureSpec:
    atoms: Dict[Fraction, Fraction] = {}
    for x, w in a.atoms:
        for y, v in b.atoms:
            atoms[x + y] = atoms.get(x + y, Fraction(0)) + w * v
    components: List[Component] = []
    grids: List[DensityGrid] = []
    for first, second in ((a, b), (b, a)):
        for x, w in first.atoms:
            for c in second.components:
                components.append(replace(c, center=c.center + x, mass=c.mass * w))
            if second.grid is not None:
                grids.append(_shift(second.grid, x, w))
    for left in _continuous_parts(a, step):
        for right in _continuous_parts(b, step):
            grids.append(_convolve_grids(left, right))
    grid = None
    for g in grids:
        g = _rebin(g, step)
        grid = g if grid is None else _add_grids(grid, g)
    return MeasureSpec(tuple(sorted(atoms.items())), tuple(components), grid)


def convolve(*measures: MeasureSpec, step: Number = DEFAULT_GRID_STEP) -> MeasureSpec:
    """Returns the law of the sum of independent draws from each measure.

    Point masses convolve exactly and translate primitives exactly; two
    continuous parts meet on the lattice k * step. A result whose mass
    drifted by less than MAX_MASS_DRIFT is renormalised to 1.

    Raises:
        ValueError: If an input does not have mass 1.
        MassDriftError: If the drift reaches MAX_MASS_DRIFT.
    """
    if not measures:
        raise ValueError("convolve needs at least one measure")
    step = float(_positive(step, "Grid step"))
    for m in measures:
        check_mass(m)
    result = measures[0]
    for m in measures[1:]:
        result = _convolve_pair(result, m, step)
    drift = abs(mass(result) - 1)
    if drift >= MAX_MASS_DRIFT:
        raise MassDriftError(f"Convolution lost mass {drift}; use a finer grid")
    if drift > 0 and result.grid is not None:
        # All drift is charged to the grid, the only inexact part.
        grid_mass = float(result.grid.masses.sum())
        target = grid_mass + 1 - mass(result)
        logging.info("Renormalising convolution with mass drift %g", drift)
        grid = replace(result.grid, masses=result.grid.masses * (target / grid_mass))
        result = replace(result, grid=grid)
    return result


################################################
# Sampling and distances


def _parts(m: MeasureSpec) -> List[Tuple[float, object]]:
    parts: List[Tuple[float, object]] = [(float(w), x) for x, w in m.atoms]
    parts += [(float(c.mass), c) for c in m.components]
    if m.grid is not None:
        parts.append((float(m.grid.masses.sum()), m.grid))
    return parts


def _draw(m: MeasureSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    parts = _parts(m)
    weights = np.array([w for w, _ in parts])
    counts = rng.multinomial(n, weights / weights.sum())
    chunks = []
    for count, (_, part) in zip(counts, parts):
        if count == 0:
            continue
        if isinstance(part, Component):
            chunks.append(part.sample(rng, count))
        elif isinstance(part, DensityGrid):
            cumulative = np.cumsum(part.masses)
            index = np.searchsorted(cumulative, rng.random(count) * cumulative[-1])
            jitter = (rng.random(count) - 0.5) * part.step
            chunks.append(part.nodes[np.minimum(index, len(part.masses) - 1)] + jitter)
        else:
            chunks.append(np.full(count, float(part)))
    return rng.permutation(np.concatenate(chunks))


def sample(m: MeasureSpec, n: int, seed: int = 0) -> EmpiricalSample:
    """Draws n values; identical seeds give identical samples."""
    if n < 1:
        raise ValueError(f"Sample size must be positive, got {n}")
    return EmpiricalSample(_draw(m, n, np.random.default_rng(seed)))


def sample_sum(
    factors: Sequence[MeasureSpec], n: int, seed: int = 0
) -> EmpiricalSample:
    """Samples the sum of independent draws, one per factor."""
    if n < 1:
        raise ValueError(f"Sample size must be positive, got {n}")
    streams = np.random.SeedSequence(seed).spawn(len(factors))
    total = np.zeros(n)
    for factor, stream in zip(factors, streams):
        total += _draw(factor, n, np.random.default_rng(stream))
    return EmpiricalSample(total)


def ks(e: EmpiricalSample, m: MeasureSpec) -> float:
    """Returns sup_x |F_e(x) - F_m(x)|.

    The supremum is attained at a sample point, from the right or the left,
    so ties in the sample and atoms of m are handled exactly.
    """
    if e.count == 0:
        raise ValueError("KS distance needs a nonempty sample")
    points, counts = np.unique(e.values, return_counts=True)
    right = np.cumsum(counts) / e.count
    left = right - counts / e.count
    gap_right = np.abs(right - cdf(m, points))
    gap_left = np.abs(left - cdf_left(m, points))
    return float(max(gap_right.max(), gap_left.max()))


def ks_pvalue(d: float, n: int) -> float:
    """Returns P(D_n >= d) under the null via the exact Kolmogorov law."""
    return float(stats.kstwo.sf(d, n))


################################################
# Predicted laws


class PredictionVariant(str, Enum):
    PAPER = "paper"
    CLASS_AWARE = "class_aware"


CM_CURVES = ("E0",)


def _paper_factors(t: int, residue_class: int) -> List[MeasureSpec]:
    if t == 4:
        if residue_class % 4 == 3:
            return [nu2()]
        return [lambda_cm(), mu(), nu2()]
    if t != 5:
        raise ValueError(f"No printed limit law for t={t}")
    residue_class %= 8
    if residue_class == 7:
        return [lambda_cm(), mu(), mu(), nu2()]
    if residue_class == 5:
        return [lambda_cm(), mu(), mu_prime(), nu2()]
    if residue_class == 3:
        return [lambda_cm_prime(), mu(), mu(), nu2(), mu()]
    if residue_class == 1:
        return [lambda_cm_prime(), mu(), mu_prime(), nu2(), mu()]
    raise ValueError(f"Class {residue_class} mod 8 holds no odd primes")


def _class_aware_factors(t: int, residue_class: int) -> List[MeasureSpec]:
    hypothesis = derived_coefficients(t, residue_class)
    inert = residue_class % 4 == 3
    # The CM trace vanishes identically on inert classes.
    factors = [atom(0, 1)] if inert else []
    # Q(i) twists arrive folded into their base curve.
    for curve_id, c in hypothesis.coefficients.items():
        if curve_id in CM_CURVES:
            base = arcsine(2, 1)
        elif curve_id == "C":
            # N_C = +-2 N(E16) when the Jacobian splits over F_p
            base = semicircle(4, 1)
        else:
            base = nu2()
        factors.append(scale(base, 2**t * abs(c)))
    return factors or [atom(0, 1)]


def predicted_factors(
    t: int,
    residue_class: int,
    variant: PredictionVariant = PredictionVariant.CLASS_AWARE,
) -> List[MeasureSpec]:
    """Returns the independent laws whose convolution predicts delta_p(t)."""
    variant = PredictionVariant(variant)
    if variant == PredictionVariant.PAPER:
        return _paper_factors(t, residue_class)
    return _class_aware_factors(t, residue_class)


def predicted_measure(
    t: int,
    residue_class: int,
    variant: PredictionVariant = PredictionVariant.CLASS_AWARE,
    step: Number = DEFAULT_GRID_STEP,
) -> MeasureSpec:
    """Returns the predicted law of delta_p(t) on a residue class.

    Args:
        t: 4 or 5 (3 is accepted by the class-aware variant).
        residue_class: Class mod 4 for t <= 4, mod 8 for t = 5.
        variant: PAPER for the printed convolutions (with the normalised
            lambda_cm), CLASS_AWARE for laws built from derived_coefficients.
        step: Lattice spacing of the convolution.
    """
    return convolve(*predicted_factors(t, residue_class, variant), step=step)


################################################
# Expressions and export

_TOKEN = re.compile(
    r"\s*(?:(?P<number>-?\d+(?:\.\d+)?(?:/\d+)?)"
    r"|(?P<name>[a-z_][a-z0-9_]*)"
    r"|(?P<punct>[(),]))"
)


def _tokenize(expr: str) -> List[str]:
    tokens, position = [], 0
    expr = expr.strip()
    while position < len(expr):
        match = _TOKEN.match(expr, position)
        if match is None or match.end() == position:
            raise ValueError(f"Unexpected input at {position} in {expr!r}")
        tokens.append(match.group(match.lastgroup))
        position = match.end()
    return tokens


class _Parser:
    def __init__(self, expr: str, step: Number):
        self.tokens = _tokenize(expr)
        self.position = 0
        self.step = step

    def peek(self) -> Optional[str]:
        return self.tokens[self.position] if self.position < len(self.tokens) else None

    def take(self, expected: Optional[str] = None) -> str:
        token = self.peek()
        if token is None or (expected is not None and token != expected):
            raise ValueError(f"Expected {expected or 'a token'}, got {token}")
        self.position += 1
        return token

    def number(self) -> Fraction:
        token = self.take()
        try:
            return Fraction(token)
        except ValueError:
            raise ValueError(f"Expected a number, got {token}")

    def measure(self) -> MeasureSpec:
        name = self.take()
        if name == "nu1":
            return nu1()
        if name == "nu2":
            return nu2()
        self.take("(")
        if name in ("atom", "semicircle", "arcsine"):
            first = self.number()
            self.take(",")
            second = self.number()
            result = {"atom": atom, "semicircle": semicircle, "arcsine": arcsine}[name](
                first, second
            )
        elif name == "scale":
            inner = self.measure()
            self.take(",")
            result = scale(inner, self.number())
        elif name == "conv":
            factors = [self.measure()]
            while self.peek() == ",":
                self.take(",")
                factors.append(self.measure())
            result = convolve(*factors, step=self.step)
        else:
            raise ValueError(f"Unknown measure {name}")
        self.take(")")
        return result


def parse_expression(expr: str, step: Number = DEFAULT_GRID_STEP) -> MeasureSpec:
    """Parses `nu1`, `nu2`, `atom(x,m)`, `semicircle(R,m)`, `arcsine(R,m)`,
    `scale(E,c)` and `conv(E,E,...)`."""
    parser = _Parser(expr, step)
    result = parser.measure()
    if parser.peek() is not None:
        raise ValueError(f"Trailing input {parser.peek()} in {expr!r}")
    return result


def write_csv(m: MeasureSpec, stream: TextIO, step: Number = DEFAULT_GRID_STEP):
    """Writes `# atom <x> <mass>` comments, then `x,density` rows over the support."""
    for x, w in m.atoms:
        stream.write(f"# atom {x} {w}\n")
    lo, hi = support(m)
    h = float(step)
    xs = np.arange(math.floor(float(lo) / h), math.ceil(float(hi) / h) + 1) * h
    writer = csv.writer(stream, lineterminator="\n")
    for x, value in zip(xs.tolist(), np.asarray(density(m, xs)).tolist()):
        writer.writerow([repr(x), repr(value)])

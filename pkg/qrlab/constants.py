"""Constants for sweeps, measures and statistical suites."""
from fractions import Fraction


RESIDUE = "R"
NON_RESIDUE = "N"

# Run configuration defaults
DEFAULT_MAX_PRIME = 200000
DEFAULT_EXTREMA_MAX_PRIME = 1000000
DEFAULT_QUICK_MAX_PRIME = 10000
DEFAULT_SEED = 0
DEFAULT_CACHE_PATH = "qrlab_cache.csv"
CACHE_PATH_ENV_VAR = "QRLAB_CACHE"
DEFAULT_CHUNK_SIZE = 20000

# Measure algebra
DEFAULT_GRID_STEP = Fraction(1, 512)
MASS_TOLERANCE = 1e-9
MAX_MASS_DRIFT = 1e-3

# Frozen bound on |decomposition_residual(p, t)| for t <= 7 (at most t/2).
RESIDUAL_BOUND = 4

# Character values (-1/p), (2/p), (3/p) determine every residual for t <= 5.
REFINE_MODULUS = 24
CLASS_MODULI = (4, 8, 24)

# Statistical suites
KS_MIN_SAMPLE = 500
INDEPENDENCE_MIN_SAMPLE = 1000
KS_THRESHOLD_T4 = 0.05
KS_THRESHOLD_T5 = 0.07
MONTE_CARLO_DRAWS = 10**6

# Curves sampled by default in a sweep
SWEEP_CURVES = {
    4: ("E0", "E1", "E4"),
    5: ("E0", "E1", "E4", "E12", "C"),
}

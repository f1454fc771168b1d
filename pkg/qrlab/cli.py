"""Command-line front end.

Every subcommand prints plain text or CSV to stdout; logs go to stderr.
Exit codes: 0 on success, 1 when a checked property fails (with a
`FAIL <suite> <detail>` line), 2 on usage errors.
"""
import argparse
import csv
import logging
import os
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence

from qrlab import __version__
from qrlab.constants import (
    CACHE_PATH_ENV_VAR,
    CLASS_MODULI,
    DEFAULT_CACHE_PATH,
    DEFAULT_EXTREMA_MAX_PRIME,
    DEFAULT_GRID_STEP,
    DEFAULT_MAX_PRIME,
    DEFAULT_QUICK_MAX_PRIME,
    DEFAULT_SEED,
    RESIDUAL_BOUND,
)
from qrlab.curves import (
    BadPrimeError,
    CURVES,
    char_sum,
    format_registry,
    get_curve,
    involution_report,
    isomorphism_report,
)
from qrlab.equidist import (
    DELTA,
    CacheIntegrityError,
    SampleTooSmallError,
    class_modulus,
    extrema_report,
    ks_report,
    read_cache,
    sweep,
    write_records_csv,
)
from qrlab.identities import (
    ClosedFormVariant,
    class_constant_scan,
    class_primes,
    claimed_coefficients,
    closed_form,
    default_basis,
    derived_coefficients,
    format_coefficients,
    genus2_split_test,
    infer_coefficients,
    jacobsthal_a,
    residual_denominator_ok,
    run_count,
    verify_coefficients,
)
from qrlab.measures import (
    MassDriftError,
    PredictionVariant,
    parse_expression,
    write_csv,
)
from qrlab.quadratic import SqrtTwoAbsentError
from qrlab.residue_core import count_pattern, primes_in_range, residue_word


@dataclass
class RunConfig:
    """Settings shared by the subcommands.

    Attributes:
        max_prime: Default upper end of prime ranges.
        grid_step: Lattice spacing for measure convolutions.
        seed: Seed for every randomized path.
        cache_path: Sweep cache file.
        output: "csv" or "table".
        threads: Number of sweep workers.
    """

    max_prime: int = DEFAULT_MAX_PRIME
    grid_step: Fraction = DEFAULT_GRID_STEP
    seed: int = DEFAULT_SEED
    cache_path: str = DEFAULT_CACHE_PATH
    output: str = "table"
    threads: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.max_prime < 7:
            raise ValueError(f"max_prime must be at least 7, got {self.max_prime}")
        if self.grid_step <= 0:
            raise ValueError(f"grid_step must be positive, got {self.grid_step}")
        if self.output not in ("csv", "table"):
            raise ValueError(f"Unknown output format {self.output}")

    @classmethod
    def get_preset(cls, name="default"):
        """Returns a preset config."""
        if name == "default":
            return cls()
        elif name == "quick":
            return cls(max_prime=DEFAULT_QUICK_MAX_PRIME)
        elif name == "extrema":
            return cls(max_prime=DEFAULT_EXTREMA_MAX_PRIME, threads=4)
        else:
            raise ValueError(f"Unknown preset name {name}")


def resolve_cache_path(flag: Optional[str]) -> str:
    """The --cache flag wins over the environment variable, then the default."""
    if flag:
        return flag
    return os.environ.get(CACHE_PATH_ENV_VAR) or DEFAULT_CACHE_PATH


def build_config(args: argparse.Namespace) -> RunConfig:
    config = RunConfig.get_preset(args.preset)
    if getattr(args, "max_prime", None) is not None:
        config.max_prime = args.max_prime
    if args.grid_step is not None:
        config.grid_step = Fraction(args.grid_step)
    if args.seed is not None:
        config.seed = args.seed
    if args.output is not None:
        config.output = args.output
    if args.threads is not None:
        config.threads = args.threads
    config.cache_path = resolve_cache_path(args.cache)
    config.validate()
    return config


class Reporter:
    """Collects PASS/NOTE/FAIL lines; any FAIL makes the exit code 1."""

    def __init__(self):
        self.failed = False

    def passed(self, suite: str, detail: str):
        print(f"PASS {suite} {detail}")

    def note(self, suite: str, detail: str):
        print(f"NOTE {suite} {detail}")

    def fail(self, suite: str, detail: str):
        self.failed = True
        print(f"FAIL {suite} {detail}")

    def check(self, condition: bool, suite: str, detail: str):
        if condition:
            self.passed(suite, detail)
        else:
            self.fail(suite, detail)

    @property
    def exit_code(self) -> int:
        return 1 if self.failed else 0


################################################
# Subcommands


def cmd_word(args, config: RunConfig) -> int:
    print(residue_word(args.prime))
    return 0


def cmd_count(args, config: RunConfig) -> int:
    print(count_pattern(args.prime, args.pattern))
    return 0


def cmd_traces(args, config: RunConfig) -> int:
    curve_ids = args.curves.split(",") if args.curves else list(CURVES)
    rows = []
    for curve_id in curve_ids:
        model = get_curve(curve_id.strip())
        try:
            value = char_sum(model, args.prime)
            rows.append([model.id, value.N, value.trace])
        except (BadPrimeError, SqrtTwoAbsentError) as e:
            logging.warning("%s", e)
            rows.append([model.id, "", ""])
    _emit(config, ["curve", "N", "trace"], rows)
    return 0


def _emit(config: RunConfig, header: List[str], rows: List[list]):
    if config.output == "csv":
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        return
    widths = [max(len(str(v)) for v in column) for column in zip(header, *rows)]
    for row in [header] + rows:
        print("  ".join(str(v).rjust(w) for v, w in zip(row, widths)))


def _format_groups(groups) -> str:
    return ",".join(
        f"{c}:{'|'.join(str(v) for v in sorted(values))}"
        for c, values in sorted(groups.items())
    )


def _verify_residuals(t: int, max_prime: int, reporter: Reporter):
    report = class_constant_scan(t, (t + 3, max_prime), CLASS_MODULI)
    suite = f"residual-t{t}"
    values = [r for _, r in report.samples]
    reporter.check(
        all(residual_denominator_ok(r, t) for r in values),
        suite,
        "2^t r is an integer",
    )
    worst = max(abs(r) for r in values)
    reporter.check(
        worst <= RESIDUAL_BOUND, suite, f"max |r| = {worst} <= {RESIDUAL_BOUND}"
    )
    reporter.check(
        report.class_constant,
        suite,
        f"class-constant mod {report.modulus} [{_format_groups(report.residuals)}]",
    )


def _verify_closed_forms(t: int, max_prime: int, reporter: Reporter):
    suite = f"closed-form-t{t}"
    primes = primes_in_range(5, max_prime)
    if t <= 2:
        exact = all(closed_form(t, p) == run_count(p, t) for p in primes)
        reporter.check(exact, suite, "exact for every p")
        return
    corrected = all(
        closed_form(t, p, ClosedFormVariant.CORRECTED) == run_count(p, t)
        for p in primes
    )
    reporter.check(corrected, suite, "corrected forms exact for every p")
    offsets = {closed_form(t, p) - run_count(p, t) for p in primes if p % 4 == 3}
    reporter.note(
        suite,
        f"printed form offset {_format_groups({3: offsets})} when p = 3 mod 4",
    )
    extra_a = all(
        closed_form(t, p) - run_count(p, t) == Fraction(jacobsthal_a(p), 8)
        for p in primes
        if p % 4 == 1
    )
    reporter.note(
        suite, f"printed form exceeds the count by a/8 when p = 1 mod 4: {extra_a}"
    )


def _check_printed(t: int, c: int, max_prime: int, reporter: Reporter):
    suite = f"coefficients-t{t}-class{c}"
    report = verify_coefficients(claimed_coefficients(t, c), (t + 3, max_prime))
    derived = verify_coefficients(
        derived_coefficients(t, c), (t + 3, max_prime), attach_inferred=False
    )
    reporter.check(derived.passed, suite, "derived coefficients class-constant")
    if report.passed:
        reporter.passed(suite, "printed coefficients class-constant")
        return
    inferred = "-"
    if report.inferred is not None:
        inferred = format_coefficients(report.inferred)
    reporter.note(
        suite,
        f"printed coefficients fail at p={report.first_failure}; inferred {inferred}",
    )


def _check_inferred(t: int, c: int, max_prime: int, reporter: Reporter):
    suite = f"coefficients-t{t}-class{c}"
    basis = default_basis(t)
    primes = class_primes(t, c, class_modulus(t), (t + 3, max_prime))
    size = 3 * (len(basis) + 2)
    if len(primes) < 4 * size:
        reporter.fail(suite, f"only {len(primes)} primes below {max_prime}")
        return
    samples = [primes[i * size : (i + 1) * size] for i in range(4)]
    try:
        first = infer_coefficients(t, c, samples[0], basis, holdout=samples[1])
        second = infer_coefficients(t, c, samples[2], basis, holdout=samples[3])
    except ValueError as e:
        reporter.fail(suite, f"inference failed: {e}")
        return
    reporter.check(
        first.matches(second), suite, "inference stable on disjoint samples"
    )
    reporter.check(
        first.matches(derived_coefficients(t, c)),
        suite,
        f"inferred {format_coefficients(first)} match derived coefficients",
    )


def _verify_hypotheses(t: int, max_prime: int, mode: str, reporter: Reporter):
    for c in (1, 3) if t == 4 else (1, 3, 5, 7):
        if mode == "paper":
            _check_printed(t, c, max_prime, reporter)
        else:
            _check_inferred(t, c, max_prime, reporter)


# On p = 7 mod 8 both pair sums cancel, so all three identities hold.
SPLIT_EXPECTED = {
    1: {"conjugate_pair", "twist_pair"},
    3: {"vanishing"},
    5: {"vanishing"},
    7: {"conjugate_pair", "twist_pair", "vanishing"},
}


def _verify_split(max_prime: int, reporter: Reporter):
    for c, report in sorted(genus2_split_test((5, max_prime)).items()):
        holding = report.holding
        detail = f"holding {','.join(holding) or '-'}"
        reporter.check(set(holding) == SPLIT_EXPECTED[c], f"genus2-class{c}", detail)


def cmd_verify(args, config: RunConfig) -> int:
    reporter = Reporter()
    t, max_prime = args.t, config.max_prime
    if not 1 <= t <= 5:
        raise ValueError(f"verify supports 1 <= t <= 5, got {t}")
    _verify_residuals(t, max_prime, reporter)
    if t <= 3:
        _verify_closed_forms(t, max_prime, reporter)
    else:
        _verify_hypotheses(t, max_prime, args.hypothesis, reporter)
    if t == 5:
        _verify_split(max_prime, reporter)
    return reporter.exit_code


def _records(t: int, hi: int, config: RunConfig):
    cached = [r for r in read_cache(config.cache_path) if r.t == t and r.p <= hi]
    have = {r.p for r in cached}
    missing = [p for p in primes_in_range(t + 3, hi) if p not in have]
    if missing:
        logging.info("Sweeping %d missing primes for t=%d", len(missing), t)
        sweep(t, missing[0], hi, threads=config.threads, cache_path=config.cache_path)
        cached = [r for r in read_cache(config.cache_path) if r.t == t and r.p <= hi]
    return cached


def cmd_sweep(args, config: RunConfig) -> int:
    lo = args.min_prime if args.min_prime is not None else args.t + 3
    records = sweep(
        args.t,
        lo,
        config.max_prime,
        curves=args.curves.split(",") if args.curves else None,
        threads=config.threads,
        cache_path=config.cache_path,
    )
    if config.output == "csv":
        write_records_csv(records, sys.stdout)
    else:
        _emit(
            config,
            ["p", "class8", "n_pt", "delta"],
            [[r.p, r.class8, r.n_pt, f"{r.delta:.6f}"] for r in records],
        )
    return 0


def cmd_dist(args, config: RunConfig) -> int:
    reporter = Reporter()
    variant = PredictionVariant(args.variant.replace("-", "_"))
    records = _records(args.t, config.max_prime, config)
    reference = None
    if args.against:
        reference = parse_expression(args.against, config.grid_step)
    threshold = -1.0
    if variant == PredictionVariant.PAPER and reference is None:
        threshold = None
    report = ks_report(
        args.t,
        args.residue_class,
        variant,
        records,
        selector=args.selector,
        reference=reference,
        threshold=threshold,
    )
    suite = f"dist-t{args.t}"
    if report.threshold is None:
        reporter.note(suite, report.format())
    else:
        reporter.check(report.passed, suite, report.format())
    return reporter.exit_code


def cmd_extrema(args, config: RunConfig) -> int:
    reporter = Reporter()
    report = extrema_report(args.t, _records(args.t, config.max_prime, config))
    print(report.format())
    for c, ext in sorted(report.classes.items()):
        detail = f"class={c} violations={ext.violations[:5]}"
        reporter.check(not ext.violations, f"extrema-t{args.t}", detail)
    return reporter.exit_code


def cmd_measure(args, config: RunConfig) -> int:
    measure = parse_expression(args.expr, config.grid_step)
    if args.out in (None, "-"):
        write_csv(measure, sys.stdout, config.grid_step)
    else:
        with open(args.out, "w") as fout:
            write_csv(measure, fout, config.grid_step)
    return 0


def cmd_curves(args, config: RunConfig) -> int:
    print(format_registry())
    if not args.relations:
        return 0
    reporter = Reporter()
    for result in isomorphism_report((3, args.relations)):
        suite = f"relation-{result.base}-{result.other}"
        detail = f"d={result.claimed_d} checked={result.report.checked}"
        if result.report.passed:
            reporter.passed(suite, detail)
        else:
            reporter.note(
                suite,
                f"{detail} counterexample={result.report.counterexample} "
                f"holding_d={result.holding_d}",
            )
    return reporter.exit_code


def cmd_involution(args, config: RunConfig) -> int:
    for variant, results in involution_report(args.prime).items():
        for root, holds in results.items():
            print(f"{variant} sqrt2={root} {'holds' if holds else 'fails'}")
    return 0


################################################
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qrlab", description="Consecutive quadratic residues lab."
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument(
        "--preset", default="default", help="Config preset: default, quick, extrema"
    )
    parser.add_argument("--log-level", default="WARNING", help="Logging level")
    parser.add_argument("--threads", type=int, help="Number of sweep workers")
    parser.add_argument("--cache", help=f"Cache file (overrides ${CACHE_PATH_ENV_VAR})")
    parser.add_argument("--output", choices=["csv", "table"], help="Output format")
    parser.add_argument("--seed", type=int, help="Random seed")
    parser.add_argument("--grid-step", help="Convolution grid step, e.g. 1/512")
    subparsers = parser.add_subparsers(dest="command", required=True)

    sub = subparsers.add_parser("word", help="Print the residue word W_p")
    sub.add_argument("--prime", type=int, required=True)
    sub.set_defaults(func=cmd_word)

    sub = subparsers.add_parser("count", help="Count a pattern in W_p")
    sub.add_argument("--prime", type=int, required=True)
    sub.add_argument("--pattern", required=True, help="Pattern over R/N")
    sub.set_defaults(func=cmd_count)

    sub = subparsers.add_parser("traces", help="Character sums of curves at a prime")
    sub.add_argument("--prime", type=int, required=True)
    sub.add_argument("--curves", help="Comma-separated curve ids")
    sub.set_defaults(func=cmd_traces)

    sub = subparsers.add_parser("verify", help="Run the exact verification suites")
    sub.add_argument("--t", type=int, required=True)
    sub.add_argument("--max-prime", type=int)
    sub.add_argument("--hypothesis", choices=["paper", "infer"], default="paper")
    sub.set_defaults(func=cmd_verify)

    sub = subparsers.add_parser("sweep", help="Sweep a prime range")
    sub.add_argument("--t", type=int, required=True)
    sub.add_argument("--min-prime", type=int)
    sub.add_argument("--max-prime", type=int)
    sub.add_argument("--curves", help="Comma-separated curve ids (default by t)")
    sub.set_defaults(func=cmd_sweep)

    sub = subparsers.add_parser("dist", help="KS test of a class against a law")
    sub.add_argument("--t", type=int, required=True)
    sub.add_argument("--class", dest="residue_class", type=int, required=True)
    sub.add_argument(
        "--variant", choices=["paper", "class-aware"], default="class-aware"
    )
    sub.add_argument("--selector", default=DELTA, help="delta or a curve id")
    sub.add_argument("--against", help="Measure expression to compare with instead")
    sub.add_argument("--max-prime", type=int)
    sub.set_defaults(func=cmd_dist)

    sub = subparsers.add_parser("extrema", help="Extremes of n_p(t) - p/2^t")
    sub.add_argument("--t", type=int, required=True)
    sub.add_argument("--max-prime", type=int)
    sub.set_defaults(func=cmd_extrema)

    sub = subparsers.add_parser("measure", help="Export a measure as CSV")
    sub.add_argument(
        "--expr", required=True, help="nu1, nu2, atom(x,m), scale(E,c), conv(E,...)"
    )
    sub.add_argument("--out", help="Output file (default stdout)")
    sub.set_defaults(func=cmd_measure)

    sub = subparsers.add_parser("curves", help="Print the curve registry")
    sub.add_argument(
        "--relations",
        type=int,
        metavar="BOUND",
        help="Also check claimed relations up to BOUND",
    )
    sub.set_defaults(func=cmd_curves)

    sub = subparsers.add_parser(
        "involution", help="Check the genus-2 involution at a prime"
    )
    sub.add_argument("--prime", type=int, required=True)
    sub.set_defaults(func=cmd_involution)
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Runs the command line and returns the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(
        level=getattr(logging, args.log_level.upper(), logging.WARNING),
        stream=sys.stderr,
    )
    try:
        config = build_config(args)
        return args.func(args, config)
    except (CacheIntegrityError, MassDriftError, SampleTooSmallError) as e:
        Reporter().fail(args.command, str(e))
        return 1
    except (ValueError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


def main():
    sys.exit(run())

"""Prime sweeps, empirical distributions and their comparison with limit laws.

For each prime a sweep records n_p(t) and the character sums of a curve set.
The deviation delta_p(t) = (2^t n_p(t) - p) / sqrt(p) is compared with the
predicted measures; normalized traces are compared with the Sato-Tate laws.
"""
import csv
import hashlib
import io
import logging
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, TextIO, Tuple

import numpy as np

from qrlab.constants import (
    DEFAULT_CHUNK_SIZE,
    INDEPENDENCE_MIN_SAMPLE,
    KS_MIN_SAMPLE,
    KS_THRESHOLD_T4,
    KS_THRESHOLD_T5,
    RESIDUAL_BOUND,
    SWEEP_CURVES,
)
from qrlab.curves import (
    CLAIMED_RELATIONS,
    OBSERVED_RELATIONS,
    char_sum,
    get_curve,
    is_good_prime,
)
from qrlab.identities import derived_coefficients, run_count
from qrlab.measures import (
    EmpiricalSample,
    MeasureSpec,
    PredictionVariant,
    ks,
    ks_pvalue,
    predicted_measure,
)
from qrlab.residue_core import primes_in_range
from qrlab.worker import Chunk, SweepWorker


DELTA = "delta"


class SampleTooSmallError(ValueError):
    """Raised when a statistic is requested on too few records."""


class CacheIntegrityError(ValueError):
    """Raised when a cache file fails its checksum or consistency checks."""


@dataclass(frozen=True)
class SweepRecord:
    """n_p(t) and the character sums N of a curve set at one prime."""

    p: int
    t: int
    n_pt: int
    traces: Dict[str, int] = field(default_factory=dict, hash=False)

    @property
    def class8(self) -> int:
        return self.p % 8

    @property
    def delta_num_scaled(self) -> int:
        """Returns 2^t n_p(t) - p, the exact numerator of delta."""
        return 2**self.t * self.n_pt - self.p

    @property
    def delta(self) -> float:
        return self.delta_num_scaled / math.sqrt(self.p)

    def normalized_trace(self, curve_id: str) -> float:
        """Returns the Frobenius trace of the curve divided by sqrt(p)."""
        n = self.traces[curve_id]
        trace = -n - 1 if get_curve(curve_id).degree % 2 == 0 else -n
        return trace / math.sqrt(self.p)


def class_modulus(t: int) -> int:
    """Residue classes of delta_p(t) are taken mod 4 for t <= 4, mod 8 above."""
    return 4 if t <= 4 else 8


def compute_record(p: int, t: int, curves: Sequence[str]) -> Optional[SweepRecord]:
    """Evaluates one prime; returns None (and logs) if a curve is bad at p."""
    models = [get_curve(curve_id) for curve_id in curves]
    bad = [m.id for m in models if not is_good_prime(m, p)]
    if bad:
        logging.warning("Skipping p=%d: bad for %s", p, ",".join(bad))
        return None
    traces = {m.id: char_sum(m, p).N for m in models}
    return SweepRecord(p=p, t=t, n_pt=run_count(p, t), traces=traces)


def _chunks(lo: int, hi: int, chunk_size: int) -> List[Chunk]:
    return [(a, min(a + chunk_size - 1, hi)) for a in range(lo, hi + 1, chunk_size)]


def sweep(
    t: int,
    lo: int,
    hi: int,
    curves: Optional[Sequence[str]] = None,
    threads: int = 1,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    cache_path: Optional[str] = None,
) -> List[SweepRecord]:
    """Computes one record per good prime in [lo, hi], sorted by p.

    Args:
        t: Run length.
        lo: Lower end of the range; must exceed t + 2.
        hi: Upper end of the range; an empty range gives no records.
        curves: Curve ids to record; defaults to SWEEP_CURVES[t].
        threads: Number of worker threads; results do not depend on it.
        chunk_size: Width of the subranges handed to workers.
        cache_path: If given, the records are merged into this cache.

    Returns:
        The records of the range.
    """
    if lo <= t + 2:
        raise ValueError(f"Lower bound {lo} must exceed t + 2 = {t + 2}")
    curves = tuple(curves if curves is not None else SWEEP_CURVES.get(t, ()))
    for curve_id in curves:
        get_curve(curve_id)
    if hi < lo:
        return []
    chunks = _chunks(lo, hi, chunk_size)
    results: Dict[Chunk, List] = {}
    threading = threads > 1
    workers = [
        SweepWorker(i, lambda p: compute_record(p, t, curves), threading=threading)
        for i in range(max(1, threads))
    ]
    if threading:
        for worker in workers:
            worker.start()
    try:
        for i, chunk in enumerate(chunks):
            worker = workers[i % len(workers)]
            try:
                worker.call(worker.process, chunk, primes_in_range(*chunk), results)
            except Exception as e:
                raise RuntimeError(f"Sweep failed on chunk {chunk}") from e
        for worker in workers:
            worker.wait()
    finally:
        for worker in workers:
            worker.call(worker.close)
    failed = [chunk for worker in workers for chunk in worker.failed_chunks]
    if failed:
        raise RuntimeError(f"Sweep failed on chunks {failed}")
    records = sorted(
        (record for chunk in chunks for record in results[chunk]), key=lambda r: r.p
    )
    if cache_path is not None:
        write_cache(merge_records(read_cache(cache_path), records), cache_path)
    return records


def merge_records(*groups: Iterable[SweepRecord]) -> List[SweepRecord]:
    """Merges record lists, keeping one record per (p, t), sorted."""
    merged: Dict[Tuple[int, int], SweepRecord] = {}
    for group in groups:
        for record in group:
            merged.setdefault((record.p, record.t), record)
    return [merged[key] for key in sorted(merged)]


################################################
# Cache


def _curve_columns(records: Sequence[SweepRecord]) -> List[str]:
    columns: List[str] = []
    for record in records:
        for curve_id in record.traces:
            if curve_id not in columns:
                columns.append(curve_id)
    return columns


def write_records_csv(records: Sequence[SweepRecord], stream: TextIO):
    """Writes records as CSV with one column per curve seen in any record."""
    columns = _curve_columns(records)
    writer = csv.writer(stream, lineterminator="\n")
    header = ["p", "class8", "t", "n_pt", *columns, "delta_num_scaled", "delta"]
    writer.writerow(header)
    for r in records:
        sums = [r.traces.get(curve_id, "") for curve_id in columns]
        writer.writerow(
            [r.p, r.class8, r.t, r.n_pt, *sums, r.delta_num_scaled, repr(r.delta)]
        )


def format_cache(records: Sequence[SweepRecord]) -> str:
    """Serialises records as CSV followed by a `# sha256 <hex>` footer."""
    body = io.StringIO()
    write_records_csv(records, body)
    text = body.getvalue()
    digest = hashlib.sha256(text.encode()).hexdigest()
    return f"{text}# sha256 {digest}\n"


def parse_cache(text: str) -> List[SweepRecord]:
    """Parses and verifies text produced by format_cache.

    Raises:
        CacheIntegrityError: On a missing or wrong checksum, or on a row
            whose derived columns disagree with n_pt and p.
    """
    body, _, footer = text.rstrip("\n").rpartition("\n")
    prefix = "# sha256 "
    if not footer.startswith(prefix):
        raise CacheIntegrityError("Cache has no checksum footer")
    body += "\n"
    if hashlib.sha256(body.encode()).hexdigest() != footer[len(prefix) :].strip():
        raise CacheIntegrityError("Cache checksum mismatch")
    rows = list(csv.reader(io.StringIO(body)))
    header, rows = rows[0], rows[1:]
    columns = header[4:-2]
    records = []
    for row in rows:
        p, class8, t, n_pt = (int(v) for v in row[:4])
        traces = {c: int(v) for c, v in zip(columns, row[4:-2]) if v != ""}
        record = SweepRecord(p=p, t=t, n_pt=n_pt, traces=traces)
        if class8 != record.class8 or int(row[-2]) != record.delta_num_scaled:
            raise CacheIntegrityError(f"Inconsistent cache row for p={p}, t={t}")
        records.append(record)
    return records


def read_cache(path: str) -> List[SweepRecord]:
    """Returns the cached records, or [] if the file does not exist."""
    if not os.path.exists(path):
        return []
    with open(path) as fin:
        text = fin.read()
    try:
        return parse_cache(text)
    except CacheIntegrityError:
        logging.error("Cache %s failed verification", path)
        raise


def write_cache(records: Sequence[SweepRecord], path: str):
    """Writes the cache through a temporary file, then replaces it."""
    tmp_path = f"{path}.tmp"
    with open(tmp_path, "w") as fout:
        fout.write(format_cache(records))
    os.replace(tmp_path, path)


################################################
# Empirical distributions


def _in_class(p: int, residue_class: Optional[Tuple[int, int]]) -> bool:
    if residue_class is None:
        return True
    value, modulus = residue_class
    return p % modulus == value % modulus


def empirical(
    records: Sequence[SweepRecord],
    selector: str = DELTA,
    residue_class: Optional[Tuple[int, int]] = None,
    t: Optional[int] = None,
) -> EmpiricalSample:
    """Extracts delta or a normalized trace from the records.

    Args:
        records: Sweep records.
        selector: "delta" or a curve id (its trace divided by sqrt(p)).
        residue_class: Optional (class, modulus) filter on p.
        t: Optional filter on the run length of the records.

    Returns:
        The values, in record order.
    """
    values = []
    for r in records:
        if not _in_class(r.p, residue_class) or (t is not None and r.t != t):
            continue
        if selector == DELTA:
            values.append(r.delta)
        elif selector in r.traces:
            values.append(r.normalized_trace(selector))
        else:
            raise ValueError(f"Record for p={r.p} has no trace for {selector}")
    if not values:
        raise ValueError(f"No records selected for {selector}")
    return EmpiricalSample(np.array(values))


@dataclass
class KSReport:
    """A KS comparison of one empirical distribution with a reference law."""

    t: int
    residue_class: int
    modulus: int
    variant: str
    selector: str
    n: int
    ks: float
    threshold: Optional[float]
    pvalue: float

    @property
    def passed(self) -> bool:
        return self.threshold is None or self.ks <= self.threshold

    def format(self) -> str:
        threshold = "-" if self.threshold is None else f"{self.threshold:g}"
        return (
            f"t={self.t} class={self.residue_class}/{self.modulus} "
            f"variant={self.variant} selector={self.selector} n={self.n} "
            f"ks={self.ks:.6f} threshold={threshold} pvalue={self.pvalue:.4g}"
        )


def default_threshold(t: int) -> float:
    return KS_THRESHOLD_T4 if t <= 4 else KS_THRESHOLD_T5


def ks_report(
    t: int,
    residue_class: int,
    variant: PredictionVariant,
    records: Sequence[SweepRecord],
    selector: str = DELTA,
    reference: Optional[MeasureSpec] = None,
    threshold: Optional[float] = -1.0,
    modulus: Optional[int] = None,
) -> KSReport:
    """Compares the records of a class with a predicted or given law.

    Args:
        t: Run length of the records.
        residue_class: Class of p.
        variant: Which predicted measure to use for delta.
        records: Sweep records.
        selector: "delta" or a curve id.
        reference: Law to compare with; defaults to predicted_measure.
        threshold: Pass threshold; -1 picks the default for t, None reports
            without a threshold.
        modulus: Class modulus; defaults to 4 for t <= 4 and 8 otherwise.

    Raises:
        SampleTooSmallError: With fewer than KS_MIN_SAMPLE records.
    """
    variant = PredictionVariant(variant)
    modulus = modulus or class_modulus(t)
    sample = empirical(records, selector, (residue_class, modulus), t)
    if sample.count < KS_MIN_SAMPLE:
        raise SampleTooSmallError(
            f"Need {KS_MIN_SAMPLE} records for KS, got {sample.count}"
        )
    if reference is None:
        reference = predicted_measure(t, residue_class % modulus, variant)
    if threshold is not None and threshold < 0:
        threshold = default_threshold(t)
    distance = ks(sample, reference)
    return KSReport(
        t=t,
        residue_class=residue_class % modulus,
        modulus=modulus,
        variant=variant.value,
        selector=selector,
        n=sample.count,
        ks=distance,
        threshold=threshold,
        pvalue=ks_pvalue(distance, sample.count),
    )


@dataclass
class IndependenceRow:
    """Correlations of two normalized trace sequences."""

    curve_a: str
    curve_b: str
    n: int
    correlation: float
    correlation_sq: float
    expected_dependent: bool

    @property
    def limit(self) -> float:
        return 3 / math.sqrt(self.n)

    @property
    def passed(self) -> bool:
        return max(abs(self.correlation), abs(self.correlation_sq)) <= self.limit


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    if np.std(x) == 0 or np.std(y) == 0:
        return 0.0
    return float(np.corrcoef(x, y)[0, 1])


def related(curve_a: str, curve_b: str) -> bool:
    """Tells whether two curves are equal or a claimed or observed twist pair."""
    if curve_a == curve_b:
        return True
    relations = CLAIMED_RELATIONS + OBSERVED_RELATIONS
    return any({curve_a, curve_b} == {a, b} for a, b, _ in relations)


def independence_report(
    pairs: Sequence[Tuple[str, str]],
    records: Sequence[SweepRecord],
    residue_class: Optional[Tuple[int, int]] = None,
) -> List[IndependenceRow]:
    """Pearson correlations of (a_i, a_j) and (a_i^2, a_j^2), normalized by sqrt(p).

    Raises:
        SampleTooSmallError: With fewer than INDEPENDENCE_MIN_SAMPLE records.
    """
    by_prime: Dict[int, SweepRecord] = {}
    for r in records:
        if _in_class(r.p, residue_class):
            by_prime.setdefault(r.p, r)
    rows = []
    for curve_a, curve_b in pairs:
        selected = [
            r for r in by_prime.values() if curve_a in r.traces and curve_b in r.traces
        ]
        if len(selected) < INDEPENDENCE_MIN_SAMPLE:
            raise SampleTooSmallError(
                f"Need {INDEPENDENCE_MIN_SAMPLE} records for {curve_a},{curve_b}, "
                f"got {len(selected)}"
            )
        x = np.array([r.normalized_trace(curve_a) for r in selected])
        y = np.array([r.normalized_trace(curve_b) for r in selected])
        rows.append(
            IndependenceRow(
                curve_a=curve_a,
                curve_b=curve_b,
                n=len(selected),
                correlation=_pearson(x, y),
                correlation_sq=_pearson(x * x, y * y),
                expected_dependent=related(curve_a, curve_b),
            )
        )
    return rows


################################################
# Extremes


# Bounds on |n_p(t) - p / 2^t| / sqrt(p) for t = 4, and on half of it for t = 5.
THEOREM_BOUNDS: Dict[int, Dict[int, Fraction]] = {
    4: {1: Fraction(5, 8), 3: Fraction(1, 8)},
    5: {
        1: Fraction(17, 32),
        3: Fraction(11, 32),
        5: Fraction(13, 32),
        7: Fraction(7, 32),
    },
}

# Bounds as labelled in the corollary, which swaps classes 3 and 5.
COROLLARY_BOUNDS: Dict[int, Fraction] = {
    1: Fraction(17, 32),
    3: Fraction(13, 32),
    5: Fraction(11, 32),
    7: Fraction(7, 32),
}

# Constants reachable unconditionally from pairwise independence.
UNCONDITIONAL_TARGETS: Dict[int, Dict[int, Fraction]] = {
    4: {1: Fraction(3, 8), 3: Fraction(1, 8)},
    5: {1: Fraction(1, 16), 3: Fraction(3, 16), 5: Fraction(1, 16), 7: Fraction(1, 16)},
}


def comparison_scale(t: int) -> int:
    """The t = 5 bounds apply to |n_p(t) - p / 2^t| / (2 sqrt(p))."""
    return 2 if t == 5 else 1


def derived_bound(t: int, residue_class: int) -> Fraction:
    """Returns sum_i |c_i| w_i from derived_coefficients, in comparison units.

    w_i bounds |N_i| / sqrt(p): 2 for elliptic curves and 4 for the genus-2 curve.
    """
    hypothesis = derived_coefficients(t, residue_class)
    total = Fraction(0)
    for curve_id, c in hypothesis.coefficients.items():
        total += abs(c) * (4 if curve_id == "C" else 2)
    return total / comparison_scale(t)


def slack(t: int, p: int) -> float:
    return 2**t * RESIDUAL_BOUND / math.sqrt(p)


@dataclass
class ClassExtrema:
    """Extremes of e_p = (n_p(t) - p / 2^t) / sqrt(p) on one class."""

    residue_class: int
    count: int = 0
    max_value: float = -math.inf
    argmax: Optional[int] = None
    min_value: float = math.inf
    argmin: Optional[int] = None
    bound: Optional[Fraction] = None
    derived: Optional[Fraction] = None
    unconditional: Optional[Fraction] = None
    violations: List[int] = field(default_factory=list)

    def observed(self, scale: int) -> float:
        return max(abs(self.max_value), abs(self.min_value)) / scale

    def gap(self, scale: int) -> Optional[float]:
        if self.bound is None:
            return None
        return float(self.bound) - self.observed(scale)


@dataclass
class ExtremaReport:
    t: int
    classes: Dict[int, ClassExtrema]
    notes: List[str] = field(default_factory=list)

    @property
    def safe(self) -> bool:
        return not any(c.violations for c in self.classes.values())

    def format(self) -> str:
        scale = comparison_scale(self.t)
        lines = []
        for c, ext in sorted(self.classes.items()):
            gap = ext.gap(scale)
            gap_text = "-" if gap is None else f"{gap:.6f}"
            lines.append(
                f"t={self.t} class={c} n={ext.count} "
                f"max={ext.max_value:.6f}@{ext.argmax} "
                f"min={ext.min_value:.6f}@{ext.argmin} bound={ext.bound} "
                f"derived={ext.derived} unconditional={ext.unconditional} "
                f"gap={gap_text} violations={len(ext.violations)}"
            )
        return "\n".join(lines + [f"note: {note}" for note in self.notes])


def extrema_report(t: int, records: Sequence[SweepRecord]) -> ExtremaReport:
    """Per-class extremes of (n_p(t) - p / 2^t) / sqrt(p) with witness primes.

    A record violates its class bound when its comparison value exceeds the
    bound by more than 2^t K / sqrt(p).
    """
    selected = [r for r in records if r.t == t]
    if not selected:
        raise ValueError(f"No records for t={t}")
    modulus = class_modulus(t)
    scale = comparison_scale(t)
    bounds = THEOREM_BOUNDS.get(t, {})
    classes: Dict[int, ClassExtrema] = {}
    for r in selected:
        c = r.p % modulus
        ext = classes.get(c)
        if ext is None:
            ext = ClassExtrema(
                residue_class=c,
                bound=bounds.get(c),
                derived=derived_bound(t, c) if t in (3, 4, 5) else None,
                unconditional=UNCONDITIONAL_TARGETS.get(t, {}).get(c),
            )
            classes[c] = ext
        value = r.delta_num_scaled / (2**t * math.sqrt(r.p))
        ext.count += 1
        if value > ext.max_value:
            ext.max_value, ext.argmax = value, r.p
        if value < ext.min_value:
            ext.min_value, ext.argmin = value, r.p
        limit = None if ext.bound is None else float(ext.bound) + slack(t, r.p)
        if limit is not None and abs(value) / scale > limit:
            ext.violations.append(r.p)
    report = ExtremaReport(t=t, classes=classes)
    if t == 5:
        report.notes.append(
            "corollary labels swap the class 3 and class 5 bounds "
            f"({COROLLARY_BOUNDS[3]} and {COROLLARY_BOUNDS[5]}); "
            "bounds here follow the coefficient sums"
        )
        report.notes.append(
            "bounds apply to |n_p(5) - p/32| / (2 sqrt(p)); delta is signed"
        )
    for c, ext in classes.items():
        if ext.violations:
            logging.warning(
                "t=%d class %d exceeds its bound at %d primes",
                t,
                c,
                len(ext.violations),
            )
    return report

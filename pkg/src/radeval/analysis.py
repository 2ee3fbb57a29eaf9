"""Correlation analyses against other metrics and radiologist annotations,
plus the dependent-overlapping-correlation significance test."""

from __future__ import annotations

import csv
import warnings
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
from scipy import stats

from .pairgen import Orientation


class ErrorCategory(Enum):
    FALSE_PREDICTION = 1
    OMISSION_OF_FINDING = 2
    INCORRECT_LOCATION = 3
    INCORRECT_SEVERITY = 4
    SPURIOUS_COMPARISON = 5
    OMITTED_COMPARISON = 6
    SPURIOUS_UNCERTAINTY = 7
    OMITTED_UNCERTAINTY = 8


#: Categories 7 and 8 extend the original six-way taxonomy.
EXTENDED_CATEGORIES = frozenset({
    ErrorCategory.SPURIOUS_UNCERTAINTY,
    ErrorCategory.OMITTED_UNCERTAINTY,
})


@dataclass(frozen=True)
class AnnotationRecord:
    """Per-report, per-annotator error counts over all 8 categories."""

    report_id: str
    annotator_id: str
    counts: dict[ErrorCategory, tuple[int, int]]  # (significant, insignificant)

    def __post_init__(self):
        full = {cat: tuple(self.counts.get(cat, (0, 0))) for cat in ErrorCategory}
        for cat, (sig, insig) in full.items():
            if sig < 0 or insig < 0:
                raise ValueError(f"negative count for {cat.name} on report {self.report_id}")
        object.__setattr__(self, "counts", full)

    @property
    def significant_total(self) -> int:
        return sum(sig for sig, _ in self.counts.values())

    @property
    def insignificant_total(self) -> int:
        return sum(insig for _, insig in self.counts.values())

    @property
    def total(self) -> int:
        return self.significant_total + self.insignificant_total


def read_annotations_csv(path: str | Path) -> list[AnnotationRecord]:
    """Rows of (report_id, annotator_id, category 1-8, significant_count,
    insignificant_count); absent categories count as zero."""
    grouped: dict[tuple[str, str], dict[ErrorCategory, tuple[int, int]]] = defaultdict(dict)
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        required = {"report_id", "annotator_id", "category", "significant_count", "insignificant_count"}
        missing = required - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing annotation column(s): {', '.join(sorted(missing))}")
        for row in reader:
            key = (row["report_id"], row["annotator_id"])
            category = ErrorCategory(int(row["category"]))
            grouped[key][category] = (int(row["significant_count"]), int(row["insignificant_count"]))
    return [
        AnnotationRecord(report_id=rid, annotator_id=aid, counts=counts)
        for (rid, aid), counts in grouped.items()
    ]


@dataclass(frozen=True)
class AggregatedErrors:
    mean_significant: float
    mean_insignificant: float
    mean_total: float
    n_annotators: int


def aggregate_annotations(
    records: list[AnnotationRecord],
    expected_report_ids=None,
) -> dict[str, AggregatedErrors]:
    """Mean significant / insignificant / total errors per report, across
    annotators. Totals are summed per annotator before averaging."""
    by_report: dict[str, list[AnnotationRecord]] = defaultdict(list)
    for record in records:
        by_report[record.report_id].append(record)

    if expected_report_ids is not None:
        absent = [rid for rid in expected_report_ids if rid not in by_report]
        if absent:
            warnings.warn(f"{len(absent)} report(s) have no annotation records; excluded")

    out = {}
    for rid in sorted(by_report):
        group = by_report[rid]
        out[rid] = AggregatedErrors(
            mean_significant=float(np.mean([r.significant_total for r in group])),
            mean_insignificant=float(np.mean([r.insignificant_total for r in group])),
            mean_total=float(np.mean([r.total for r in group])),
            n_annotators=len(group),
        )
    return out


def filter_noisy(
    aggregated: dict[str, AggregatedErrors],
    threshold: float = 3,
) -> dict[str, AggregatedErrors]:
    """Reports whose mean total error count strictly exceeds the threshold."""
    return {rid: agg for rid, agg in aggregated.items() if agg.mean_total > threshold}


# ---------------------------------------------------------------------------
# rank correlation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CorrelationResult:
    value: float | None  # rho or tau; None marks undefined (constant input)
    n: int
    method: str
    orientation_applied: bool = False

    @property
    def percent(self) -> float | None:
        return None if self.value is None else 100.0 * self.value


def rank_average(values) -> np.ndarray:
    """Ranks starting at 1; ties share the average of their positions."""
    x = np.asarray(values, dtype=float)
    order = np.argsort(x, kind="mergesort")
    ranks = np.empty(len(x))
    sorted_x = x[order]
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and sorted_x[j + 1] == sorted_x[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(x, y, orientation_applied: bool = False) -> CorrelationResult:
    """Pearson correlation of average ranks."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"input shapes differ: {x.shape} vs {y.shape}")
    n = len(x)
    if n < 2:
        raise ValueError("need at least two observations")
    rx = rank_average(x)
    ry = rank_average(y)
    rx -= rx.mean()
    ry -= ry.mean()
    denom = np.sqrt((rx ** 2).sum() * (ry ** 2).sum())
    if denom == 0.0:
        return CorrelationResult(value=None, n=n, method="spearman",
                                 orientation_applied=orientation_applied)
    return CorrelationResult(
        value=float((rx * ry).sum() / denom),
        n=n,
        method="spearman",
        orientation_applied=orientation_applied,
    )


def orient_scores(scores, orientation: Orientation | str) -> np.ndarray:
    """Flip higher-is-better scores so every metric agrees with error counts
    (lower is better) before correlating."""
    if isinstance(orientation, str):
        orientation = Orientation(orientation)
    scores = np.asarray(scores, dtype=float)
    if orientation is Orientation.HIGHER_BETTER:
        return -scores
    if orientation is Orientation.LOWER_BETTER:
        return scores.copy()
    raise ValueError(f"unknown orientation {orientation!r}")


@dataclass(frozen=True)
class CorrelationRow:
    name: str
    result: CorrelationResult
    is_training_target: bool = False


def metric_correlation_table(
    score_columns: dict[str, list | np.ndarray],
    reference_column,
    method: str = "spearman",
    trained_on: str | None = None,
) -> list[CorrelationRow]:
    """One correlation per score column against the reference column."""
    from .estimator import kendall_tau  # local import avoids a cycle

    reference = np.asarray(reference_column, dtype=float)
    rows = []
    for name in score_columns:
        column = np.asarray(score_columns[name], dtype=float)
        if column.shape != reference.shape:
            raise ValueError(
                f"column {name!r} has {column.shape[0]} rows, reference has {reference.shape[0]}"
            )
        if method == "spearman":
            result = spearman(column, reference)
        elif method == "kendall":
            tau = kendall_tau(column, reference)
            result = CorrelationResult(value=tau, n=len(column), method="kendall")
        else:
            raise ValueError(f"unknown correlation method {method!r}")
        rows.append(CorrelationRow(name=name, result=result, is_training_target=(name == trained_on)))
    return rows


def oracle_group_correlation(
    scores,
    human_means,
    oracle_labels,
    orientation: Orientation | str | None = None,
) -> dict[str, CorrelationResult]:
    """Spearman per oracle-metric group between scores and mean error counts."""
    scores = np.asarray(scores, dtype=float)
    human = np.asarray(human_means, dtype=float)
    labels = list(oracle_labels)
    if not (len(scores) == len(human) == len(labels)):
        raise ValueError("scores, human means, and oracle labels must align")
    if orientation is not None:
        scores = orient_scores(scores, orientation)

    out = {}
    for oracle in sorted(set(labels)):
        idx = [i for i, lab in enumerate(labels) if lab == oracle]
        if len(idx) < 3:
            warnings.warn(f"oracle group {oracle!r} has n={len(idx)} < 3; skipped")
            continue
        out[oracle] = spearman(scores[idx], human[idx],
                               orientation_applied=orientation is not None)
    return out


# ---------------------------------------------------------------------------
# dependent overlapping correlations
# ---------------------------------------------------------------------------

TEST_VARIANTS = ("olkin_hendrickson", "hotelling_williams")

ALTERNATIVES = ("one_sided_jh_greater", "two_sided")


@dataclass(frozen=True)
class OverlapTestInput:
    """Correlations among variables j (shared, e.g. human), k, and h.

    The question is whether r_jh exceeds r_jk given that k and h correlate
    r_kh on the same sample of size n.
    """

    r_jk: float
    r_jh: float
    r_kh: float
    n: int
    alpha: float = 0.05
    alternative: str = "one_sided_jh_greater"

    def __post_init__(self):
        for name in ("r_jk", "r_jh", "r_kh"):
            value = getattr(self, name)
            if not -1.0 < value < 1.0:
                raise ValueError(f"{name}={value} must lie strictly inside (-1, 1)")
        if self.n < 4:
            raise ValueError("need n >= 4")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.alternative not in ALTERNATIVES:
            raise ValueError(f"unknown alternative {self.alternative!r}")
        if self.determinant < 0.0:
            raise ValueError(
                f"correlation triple ({self.r_jk}, {self.r_jh}, {self.r_kh}) is not positive semidefinite"
            )

    @property
    def determinant(self) -> float:
        return (1.0 - self.r_jk ** 2 - self.r_jh ** 2 - self.r_kh ** 2
                + 2.0 * self.r_jk * self.r_jh * self.r_kh)


@dataclass(frozen=True)
class OverlapTestResult:
    statistic: float
    p_value: float
    reject: bool
    variant: str
    df: float | None = None


def dependent_overlapping_test(
    test_input: OverlapTestInput,
    variant: str = "olkin_hendrickson",
) -> OverlapTestResult:
    """Compare two dependent correlations sharing variable j.

    The default z statistic follows Olkin's large-sample variance for
    r_jh - r_jk; the alternative is the Hotelling-Williams t with n-3
    degrees of freedom. The statistic is oriented so positive values support
    r_jh > r_jk.
    """
    r_jk, r_jh, r_kh, n = test_input.r_jk, test_input.r_jh, test_input.r_kh, test_input.n
    diff = r_jh - r_jk
    df = None

    if variant == "olkin_hendrickson":
        variance = (
            (1.0 - r_jk ** 2) ** 2
            + (1.0 - r_jh ** 2) ** 2
            - 2.0 * r_kh ** 3
            - (2.0 * r_kh - r_jk * r_jh) * (1.0 - r_jk ** 2 - r_jh ** 2 - r_kh ** 2)
        )
        if variance <= 0.0:
            raise ValueError(f"degenerate variance {variance} for {test_input}")
        statistic = diff * np.sqrt(n) / np.sqrt(variance)
        p_greater = float(stats.norm.sf(statistic))
    elif variant == "hotelling_williams":
        if n <= 3:
            raise ValueError("hotelling_williams needs n > 3")
        det = test_input.determinant
        mean_r = (r_jk + r_jh) / 2.0
        denom = 2.0 * ((n - 1.0) / (n - 3.0)) * det + mean_r ** 2 * (1.0 - r_kh) ** 3
        if denom <= 0.0:
            raise ValueError(f"degenerate denominator {denom} for {test_input}")
        statistic = diff * np.sqrt((n - 1.0) * (1.0 + r_kh) / denom)
        df = float(n - 3)
        p_greater = float(stats.t.sf(statistic, df))
    else:
        raise ValueError(f"unknown test variant {variant!r}")

    if test_input.alternative == "one_sided_jh_greater":
        p_value = p_greater
    else:
        p_value = 2.0 * min(p_greater, 1.0 - p_greater)

    return OverlapTestResult(
        statistic=float(statistic),
        p_value=p_value,
        reject=p_value < test_input.alpha,
        variant=variant,
        df=df,
    )


def correlations_from_columns(j, k, h) -> tuple[float, float, float, int]:
    """Spearman (r_jk, r_jh, r_kh) over aligned columns, for the test above."""
    j = np.asarray(j, dtype=float)
    r_jk = spearman(j, k).value
    r_jh = spearman(j, h).value
    r_kh = spearman(np.asarray(k, dtype=float), h).value
    if r_jk is None or r_jh is None or r_kh is None:
        raise ValueError("constant column; correlations undefined")
    return r_jk, r_jh, r_kh, len(j)

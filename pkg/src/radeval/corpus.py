"""Report ingestion, MeSH label cleaning, and normal/abnormal classification."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

from .errors import IngestionError, SchemaError


class Normalcy(Enum):
    NORMAL = "normal"
    ABNORMAL = "abnormal"


#: MeSH values carrying no topical content; dropped during cleaning.
MESH_REMOVAL_VALUES = frozenset({
    "no indexing",
    "technical quality of image unsatisfactory",
})

#: Impression phrasings that mark a report as normal. Matching is
#: case-insensitive substring containment after trimming terminal punctuation.
NORMAL_IMPRESSION_PHRASES = (
    "No acute cardiopulmonary abnormality",
    "No acute cardiopulmonary abnormalities",
    "Negative for acute abnormality",
    "No evidence of active disease",
    "No acute cardiopulmonary process",
    "No acute cardiopulmonary disease",
    "No acute cardiopulmonary findings",
    "No acute pulmonary findings",
    "No acute findings",
    "No acute cardiopulmonary abnormality identified",
    "No acute cardiopulmonary abnormality seen",
    "No acute cardiopulmonary abnormality detected",
    "No acute cardiopulmonary finding",
    "No active disease",
    "No acute disease",
)

_TERMINAL_PUNCT = ".,;:!? \t\r\n"


@dataclass(frozen=True)
class Report:
    """One radiology study: narrative text plus MeSH labels."""

    id: str
    findings: str
    impression: str
    mesh_labels: tuple[str, ...]
    normalcy: Normalcy | None = None

    @property
    def text(self) -> str:
        """Narrative used by the text metrics: findings then impression."""
        return " ".join(part for part in (self.findings, self.impression) if part).strip()


@dataclass(frozen=True)
class PhraseFilterList:
    """Normal-impression phrase filters, normalized once at construction."""

    phrases: tuple[str, ...] = NORMAL_IMPRESSION_PHRASES
    _normalized: tuple[str, ...] = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(
            self, "_normalized",
            tuple(_normalize(p) for p in self.phrases),
        )

    def matches(self, impression: str) -> bool:
        text = _normalize(impression)
        return any(p in text for p in self._normalized)


def _normalize(text: str) -> str:
    return text.strip().rstrip(_TERMINAL_PUNCT).lower()


def clean_mesh(labels: list[str] | tuple[str, ...]) -> tuple[str, ...]:
    """Drop the non-topical MeSH values, preserving order of the rest."""
    return tuple(
        label for label in labels
        if label.strip().lower() not in MESH_REMOVAL_VALUES
    )


def classify_normalcy(report: Report, filters: PhraseFilterList | None = None) -> Normalcy:
    """Normal iff mesh-0 is "normal" or the impression contains a filter phrase.

    mesh-0 is the first label after cleaning.
    """
    if filters is None:
        filters = PhraseFilterList()
    cleaned = clean_mesh(report.mesh_labels)
    if cleaned and cleaned[0].strip().lower() == "normal":
        return Normalcy.NORMAL
    if filters.matches(report.impression):
        return Normalcy.NORMAL
    return Normalcy.ABNORMAL


def curate_reports(
    reports: list[Report],
    filters: PhraseFilterList | None = None,
    drop_missing_mesh1: bool = False,
) -> list[Report]:
    """Clean every report's MeSH labels and set its normalcy flag.

    ``drop_missing_mesh1`` additionally removes reports with fewer than two
    cleaned labels (used when sampling for human studies, not by default).
    """
    out = []
    for report in reports:
        cleaned = replace(report, mesh_labels=clean_mesh(report.mesh_labels))
        cleaned = replace(cleaned, normalcy=classify_normalcy(cleaned, filters))
        if drop_missing_mesh1 and len(cleaned.mesh_labels) < 2:
            continue
        out.append(cleaned)
    return out


_REQUIRED_FIELDS = ("id", "findings", "impression", "mesh")


def load_reports(
    path: str | Path,
    format: str = "csv",
    mesh_delimiter: str = ",",
) -> list[Report]:
    """Read one Report per row/record from a CSV or JSONL file.

    The ``mesh`` column is split on ``mesh_delimiter`` into individual labels;
    "/" is reserved as the intra-label qualifier separator and never split on.
    Normalcy stays unset until ``curate_reports`` runs.
    """
    path = Path(path)
    if format == "csv":
        rows = _read_csv(path)
    elif format == "jsonl":
        rows = _read_jsonl(path)
    else:
        raise ValueError(f"unknown report format: {format!r}")

    reports = []
    seen: dict[str, int] = {}
    for row in rows:
        missing = [key for key in _REQUIRED_FIELDS if key not in row]
        if missing:
            raise SchemaError(f"{path}: missing required column(s): {', '.join(missing)}")
        rid = str(row["id"])
        seen[rid] = seen.get(rid, 0) + 1
        mesh_raw = str(row["mesh"]) if row["mesh"] is not None else ""
        labels = tuple(
            part.strip() for part in mesh_raw.split(mesh_delimiter) if part.strip()
        )
        reports.append(Report(
            id=rid,
            findings=str(row["findings"]) if row["findings"] is not None else "",
            impression=str(row["impression"]) if row["impression"] is not None else "",
            mesh_labels=labels,
        ))

    duplicates = sorted(rid for rid, count in seen.items() if count > 1)
    if duplicates:
        raise IngestionError(f"{path}: duplicate report id(s): {', '.join(duplicates)}")
    return reports


def _read_csv(path: Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None:
            raise SchemaError(f"{path}: empty file, no header row")
        return list(reader)


def _read_jsonl(path: Path) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows


def save_curated(reports: list[Report], path: str | Path, mesh_delimiter: str = ",") -> None:
    """Persist a curated collection; `load_curated` round-trips it."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["id", "findings", "impression", "mesh", "normalcy"])
        for report in reports:
            writer.writerow([
                report.id,
                report.findings,
                report.impression,
                mesh_delimiter.join(report.mesh_labels),
                report.normalcy.value if report.normalcy else "",
            ])


def load_curated(path: str | Path, mesh_delimiter: str = ",") -> list[Report]:
    reports = load_reports(path, format="csv", mesh_delimiter=mesh_delimiter)
    rows = _read_csv(Path(path))
    out = []
    for report, row in zip(reports, rows):
        normalcy = Normalcy(row["normalcy"]) if row.get("normalcy") else None
        out.append(replace(report, normalcy=normalcy))
    return out

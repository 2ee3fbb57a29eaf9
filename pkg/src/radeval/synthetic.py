"""Deterministic synthetic fixtures: a small report corpus, generated-report
pairs with graded corruption, and a consensus annotation set whose noisy
subset reproduces the reference error-category totals."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .corpus import NORMAL_IMPRESSION_PHRASES

_TOPICS = (
    ("normal", ("normal",)),
    ("hypoinflation", ("lung/hypoinflation", "markings/bronchovascular", "lung/hyperdistention")),
    ("granuloma", ("calcified granuloma/lung/base/right", "calcified granuloma/lung/upper lobe/left", "granulomatous disease")),
    ("cardiac", ("cardiomegaly/mild", "aorta/tortuous", "atherosclerosis/aorta")),
    ("spine", ("thoracic vertebrae/degenerative/mild", "spondylosis/thoracic vertebrae", "osteophyte/anterior")),
    ("effusion", ("pleural effusion/right", "airspace disease/lung/base", "opacity/lung/base/left")),
)

_FINDINGS = {
    "normal": (
        "the lungs are clear bilaterally. heart size within normal limits.",
        "clear lungs without focal consolidation. the cardiomediastinal silhouette is normal.",
        "no focal airspace disease. the heart and mediastinum are unremarkable.",
    ),
    "hypoinflation": (
        "low lung volumes with bronchovascular crowding. no focal consolidation.",
        "the lungs are hypoinflated with increased bronchovascular markings.",
        "hypoinflation of the lungs. xxxx streaky opacity at the bases.",
    ),
    "granuloma": (
        "calcified granuloma in the right lung base. no acute infiltrate.",
        "stable calcified granuloma of the left upper lobe. lungs otherwise clear.",
        "scattered calcified granulomas consistent with prior granulomatous disease.",
    ),
    "cardiac": (
        "the heart is enlarged. the aorta is tortuous and calcified.",
        "mild cardiomegaly without pulmonary vascular congestion or edema.",
        "cardiomegaly with a tortuous aorta. no pleural effusion.",
    ),
    "spine": (
        "mild degenerative changes of the thoracic vertebrae. anterior osteophytes noted.",
        "thoracic spondylosis with degenerative endplate changes.",
        "degenerative change of the thoracic spine. lungs grossly clear.",
    ),
    "effusion": (
        "small right pleural effusion with adjacent airspace disease at the base.",
        "left basilar opacity with blunting of the costophrenic xxxx.",
        "patchy airspace opacity at the lung base with trace effusion.",
    ),
}

_ABNORMAL_IMPRESSIONS = {
    "hypoinflation": ("low lung volumes.", "hypoinflation without acute infiltrate."),
    "granuloma": ("stable calcified granuloma.", "chronic granulomatous disease, no acute change."),
    "cardiac": ("mild cardiomegaly.", "cardiomegaly with tortuous aorta."),
    "spine": ("degenerative changes of the thoracic spine.", "thoracic spondylosis."),
    "effusion": ("small right pleural effusion.", "basilar airspace disease, effusion suspected."),
}

#: Per-category (significant, insignificant) totals the noisy subset must sum to.
NOISY_CATEGORY_TOTALS = {
    1: (10, 7),
    2: (64, 36),
    3: (1, 1),
    4: (0, 1),
    5: (0, 6),
    6: (17, 7),
    7: (1, 0),
    8: (3, 0),
}

NOISY_REPORT_COUNT = 30


def make_reports(n: int = 200, seed: int = 11, normal_share: float = 0.35) -> list[dict]:
    """Rows for a reports CSV: id, findings, impression, mesh."""
    rng = np.random.default_rng(seed)
    abnormal_topics = [t for t in _TOPICS if t[0] != "normal"]
    rows = []
    for i in range(n):
        if rng.random() < normal_share:
            topic, pool = _TOPICS[0]
        else:
            topic, pool = abnormal_topics[int(rng.integers(len(abnormal_topics)))]

        if topic == "normal":
            labels = ["normal"]
            impression = NORMAL_IMPRESSION_PHRASES[int(rng.integers(len(NORMAL_IMPRESSION_PHRASES)))].lower() + "."
        else:
            count = int(rng.integers(1, len(pool) + 1))
            picks = rng.choice(len(pool), size=count, replace=False)
            labels = [pool[j] for j in sorted(picks)]
            options = _ABNORMAL_IMPRESSIONS[topic]
            impression = options[int(rng.integers(len(options)))]
        if rng.random() < 0.08:
            labels.append("no indexing")

        findings_pool = _FINDINGS[topic]
        rows.append({
            "id": f"r{i:03d}",
            "findings": findings_pool[int(rng.integers(len(findings_pool)))],
            "impression": impression,
            "mesh": ",".join(labels),
        })
    return rows


_ORACLES = ("bleu", "bertscore", "chexbert", "radgraph")

_NOISE_SENTENCES = (
    "there is a right upper lobe opacity.",
    "possible pneumothorax is seen.",
    "focal consolidation in the left base.",
    "interval increase in pulmonary edema.",
)


def corrupt_text(text: str, severity: float, rng: np.random.Generator) -> str:
    """Degrade a report: token dropout, substitutions, and spurious findings."""
    tokens = text.split()
    kept = [t for t in tokens if rng.random() > 0.45 * severity]
    if not kept:
        kept = tokens[:1]
    vocab = ("opacity", "normal", "stable", "xxxx", "unchanged", "clear")
    kept = [
        vocab[int(rng.integers(len(vocab)))] if rng.random() < 0.25 * severity else t
        for t in kept
    ]
    out = " ".join(kept)
    if severity > 0.5 and rng.random() < severity:
        out += " " + _NOISE_SENTENCES[int(rng.integers(len(_NOISE_SENTENCES)))]
    return out


def make_generated(report_rows: list[dict], n: int = 100, seed: int = 23) -> list[dict]:
    """Ground-truth/generated text pairs with graded corruption severity.

    Severity is spread evenly over [0, 1] and recorded in the row so the
    annotation fixture can agree with it.
    """
    if len(report_rows) < n:
        raise ValueError(f"need at least {n} reports, got {len(report_rows)}")
    rng = np.random.default_rng(seed)
    severities = np.linspace(0.02, 0.98, n)
    rng.shuffle(severities)
    rows = []
    for i in range(n):
        source = report_rows[i]
        ground_truth = f"{source['findings']} {source['impression']}".strip()
        rows.append({
            "id": f"g{i:03d}",
            "ground_truth": ground_truth,
            "generated": corrupt_text(ground_truth, float(severities[i]), rng),
            "oracle": _ORACLES[i % len(_ORACLES)],
            "severity": f"{severities[i]:.4f}",
        })
    return rows


def make_annotations(generated_rows: list[dict], seed: int = 37) -> list[dict]:
    """Consensus annotation rows for the generated fixture.

    The 30 highest-severity reports get more than 3 errors each and their
    per-category sums match NOISY_CATEGORY_TOTALS exactly; every other report
    totals at most 3 errors.
    """
    rng = np.random.default_rng(seed)
    order = sorted(range(len(generated_rows)),
                   key=lambda i: float(generated_rows[i]["severity"]), reverse=True)
    noisy = order[:NOISY_REPORT_COUNT]
    clean = order[NOISY_REPORT_COUNT:]

    units = []
    for category, (sig, insig) in sorted(NOISY_CATEGORY_TOTALS.items()):
        units.extend([(category, "sig")] * sig)
        units.extend([(category, "insig")] * insig)
    rng.shuffle(units)

    base = 4
    extra_units = len(units) - base * NOISY_REPORT_COUNT
    if extra_units < 0:
        raise ValueError("category totals too small for the noisy floor")
    per_report = [base] * NOISY_REPORT_COUNT
    for i in range(extra_units):
        per_report[i % NOISY_REPORT_COUNT] += 1  # most-severe reports absorb extras

    counts: dict[int, dict[int, list[int]]] = {}
    cursor = 0
    for rank, report_idx in enumerate(noisy):
        table = {cat: [0, 0] for cat in NOISY_CATEGORY_TOTALS}
        for category, kind in units[cursor:cursor + per_report[rank]]:
            table[category][0 if kind == "sig" else 1] += 1
        cursor += per_report[rank]
        counts[report_idx] = table

    for report_idx in clean:
        severity = float(generated_rows[report_idx]["severity"])
        total = min(3, int(severity * 4.0))
        table = {cat: [0, 0] for cat in NOISY_CATEGORY_TOTALS}
        for u in range(total):
            category = (1, 2, 6)[u % 3]
            table[category][u % 2] += 1
        counts[report_idx] = table

    rows = []
    for idx, row in enumerate(generated_rows):
        for category in sorted(NOISY_CATEGORY_TOTALS):
            sig, insig = counts[idx][category]
            rows.append({
                "report_id": row["id"],
                "annotator_id": "consensus",
                "category": str(category),
                "significant_count": str(sig),
                "insignificant_count": str(insig),
            })
    return rows


LEXICON = (
    ("lung", "anatomy"),
    ("lungs", "anatomy"),
    ("heart", "anatomy"),
    ("mediastinum", "anatomy"),
    ("cardiomediastinal silhouette", "anatomy"),
    ("aorta", "anatomy"),
    ("thoracic vertebrae", "anatomy"),
    ("thoracic spine", "anatomy"),
    ("pleural", "anatomy"),
    ("costophrenic", "anatomy"),
    ("base", "anatomy-modifier"),
    ("upper lobe", "anatomy-modifier"),
    ("calcified granuloma", "observation"),
    ("granuloma", "observation"),
    ("granulomatous disease", "observation"),
    ("cardiomegaly", "observation"),
    ("enlarged", "observation"),
    ("tortuous", "observation"),
    ("opacity", "observation"),
    ("airspace disease", "observation"),
    ("consolidation", "observation"),
    ("effusion", "observation"),
    ("pleural effusion", "observation"),
    ("pneumothorax", "observation"),
    ("edema", "observation"),
    ("atelectasis", "observation"),
    ("hypoinflation", "observation"),
    ("hypoinflated", "observation"),
    ("bronchovascular markings", "observation"),
    ("degenerative", "observation"),
    ("spondylosis", "observation"),
    ("osteophytes", "observation"),
    ("infiltrate", "observation"),
    ("clear", "observation"),
    ("normal", "observation"),
    ("stable", "modifier"),
    ("mild", "modifier"),
)


def write_fixture_files(directory: str | Path, n_reports: int = 200, seed: int = 11) -> dict[str, Path]:
    """Write the full fixture set; returns the paths by name."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    paths = {
        "reports": directory / f"reports_{n_reports}.csv",
        "generated": directory / "generated_100.csv",
        "annotations": directory / "annotations_100.csv",
        "lexicon": directory / "lexicon.tsv",
    }

    reports = make_reports(n=n_reports, seed=seed)
    _write_csv(paths["reports"], ("id", "findings", "impression", "mesh"), reports)

    generated = make_generated(reports, n=100, seed=seed + 12)
    _write_csv(paths["generated"], ("id", "ground_truth", "generated", "oracle", "severity"), generated)

    annotations = make_annotations(generated, seed=seed + 26)
    _write_csv(
        paths["annotations"],
        ("report_id", "annotator_id", "category", "significant_count", "insignificant_count"),
        annotations,
    )

    with open(paths["lexicon"], "w", encoding="utf-8") as handle:
        for term, label in LEXICON:
            handle.write(f"{term}\t{label}\n")

    return paths


def _write_csv(path: Path, fieldnames: tuple[str, ...], rows: list[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row[k] for k in fieldnames})

"""Comparative report-pair corpora: cluster cross-product scoring, best-match
and top-decile selection, stratified splits, and MeSH overlap audits."""

from __future__ import annotations

import json
import math
import warnings
from collections import defaultdict
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

import numpy as np

from . import simscore
from .corpus import Normalcy, Report


class ScoreKind(Enum):
    RADCLIQ = "radcliq"
    RADGRAPH_F1 = "radgraph_f1"


class Orientation(Enum):
    LOWER_BETTER = "lower_better"
    HIGHER_BETTER = "higher_better"


_ORIENTATION_BY_KIND = {
    ScoreKind.RADCLIQ: Orientation.LOWER_BETTER,
    ScoreKind.RADGRAPH_F1: Orientation.HIGHER_BETTER,
}


def score_orientation(kind: ScoreKind) -> Orientation:
    try:
        return _ORIENTATION_BY_KIND[kind]
    except KeyError:
        raise ValueError(f"no orientation known for score kind {kind!r}") from None


class Strategy(Enum):
    BEST_MATCH = "best_match"
    TOP_DECILE = "top_decile"


class Split(Enum):
    TRAIN = "train"
    VALIDATION = "validation"
    TEST = "test"
    UNSPLIT = "unsplit"


@dataclass(frozen=True)
class ScoredReportPair:
    source_id: str
    paired_id: str
    score: float
    score_kind: ScoreKind
    cluster_id: int

    def __post_init__(self):
        if self.source_id == self.paired_id:
            raise ValueError(f"pair of report {self.source_id!r} with itself")


@dataclass(frozen=True)
class PairCorpus:
    pairs: tuple[ScoredReportPair, ...]
    strategy: Strategy
    split: Split = Split.UNSPLIT

    def __len__(self) -> int:
        return len(self.pairs)


def score_cluster_pairs(
    cluster_reports: list[Report],
    metric,
    score_kind: ScoreKind,
    cluster_id: int = 0,
) -> list[ScoredReportPair]:
    """Score every ordered pair (source, paired) inside one cluster."""
    if not cluster_reports:
        raise ValueError("cluster is empty")
    if len(cluster_reports) == 1:
        warnings.warn(f"cluster {cluster_id} is a singleton; no pairs to score")
        return []
    pairs = []
    for source in cluster_reports:
        for paired in cluster_reports:
            if source.id == paired.id:
                continue
            pairs.append(ScoredReportPair(
                source_id=source.id,
                paired_id=paired.id,
                score=float(metric(source, paired)),
                score_kind=score_kind,
                cluster_id=cluster_id,
            ))
    return pairs


def score_all_clusters(
    reports: list[Report],
    cluster_labels,
    score_kind: ScoreKind,
    lexicon: dict[str, str],
    coefficients: simscore.RadCliqCoefficients | None = None,
) -> list[ScoredReportPair]:
    """Kernel-backed cross-product scoring of every cluster at once.

    Equivalent to calling `score_cluster_pairs` per cluster with the built-in
    metrics, but packs texts/annotations once and scores pairs in bulk.
    """
    if len(reports) != len(cluster_labels):
        raise ValueError("reports and cluster labels must align")
    if score_kind is ScoreKind.RADCLIQ and coefficients is None:
        coefficients = simscore.RadCliqCoefficients()

    annotations = [simscore.extract_radgraph_stub(r.text, lexicon) for r in reports]
    packed = simscore.pack_reports([r.text for r in reports], annotations)

    src_idx, dst_idx, cluster_ids = [], [], []
    by_cluster: dict[int, list[int]] = defaultdict(list)
    for idx, label in enumerate(cluster_labels):
        by_cluster[int(label)].append(idx)
    for cluster, members in sorted(by_cluster.items()):
        if len(members) == 1:
            warnings.warn(f"cluster {cluster} is a singleton; no pairs to score")
            continue
        for i in members:
            for j in members:
                if i != j:
                    src_idx.append(i)
                    dst_idx.append(j)
                    cluster_ids.append(cluster)

    src = np.asarray(src_idx, dtype=np.int64)
    dst = np.asarray(dst_idx, dtype=np.int64)
    rg = simscore.pairwise_radgraph_f1(packed, src, dst)
    if score_kind is ScoreKind.RADCLIQ:
        b2 = simscore.pairwise_bleu2(packed, src, dst)
        scores = (coefficients.weight_bleu2 * b2
                  + coefficients.weight_radgraph * rg
                  + coefficients.intercept)
    else:
        scores = rg

    return [
        ScoredReportPair(
            source_id=reports[s].id,
            paired_id=reports[d].id,
            score=float(score),
            score_kind=score_kind,
            cluster_id=cluster,
        )
        for s, d, cluster, score in zip(src_idx, dst_idx, cluster_ids, scores)
    ]


def _is_better(a: ScoredReportPair, b: ScoredReportPair, orientation: Orientation) -> bool:
    if orientation is Orientation.HIGHER_BETTER:
        if a.score != b.score:
            return a.score > b.score
    else:
        if a.score != b.score:
            return a.score < b.score
    return a.paired_id < b.paired_id  # tie: lexicographically smallest partner


def build_best_match(pairs: list[ScoredReportPair]) -> PairCorpus:
    """Keep exactly the best-scoring partner for each source report."""
    if not pairs:
        raise ValueError("no scored pairs given")
    best: dict[str, ScoredReportPair] = {}
    for pair in pairs:
        orientation = score_orientation(pair.score_kind)
        incumbent = best.get(pair.source_id)
        if incumbent is None or _is_better(pair, incumbent, orientation):
            best[pair.source_id] = pair
    ordered = tuple(best[sid] for sid in sorted(best))
    return PairCorpus(pairs=ordered, strategy=Strategy.BEST_MATCH)


def build_top_decile(
    pairs: list[ScoredReportPair],
    fraction: float = 0.10,
    scope: str = "cluster",
) -> PairCorpus:
    """Keep the best ``fraction`` of pairs per scope group, ties inclusive.

    Groups smaller than 1/fraction keep their single best pair (with a
    warning). ``scope`` is "cluster" (default), "source", or "global".
    """
    if not pairs:
        raise ValueError("no scored pairs given")
    if scope == "cluster":
        key = lambda p: p.cluster_id
    elif scope == "source":
        key = lambda p: p.source_id
    elif scope == "global":
        key = lambda p: 0
    else:
        raise ValueError(f"unknown top-decile scope {scope!r}")

    groups: dict = defaultdict(list)
    for pair in pairs:
        groups[key(pair)].append(pair)

    kept: list[ScoredReportPair] = []
    for group_key in sorted(groups, key=str):
        members = groups[group_key]
        orientation = score_orientation(members[0].score_kind)
        keep_n = math.floor(fraction * len(members))
        if keep_n < 1:
            warnings.warn(
                f"group {group_key!r} has only {len(members)} pairs; keeping its single best"
            )
            keep_n = 1
        scores = sorted(
            (p.score for p in members),
            reverse=orientation is Orientation.HIGHER_BETTER,
        )
        cutoff = scores[keep_n - 1]
        if orientation is Orientation.HIGHER_BETTER:
            kept.extend(p for p in members if p.score >= cutoff)
        else:
            kept.extend(p for p in members if p.score <= cutoff)
    return PairCorpus(pairs=tuple(kept), strategy=Strategy.TOP_DECILE)


def split_corpus(
    corpus: PairCorpus,
    seed: int,
    normalcy_by_id: dict[str, Normalcy] | None = None,
    test_fraction: float = 0.2,
    val_fraction: float = 0.2,
) -> tuple[PairCorpus, PairCorpus, PairCorpus]:
    """Split into train/validation/test, stratified on source-report normalcy.

    The test split takes ``test_fraction`` of each stratum, then the
    validation split takes ``val_fraction`` of the remainder. Same seed,
    same corpus: identical splits.
    """
    if len(corpus) == 0:
        raise ValueError("cannot split an empty corpus")

    indices = np.arange(len(corpus.pairs))
    if normalcy_by_id is None:
        strata = {"all": indices}
    else:
        strata = defaultdict(list)
        for idx, pair in enumerate(corpus.pairs):
            normalcy = normalcy_by_id.get(pair.source_id)
            strata[normalcy.value if normalcy else "unknown"].append(idx)
        strata = {name: np.asarray(ids) for name, ids in strata.items()}

    rng = np.random.default_rng(seed)
    train_idx, val_idx, test_idx = [], [], []
    for name in sorted(strata):
        members = strata[name]
        n = len(members)
        n_test = round(test_fraction * n)
        n_val = round(val_fraction * (n - n_test))
        n_train = n - n_test - n_val
        if min(n_test, n_val, n_train) < 1:
            raise ValueError(
                f"stratum {name!r} with {n} pairs is too small to split {1-test_fraction:.0%}/{test_fraction:.0%}"
            )
        shuffled = rng.permutation(members)
        test_idx.extend(shuffled[:n_test])
        val_idx.extend(shuffled[n_test:n_test + n_val])
        train_idx.extend(shuffled[n_test + n_val:])

    def take(idx_list, split):
        ordered = sorted(idx_list)
        return PairCorpus(
            pairs=tuple(corpus.pairs[i] for i in ordered),
            strategy=corpus.strategy,
            split=split,
        )

    return take(train_idx, Split.TRAIN), take(val_idx, Split.VALIDATION), take(test_idx, Split.TEST)


def mesh_overlap_tokens(report: Report) -> frozenset[str]:
    """Atomic MeSH tokens for overlap counting: slash-split qualifier parts."""
    tokens = set()
    for label in report.mesh_labels:
        parts = [p.strip().lower() for p in label.split("/") if p.strip()]
        tokens.update(parts if parts else [label.strip().lower()])
    return frozenset(tokens)


@dataclass(frozen=True)
class OverlapHistogram:
    counts: dict[str, int]
    percentages: dict[str, float]
    n_pairs: int


def mesh_overlap_stats(
    pairs,
    reports_by_id: dict[str, Report],
) -> OverlapHistogram:
    """Bucket pairs by exact MeSH token overlap: none / one / many."""
    pair_list = pairs.pairs if isinstance(pairs, PairCorpus) else list(pairs)
    counts = {"none": 0, "one": 0, "many": 0}
    for pair in pair_list:
        a = mesh_overlap_tokens(reports_by_id[pair.source_id])
        b = mesh_overlap_tokens(reports_by_id[pair.paired_id])
        overlap = len(a & b)
        if overlap == 0:
            counts["none"] += 1
        elif overlap == 1:
            counts["one"] += 1
        else:
            counts["many"] += 1
    total = len(pair_list)
    percentages = {
        bucket: (100.0 * count / total if total else 0.0)
        for bucket, count in counts.items()
    }
    return OverlapHistogram(counts=counts, percentages=percentages, n_pairs=total)


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def pair_key(pair: ScoredReportPair) -> str:
    return f"{pair.source_id}::{pair.paired_id}"


def write_corpus_jsonl(
    corpus: PairCorpus,
    reports_by_id: dict[str, Report],
    path: str | Path,
) -> None:
    """Training triplets, one JSON object {src, mt, score} per line."""
    with open(path, "w", encoding="utf-8") as handle:
        for pair in corpus.pairs:
            record = {
                "src": reports_by_id[pair.source_id].text,
                "mt": reports_by_id[pair.paired_id].text,
                "score": pair.score,
            }
            handle.write(json.dumps(record, sort_keys=True) + "\n")


def write_pairs_csv(pairs, path: str | Path) -> None:
    pair_list = pairs.pairs if isinstance(pairs, PairCorpus) else list(pairs)
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("source_id,paired_id,cluster_id,score,score_kind\n")
        for pair in pair_list:
            handle.write(
                f"{pair.source_id},{pair.paired_id},{pair.cluster_id},{pair.score!r},{pair.score_kind.value}\n"
            )


def read_pairs_csv(path: str | Path) -> list[ScoredReportPair]:
    pairs = []
    with open(path, encoding="utf-8") as handle:
        header = handle.readline()
        if not header.startswith("source_id,"):
            raise ValueError(f"{path}: not a scored-pairs file")
        for line in handle:
            source_id, paired_id, cluster_id, score, kind = line.rstrip("\n").split(",")
            pairs.append(ScoredReportPair(
                source_id=source_id,
                paired_id=paired_id,
                score=float(score),
                score_kind=ScoreKind(kind),
                cluster_id=int(cluster_id),
            ))
    return pairs

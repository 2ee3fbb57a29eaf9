"""Pairwise report similarity metrics: BLEU-n, RadGraph-style overlap F1,
pathology-vector cosine, embedding-based matching, and the composite
lower-is-better linear score.

Batch scoring over packed report features goes through the shared kernels in
``_kernels`` so cluster cross-products stay fast.
"""

from __future__ import annotations

import csv
import math
import re
import warnings
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels

_TOKEN_RE = re.compile(r"<\w+>|\w+")


def tokenize(text: str) -> list[str]:
    """Lowercase word tokens; de-identification placeholders like "xxxx" and
    "<unk>" survive as ordinary tokens."""
    return _TOKEN_RE.findall(text.lower())


def _ngram_counts(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu(
    candidate: str,
    reference: str,
    max_n: int = 4,
    smoothing: bool = False,
    tokenizer=tokenize,
) -> float:
    """Geometric mean of clipped n-gram precisions times the brevity penalty.

    Without smoothing a zero precision at any order yields 0; add-one
    smoothing replaces each precision with (matches+1)/(total+1).
    """
    if max_n < 1:
        raise ValueError("max_n must be >= 1")
    cand = tokenizer(candidate)
    ref = tokenizer(reference)
    if not cand:
        warnings.warn("empty candidate text scores 0")
        return 0.0

    log_sum = 0.0
    for n in range(1, max_n + 1):
        cand_counts = _ngram_counts(cand, n)
        total = max(len(cand) - n + 1, 0)
        ref_counts = _ngram_counts(ref, n)
        matches = sum(min(count, ref_counts[gram]) for gram, count in cand_counts.items())
        if smoothing:
            precision = (matches + 1) / (total + 1)
        else:
            if matches == 0:
                return 0.0
            precision = matches / total
        log_sum += math.log(precision)

    c, r = len(cand), len(ref)
    brevity = 1.0 if c >= r else math.exp(1.0 - r / c)
    return brevity * math.exp(log_sum / max_n)


# ---------------------------------------------------------------------------
# clinical entity/relation overlap
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RadGraphAnnotation:
    """Clinical entities (span text, label) and relations between spans."""

    entities: frozenset[tuple[str, str]]
    relations: frozenset[tuple[str, str, str]] = frozenset()

    def __post_init__(self):
        spans = {span for span, _ in self.entities}
        for head, tail, _ in self.relations:
            if head not in spans or tail not in spans:
                raise ValueError(f"relation endpoint {head!r}->{tail!r} not among entities")


def _set_f1(a: frozenset, b: frozenset, empty_value: float) -> float:
    if not a and not b:
        return empty_value
    return 2.0 * len(a & b) / (len(a) + len(b))


def radgraph_f1(
    a: RadGraphAnnotation,
    b: RadGraphAnnotation,
    entity_weight: float = 0.5,
    empty_matches_as_one: bool = True,
) -> float:
    """Weighted mean of exact-match entity F1 and relation F1.

    An empty-vs-empty component counts as 1 by default (switchable to 0).
    """
    empty = 1.0 if empty_matches_as_one else 0.0
    f1_entities = _set_f1(a.entities, b.entities, empty)
    f1_relations = _set_f1(a.relations, b.relations, empty)
    return entity_weight * f1_entities + (1.0 - entity_weight) * f1_relations


def load_lexicon(path: str | Path) -> dict[str, str]:
    """Term -> entity label map from a two-column TSV."""
    lexicon: dict[str, str] = {}
    with open(path, encoding="utf-8") as handle:
        for row in csv.reader(handle, delimiter="\t"):
            if len(row) >= 2 and row[0].strip():
                lexicon[row[0].strip().lower()] = row[1].strip()
    return lexicon


def extract_radgraph_stub(
    report_text: str,
    lexicon: dict[str, str],
    relation_window: int = 2,
) -> RadGraphAnnotation:
    """Dictionary-match stand-in for a neural entity/relation extractor.

    Longest lexicon term wins at each position; consecutive mentions at most
    ``relation_window`` tokens apart are linked with an adjacency relation.
    """
    if not lexicon:
        raise ValueError("lexicon is empty")
    terms = {tuple(tokenize(term)): (term, label) for term, label in lexicon.items()}
    max_len = max(len(t) for t in terms)

    tokens = tokenize(report_text)
    mentions: list[tuple[int, int, str, str]] = []  # (start, end, span, label)
    i = 0
    while i < len(tokens):
        matched = False
        for length in range(min(max_len, len(tokens) - i), 0, -1):
            key = tuple(tokens[i:i + length])
            if key in terms:
                span, label = terms[key]
                mentions.append((i, i + length, span, label))
                i += length
                matched = True
                break
        if not matched:
            i += 1

    entities = frozenset((span, label) for _, _, span, label in mentions)
    relations = set()
    for prev, cur in zip(mentions, mentions[1:]):
        gap = cur[0] - prev[1]
        if gap <= relation_window and prev[2] != cur[2]:
            relations.add((prev[2], cur[2], "adjacent_to"))
    return RadGraphAnnotation(entities=entities, relations=frozenset(relations))


# ---------------------------------------------------------------------------
# pathology indicator vectors
# ---------------------------------------------------------------------------

PATHOLOGIES = (
    "enlarged_cardiomediastinum",
    "cardiomegaly",
    "lung_opacity",
    "lung_lesion",
    "edema",
    "consolidation",
    "pneumonia",
    "atelectasis",
    "pneumothorax",
    "pleural_effusion",
    "pleural_other",
    "fracture",
    "support_devices",
    "no_finding",
)

_PATHOLOGY_KEYWORDS: dict[str, tuple[str, ...]] = {
    "enlarged_cardiomediastinum": ("cardiomediastinal enlargement", "widened mediastinum"),
    "cardiomegaly": ("cardiomegaly", "enlarged heart", "heart is enlarged", "cardiac enlargement"),
    "lung_opacity": ("opacity", "opacities", "airspace disease"),
    "lung_lesion": ("nodule", "mass", "lesion"),
    "edema": ("edema", "vascular congestion"),
    "consolidation": ("consolidation",),
    "pneumonia": ("pneumonia", "infiltrate"),
    "atelectasis": ("atelectasis", "atelectatic"),
    "pneumothorax": ("pneumothorax",),
    "pleural_effusion": ("pleural effusion", "effusion",),
    "pleural_other": ("pleural thickening", "pleural scarring"),
    "fracture": ("fracture",),
    "support_devices": ("pacemaker", "catheter", "tube", "sternotomy"),
}

_NEGATIONS = ("no", "without", "negative", "free", "resolved")


def label_pathologies(text: str) -> np.ndarray:
    """Keyword-rule stand-in for the external pathology labeler.

    Indicator vector over the 14 pathology columns; a crude negation window
    suppresses mentions shortly preceded by "no"/"without"/etc.
    """
    tokens = tokenize(text)
    joined = " ".join(tokens)
    vector = np.zeros(len(PATHOLOGIES))
    for idx, name in enumerate(PATHOLOGIES[:-1]):
        for keyword in _PATHOLOGY_KEYWORDS[name]:
            for match in re.finditer(r"\b" + re.escape(keyword) + r"\b", joined):
                prefix = joined[:match.start()].split()
                if any(tok in _NEGATIONS for tok in prefix[-4:]):
                    continue
                vector[idx] = 1.0
                break
            if vector[idx]:
                break
    if not vector.any():
        vector[PATHOLOGIES.index("no_finding")] = 1.0
    return vector


def chexbert_similarity(a, b) -> float:
    """Cosine similarity between two 14-entry pathology indicator vectors."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != (len(PATHOLOGIES),) or b.shape != (len(PATHOLOGIES),):
        raise ValueError(f"pathology vectors must have length {len(PATHOLOGIES)}")
    norm_a = np.linalg.norm(a)
    norm_b = np.linalg.norm(b)
    if norm_a == 0.0 or norm_b == 0.0:
        warnings.warn("zero pathology vector; similarity defined as 0")
        return 0.0
    return float(a @ b / (norm_a * norm_b))


# ---------------------------------------------------------------------------
# embedding-based similarity
# ---------------------------------------------------------------------------

def embedding_similarity(candidate: str, reference: str, encoder) -> float:
    """Greedy token-level cosine matching with F1 aggregation.

    Each candidate token is matched to its most similar reference token
    (precision side) and vice versa (recall side).
    """
    cand_tokens = tokenize(candidate)
    ref_tokens = tokenize(reference)
    if not cand_tokens or not ref_tokens:
        warnings.warn("empty text in embedding similarity scores 0")
        return 0.0
    cand_vecs = encoder.encode_tokens(cand_tokens)
    ref_vecs = encoder.encode_tokens(ref_tokens)

    def _normalize(vectors: np.ndarray) -> np.ndarray:
        norms = np.linalg.norm(vectors, axis=1, keepdims=True)
        norms[norms == 0.0] = 1.0
        return vectors / norms

    sim = _normalize(cand_vecs) @ _normalize(ref_vecs).T
    precision = float(sim.max(axis=1).mean())
    recall = float(sim.max(axis=0).mean())
    if precision + recall <= 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


# ---------------------------------------------------------------------------
# composite lower-is-better score
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RadCliqCoefficients:
    """Linear weights for the composite error estimate; lower is better.

    The defaults (1, -1, 0) are placeholders that preserve orientation:
    higher text/graph overlap pushes the composite down. Calibrate against an
    annotated corpus via `calibrate_radcliq` for meaningful magnitudes.
    """

    weight_bleu2: float = 1.0
    weight_radgraph: float = -1.0
    intercept: float = 0.0
    orientation: str = field(default="lower_better", init=False)


def radcliq(bleu2: float, radgraph_score: float, coeffs: RadCliqCoefficients) -> float:
    return coeffs.weight_bleu2 * bleu2 + coeffs.weight_radgraph * radgraph_score + coeffs.intercept


def calibrate_radcliq(
    bleu2_scores,
    radgraph_scores,
    error_counts,
) -> RadCliqCoefficients:
    """Least-squares fit of the composite weights against observed error counts."""
    bleu2_scores = np.asarray(bleu2_scores, dtype=float)
    radgraph_scores = np.asarray(radgraph_scores, dtype=float)
    error_counts = np.asarray(error_counts, dtype=float)
    if not (len(bleu2_scores) == len(radgraph_scores) == len(error_counts)):
        raise ValueError("calibration inputs must share length")
    design = np.column_stack([bleu2_scores, radgraph_scores, np.ones(len(bleu2_scores))])
    coef, *_ = np.linalg.lstsq(design, error_counts, rcond=None)
    out = RadCliqCoefficients(weight_bleu2=float(coef[0]), weight_radgraph=float(coef[1]),
                              intercept=float(coef[2]))
    return out


# ---------------------------------------------------------------------------
# packed batch scoring
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PackedReports:
    """CSR-packed per-report features for kernel-driven pairwise scoring."""

    token_lengths: np.ndarray
    uni_ids: np.ndarray
    uni_counts: np.ndarray
    uni_indptr: np.ndarray
    bi_ids: np.ndarray
    bi_counts: np.ndarray
    bi_indptr: np.ndarray
    ent_ids: np.ndarray
    ent_indptr: np.ndarray
    rel_ids: np.ndarray
    rel_indptr: np.ndarray


def _pack_counted(count_maps: list[Counter]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    vocab: dict = {}
    ids_rows, cnt_rows = [], []
    for counts in count_maps:
        pairs = []
        for key, count in counts.items():
            idx = vocab.setdefault(key, len(vocab))
            pairs.append((idx, float(count)))
        pairs.sort()
        ids_rows.append([p[0] for p in pairs])
        cnt_rows.append([p[1] for p in pairs])
    indptr = np.zeros(len(count_maps) + 1, dtype=np.int64)
    for i, row in enumerate(ids_rows):
        indptr[i + 1] = indptr[i] + len(row)
    ids = np.fromiter((v for row in ids_rows for v in row), dtype=np.int64, count=int(indptr[-1]))
    cnts = np.fromiter((v for row in cnt_rows for v in row), dtype=np.float64, count=int(indptr[-1]))
    return ids, cnts, indptr


def pack_reports(texts: list[str], annotations: list[RadGraphAnnotation]) -> PackedReports:
    if len(texts) != len(annotations):
        raise ValueError("texts and annotations must align")
    token_lists = [tokenize(t) for t in texts]
    uni = _pack_counted([Counter(toks) for toks in token_lists])
    bi = _pack_counted([_ngram_counts(toks, 2) for toks in token_lists])
    ent = _pack_counted([Counter(dict.fromkeys(a.entities, 1)) for a in annotations])
    rel = _pack_counted([Counter(dict.fromkeys(a.relations, 1)) for a in annotations])
    return PackedReports(
        token_lengths=np.array([len(t) for t in token_lists], dtype=np.int64),
        uni_ids=uni[0], uni_counts=uni[1], uni_indptr=uni[2],
        bi_ids=bi[0], bi_counts=bi[1], bi_indptr=bi[2],
        ent_ids=ent[0], ent_indptr=ent[2],
        rel_ids=rel[0], rel_indptr=rel[2],
    )


def pairwise_bleu2(packed: PackedReports, src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """BLEU-2 of dst (candidate) against src (reference) for each index pair."""
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    m1 = _kernels.pair_match_counts(packed.uni_ids, packed.uni_counts, packed.uni_indptr, src, dst)
    m2 = _kernels.pair_match_counts(packed.bi_ids, packed.bi_counts, packed.bi_indptr, src, dst)
    c = packed.token_lengths[dst].astype(float)
    r = packed.token_lengths[src].astype(float)
    t1 = np.maximum(c, 0.0)
    t2 = np.maximum(c - 1.0, 0.0)
    out = np.zeros(len(src))
    ok = (m1 > 0) & (m2 > 0) & (t1 > 0) & (t2 > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        logp = 0.5 * (np.log(m1 / t1) + np.log(m2 / t2))
        brevity = np.where(c >= r, 1.0, np.exp(1.0 - r / np.maximum(c, 1e-300)))
    out[ok] = (brevity * np.exp(logp))[ok]
    return out


def pairwise_radgraph_f1(
    packed: PackedReports,
    src: np.ndarray,
    dst: np.ndarray,
    entity_weight: float = 0.5,
    empty_matches_as_one: bool = True,
) -> np.ndarray:
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    empty = 1.0 if empty_matches_as_one else 0.0

    def component(ids, indptr):
        ones = np.ones_like(ids, dtype=np.float64)
        matches = _kernels.pair_match_counts(ids, ones, indptr, src, dst)
        sizes = np.diff(indptr).astype(float)
        total = sizes[src] + sizes[dst]
        f1 = np.full(len(src), empty)
        nz = total > 0
        f1[nz] = 2.0 * matches[nz] / total[nz]
        return f1

    f1_ent = component(packed.ent_ids, packed.ent_indptr)
    f1_rel = component(packed.rel_ids, packed.rel_indptr)
    return entity_weight * f1_ent + (1.0 - entity_weight) * f1_rel

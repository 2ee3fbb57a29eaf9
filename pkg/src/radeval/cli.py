"""Command-line pipeline: curate, cluster, pairs, split, train, score,
correlate, sigtest. Every command is driven by one YAML config (plus a few
flag overrides), writes its outputs under the run directory, and records a
manifest with the seeds and output hashes. Exit codes: 0 ok, 1 computation
error, 2 usage or I/O error."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import analysis as ana
from . import clustering, corpus, pairgen, simscore
from .config import PipelineConfig, load_config
from .errors import ConfigError, IngestionError, SchemaError
from .estimator import (
    PairExample,
    TrainingConfig,
    featurize,
    load_checkpoint,
    load_triplets_jsonl,
    radeval_score_batch,
    save_checkpoint,
    train,
)
from .pairgen import Orientation, ScoreKind


# ---------------------------------------------------------------------------
# deterministic writers and manifests
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def write_json(path: Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(65536), b""):
            digest.update(block)
    return digest.hexdigest()


def write_manifest(config: PipelineConfig, command: str, inputs: list[Path], outputs: list[Path]) -> Path:
    out_dir = config.paths.output_dir
    manifest_dir = out_dir / "manifests"
    manifest_dir.mkdir(parents=True, exist_ok=True)
    payload = {
        "command": command,
        "config_hash": config.config_hash,
        "seeds": config.seeds,
        "inputs": sorted(str(p) for p in inputs),
        "outputs": {
            str(p.relative_to(out_dir)): _sha256(p)
            for p in sorted(outputs)
        },
    }
    path = manifest_dir / f"{command}.json"
    write_json(path, payload)
    return path


def _check_inputs(*paths: Path | None) -> list[Path]:
    present = []
    for path in paths:
        if path is None:
            continue
        if not Path(path).exists():
            raise FileNotFoundError(f"required input not found: {path}")
        present.append(Path(path))
    return present


def _read_generated(path: Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        required = {"id", "ground_truth", "generated"}
        missing = required - set(reader.fieldnames or ())
        if missing:
            raise SchemaError(f"{path}: missing column(s): {', '.join(sorted(missing))}")
        return list(reader)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_curate(config: PipelineConfig) -> int:
    inputs = _check_inputs(config.paths.reports)
    out_dir = config.paths.output_dir
    out_dir.mkdir(parents=True, exist_ok=True)

    reports = corpus.load_reports(
        config.paths.reports,
        format=config.ingest.format,
        mesh_delimiter=config.ingest.mesh_delimiter,
    )
    curated = corpus.curate_reports(reports, drop_missing_mesh1=config.ingest.drop_missing_mesh1)
    out_path = out_dir / "curated.csv"
    corpus.save_curated(curated, out_path, mesh_delimiter=config.ingest.mesh_delimiter)

    n_abnormal = sum(1 for r in curated if r.normalcy is corpus.Normalcy.ABNORMAL)
    share = 100.0 * n_abnormal / len(curated) if curated else 0.0
    print(f"curated {len(curated)} reports ({n_abnormal} abnormal, {share:.2f}%)")
    write_manifest(config, "curate", inputs, [out_path])
    return 0


def cmd_cluster(config: PipelineConfig) -> int:
    out_dir = config.paths.output_dir
    curated_path = out_dir / "curated.csv"
    inputs = _check_inputs(curated_path)

    reports = corpus.load_curated(curated_path, mesh_delimiter=config.ingest.mesh_delimiter)
    matrix = clustering.vectorize_mesh(reports, idf=config.clustering.idf)
    seed = config.clustering.seed
    chosen_k, table = clustering.select_k(
        matrix, config.clustering.k_range, seed, max_iter=config.clustering.max_iter
    )
    assignment = clustering.kmeans(matrix, chosen_k, seed, max_iter=config.clustering.max_iter)
    projection = clustering.pca_project(matrix, dims=2)

    quality_path = out_dir / "cluster_quality.csv"
    write_csv(
        quality_path,
        ["k", "calinski_harabasz", "silhouette", "inertia", "selected"],
        [
            [k, q.calinski_harabasz if q.calinski_harabasz is not None else "",
             q.silhouette if q.silhouette is not None else "", q.inertia, int(k == chosen_k)]
            for k, q in sorted(table.items())
        ],
    )
    assign_path = out_dir / "cluster_assignments.csv"
    write_csv(
        assign_path,
        ["id", "cluster"],
        [[rid, int(label)] for rid, label in zip(matrix.report_ids, assignment.labels)],
    )
    projection_path = out_dir / "cluster_projection.csv"
    write_csv(
        projection_path,
        ["id", "pc1", "pc2", "cluster"],
        [
            [rid, float(projection[i, 0]), float(projection[i, 1]), int(assignment.labels[i])]
            for i, rid in enumerate(matrix.report_ids)
        ],
    )

    print(f"selected k={chosen_k} over range {config.clustering.k_range}")
    write_manifest(config, "cluster", inputs, [quality_path, assign_path, projection_path])
    return 0


def _load_cluster_labels(path: Path) -> dict[str, int]:
    labels = {}
    with open(path, newline="", encoding="utf-8") as handle:
        for row in csv.DictReader(handle):
            labels[row["id"]] = int(row["cluster"])
    return labels


def cmd_pairs(config: PipelineConfig) -> int:
    out_dir = config.paths.output_dir
    curated_path = out_dir / "curated.csv"
    assign_path = out_dir / "cluster_assignments.csv"
    inputs = _check_inputs(curated_path, assign_path, config.paths.lexicon)

    reports = corpus.load_curated(curated_path, mesh_delimiter=config.ingest.mesh_delimiter)
    labels_by_id = _load_cluster_labels(assign_path)
    labels = [labels_by_id[r.id] for r in reports]
    lexicon = simscore.load_lexicon(config.paths.lexicon)
    coeffs = simscore.RadCliqCoefficients(
        weight_bleu2=config.pairs.radcliq_weight_bleu2,
        weight_radgraph=config.pairs.radcliq_weight_radgraph,
        intercept=config.pairs.radcliq_intercept,
    )
    score_kind = ScoreKind(config.pairs.metric)
    scored = pairgen.score_all_clusters(reports, labels, score_kind, lexicon, coeffs)

    all_path = out_dir / "pairs_all.csv"
    pairgen.write_pairs_csv(scored, all_path)

    if config.pairs.strategy == "best_match":
        selected = pairgen.build_best_match(scored)
    else:
        selected = pairgen.build_top_decile(
            scored, fraction=config.pairs.decile_fraction, scope=config.pairs.decile_scope
        )

    reports_by_id = {r.id: r for r in reports}
    corpus_jsonl = out_dir / "corpus.jsonl"
    pairgen.write_corpus_jsonl(selected, reports_by_id, corpus_jsonl)
    corpus_pairs = out_dir / "corpus_pairs.csv"
    pairgen.write_pairs_csv(selected, corpus_pairs)

    def _abnormal_share(pairs) -> float:
        if not pairs:
            return 0.0
        bad = sum(
            1 for p in pairs
            if reports_by_id[p.source_id].normalcy is corpus.Normalcy.ABNORMAL
        )
        return 100.0 * bad / len(pairs)

    overlap_corpus = pairgen.mesh_overlap_stats(selected, reports_by_id)
    overlap_all = pairgen.mesh_overlap_stats(scored, reports_by_id)

    summary_path = out_dir / "pairs_summary.csv"
    write_csv(
        summary_path,
        ["corpus", "n_pairs", "pct_abnormal", "pct_mesh_none", "pct_mesh_one", "pct_mesh_many"],
        [
            [config.pairs.strategy, len(selected.pairs), _abnormal_share(selected.pairs),
             overlap_corpus.percentages["none"], overlap_corpus.percentages["one"],
             overlap_corpus.percentages["many"]],
            ["all_scored", len(scored), _abnormal_share(scored),
             overlap_all.percentages["none"], overlap_all.percentages["one"],
             overlap_all.percentages["many"]],
        ],
    )

    print(f"scored {len(scored)} pairs; {config.pairs.strategy} corpus keeps {len(selected.pairs)}")
    write_manifest(config, "pairs", inputs, [all_path, corpus_jsonl, corpus_pairs, summary_path])
    return 0


def cmd_split(config: PipelineConfig) -> int:
    out_dir = config.paths.output_dir
    curated_path = out_dir / "curated.csv"
    corpus_pairs = out_dir / "corpus_pairs.csv"
    inputs = _check_inputs(curated_path, corpus_pairs)

    reports = corpus.load_curated(curated_path, mesh_delimiter=config.ingest.mesh_delimiter)
    reports_by_id = {r.id: r for r in reports}
    pairs = pairgen.read_pairs_csv(corpus_pairs)
    strategy = pairgen.Strategy(config.pairs.strategy)
    unsplit = pairgen.PairCorpus(pairs=tuple(pairs), strategy=strategy)

    normalcy_by_id = (
        {r.id: r.normalcy for r in reports if r.normalcy is not None}
        if config.split.stratify else None
    )
    train_c, val_c, test_c = pairgen.split_corpus(
        unsplit,
        seed=config.split.seed,
        normalcy_by_id=normalcy_by_id,
        test_fraction=config.split.test_fraction,
        val_fraction=config.split.val_fraction,
    )

    outputs = []
    summary_rows = []
    ids = {}
    for name, part in (("train", train_c), ("validation", val_c), ("test", test_c)):
        path = out_dir / f"{name}.jsonl"
        pairgen.write_corpus_jsonl(part, reports_by_id, path)
        outputs.append(path)
        ids[name] = [pairgen.pair_key(p) for p in part.pairs]
        bad = sum(
            1 for p in part.pairs
            if reports_by_id[p.source_id].normalcy is corpus.Normalcy.ABNORMAL
        )
        share = 100.0 * bad / len(part.pairs) if part.pairs else 0.0
        summary_rows.append([name, len(part.pairs), share])

    ids_path = out_dir / "split_ids.json"
    write_json(ids_path, ids)
    summary_path = out_dir / "split_summary.csv"
    write_csv(summary_path, ["split", "n_pairs", "pct_abnormal"], summary_rows)

    print("; ".join(f"{row[0]}: {row[1]} pairs ({row[2]:.2f}% abnormal)" for row in summary_rows))
    write_manifest(config, "split", inputs, outputs + [ids_path, summary_path])
    return 0


def cmd_train(config: PipelineConfig) -> int:
    out_dir = config.paths.output_dir
    train_path = out_dir / "train.jsonl"
    val_path = out_dir / "validation.jsonl"
    inputs = _check_inputs(train_path, val_path)

    train_examples = load_triplets_jsonl(train_path)
    val_examples = load_triplets_jsonl(val_path)
    training_config = TrainingConfig(
        seed=config.training.seed,
        max_epochs=config.training.max_epochs,
        batch_size=config.training.batch_size,
        learning_rate=config.training.learning_rate,
        hidden=config.training.hidden,
        optimizer=config.training.optimizer,
        patience=config.training.patience,
    )
    score_kind = ScoreKind(config.pairs.metric)
    result = train(
        train_examples,
        val_examples,
        training_config,
        score_kind,
        encoder_id=config.training.encoder,
        pooling=config.training.pooling,
    )

    name = f"{config.pairs.strategy}-{config.training.encoder}-{score_kind.value}"
    checkpoint = dataclasses.replace(result.selected, name=name)
    checkpoint_dir = out_dir / "checkpoint"
    save_checkpoint(checkpoint, checkpoint_dir, config_hash=config.config_hash)

    log_path = out_dir / "training_log.csv"
    write_csv(
        log_path,
        ["epoch", "train_loss", "validation_tau"],
        [
            [epoch, loss, tau if tau is not None else ""]
            for epoch, (loss, tau) in enumerate(zip(result.loss_history, result.tau_history))
        ],
    )

    best_tau = result.tau_history[checkpoint.epoch]
    shown = f"{best_tau:.4f}" if best_tau is not None else "undefined"
    print(
        f"trained {len(result.loss_history)} epochs; selected epoch {checkpoint.epoch} "
        f"({result.selected_by}, validation tau {shown})"
    )
    write_manifest(
        config, "train", inputs,
        [checkpoint_dir / "weights.npy", checkpoint_dir / "checkpoint.json", log_path],
    )
    return 0


def cmd_score(config: PipelineConfig, checkpoint_dir: Path | None = None) -> int:
    out_dir = config.paths.output_dir
    checkpoint_dir = checkpoint_dir or (out_dir / "checkpoint")
    inputs = _check_inputs(
        checkpoint_dir / "checkpoint.json", checkpoint_dir / "weights.npy", config.paths.generated
    )

    checkpoint = load_checkpoint(checkpoint_dir)
    rows = _read_generated(config.paths.generated)
    scores = radeval_score_batch(
        checkpoint, [(row["ground_truth"], row["generated"]) for row in rows]
    )

    scores_path = out_dir / "scores.csv"
    write_csv(
        scores_path,
        ["id", "radeval", "orientation"],
        [
            [row["id"], float(score), checkpoint.orientation.value]
            for row, score in zip(rows, scores)
        ],
    )
    print(f"scored {len(rows)} report pairs with checkpoint {checkpoint.name or checkpoint_dir}")
    write_manifest(config, "score", inputs, [scores_path])
    return 0


_METRIC_ORIENTATIONS = {
    "bleu2": Orientation.HIGHER_BETTER,
    "bleu4": Orientation.HIGHER_BETTER,
    "embedding": Orientation.HIGHER_BETTER,
    "chexbert": Orientation.HIGHER_BETTER,
    "radgraph_f1": Orientation.HIGHER_BETTER,
    "radcliq": Orientation.LOWER_BETTER,
}


def _metric_table(config: PipelineConfig, rows: list[dict]) -> dict[str, np.ndarray]:
    from .estimator import get_encoder

    lexicon = simscore.load_lexicon(config.paths.lexicon)
    coeffs = simscore.RadCliqCoefficients(
        weight_bleu2=config.pairs.radcliq_weight_bleu2,
        weight_radgraph=config.pairs.radcliq_weight_radgraph,
        intercept=config.pairs.radcliq_intercept,
    )
    encoder = get_encoder(config.training.encoder)

    columns: dict[str, list[float]] = {
        name: [] for name in ("bleu2", "bleu4", "embedding", "chexbert", "radgraph_f1", "radcliq")
    }
    for row in rows:
        reference, candidate = row["ground_truth"], row["generated"]
        b2 = simscore.bleu(candidate, reference, max_n=2)
        columns["bleu2"].append(b2)
        columns["bleu4"].append(simscore.bleu(candidate, reference, max_n=4))
        columns["embedding"].append(simscore.embedding_similarity(candidate, reference, encoder))
        columns["chexbert"].append(simscore.chexbert_similarity(
            simscore.label_pathologies(candidate), simscore.label_pathologies(reference)
        ))
        rg = simscore.radgraph_f1(
            simscore.extract_radgraph_stub(candidate, lexicon),
            simscore.extract_radgraph_stub(reference, lexicon),
        )
        columns["radgraph_f1"].append(rg)
        columns["radcliq"].append(simscore.radcliq(b2, rg, coeffs))
    return {name: np.array(vals) for name, vals in columns.items()}


def _read_scores_csv(path: Path) -> tuple[dict[str, float], Orientation]:
    scores = {}
    orientation = Orientation.LOWER_BETTER
    with open(path, newline="", encoding="utf-8") as handle:
        for row in csv.DictReader(handle):
            scores[row["id"]] = float(row["radeval"])
            orientation = Orientation(row["orientation"])
    return scores, orientation


def cmd_correlate(config: PipelineConfig) -> int:
    out_dir = config.paths.output_dir
    scores_path = out_dir / "scores.csv"
    inputs = _check_inputs(config.paths.generated, config.paths.lexicon, scores_path)

    rows = _read_generated(config.paths.generated)
    columns = _metric_table(config, rows)
    radeval_by_id, radeval_orientation = _read_scores_csv(scores_path)
    missing = [row["id"] for row in rows if row["id"] not in radeval_by_id]
    if missing:
        raise ValueError(f"scores.csv misaligned with generated file; missing ids: {missing[:5]}")
    radeval_column = np.array([radeval_by_id[row["id"]] for row in rows])

    metric_scores_path = out_dir / "metric_scores.csv"
    metric_names = list(columns)
    write_csv(
        metric_scores_path,
        ["id"] + metric_names + ["radeval"],
        [
            [row["id"]] + [float(columns[name][i]) for name in metric_names]
            + [float(radeval_column[i])]
            for i, row in enumerate(rows)
        ],
    )

    trained_on = config.pairs.metric
    table = ana.metric_correlation_table(columns, radeval_column, trained_on=trained_on)
    correlation_path = out_dir / "correlation_table.csv"
    write_csv(
        correlation_path,
        ["metric", "spearman_rho", "pct", "n", "trained_on"],
        [
            [row.name,
             row.result.value if row.result.value is not None else "",
             f"{row.result.percent:.2f}" if row.result.percent is not None else "",
             row.result.n, int(row.is_training_target)]
            for row in table
        ],
    )
    outputs = [metric_scores_path, correlation_path]

    if config.paths.annotations and Path(config.paths.annotations).exists():
        records = ana.read_annotations_csv(config.paths.annotations)
        aggregated = ana.aggregate_annotations(records)
        ids = [row["id"] for row in rows if row["id"] in aggregated]
        if len(ids) >= 3:
            idx = [i for i, row in enumerate(rows) if row["id"] in aggregated]
            total = np.array([aggregated[i_].mean_total for i_ in ids])
            significant = np.array([aggregated[i_].mean_significant for i_ in ids])
            noisy = ana.filter_noisy(aggregated, config.analysis.noisy_threshold)

            all_columns = dict(columns)
            all_columns["radeval"] = radeval_column
            orientations = dict(_METRIC_ORIENTATIONS)
            orientations["radeval"] = radeval_orientation

            human_rows = []
            for subset_name, keep in (
                ("complete", ids),
                ("noisy", [i_ for i_ in ids if i_ in noisy]),
            ):
                keep_idx = [ids.index(i_) for i_ in keep]
                if len(keep_idx) < 3:
                    continue
                for name in list(all_columns):
                    column = np.asarray(all_columns[name])[idx][keep_idx]
                    oriented = ana.orient_scores(column, orientations[name])
                    rho_total = ana.spearman(oriented, total[keep_idx], orientation_applied=True)
                    rho_sig = ana.spearman(oriented, significant[keep_idx], orientation_applied=True)
                    human_rows.append([
                        subset_name, name,
                        rho_total.value if rho_total.value is not None else "",
                        f"{rho_total.percent:.2f}" if rho_total.percent is not None else "",
                        rho_sig.value if rho_sig.value is not None else "",
                        f"{rho_sig.percent:.2f}" if rho_sig.percent is not None else "",
                        len(keep_idx),
                    ])
            human_path = out_dir / "human_correlation.csv"
            write_csv(
                human_path,
                ["subset", "metric", "rho_total", "pct_total", "rho_significant", "pct_significant", "n"],
                human_rows,
            )
            outputs.append(human_path)
            inputs.append(Path(config.paths.annotations))

            if any("oracle" in row and row["oracle"] for row in rows):
                oracle_rows = []
                labels = [rows[i]["oracle"] for i in idx]
                for name in ("radcliq", "radeval"):
                    column = np.asarray(all_columns[name])[idx]
                    oriented = ana.orient_scores(column, orientations[name])
                    by_oracle_total = ana.oracle_group_correlation(oriented, total, labels)
                    by_oracle_sig = ana.oracle_group_correlation(oriented, significant, labels)
                    for oracle in sorted(by_oracle_total):
                        rho_t = by_oracle_total[oracle]
                        rho_s = by_oracle_sig[oracle]
                        oracle_rows.append([
                            oracle, name,
                            rho_t.value if rho_t.value is not None else "",
                            f"{rho_t.percent:.2f}" if rho_t.percent is not None else "",
                            rho_s.value if rho_s.value is not None else "",
                            rho_t.n,
                        ])
                oracle_path = out_dir / "oracle_correlation.csv"
                write_csv(
                    oracle_path,
                    ["oracle", "metric", "rho_total", "pct_total", "rho_significant", "n"],
                    oracle_rows,
                )
                outputs.append(oracle_path)

    print(f"correlated {len(columns)} metric columns against the estimator scores")
    write_manifest(config, "correlate", inputs, outputs)
    return 0


def cmd_sigtest(config: PipelineConfig) -> int:
    out_dir = config.paths.output_dir
    overrides = config.raw.get("analysis", {})
    explicit = all(key in overrides for key in ("r_jk", "r_jh", "r_kh", "n"))

    if explicit:
        inputs: list[Path] = []
        r_jk, r_jh, r_kh = (float(overrides[k]) for k in ("r_jk", "r_jh", "r_kh"))
        n = int(overrides["n"])
    else:
        metric_scores_path = out_dir / "metric_scores.csv"
        inputs = _check_inputs(metric_scores_path, config.paths.annotations)
        with open(metric_scores_path, newline="", encoding="utf-8") as handle:
            metric_rows = list(csv.DictReader(handle))
        records = ana.read_annotations_csv(config.paths.annotations)
        aggregated = ana.aggregate_annotations(records)
        joined = [row for row in metric_rows if row["id"] in aggregated]
        if len(joined) < 4:
            raise ValueError(f"only {len(joined)} rows join scores with annotations; need >= 4")

        human = np.array([aggregated[row["id"]].mean_total for row in joined])
        metric_k = config.analysis.metric_k
        metric_h = config.analysis.metric_h
        orientations = dict(_METRIC_ORIENTATIONS)
        orientations["radeval"] = Orientation.LOWER_BETTER
        scores_path = out_dir / "scores.csv"
        if scores_path.exists():
            _, orientations["radeval"] = _read_scores_csv(scores_path)

        def column(name: str) -> np.ndarray:
            if name not in joined[0]:
                raise ValueError(f"metric column {name!r} not present in metric_scores.csv")
            values = np.array([float(row[name]) for row in joined])
            return ana.orient_scores(values, orientations.get(name, Orientation.LOWER_BETTER))

        r_jk, r_jh, r_kh, n = ana.correlations_from_columns(human, column(metric_k), column(metric_h))

    test_input = ana.OverlapTestInput(
        r_jk=r_jk, r_jh=r_jh, r_kh=r_kh, n=n,
        alpha=config.analysis.alpha,
        alternative=config.analysis.alternative,
    )
    result = ana.dependent_overlapping_test(test_input, variant=config.analysis.test_variant)

    payload = {
        "variant": result.variant,
        "statistic": result.statistic,
        "p": result.p_value,
        "alpha": config.analysis.alpha,
        "reject": result.reject,
        "alternative": config.analysis.alternative,
        "r_jk": r_jk,
        "r_jh": r_jh,
        "r_kh": r_kh,
        "n": n,
    }
    sig_path = out_dir / "significance.json"
    out_dir.mkdir(parents=True, exist_ok=True)
    write_json(sig_path, payload)
    print(
        f"{result.variant}: statistic {result.statistic:.4f}, p {result.p_value:.4f} "
        f"({'reject' if result.reject else 'retain'} at alpha {config.analysis.alpha})"
    )
    write_manifest(config, "sigtest", inputs, [sig_path])
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _apply_overrides(config: PipelineConfig, args: argparse.Namespace) -> PipelineConfig:
    if getattr(args, "output_dir", None):
        config = dataclasses.replace(
            config, paths=dataclasses.replace(config.paths, output_dir=Path(args.output_dir))
        )
    if getattr(args, "k_range", None):
        lo, hi = args.k_range
        config = dataclasses.replace(
            config, clustering=dataclasses.replace(config.clustering, k_range=(lo, hi))
        )
    if getattr(args, "seed", None) is not None:
        command = args.command
        if command == "cluster":
            config = dataclasses.replace(
                config, clustering=dataclasses.replace(config.clustering, seed=args.seed)
            )
        elif command == "split":
            config = dataclasses.replace(
                config, split=dataclasses.replace(config.split, seed=args.seed)
            )
        elif command == "train":
            config = dataclasses.replace(
                config, training=dataclasses.replace(config.training, seed=args.seed)
            )
    if getattr(args, "strategy", None):
        config = dataclasses.replace(
            config, pairs=dataclasses.replace(config.pairs, strategy=args.strategy)
        )
    if getattr(args, "metric", None):
        config = dataclasses.replace(
            config, pairs=dataclasses.replace(config.pairs, metric=args.metric)
        )
    if getattr(args, "epochs", None):
        config = dataclasses.replace(
            config, training=dataclasses.replace(config.training, max_epochs=args.epochs)
        )
    if getattr(args, "variant", None):
        config = dataclasses.replace(
            config, analysis=dataclasses.replace(config.analysis, test_variant=args.variant)
        )
    if getattr(args, "alpha", None):
        config = dataclasses.replace(
            config, analysis=dataclasses.replace(config.analysis, alpha=args.alpha)
        )
    return config


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="radeval",
        description="Report-pair curation, estimator training, and metric validation pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="pipeline YAML")
        p.add_argument("--output-dir", help="override paths.output_dir")
        return p

    add("curate", "clean MeSH labels and classify normalcy")
    cluster_p = add("cluster", "vectorize MeSH, pick k, emit quality and projection tables")
    cluster_p.add_argument("--k-range", nargs=2, type=int, metavar=("LO", "HI"))
    cluster_p.add_argument("--seed", type=int)

    pairs_p = add("pairs", "score cluster cross-products and build the pair corpus")
    pairs_p.add_argument("--strategy", choices=["best_match", "top_decile"])
    pairs_p.add_argument("--metric", choices=["radcliq", "radgraph_f1"])

    split_p = add("split", "stratified train/validation/test split")
    split_p.add_argument("--seed", type=int)

    train_p = add("train", "train the estimator head and select the best-tau epoch")
    train_p.add_argument("--epochs", type=int)
    train_p.add_argument("--seed", type=int)

    score_p = add("score", "score generated reports with a trained checkpoint")
    score_p.add_argument("--checkpoint", help="checkpoint directory (default: <output_dir>/checkpoint)")

    add("correlate", "correlation tables against classical metrics and annotations")

    sig_p = add("sigtest", "dependent-overlapping correlation significance test")
    sig_p.add_argument("--variant", choices=["olkin_hendrickson", "hotelling_williams"])
    sig_p.add_argument("--alpha", type=float)

    return parser


_COMMANDS = {
    "curate": cmd_curate,
    "cluster": cmd_cluster,
    "pairs": cmd_pairs,
    "split": cmd_split,
    "train": cmd_train,
    "correlate": cmd_correlate,
    "sigtest": cmd_sigtest,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
        config = _apply_overrides(config, args)
        if args.command == "score":
            checkpoint = Path(args.checkpoint) if args.checkpoint else None
            return cmd_score(config, checkpoint_dir=checkpoint)
        return _COMMANDS[args.command](config)
    except (ConfigError, SchemaError, IngestionError, FileNotFoundError,
            IsADirectoryError, NotADirectoryError, PermissionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, RuntimeError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

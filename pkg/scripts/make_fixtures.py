"""Regenerate the shipped synthetic fixtures under fixtures/.

Everything is seeded; rerunning produces byte-identical files.
"""

from __future__ import annotations

import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from radeval.synthetic import write_fixture_files  # noqa: E402

PIPELINE_YAML = """\
paths:
  reports: reports_200.csv
  lexicon: lexicon.tsv
  generated: generated_100.csv
  annotations: annotations_100.csv
  output_dir: ../runs/fixture-demo

ingest:
  format: csv
  mesh_delimiter: ","

clustering:
  seed: 13
  k_range: [2, 8]
  idf: true

# composite weights fitted on the annotation fixture via
# radeval.simscore.calibrate_radcliq (placeholder defaults are 1, -1, 0)
pairs:
  strategy: best_match
  metric: radcliq
  radcliq_weight_bleu2: -4.7
  radcliq_weight_radgraph: -1.0
  radcliq_intercept: 5.5

split:
  seed: 17
  test_fraction: 0.2
  val_fraction: 0.2
  stratify: true

training:
  seed: 29
  encoder: toy
  pooling: mean
  max_epochs: 40
  batch_size: 32
  learning_rate: 1.0e-3

analysis:
  alpha: 0.05
  test_variant: olkin_hendrickson
  alternative: one_sided_jh_greater
  noisy_threshold: 3
  metric_k: radcliq
  metric_h: radeval
"""


def main() -> None:
    fixtures = ROOT / "fixtures"
    paths = write_fixture_files(fixtures, n_reports=200, seed=11)
    config_path = fixtures / "pipeline.yaml"
    config_path.write_text(PIPELINE_YAML, encoding="utf-8")
    paths["pipeline"] = config_path
    for name, path in sorted(paths.items()):
        print(f"{name}: {path.relative_to(ROOT)}")


if __name__ == "__main__":
    main()

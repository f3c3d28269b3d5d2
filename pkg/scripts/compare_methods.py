"""Evaluate every enhancement method and both saturation classifiers on one split.

Writes one JSON report per method plus a summary table (CSV and Markdown) to
--out-dir. Feature tables are cached so interrupted runs resume cheaply.

    python scripts/compare_methods.py --train-manifest train.csv \
        --test-manifest test.csv --out-dir results --jobs 4
"""
import argparse
import csv
import logging
import sys
from pathlib import Path

from smokefc.evaluation import PipelineConfig, evaluate, load_manifest

SVM_METHODS = ["none", "imsharp", "bf", "gf", "wls", "bfwls_avg", "fc_max", "fc_avg"]
SAT_METHODS = ["san", "spa"]
LABELS = {"none": "RGB", "imsharp": "IMSHARP", "bf": "BF", "gf": "GF", "wls": "WLS",
          "bfwls_avg": "BFWLS_AVG", "fc_max": "FC_MAX", "fc_avg": "FC_AVG", "san": "SAN", "spa": "SPA"}


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--train-manifest", required=True)
    p.add_argument("--test-manifest", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--methods", nargs="+", default=SVM_METHODS + SAT_METHODS, choices=SVM_METHODS + SAT_METHODS)
    p.add_argument("--frame-size", type=int, nargs=2, default=[427, 240], metavar=("W", "H"))
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--c", type=float, default=1e4)
    a = p.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    out = Path(a.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    train = load_manifest(a.train_manifest)
    test = load_manifest(a.test_manifest)
    rows = []
    for method in a.methods:
        logging.info("evaluating %s", method)
        config = PipelineConfig(method=method, frame_size=tuple(a.frame_size), c=a.c, jobs=a.jobs)
        report = evaluate(train if method in SVM_METHODS else None, test, config, cache_dir=out / "cache")
        (out / f"report_{method}.json").write_text(report.to_json())
        rows.append((LABELS[method], report.accuracy, report.f1, report.auc, report.eer))

    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", "accuracy", "f1", "auc", "eer"])
        w.writerows([r[0], *(f"{v:.4f}" for v in r[1:])] for r in rows)
    lines = ["| method | accuracy | F1 | AUC | EER |", "|---|---|---|---|---|"]
    lines += [f"| {r[0]} | {r[1]:.2f} | {r[2]:.2f} | {r[3]:.3f} | {r[4]:.3f} |" for r in rows]
    (out / "summary.md").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return 0


if __name__ == "__main__":
    sys.exit(main())

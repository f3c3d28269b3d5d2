"""Command-line entry point: ``smokefc <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 convergence error.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import replace

import numpy as np

from .baselines import BaselineParams, EnhanceParams, Method, enhance_with
from .errors import ConvergenceError, SmokeFCError
from .evaluation import (
    FRAME_SIZE,
    SATURATION_METHODS,
    EvalReport,
    PipelineConfig,
    evaluate,
    extract_dataset_features,
    load_manifest,
    read_feature_csv,
    roc_rows,
    write_feature_csv,
)
from .fc import FcParams
from .features import GmLogParams
from .image import read_image, write_png
from .saturation import SatParams
from .svm import LinearModel, decision_score, train_detailed
from .wls import WlsParams

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_CONVERGENCE = 0, 1, 2, 3
ENHANCE_METHODS = [m.value for m in Method]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_enhance_args(p):
    g = p.add_argument_group("enhancement parameters")
    g.add_argument("--lambda1", type=float, default=0.125)
    g.add_argument("--lambda2", type=float, default=0.5)
    g.add_argument("--wls-alpha", type=float, default=1.2)
    g.add_argument("--wls-eps", type=float, default=1e-4)
    g.add_argument("--solver-tol", type=float, default=1e-6)
    g.add_argument("--solver-max-iter", type=int, default=1000)
    g.add_argument("--wls-lambda", type=float, default=1.0, help="lambda of the plain WLS / BFWLS_AVG baselines")
    g.add_argument("--bf-sigma-s", type=float, default=5.0)
    g.add_argument("--bf-sigma-r", type=float, default=0.1)
    g.add_argument("--gf-radius", type=int, default=8)
    g.add_argument("--gf-eps", type=float, default=0.04)
    g.add_argument("--sharp-sigma", type=float, default=1.0)
    g.add_argument("--sharp-amount", type=float, default=0.8)
    g.add_argument("--detail-boost", type=float, default=2.0)


def _add_pipeline_args(p):
    _add_enhance_args(p)
    p.add_argument("--sigma", type=float, default=0.5, help="GM/LoG Gaussian scale")
    p.add_argument("--bins", type=int, default=10)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--cache-dir", default=None, help="directory for cached feature tables")
    _add_frame_size(p)


def _add_frame_size(p):
    p.add_argument("--frame-size", type=int, nargs=2, metavar=("W", "H"), default=list(FRAME_SIZE),
                   help="frames are resized to this before processing")


def _enhance_params(a) -> EnhanceParams:
    wls = WlsParams(alpha=a.wls_alpha, eps_w=a.wls_eps, solver_tol=a.solver_tol, solver_max_iter=a.solver_max_iter)
    fc = FcParams(lambda1=a.lambda1, lambda2=a.lambda2, wls=wls)
    base = BaselineParams(
        bf_sigma_s=a.bf_sigma_s,
        bf_sigma_r=a.bf_sigma_r,
        gf_radius=a.gf_radius,
        gf_eps=a.gf_eps,
        sharp_amount=a.sharp_amount,
        sharp_sigma=a.sharp_sigma,
        detail_boost=a.detail_boost,
        wls_lambda=a.wls_lambda,
    )
    return EnhanceParams(baseline=base, fc=fc)


def _pipeline_config(a, method) -> PipelineConfig:
    return PipelineConfig(
        method=method,
        enhance=_enhance_params(a),
        gmlog=GmLogParams(sigma=a.sigma, bins=a.bins),
        frame_size=tuple(a.frame_size),
        c=getattr(a, "c", 1e4),
        solver=getattr(a, "solver", "ipm"),
        jobs=a.jobs,
    )


def cmd_enhance(a):
    img = read_image(a.input)
    write_png(enhance_with(img, a.method, _enhance_params(a)), a.out)


def cmd_features(a):
    table = extract_dataset_features(load_manifest(a.manifest), _pipeline_config(a, a.method), a.cache_dir)
    write_feature_csv(table, a.out)
    if table.failures:
        print(f"{len(table.failures)} image(s) skipped", file=sys.stderr)


def cmd_train(a):
    table = read_feature_csv(a.features)
    fit = train_detailed(table.X, table.labels, c=a.c, solver=a.solver)
    fit.model.save(a.model)


def cmd_predict(a):
    model = LinearModel.load(a.model)
    table = read_feature_csv(a.features)
    scores = np.atleast_1d(decision_score(model, table.X))
    with open(a.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["image_path", "label", "score", "predicted"])
        for p, lab, s in zip(table.paths, table.labels, scores):
            w.writerow([p, int(lab), repr(float(s)), int(s > 0)])


def _write_report(report: EvalReport, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(report.to_json())


def cmd_evaluate(a):
    config = _pipeline_config(a, a.method)
    if a.method in SATURATION_METHODS:
        config = replace(config, sat=SatParams(t_c=a.tc))
    train = load_manifest(a.train_manifest) if a.train_manifest else None
    report = evaluate(train, load_manifest(a.test_manifest), config, a.cache_dir)
    _write_report(report, a.report)
    print(f"{report.method}: accuracy={report.accuracy:.4f} f1={report.f1:.4f} auc={report.auc:.4f} eer={report.eer:.4f}")


def cmd_baseline(a):
    config = PipelineConfig(method=a.method, sat=SatParams(t_c=a.tc), frame_size=tuple(a.frame_size), jobs=a.jobs)
    report = evaluate(None, load_manifest(a.manifest), config)
    _write_report(report, a.report)
    print(f"{report.method}: accuracy={report.accuracy:.4f} f1={report.f1:.4f} auc={report.auc:.4f} eer={report.eer:.4f}")


def cmd_roc(a):
    with open(a.report, encoding="utf-8") as fh:
        report = EvalReport.from_json(fh.read())
    with open(a.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["fpr", "tpr", "threshold"])
        for fpr, tpr, thr in roc_rows(report):
            w.writerow([repr(fpr), repr(tpr), thr])


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="smokefc", description="WLS detail-fusion enhancement and smoke/non-smoke evaluation")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("enhance", help="enhance one image and write a PNG")
    p.add_argument("--method", choices=ENHANCE_METHODS, default="fc_avg")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    _add_enhance_args(p)
    p.set_defaults(func=cmd_enhance)

    p = sub.add_parser("features", help="extract GM-LoG features for a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--method", choices=ENHANCE_METHODS, default="fc_avg")
    p.add_argument("--out", required=True)
    _add_pipeline_args(p)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("train", help="train a linear SVM on a feature CSV")
    p.add_argument("--features", required=True)
    p.add_argument("--c", type=float, default=1e4)
    p.add_argument("--solver", choices=["ipm", "smo"], default="ipm")
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="score a feature CSV with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="train on one manifest, evaluate on another")
    p.add_argument("--train-manifest")
    p.add_argument("--test-manifest", required=True)
    p.add_argument("--method", choices=ENHANCE_METHODS + list(SATURATION_METHODS), default="fc_avg")
    p.add_argument("--report", required=True)
    p.add_argument("--c", type=float, default=1e4)
    p.add_argument("--solver", choices=["ipm", "smo"], default="ipm")
    p.add_argument("--tc", type=float, default=0.35)
    _add_pipeline_args(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("baseline", help="evaluate a saturation-histogram classifier")
    p.add_argument("--method", choices=list(SATURATION_METHODS), required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--tc", type=float, default=0.35)
    p.add_argument("--jobs", type=int, default=1)
    _add_frame_size(p)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("roc", help="dump ROC points of a report as CSV")
    p.add_argument("--report", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_roc)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    a = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if a.command == "evaluate" and a.method not in SATURATION_METHODS and not a.train_manifest:
        parser.error("--train-manifest is required for SVM-based methods")
    try:
        a.func(a)
    except ConvergenceError as exc:
        print(f"convergence error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (SmokeFCError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

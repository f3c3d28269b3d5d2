"""Dataset manifests, cached feature extraction and end-to-end evaluation."""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .baselines import EnhanceParams, Method, enhance_with
from .errors import DatasetError, ManifestError, ProtocolError
from .features import GmLogParams, gmlog_features
from .image import read_image, resize, rgb_to_gray
from .metrics import auc_trapezoid, confusion, equal_error_rate, metrics_from_confusion, roc_curve
from .saturation import SatParams, san_classify, saturation_histogram, spa_classify
from .svm import decision_score, train_detailed

log = logging.getLogger(__name__)

FRAME_SIZE = (427, 240)
MAX_FAILURE_RATE = 0.01
SATURATION_METHODS = ("san", "spa")
CACHE_VERSION = 1


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    label: int
    video_id: str


@dataclass(frozen=True)
class Manifest:
    entries: tuple
    source: str = ""

    def __len__(self):
        return len(self.entries)

    @property
    def video_ids(self):
        return {e.video_id for e in self.entries}


def load_manifest(path) -> Manifest:
    """Read a ``path,label,video_id`` CSV; relative paths resolve against its directory."""
    path = Path(path)
    if not path.is_file():
        raise ManifestError(f"manifest not found: {path}")
    base = path.parent
    entries = []
    seen = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["path", "label", "video_id"]:
            raise ManifestError(f"{path}:1: expected header 'path,label,video_id', got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise ManifestError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            raw, label, vid = (c.strip() for c in row)
            if label not in ("0", "1"):
                raise ManifestError(f"{path}:{lineno}: label must be 0 or 1, got {label!r}")
            if not raw or not vid:
                raise ManifestError(f"{path}:{lineno}: empty path or video_id")
            full = str(Path(raw) if Path(raw).is_absolute() else (base / raw))
            if full in seen:
                raise ManifestError(f"{path}:{lineno}: duplicate path {raw!r}")
            seen.add(full)
            entries.append(ManifestEntry(full, int(label), vid))
    if not entries:
        raise ManifestError(f"{path}: empty manifest")
    return Manifest(tuple(entries), str(path))


def write_manifest(entries, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["path", "label", "video_id"])
        for e in entries:
            w.writerow([e.path, e.label, e.video_id])


@dataclass
class FeatureTable:
    paths: list
    labels: np.ndarray
    X: np.ndarray
    failures: list = field(default_factory=list)

    def __len__(self):
        return len(self.paths)


def write_feature_csv(table: FeatureTable, path) -> None:
    n_feat = table.X.shape[1] if table.X.ndim == 2 else 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["image_path", "label"] + [f"f{k}" for k in range(n_feat)])
        for p, lab, row in zip(table.paths, table.labels, table.X):
            w.writerow([p, int(lab)] + [repr(float(v)) for v in row])


def read_feature_csv(path) -> FeatureTable:
    paths, labels, rows = [], [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[:2] != ["image_path", "label"]:
            raise ManifestError(f"{path}:1: not a feature CSV (header {header})")
        n_feat = len(header) - 2
        for lineno, row in enumerate(reader, start=2):
            if len(row) != n_feat + 2:
                raise ManifestError(f"{path}:{lineno}: expected {n_feat + 2} fields, got {len(row)}")
            try:
                labels.append(int(row[1]))
                rows.append([float(v) for v in row[2:]])
            except ValueError as exc:
                raise ManifestError(f"{path}:{lineno}: {exc}") from None
            paths.append(row[0])
    X = np.array(rows, dtype=np.float64).reshape(len(rows), n_feat)
    return FeatureTable(paths, np.array(labels, dtype=int), X)


@dataclass(frozen=True)
class PipelineConfig:
    method: str = "fc_avg"
    enhance: EnhanceParams = field(default_factory=EnhanceParams)
    gmlog: GmLogParams = field(default_factory=GmLogParams)
    sat: SatParams = field(default_factory=SatParams)
    frame_size: tuple = FRAME_SIZE
    c: float = 1e4
    solver: str = "ipm"
    jobs: int = 1

    def feature_echo(self):
        """Parameters that influence extracted features (the cache key)."""
        return {
            "method": self.method,
            "enhance": self.enhance.as_dict(),
            "gmlog": asdict(self.gmlog),
            "frame_size": list(self.frame_size),
        }

    def echo(self):
        out = self.feature_echo()
        if self.method in SATURATION_METHODS:
            out = {"method": self.method, "frame_size": list(self.frame_size), "saturation": asdict(self.sat)}
        else:
            out["svm"] = {
                "c": self.c,
                "solver": self.solver,
                "feature_scaling": "min-max to [0, 1] fitted on the training split",
                "decision_threshold": 0.0,
                "tie_rule": "score == 0 -> class 0",
            }
        out["positive_class"] = "smoke (label 1)"
        return out


def _load_frame(path, frame_size):
    return resize(read_image(path), *frame_size)


def image_features(path, config: PipelineConfig) -> np.ndarray:
    img = _load_frame(path, config.frame_size)
    enhanced = enhance_with(img, config.method, config.enhance)
    return gmlog_features(rgb_to_gray(enhanced), config.gmlog)


def _safe(fn, path, config):
    try:
        return fn(path, config), None
    except Exception as exc:  # collected and reported per image
        return None, f"{type(exc).__name__}: {exc}"


def _features_job(args):
    return _safe(image_features, *args)


def _map_images(job, paths, config):
    args = [(p, config) for p in paths]
    if config.jobs > 1 and len(paths) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            return list(pool.map(job, args, chunksize=max(1, len(args) // (4 * config.jobs))))
    return [job(a) for a in args]


def _check_failures(failures, total):
    if total and len(failures) / total > MAX_FAILURE_RATE:
        detail = "; ".join(f"{p}: {why}" for p, why in failures[:5])
        raise DatasetError(f"{len(failures)} of {total} images failed (limit 1%): {detail}")
    for p, why in failures:
        log.warning("skipping %s: %s", p, why)


def _cache_key(manifest: Manifest, config: PipelineConfig) -> str:
    items = []
    for e in manifest.entries:
        try:
            st = os.stat(e.path)
            stamp = [st.st_mtime_ns, st.st_size]
        except OSError:
            stamp = None
        items.append([e.path, e.label, stamp])
    blob = json.dumps(
        {"v": CACHE_VERSION, "config": config.feature_echo(), "images": items}, sort_keys=True
    )
    return hashlib.sha256(blob.encode()).hexdigest()[:24]


def _atomic_write(path: Path, writer):
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    os.close(fd)
    try:
        writer(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def extract_dataset_features(manifest: Manifest, config: PipelineConfig, cache_dir=None) -> FeatureTable:
    """Decode, resize, enhance and featurise every manifest entry, in manifest order.

    With ``cache_dir`` set, the table is stored under a key derived from the
    feature configuration and each image's path, size and mtime; an identical
    rerun reads it back instead of recomputing.
    """
    if config.method in SATURATION_METHODS:
        raise ValueError(f"{config.method} is a saturation classifier and has no GM-LoG features")
    Method(config.method)
    cached = None
    if cache_dir is not None:
        cache_dir = Path(cache_dir)
        cache_dir.mkdir(parents=True, exist_ok=True)
        key = _cache_key(manifest, config)
        cached = cache_dir / f"features_{config.method}_{key}.csv"
        failed = cache_dir / f"features_{config.method}_{key}.failures.json"
        if cached.is_file() and failed.is_file():
            table = read_feature_csv(cached)
            table.failures = [tuple(f) for f in json.loads(failed.read_text())]
            log.info("feature cache hit: %s", cached)
            return table

    results = _map_images(_features_job, [e.path for e in manifest.entries], config)
    paths, labels, rows, failures = [], [], [], []
    for e, (vec, err) in zip(manifest.entries, results):
        if err is not None:
            failures.append((e.path, err))
            continue
        paths.append(e.path)
        labels.append(e.label)
        rows.append(vec)
    _check_failures(failures, len(manifest))
    n_feat = config.gmlog.n_features
    table = FeatureTable(paths, np.array(labels, dtype=int), np.array(rows).reshape(len(rows), n_feat), failures)
    if cached is not None:
        _atomic_write(failed, lambda p: Path(p).write_text(json.dumps([list(f) for f in failures])))
        _atomic_write(cached, lambda p: write_feature_csv(table, p))
    return table


@dataclass
class EvalReport:
    method: str
    confusion: dict
    accuracy: float
    f1: float
    roc: list
    auc: float
    eer: float
    n_evaluated: int
    n_failed: int
    failures: list
    config_echo: dict
    training: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True, allow_nan=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "EvalReport":
        return cls(**json.loads(text))


def report_from_scores(method, labels, scores, predicted, config_echo, failures=(), training=None) -> EvalReport:
    labels = np.asarray(labels, dtype=int)
    cm = confusion(labels, predicted)
    acc, f1 = metrics_from_confusion(cm.tp, cm.fp, cm.tn, cm.fn)
    fpr, tpr, thr = roc_curve(labels, scores)
    roc = [
        {"fpr": float(a), "tpr": float(b), "threshold": None if not np.isfinite(t) else float(t)}
        for a, b, t in zip(fpr, tpr, thr)
    ]
    return EvalReport(
        method=method,
        confusion=cm.as_dict(),
        accuracy=float(acc),
        f1=float(f1),
        roc=roc,
        auc=auc_trapezoid(fpr, tpr),
        eer=equal_error_rate(fpr, tpr),
        n_evaluated=int(labels.size),
        n_failed=len(failures),
        failures=[list(f) for f in failures],
        config_echo=config_echo,
        training=training or {},
    )


def check_disjoint(train: Manifest, test: Manifest) -> None:
    shared = train.video_ids & test.video_ids
    if shared:
        raise ProtocolError(f"train and test manifests share video ids: {sorted(shared)}")


def _saturation_job(args):
    path, config = args

    def run(path, config):
        hist = saturation_histogram(_load_frame(path, config.frame_size))
        classify = san_classify if config.method == "san" else spa_classify
        return classify(hist, config.sat)

    return _safe(run, path, config)


def evaluate_saturation(test: Manifest, config: PipelineConfig) -> EvalReport:
    results = _map_images(_saturation_job, [e.path for e in test.entries], config)
    labels, scores, predicted, failures = [], [], [], []
    for e, (out, err) in zip(test.entries, results):
        if err is not None:
            failures.append((e.path, err))
            continue
        labels.append(e.label)
        predicted.append(out[0])
        scores.append(out[1])
    _check_failures(failures, len(test))
    return report_from_scores(config.method, labels, scores, predicted, config.echo(), failures)


def evaluate(train: Manifest | None, test: Manifest, config: PipelineConfig, cache_dir=None) -> EvalReport:
    """Train on ``train`` (SVM methods only) and score ``test``.

    Accuracy and F1 use the SVM decision threshold 0; the ROC sweeps every
    distinct test score.
    """
    if config.method in SATURATION_METHODS:
        if train is not None:
            check_disjoint(train, test)
        return evaluate_saturation(test, config)
    if train is None:
        raise ValueError(f"method {config.method} needs a training manifest")
    check_disjoint(train, test)
    tr = extract_dataset_features(train, config, cache_dir)
    te = extract_dataset_features(test, config, cache_dir)
    fit = train_detailed(tr.X, tr.labels, c=config.c, solver=config.solver)
    scores = decision_score(fit.model, te.X)
    predicted = (scores > 0).astype(int)
    training = {
        "n_train": len(tr),
        "n_train_failed": len(tr.failures),
        "iterations": int(fit.iterations),
        "duality_gap": float(fit.kkt_gap),
        "bias": float(fit.model.b),
    }
    return report_from_scores(
        config.method, te.labels, scores, predicted, config.echo(), te.failures, training
    )


def roc_rows(report: EvalReport):
    for pt in report.roc:
        thr = pt["threshold"]
        yield pt["fpr"], pt["tpr"], ("inf" if thr is None else repr(thr))

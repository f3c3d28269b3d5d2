"""Confusion-matrix metrics, ROC, AUC and EER."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self):
        return self.tp + self.fp + self.tn + self.fn

    def as_dict(self):
        return {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn}


def confusion(labels, predicted) -> Confusion:
    labels = np.asarray(labels).astype(bool)
    predicted = np.asarray(predicted).astype(bool)
    return Confusion(
        tp=int(np.sum(labels & predicted)),
        fp=int(np.sum(~labels & predicted)),
        tn=int(np.sum(~labels & ~predicted)),
        fn=int(np.sum(labels & ~predicted)),
    )


def metrics_from_confusion(tp: int, fp: int, tn: int, fn: int):
    """(accuracy, F1). F1 is 0 when there are no positives at all."""
    total = tp + fp + tn + fn
    if total <= 0:
        raise ValueError("confusion matrix is empty")
    accuracy = (tp + tn) / total
    denom = 2 * tp + fp + fn
    f1 = 2 * tp / denom if denom else 0.0
    return accuracy, f1


def roc_curve(labels, scores):
    """ROC points (fpr, tpr, threshold), one per distinct score plus the origin.

    A sample counts as positive at threshold t when ``score >= t``; the origin
    carries threshold +inf.
    """
    labels = np.asarray(labels).astype(bool)
    scores = np.asarray(scores, dtype=np.float64)
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    lab = labels[order]
    n_pos = int(lab.sum())
    n_neg = int(lab.size - n_pos)
    tps = np.cumsum(lab)
    fps = np.cumsum(~lab)
    # keep the last index of each run of equal scores
    last = np.r_[np.flatnonzero(np.diff(s) != 0), s.size - 1] if s.size else np.array([], dtype=int)
    tpr = tps[last] / n_pos if n_pos else np.zeros(last.size)
    fpr = fps[last] / n_neg if n_neg else np.zeros(last.size)
    fpr = np.r_[0.0, fpr]
    tpr = np.r_[0.0, tpr]
    thr = np.r_[np.inf, s[last]]
    return fpr, tpr, thr


def auc_trapezoid(fpr, tpr) -> float:
    # summed in exact rationals so a perfect ranking gives exactly 1.0
    f = [Fraction(float(v)) for v in fpr]
    t = [Fraction(float(v)) for v in tpr]
    area = sum((f[k] - f[k - 1]) * (t[k] + t[k - 1]) for k in range(1, len(f)))
    return float(area / 2)


def equal_error_rate(fpr, tpr) -> float:
    """Rate where false accepts equal false rejects, interpolated between ROC points."""
    fpr = np.asarray(fpr, dtype=np.float64)
    frr = 1.0 - np.asarray(tpr, dtype=np.float64)
    diff = fpr - frr
    k = int(np.argmax(diff >= 0))
    if diff[k] < 0:
        return float(fpr[-1])
    if diff[k] == 0 or k == 0:
        return float(fpr[k])
    frac = -diff[k - 1] / (diff[k] - diff[k - 1])
    return float(fpr[k - 1] + frac * (fpr[k] - fpr[k - 1]))

"""Confusion matrices and the ACC/SEN/SPE/RMSE/AAE/MAE indicator suite."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BadClassSet, LengthMismatch, NotBinary, UnknownLabel, ValidationError

NORMAL = "normal"
ABNORMAL = "abnormal"
CSV_COLUMNS = ("AAE", "RMSE", "SPE", "ACC", "SEN", "MAE")


class _Undefined:
    """Marker for a rate whose denominator is zero."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "Undefined"

    def __str__(self):
        return "undefined"

    def __bool__(self):
        return False


Undefined = _Undefined()


def _ratio(num, den):
    return Undefined if den == 0 else num / den


def _jsonable(v):
    if v is Undefined:
        return "undefined"
    if isinstance(v, np.generic):
        return v.item()
    return v


@dataclass
class ConfusionMatrix:
    classes: list
    counts: np.ndarray  # rows = truth, columns = prediction

    @property
    def n(self):
        return int(self.counts.sum())

    @property
    def correct(self):
        return int(np.trace(self.counts))

    def to_dict(self):
        return {"classes": [_jsonable(c) for c in self.classes], "counts": self.counts.tolist()}


def confusion(truth, pred, classes):
    truth, pred = list(truth), list(pred)
    if len(truth) != len(pred):
        raise LengthMismatch(f"{len(truth)} truths vs {len(pred)} predictions")
    if not truth:
        raise LengthMismatch("no samples")
    pos = {c: i for i, c in enumerate(classes)}
    counts = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for t, p in zip(truth, pred):
        if t not in pos or p not in pos:
            raise UnknownLabel(f"label {t if t not in pos else p!r} not in {list(classes)}")
        counts[pos[t], pos[p]] += 1
    return ConfusionMatrix(list(classes), counts)


def acc_sen_spe(cm, positive_class=ABNORMAL):
    """Accuracy, sensitivity and specificity of a 2x2 matrix."""
    if cm.counts.shape != (2, 2):
        raise NotBinary(f"expected a 2x2 matrix, got {cm.counts.shape}")
    if positive_class not in cm.classes:
        raise UnknownLabel(f"positive class {positive_class!r} not in {cm.classes}")
    p = cm.classes.index(positive_class)
    q = 1 - p
    c = cm.counts
    tp, fn, tn, fp = c[p, p], c[p, q], c[q, q], c[q, p]
    return (
        _ratio(int(tp + tn), cm.n),
        _ratio(int(tp), int(tp + fn)),
        _ratio(int(tn), int(tn + fp)),
    )


def error_metrics(truth_codes, pred_codes):
    """RMSE, average absolute error and maximum absolute error."""
    y = np.asarray(truth_codes, dtype=np.float64)
    yhat = np.asarray(pred_codes, dtype=np.float64)
    if y.shape != yhat.shape:
        raise LengthMismatch(f"{y.shape} vs {yhat.shape}")
    if y.size == 0:
        raise LengthMismatch("empty input")
    err = yhat - y
    return (
        math.sqrt(float(np.mean(err * err))),
        float(np.mean(np.abs(err))),
        float(np.max(np.abs(err))),
    )


def collapse_to_binary(cm, normal_classes):
    """Aggregate a K-class matrix to (normal, abnormal)."""
    normal = set(normal_classes)
    if not normal or not normal < set(cm.classes):
        raise BadClassSet("normal classes must be a nonempty strict subset of the classes")
    side = np.array([0 if c in normal else 1 for c in cm.classes])
    out = np.zeros((2, 2), dtype=np.int64)
    for i in range(len(cm.classes)):
        for j in range(len(cm.classes)):
            out[side[i], side[j]] += cm.counts[i, j]
    return ConfusionMatrix([NORMAL, ABNORMAL], out)


def collapse_labels(labels, normal_classes):
    normal = set(normal_classes)
    return [NORMAL if lab in normal else ABNORMAL for lab in labels]


def multiclass_sen_spe(cm):
    """One-vs-rest sensitivity/specificity per class plus macro means.

    Macro means skip undefined per-class values; if every value is
    undefined the mean is undefined too.
    """
    if len(cm.classes) < 2:
        raise ValidationError("need at least two classes")
    c = cm.counts
    n = c.sum()
    per_class = {}
    for k, cls in enumerate(cm.classes):
        tp = c[k, k]
        fn = c[k].sum() - tp
        fp = c[:, k].sum() - tp
        tn = n - tp - fn - fp
        per_class[cls] = (_ratio(int(tp), int(tp + fn)), _ratio(int(tn), int(tn + fp)))

    def macro(vals):
        vals = [v for v in vals if v is not Undefined]
        return sum(vals) / len(vals) if vals else Undefined

    return (
        per_class,
        macro([s for s, _ in per_class.values()]),
        macro([s for _, s in per_class.values()]),
    )


@dataclass
class EvalReport:
    accuracy: float
    sensitivity: object
    specificity: object
    rmse: float
    aae: float
    mae: float
    confusion: ConfusionMatrix
    n: int
    label_encoding: dict
    sen_spe_mode: str = "binary"
    per_class: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "AAE": self.aae,
            "RMSE": self.rmse,
            "SPE": _jsonable(self.specificity),
            "ACC": self.accuracy,
            "SEN": _jsonable(self.sensitivity),
            "MAE": self.mae,
            "n": self.n,
            "sen_spe_mode": self.sen_spe_mode,
            "label_encoding": {str(k): v for k, v in self.label_encoding.items()},
            "confusion": self.confusion.to_dict(),
            "per_class": {
                str(k): {"SEN": _jsonable(s), "SPE": _jsonable(p)}
                for k, (s, p) in self.per_class.items()
            },
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    def csv_row(self):
        return [_jsonable(v) for v in (self.aae, self.rmse, self.specificity,
                                        self.accuracy, self.sensitivity, self.mae)]

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        w.writerow([repr(float(v)) if isinstance(v, float) else v for v in self.csv_row()])
        return buf.getvalue()


def label_encoding(classes, two_class=False):
    """normal=0/abnormal=1 for two-class; otherwise 1..K in class order."""
    if two_class:
        return {NORMAL: 0, ABNORMAL: 1}
    return {c: i + 1 for i, c in enumerate(classes)}


def evaluate(truth, pred, classes, normal_classes=None):
    """Full indicator suite.

    Two-class problems (classes ``(normal, abnormal)``) report binary
    SEN/SPE with abnormal as positive.  Multi-class problems report SEN/SPE
    on the normal/abnormal collapse when ``normal_classes`` is given, else
    macro-averaged one-vs-rest values; per-class values are always kept.
    """
    truth, pred = list(truth), list(pred)
    cm = confusion(truth, pred, classes)
    two_class = list(classes) == [NORMAL, ABNORMAL]
    enc = label_encoding(classes, two_class)
    rmse, aae, mae = error_metrics([enc[t] for t in truth], [enc[p] for p in pred])
    per_class, macro_sen, macro_spe = multiclass_sen_spe(cm)
    if two_class:
        _, sen, spe = acc_sen_spe(cm, ABNORMAL)
        mode = "binary"
    elif normal_classes:
        _, sen, spe = acc_sen_spe(collapse_to_binary(cm, normal_classes), ABNORMAL)
        mode = "collapsed"
    else:
        sen, spe, mode = macro_sen, macro_spe, "macro"
    return EvalReport(cm.correct / cm.n, sen, spe, rmse, aae, mae, cm, cm.n, enc, mode,
                      per_class)

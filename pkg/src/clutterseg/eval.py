"""Confusion matrices, precision/recall/F1, nearest-neighbour label copying and timing."""
from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .core import CLASSES
from .errors import ContractError

CLASS_NAMES = tuple(c.value for c in CLASSES)


def eval_mask(cloud: np.ndarray) -> np.ndarray:
    """Points that count: latest scan only, no upsampling replicas."""
    return (cloud["dt"] == 0) & ~cloud["is_replica"]


def confusion(predictions, truths, mask=None, n_classes: int = 3) -> np.ndarray:
    """Counts with rows = truth and columns = prediction over masked points."""
    pred = np.asarray(predictions).reshape(-1)
    true = np.asarray(truths).reshape(-1)
    if pred.shape != true.shape:
        raise ContractError(f"{len(pred)} predictions for {len(true)} truths")
    if mask is not None:
        mask = np.asarray(mask, dtype=bool).reshape(-1)
        if mask.shape != pred.shape:
            raise ContractError(f"mask has {len(mask)} entries for {len(pred)} points")
        pred, true = pred[mask], true[mask]
    if np.any((true < 0) | (true >= n_classes)) or np.any((pred < 0) | (pred >= n_classes)):
        raise ContractError("class index out of range")
    out = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(out, (true.astype(np.int64), pred.astype(np.int64)), 1)
    return out


def macro_mean(values: Sequence[float]) -> float:
    """Unweighted arithmetic mean."""
    return float(sum(values) / len(values))


@dataclass
class Scores:
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    mean_f1: float
    # per class, metric names whose denominator was zero (value set to 0)
    undefined: dict[str, list[str]] = field(default_factory=dict)


def prf1(conf: np.ndarray) -> Scores:
    conf = np.asarray(conf, dtype=float)
    tp = np.diag(conf)
    pred_pos = conf.sum(axis=0)
    true_pos = conf.sum(axis=1)
    n = len(tp)
    precision, recall, f1 = np.zeros(n), np.zeros(n), np.zeros(n)
    undefined: dict[str, list[str]] = {}
    names = CLASS_NAMES if n == len(CLASS_NAMES) else tuple(str(i) for i in range(n))
    for i in range(n):
        flags = []
        if pred_pos[i] > 0:
            precision[i] = tp[i] / pred_pos[i]
        else:
            flags.append("precision")
        if true_pos[i] > 0:
            recall[i] = tp[i] / true_pos[i]
        else:
            flags.append("recall")
        if precision[i] + recall[i] > 0:
            f1[i] = 2 * precision[i] * recall[i] / (precision[i] + recall[i])
        else:
            flags.append("f1")
        if flags:
            undefined[names[i]] = flags
    return Scores(precision, recall, f1, macro_mean(f1), undefined)


@dataclass
class EvalReport:
    confusion: np.ndarray
    scores: Scores
    n_points: int
    n_clouds: int
    timing_mean_ms: float | None = None
    timing_var_ms2: float | None = None
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_confusion(cls, conf, n_clouds=0, **extra):
        conf = np.asarray(conf, dtype=np.int64)
        return cls(conf, prf1(conf), int(conf.sum()), n_clouds, extra=extra)

    @property
    def mean_f1(self) -> float:
        return self.scores.mean_f1

    def to_dict(self):
        per_class = {
            name: {
                "precision": float(self.scores.precision[i]),
                "recall": float(self.scores.recall[i]),
                "f1": float(self.scores.f1[i]),
            }
            for i, name in enumerate(CLASS_NAMES)
        }
        return {
            "classes": list(CLASS_NAMES),
            "confusion": self.confusion.tolist(),
            "per_class": per_class,
            "mean_f1": self.scores.mean_f1,
            "undefined": self.scores.undefined,
            "n_points": self.n_points,
            "n_clouds": self.n_clouds,
            "timing_mean_ms": self.timing_mean_ms,
            "timing_var_ms2": self.timing_var_ms2,
            **self.extra,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def confusion_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["truth\\prediction", *CLASS_NAMES])
        for name, row in zip(CLASS_NAMES, self.confusion):
            w.writerow([name, *row.tolist()])
        return buf.getvalue()


def nn_postprocess(survivor_xy, survivor_pred, removed_xy, xy_scale: float = 1.0) -> np.ndarray:
    """Labels for removed points copied from their nearest survivor.

    Distances are taken on standardized coordinates (``xy / xy_scale``);
    the lowest survivor index wins ties.
    """
    surv = np.asarray(survivor_xy, dtype=float).reshape(-1, 2) / xy_scale
    rem = np.asarray(removed_xy, dtype=float).reshape(-1, 2) / xy_scale
    pred = np.asarray(survivor_pred)
    if len(surv) == 0:
        raise ContractError("nn_postprocess needs at least one surviving point")
    if len(pred) != len(surv):
        raise ContractError("one prediction per survivor required")
    out = np.empty(len(rem), dtype=pred.dtype)
    for start in range(0, len(rem), 1024):
        chunk = rem[start : start + 1024]
        d = ((chunk[:, None, :] - surv[None, :, :]) ** 2).sum(axis=2)
        out[start : start + 1024] = pred[d.argmin(axis=1)]
    return out


@dataclass
class BenchResult:
    times_ms: np.ndarray
    point_counts: np.ndarray
    warmup: int

    @property
    def mean_ms(self) -> float:
        return float(self.times_ms.mean()) if len(self.times_ms) else float("nan")

    @property
    def var_ms2(self) -> float:
        # population variance
        return float(self.times_ms.var()) if len(self.times_ms) else float("nan")

    def to_dict(self):
        return {
            "mean_ms": self.mean_ms,
            "var_ms2": self.var_ms2,
            "n": int(len(self.times_ms)),
            "warmup": self.warmup,
            "times_ms": self.times_ms.tolist(),
            "point_counts": self.point_counts.tolist(),
        }


def bench(run: Callable[[object], int], stream: Iterable, warmup: int = 3, clock=time.perf_counter) -> BenchResult:
    """Time ``run(item)`` for every item of ``stream``.

    ``run`` performs resampling plus the forward pass and returns the number
    of points that entered the network. The first ``warmup`` items are run
    but not recorded.
    """
    times, counts = [], []
    for i, item in enumerate(stream):
        t0 = clock()
        n = run(item)
        dt = (clock() - t0) * 1e3
        if i >= warmup:
            times.append(dt)
            counts.append(int(n))
    return BenchResult(np.asarray(times, dtype=float), np.asarray(counts, dtype=np.int64), warmup)

"""Balanced accuracy, ROC threshold search and group-fairness metrics."""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyCell, OutOfRange, SingleClassActual, SingleClassSensitive

SENTINEL = float(np.nextafter(1.0, 2.0))


def _binary(v, name):
    v = np.asarray(v)
    if v.ndim != 1 or not np.isin(v, (0, 1)).all():
        raise ValueError(f"{name} must be a 1-D binary vector")
    return v.astype(np.int64)


def _both_groups(s, exc=SingleClassSensitive):
    if s.size == 0 or s.min() == s.max():
        raise exc("both classes must be present")


def balanced_accuracy(predicted, actual) -> float:
    """Mean of per-class recall: ``(P(pred=0|act=0) + P(pred=1|act=1)) / 2``."""
    p, a = _binary(predicted, "predicted"), _binary(actual, "actual")
    if p.shape != a.shape:
        raise ValueError("predicted and actual differ in length")
    _both_groups(a, SingleClassActual)
    return 0.5 * (float(np.mean(p[a == 0] == 0)) + float(np.mean(p[a == 1] == 1)))


@dataclass(frozen=True)
class RocCurve:
    """Operating points sorted by ascending threshold; a record is positive iff score >= upsilon."""

    thresholds: np.ndarray
    fpr: np.ndarray
    tpr: np.ndarray

    def __len__(self):
        return len(self.thresholds)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("upsilon,fpr,tpr\n")
        for u, f, t in zip(self.thresholds, self.fpr, self.tpr):
            buf.write(f"{float(u)!r},{float(f)!r},{float(t)!r}\n")
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"upsilon": self.thresholds.tolist(), "fpr": self.fpr.tolist(),
                "tpr": self.tpr.tolist()}


def candidate_thresholds(scores) -> np.ndarray:
    """0, midpoints between adjacent distinct scores, and a sentinel just above 1."""
    u = np.unique(np.asarray(scores, dtype=float))
    mids = (u[:-1] + u[1:]) / 2.0
    return np.unique(np.concatenate([[0.0], mids, [SENTINEL]]))


def roc_curve(scores, positives) -> RocCurve:
    scores = np.asarray(scores, dtype=float)
    pos = _binary(positives, "positives")
    if scores.shape != pos.shape:
        raise ValueError("scores and positives differ in length")
    if scores.size and (scores.min() < 0.0 or scores.max() > 1.0):
        raise ValueError("scores must lie in [0, 1]")
    _both_groups(pos, SingleClassActual)
    sp = np.sort(scores[pos == 1])
    sn = np.sort(scores[pos == 0])
    cand = candidate_thresholds(scores)
    tpr = (len(sp) - np.searchsorted(sp, cand, side="left")) / len(sp)
    fpr = (len(sn) - np.searchsorted(sn, cand, side="left")) / len(sn)
    return RocCurve(cand, fpr.astype(float), tpr.astype(float))


def roc_objective(roc: RocCurve) -> np.ndarray:
    return (1.0 - roc.tpr) ** 2 + roc.fpr ** 2


def optimal_threshold(roc: RocCurve) -> tuple:
    """Threshold minimizing ``(1 - TPR)^2 + FPR^2``; ties go to the smallest threshold."""
    if len(roc) == 0:
        raise ValueError("empty ROC curve")
    obj = roc_objective(roc)
    k = int(np.argmin(obj))
    return float(roc.thresholds[k]), float(obj[k])


def positive_rate_by_group(pred, s) -> dict:
    pred, s = _binary(pred, "pred"), _binary(s, "S")
    _both_groups(s)
    return {g: float(np.mean(pred[s == g])) for g in (0, 1)}


def dempar_level(pred, s) -> float:
    r = positive_rate_by_group(pred, s)
    return abs(r[1] - r[0])


def conditional_rates(pred, s, y) -> dict:
    """``{(s, y): P(pred=1 | S=s, Y=y)}``; every cell must be populated."""
    pred, s, y = _binary(pred, "pred"), _binary(s, "S"), _binary(y, "Y")
    out = {}
    for g in (0, 1):
        for c in (0, 1):
            m = (s == g) & (y == c)
            if not m.any():
                raise EmptyCell(g, c)
            out[(g, c)] = float(np.mean(pred[m]))
    return out


def eqodds_gap(pred, s, y) -> float:
    """Largest gap over (yhat, y) of ``|P(pred=yhat|S=0,Y=y) - P(pred=yhat|S=1,Y=y)|``."""
    r = conditional_rates(pred, s, y)
    gaps = []
    for c in (0, 1):
        for yhat in (0, 1):
            a = r[(0, c)] if yhat else 1.0 - r[(0, c)]
            b = r[(1, c)] if yhat else 1.0 - r[(1, c)]
            gaps.append(abs(a - b))
    return max(gaps)


def dependency_ys(y, s) -> float:
    """``|P(Y=0|S=0) - P(Y=0|S=1)|``."""
    y, s = _binary(y, "Y"), _binary(s, "S")
    _both_groups(s)
    return abs(float(np.mean(y[s == 0] == 0)) - float(np.mean(y[s == 1] == 0)))


def theoretical_attack_bound(level: float) -> float:
    """Best balanced accuracy of any hard-label attack given the DemPar level."""
    if not 0.0 <= level <= 1.0:
        raise OutOfRange(f"DemPar level must lie in [0, 1], got {level}")
    return 0.5 * (1.0 + level)


@dataclass(frozen=True)
class FairnessSummary:
    dempar_level: float
    eqodds_gap: float | None
    dependency_ys: float | None
    group_rates: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"dempar_level": self.dempar_level, "eqodds_gap": self.eqodds_gap,
                "dependency_ys": self.dependency_ys, "group_rates": self.group_rates}

    @classmethod
    def from_dict(cls, d: dict) -> "FairnessSummary":
        return cls(d["dempar_level"], d["eqodds_gap"], d["dependency_ys"], d["group_rates"])


def fairness_summary(pred, s, y=None) -> FairnessSummary:
    rates = positive_rate_by_group(pred, s)
    group_rates = {"positive_rate": {f"s{g}": rates[g] for g in (0, 1)}}
    level = abs(rates[1] - rates[0])
    gap = dep = None
    if y is not None:
        cond = conditional_rates(pred, s, y)
        group_rates["positive_rate_given_y"] = {f"s{g}_y{c}": v for (g, c), v in cond.items()}
        gap = eqodds_gap(pred, s, y)
        dep = dependency_ys(y, s)
    return FairnessSummary(level, gap, dep, group_rates)

"""Attribute- and membership-inference attacks on model outputs.

The attacks only see predictions and the adversary's auxiliary split, i.e.
they work against any blackbox model.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import EmptyInput, SingleClassSensitive
from .metrics import (
    RocCurve,
    balanced_accuracy,
    dempar_level,
    optimal_threshold,
    roc_curve,
    theoretical_attack_bound,
)
from .models import TrainConfig, fit_logreg, fit_mlp, predict_soft

# f_att works on a single standardized feature, so a large step is safe.
ATTACK_CFG = TrainConfig(epochs=500, learning_rate=0.5)


class HardAttackFunction(enum.IntEnum):
    """The four maps {0,1} -> {0,1}; the integer value is the tie-break order."""

    CONST0 = 0
    IDENTITY = 1
    COMPLEMENT = 2
    CONST1 = 3

    def apply(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.int64)
        if self is HardAttackFunction.CONST0:
            return np.zeros_like(x)
        if self is HardAttackFunction.IDENTITY:
            return x.copy()
        if self is HardAttackFunction.COMPLEMENT:
            return 1 - x
        return np.ones_like(x)

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def from_label(cls, label: str) -> "HardAttackFunction":
        return cls[label.upper()]


@dataclass(frozen=True)
class AttackResult:
    tuned_accuracy: float
    eval_accuracy: float
    threshold: Optional[float] = None
    chosen_function: Optional[HardAttackFunction] = None
    theoretical_bound: Optional[float] = None
    roc: Optional[RocCurve] = field(default=None, compare=False, repr=False)

    def to_dict(self) -> dict:
        return {
            "tuned_accuracy": self.tuned_accuracy,
            "eval_accuracy": self.eval_accuracy,
            "threshold": self.threshold,
            "chosen_function": None if self.chosen_function is None else self.chosen_function.label,
            "theoretical_bound": self.theoretical_bound,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AttackResult":
        fn = d.get("chosen_function")
        return cls(d["tuned_accuracy"], d["eval_accuracy"], d.get("threshold"),
                   None if fn is None else HardAttackFunction.from_label(fn),
                   d.get("theoretical_bound"))


def _check_groups(*svecs):
    for s in svecs:
        s = np.asarray(s)
        if s.size == 0 or s.min() == s.max():
            raise SingleClassSensitive("both S classes must be present in each attack split")


def _fit_attack_model(scores, s, cfg, attack_model):
    X = np.asarray(scores, dtype=float).reshape(-1, 1)
    if attack_model == "logreg":
        return fit_logreg(X, s, cfg=cfg)
    if attack_model == "mlp":
        return fit_mlp(X, s, cfg=cfg, hidden=(8,))
    raise ValueError(f"unknown attack model {attack_model!r}")


def _soft_attack(scores_tr, s_tr, scores_te, s_te, cfg, attack_model, threshold):
    _check_groups(s_tr, s_te)
    f_att = _fit_attack_model(scores_tr, s_tr, cfg, attack_model)
    a_tr = predict_soft(f_att, np.reshape(scores_tr, (-1, 1)))
    a_te = predict_soft(f_att, np.reshape(scores_te, (-1, 1)))
    roc = roc_curve(a_tr, s_tr)
    if threshold is None:
        threshold, _ = optimal_threshold(roc)
    tuned = balanced_accuracy((a_tr >= threshold).astype(np.int64), s_tr)
    evald = balanced_accuracy((a_te >= threshold).astype(np.int64), s_te)
    return AttackResult(tuned, evald, threshold=threshold, roc=roc)


def adapt_aia_s(scores_tr, s_tr, scores_te, s_te, cfg: TrainConfig = ATTACK_CFG,
                attack_model: str = "logreg") -> AttackResult:
    """Soft-label attack with a threshold tuned on the attacker's training half.

    The threshold minimizes ``(1 - TPR)^2 + FPR^2`` over the ROC of the attack
    model's outputs on ``scores_tr``.
    """
    return _soft_attack(scores_tr, s_tr, scores_te, s_te, cfg, attack_model, None)


def baseline_aia(scores_tr, s_tr, scores_te, s_te, cfg: TrainConfig = ATTACK_CFG,
                 attack_model: str = "logreg") -> AttackResult:
    """Same attack model, fixed threshold 0.5."""
    return _soft_attack(scores_tr, s_tr, scores_te, s_te, cfg, attack_model, 0.5)


def adapt_aia_h(hard_tr, s_tr, hard_te, s_te) -> AttackResult:
    """Hard-label attack: pick the best of the four maps {0,1} -> {0,1}."""
    _check_groups(s_tr, s_te)
    hard_tr = np.asarray(hard_tr, dtype=np.int64)
    hard_te = np.asarray(hard_te, dtype=np.int64)
    best, best_ba = None, -1.0
    for fn in HardAttackFunction:
        ba = balanced_accuracy(fn.apply(hard_tr), s_tr)
        if ba > best_ba:
            best, best_ba = fn, ba
    evald = balanced_accuracy(best.apply(hard_te), s_te)
    bound = theoretical_attack_bound(dempar_level(hard_tr, s_tr))
    return AttackResult(best_ba, evald, chosen_function=best, theoretical_bound=bound)


def membership_scores(losses) -> np.ndarray:
    """Lower loss means more member-like; ``1 / (1 + loss)`` maps [0, inf) onto (0, 1]."""
    losses = np.asarray(losses, dtype=float)
    if (losses < 0).any() or not np.isfinite(losses).all():
        raise ValueError("losses must be finite and non-negative")
    return 1.0 / (1.0 + losses)


def membership_inference(losses_members, losses_nonmembers, seed: int = 0) -> float:
    """Loss-threshold membership attack; returns held-out balanced accuracy.

    Both groups are subsampled to the same size, each is halved into a tuning
    and an evaluation part, the threshold is tuned on the first and scored on
    the second.
    """
    lm = np.asarray(losses_members, dtype=float)
    ln = np.asarray(losses_nonmembers, dtype=float)
    if lm.size == 0 or ln.size == 0:
        raise EmptyInput("membership attack needs members and non-members")
    sm, sn = membership_scores(lm), membership_scores(ln)
    rng = np.random.default_rng(seed)
    m = min(sm.size, sn.size)
    sm = sm[rng.permutation(sm.size)[:m]]
    sn = sn[rng.permutation(sn.size)[:m]]
    half = m // 2
    if half == 0:
        tune_m = eval_m = sm
        tune_n = eval_n = sn
    else:
        tune_m, eval_m = sm[:half], sm[half:]
        tune_n, eval_n = sn[:half], sn[half:]
    scores = np.concatenate([tune_m, tune_n])
    labels = np.concatenate([np.ones(tune_m.size, np.int64), np.zeros(tune_n.size, np.int64)])
    upsilon, _ = optimal_threshold(roc_curve(scores, labels))
    ev = np.concatenate([eval_m, eval_n])
    ev_labels = np.concatenate([np.ones(eval_m.size, np.int64), np.zeros(eval_n.size, np.int64)])
    return balanced_accuracy((ev >= upsilon).astype(np.int64), ev_labels)

"""End-to-end audit: split, train, measure, attack, optionally defend.

Seeds fan out from one base seed by fixed offsets (``SEED_OFFSETS``), so a
single integer reproduces a whole run.
"""

from __future__ import annotations

from dataclasses import asdict
from typing import Optional

import numpy as np

from .attacks import ATTACK_CFG, adapt_aia_h, adapt_aia_s, baseline_aia
from .data import SplitPlan, TabularDataset, class_balance, make_split
from .fairness import (
    AdvDebiasConfig,
    EgdConfig,
    advdebias_train,
    egd_train,
    expected_accuracy,
    expected_dempar_level,
    expected_positive_rate,
    sample_prediction,
)
from .metrics import balanced_accuracy, dependency_ys, fairness_summary
from .models import TrainConfig, fit_logreg, fit_mlp, predict_soft
from .report import AuditReport

SEED_OFFSETS = {"split": 0, "target": 1, "attack": 2, "defense": 3, "sample": 4}

TARGET_LOGREG_CFG = TrainConfig(epochs=300, learning_rate=0.5)
TARGET_MLP_CFG = TrainConfig(epochs=500, learning_rate=0.05)
TAU = 0.5


def derive_seeds(seed: int) -> dict:
    return {role: seed + off for role, off in SEED_OFFSETS.items()}


def dataset_summary(ds: TabularDataset) -> dict:
    p_s1, p_y1 = class_balance(ds)
    return {"n": ds.n, "d": ds.d, "class_balance": {"p_s1": p_s1, "p_y1": p_y1},
            "dependency_ys": dependency_ys(ds.labels, ds.sensitive)}


def train_target(ds: TabularDataset, split: SplitPlan, model: str, seed: int):
    X, y = ds.features[split.tr], ds.labels[split.tr]
    if model == "logreg":
        return fit_logreg(X, y, cfg=TARGET_LOGREG_CFG)
    if model == "mlp":
        cfg = TrainConfig(**{**asdict(TARGET_MLP_CFG), "seed": seed})
        return fit_mlp(X, y, cfg=cfg)
    raise ValueError(f"unknown target model {model!r}")


def utility(hard, y) -> dict:
    hard, y = np.asarray(hard), np.asarray(y)
    return {"accuracy": float(np.mean(hard == y)), "balanced_accuracy": balanced_accuracy(hard, y)}


def attack_suite(scores_tr, s_tr, scores_te, s_te, tau: float = TAU, seed: int = 0,
                 attack_model: str = "logreg") -> dict:
    """Soft attacks on scores plus the hard-label attack on ``scores >= tau``."""
    cfg = TrainConfig(**{**asdict(ATTACK_CFG), "seed": seed})
    hard_tr = (np.asarray(scores_tr) >= tau).astype(np.int64)
    hard_te = (np.asarray(scores_te) >= tau).astype(np.int64)
    return {
        "adapt_aia_s": adapt_aia_s(scores_tr, s_tr, scores_te, s_te, cfg, attack_model),
        "baseline_aia": baseline_aia(scores_tr, s_tr, scores_te, s_te, cfg, attack_model),
        "adapt_aia_h": adapt_aia_h(hard_tr, s_tr, hard_te, s_te),
    }


def _defend(ds, split, method, eps, alpha, constraint, seeds, attack_model):
    X, s, y = ds.features, ds.sensitive, ds.labels
    te, a_tr, a_te = split.te, split.aux_tr, split.aux_te
    if method == "egd":
        cfg = EgdConfig(constraint=constraint, eps=eps)
        rc = egd_train(ds, split, cfg)
        soft = expected_positive_rate(rc, X)
        hard = sample_prediction(rc, X, seeds["sample"])
        util = utility(hard[te], y[te])
        util["expected_accuracy"] = expected_accuracy(rc, X[te], y[te])
        extra = {"expected_dempar_level_train": expected_dempar_level(rc, X[split.tr], s[split.tr]),
                 "components": len(rc)}
        config = {"constraint": constraint, "eps": eps, "iterations": cfg.iterations,
                  "eta": cfg.eta, "bound": cfg.bound}
    elif method == "advdebias":
        cfg = AdvDebiasConfig(adversary_weight=alpha,
                              target_cfg=TrainConfig(seed=seeds["defense"]))
        model = advdebias_train(ds, split, cfg)
        soft = predict_soft(model, X)
        hard = (soft >= TAU).astype(np.int64)
        util = utility(hard[te], y[te])
        extra = {}
        config = {"adversary_weight": alpha, "rounds": cfg.rounds, "disc_steps": cfg.disc_steps,
                  "target_steps": cfg.target_steps}
    else:
        raise ValueError(f"unknown defense {method!r}")
    attacks = {
        "adapt_aia_s": adapt_aia_s(soft[a_tr], s[a_tr], soft[a_te], s[a_te],
                                   TrainConfig(**{**asdict(ATTACK_CFG), "seed": seeds["attack"]}),
                                   attack_model),
        "adapt_aia_h": adapt_aia_h(hard[a_tr], s[a_tr], hard[a_te], s[a_te]),
    }
    return {"method": method, "config": config, "target_utility": util,
            "fairness": fairness_summary(hard[te], s[te], y[te]), "attacks": attacks, **extra}


def audit_dataset(ds: TabularDataset, seed: int = 0, model: str = "logreg",
                  defense: Optional[str] = None, eps: float = 0.01, alpha: float = 1.0,
                  constraint: str = "dempar", attack_model: str = "logreg",
                  split: Optional[SplitPlan] = None) -> tuple:
    """Return ``(report, roc)`` where ``roc`` is the soft attack's tuning curve."""
    seeds = derive_seeds(seed)
    split = split if split is not None else make_split(ds, seed=seeds["split"])
    split.validate(ds.n)
    target = train_target(ds, split, model, seeds["target"])
    soft = predict_soft(target, ds.features)
    hard = (soft >= TAU).astype(np.int64)
    s, y = ds.sensitive, ds.labels
    a_tr, a_te, te = split.aux_tr, split.aux_te, split.te
    attacks = attack_suite(soft[a_tr], s[a_tr], soft[a_te], s[a_te], TAU, seeds["attack"],
                           attack_model)
    defended = None
    if defense is not None:
        defended = _defend(ds, split, defense, eps, alpha, constraint, seeds, attack_model)
    report = AuditReport(
        dataset_summary=dataset_summary(ds),
        target_utility=utility(hard[te], y[te]),
        fairness=fairness_summary(hard[te], s[te], y[te]),
        attacks=attacks,
        defense=defended,
        seeds=seeds,
        configs={"mode": "dataset", "model": model, "attack_model": attack_model, "tau": TAU,
                 "split_sizes": {k: int(len(getattr(split, k))) for k in ("tr", "te", "aux_tr", "aux_te")},
                 "defense": defense, "eps": eps, "alpha": alpha, "constraint": constraint},
    )
    return report, attacks["adapt_aia_s"].roc


def _stratified_halves(strata, frac, rng):
    """Per-stratum split into (first, second) with ``floor(frac * count)`` records first."""
    first, second = [], []
    for key in np.unique(strata):
        idx = rng.permutation(np.flatnonzero(strata == key))
        k = int(np.floor(frac * len(idx)))
        first.append(idx[:k])
        second.append(idx[k:])
    return np.sort(np.concatenate(first)), np.sort(np.concatenate(second))


def audit_predictions(preds, seed: int = 0, aux_tr_fraction: float = 0.8,
                      tau: float = TAU) -> tuple:
    """Audit externally produced predictions; the whole file is the adversary's data.

    Records are split into tuning and evaluation parts stratified on the
    (S, hard label) cells, so a table satisfying DemPar stays balanced in both.
    """
    seeds = derive_seeds(seed)
    s = preds.sensitive
    hard = preds.values if preds.kind == "hard" else (preds.values >= tau).astype(np.int64)
    rng = np.random.default_rng(seeds["split"])
    a_tr, a_te = _stratified_halves(2 * s + hard, aux_tr_fraction, rng)
    if preds.kind == "soft":
        v = preds.values
        attacks = attack_suite(v[a_tr], s[a_tr], v[a_te], s[a_te], tau, seeds["attack"])
        roc = attacks["adapt_aia_s"].roc
    else:
        attacks = {"adapt_aia_h": adapt_aia_h(hard[a_tr], s[a_tr], hard[a_te], s[a_te])}
        roc = None
    y = preds.labels
    p_s1 = float(np.mean(s))
    summary = {"n": preds.n, "d": None,
               "class_balance": {"p_s1": p_s1, "p_y1": None if y is None else float(np.mean(y))},
               "dependency_ys": None if y is None else dependency_ys(y, s)}
    report = AuditReport(
        dataset_summary=summary,
        target_utility=None if y is None else utility(hard, y),
        fairness=fairness_summary(hard, s, y),
        attacks=attacks,
        seeds=seeds,
        configs={"mode": "predictions", "kind": preds.kind, "tau": tau,
                 "aux_tr_fraction": aux_tr_fraction,
                 "split_sizes": {"aux_tr": int(len(a_tr)), "aux_te": int(len(a_te))}},
    )
    return report, roc


def eps_sweep_row(ds: TabularDataset, split: SplitPlan, eps: float, seed: int,
                  constraint: str = "dempar") -> dict:
    """One EGD run: expected DemPar level on D_tr, hard-label attack and accuracy."""
    seeds = derive_seeds(seed)
    rc = egd_train(ds, split, EgdConfig(constraint=constraint, eps=eps))
    X, s, y = ds.features, ds.sensitive, ds.labels
    hard = sample_prediction(rc, X, seeds["sample"])
    att = adapt_aia_h(hard[split.aux_tr], s[split.aux_tr], hard[split.aux_te], s[split.aux_te])
    return {"eps": eps,
            "dp_level": expected_dempar_level(rc, X[split.tr], s[split.tr]),
            "attack_accuracy": att.eval_accuracy,
            "accuracy": expected_accuracy(rc, X[split.te], y[split.te])}

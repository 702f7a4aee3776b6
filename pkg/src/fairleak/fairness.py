"""Fairness-constrained training.

``egd_train`` is the exponentiated-gradient Lagrangian reduction, returning a
randomized mixture of thresholded logistic models. ``advdebias_train`` trains
an MLP against a logistic discriminator that tries to recover S from the
soft label.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

import numpy as np
from scipy.special import expit

from .errors import DegenerateGroups, DimensionMismatch, InvalidConfig, SingleClassSensitive
from .models import (
    DEFAULT_HIDDEN,
    LinearModel,
    TrainConfig,
    _MlpTrainer,
    fit_logreg,
    model_from_dict,
    model_to_dict,
    predict_hard,
)

DEMPAR = "dempar"
EQODDS = "eqodds"


@dataclass(frozen=True)
class Component:
    model: object
    tau: float
    weight: float


@dataclass(frozen=True)
class RandomizedClassifier:
    """Draw component ``i`` with probability ``weight_i``, predict ``1[t_i(x) >= tau_i]``."""

    components: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise InvalidConfig("a randomized classifier needs at least one component")
        w = np.array([c.weight for c in comps], dtype=float)
        if (w < 0).any() or abs(w.sum() - 1.0) > 1e-9:
            raise InvalidConfig("component weights must be non-negative and sum to 1")
        object.__setattr__(self, "components", comps)

    @property
    def weights(self) -> np.ndarray:
        return np.array([c.weight for c in self.components])

    def __len__(self):
        return len(self.components)

    def component_predictions(self, X) -> np.ndarray:
        """(N, n) matrix of each component's hard labels."""
        return np.stack([predict_hard(c.model, X, c.tau) for c in self.components])

    def to_dict(self) -> dict:
        return {"components": [{"model": model_to_dict(c.model), "tau": c.tau, "weight": c.weight}
                               for c in self.components]}

    @classmethod
    def from_dict(cls, d: dict) -> "RandomizedClassifier":
        return cls(tuple(Component(model_from_dict(c["model"]), float(c["tau"]), float(c["weight"]))
                         for c in d["components"]))


def save_randomized(rc: RandomizedClassifier, path) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(rc.to_dict()), encoding="utf-8")
    tmp.replace(path)


def load_randomized(path) -> RandomizedClassifier:
    return RandomizedClassifier.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def sample_prediction(rc: RandomizedClassifier, X, seed: int = 0) -> np.ndarray:
    """Independent per-record draw of the component, then its hard label."""
    preds = rc.component_predictions(X)
    rng = np.random.default_rng(seed)
    pick = rng.choice(len(rc), size=preds.shape[1], p=rc.weights)
    return preds[pick, np.arange(preds.shape[1])].astype(np.int64)


def expected_positive_rate(rc: RandomizedClassifier, X) -> np.ndarray:
    """Per-record probability of a positive label under the mixture."""
    return rc.weights @ rc.component_predictions(X)


def expected_group_rates(rc: RandomizedClassifier, X, s) -> dict:
    s = np.asarray(s)
    if s.size == 0 or s.min() == s.max():
        raise SingleClassSensitive("both S groups must be present")
    p = expected_positive_rate(rc, X)
    if p.shape != s.shape:
        raise DimensionMismatch("X and S differ in length")
    return {g: float(p[s == g].mean()) for g in (0, 1)}


def expected_dempar_level(rc: RandomizedClassifier, X, s) -> float:
    r = expected_group_rates(rc, X, s)
    return abs(r[1] - r[0])


def expected_accuracy(rc: RandomizedClassifier, X, y) -> float:
    p = expected_positive_rate(rc, X)
    y = np.asarray(y)
    return float(np.mean(np.where(y == 1, p, 1.0 - p)))


# -- exponentiated gradient ------------------------------------------------

@dataclass(frozen=True)
class EgdConfig:
    constraint: str = DEMPAR
    eps: float = 0.01
    iterations: int = 50
    eta: float = 2.0
    bound: float = 100.0
    # starting multiplier per constraint; the slack coordinate holds the rest
    init_multiplier: float = 0.25
    base_cfg: TrainConfig = TrainConfig(epochs=300, learning_rate=0.5)

    def __post_init__(self):
        if self.constraint not in (DEMPAR, EQODDS):
            raise InvalidConfig(f"constraint must be {DEMPAR!r} or {EQODDS!r}")
        if not 0.0 <= self.eps <= 1.0:
            raise InvalidConfig(f"eps must lie in [0, 1], got {self.eps}")
        if not (1 <= self.iterations <= 10**4):
            raise InvalidConfig("iterations must lie in [1, 1e4]")
        if self.eta <= 0 or self.bound <= 0:
            raise InvalidConfig("eta and bound must be positive")
        if not (self.init_multiplier > 0 and 8 * self.init_multiplier < self.bound):
            raise InvalidConfig("init_multiplier must be positive and leave slack mass")


def _constraint_groups(s, y, constraint):
    """Return (member masks, reference masks) for each constrained group."""
    if constraint == DEMPAR:
        everyone = np.ones_like(s, dtype=bool)
        return [s == 0, s == 1], [everyone, everyone]
    groups, refs = [], []
    for c in (0, 1):
        for g in (0, 1):
            groups.append((s == g) & (y == c))
            refs.append(y == c)
    return groups, refs


def _group_gaps(pred, groups, refs):
    return np.array([pred[g].mean() - pred[r].mean() for g, r in zip(groups, refs)])


def egd_train(dataset, split, cfg: EgdConfig = EgdConfig(),
              trace: Optional[list] = None) -> RandomizedClassifier:
    """Exponentiated-gradient reduction on the training rows of ``split``.

    Each constrained group ``g`` contributes two constraints,
    ``+/-(P(h=1|g) - P(h=1|ref(g))) <= eps``. The multipliers live on the
    simplex ``{lambda >= 0, sum = bound}`` together with one slack coordinate
    whose violation is always zero, so satisfied constraints drain their
    mass into the slack. Updates are ``lambda_k *= exp(eta * violation_k)``
    followed by renormalization; constraint multipliers start small
    (``init_multiplier``) so the first rounds do not overshoot. ``trace``, if
    given, receives the multiplier vector after every round.
    """
    X = dataset.features[split.tr]
    y = dataset.labels[split.tr].astype(float)
    s = dataset.sensitive[split.tr]
    groups, refs = _constraint_groups(s, y, cfg.constraint)
    if any(not g.any() for g in groups) or len(np.unique(y)) < 2:
        raise DegenerateGroups("every constrained group and both Y classes need records")

    n = len(y)
    G = len(groups)
    # d gamma_g / d h_i for each record
    dgamma = np.stack([g / g.sum() - r / r.sum() for g, r in zip(groups, refs)])
    K = 2 * G
    lam = np.full(K + 1, cfg.init_multiplier)
    lam[-1] = cfg.bound - K * cfg.init_multiplier
    theta = np.log(lam)

    models: List[LinearModel] = []
    for _ in range(cfg.iterations):
        net = lam[:G] - lam[G:2 * G]
        c1 = (y == 0) / n + net @ dgamma
        c0 = (y == 1) / n
        labels = (c0 > c1).astype(float)
        w = np.abs(c0 - c1)
        if not w.sum() > 0:
            w = np.ones(n)
        h = fit_logreg(X, labels, w, cfg.base_cfg)
        models.append(h)
        gaps = _group_gaps(predict_hard(h, X, 0.5).astype(float), groups, refs)
        viol = np.concatenate([gaps - cfg.eps, -gaps - cfg.eps, [0.0]])
        theta = theta + cfg.eta * viol
        z = np.exp(theta - theta.max())
        lam = cfg.bound * z / z.sum()
        if trace is not None:
            trace.append(lam.copy())

    merged: list = []
    for h in models:
        for k, (m, cnt) in enumerate(merged):
            if m == h:
                merged[k] = (m, cnt + 1)
                break
        else:
            merged.append((h, 1))
    T = len(models)
    return RandomizedClassifier(tuple(Component(m, 0.5, cnt / T) for m, cnt in merged))


# -- adversarial debiasing -------------------------------------------------

@dataclass(frozen=True)
class AdvDebiasConfig:
    adversary_weight: float = 1.0
    target_steps: int = 1
    disc_steps: int = 5
    rounds: int = 500
    target_cfg: TrainConfig = TrainConfig()
    disc_cfg: TrainConfig = TrainConfig(learning_rate=5.0)
    hidden: tuple = DEFAULT_HIDDEN
    disc_feature: str = "score"

    def __post_init__(self):
        if not 0.0 <= self.adversary_weight <= 100.0:
            raise InvalidConfig("adversary_weight must lie in [0, 100]")
        if self.rounds < 1 or self.target_steps < 0 or self.disc_steps < 0:
            raise InvalidConfig("rounds must be positive and step counts non-negative")
        if self.disc_feature not in ("score", "logit"):
            raise InvalidConfig("disc_feature must be 'score' or 'logit'")


class _Discriminator:
    """Class-balanced logistic regression predicting S from the target's output.

    ``feature`` is ``"score"`` (the soft label) or ``"logit"`` (its log-odds).
    """

    def __init__(self, s, cfg: TrainConfig, feature: str = "score"):
        self.s = np.asarray(s, dtype=float)
        n1 = self.s.sum()
        n0 = len(self.s) - n1
        self.w = np.where(self.s == 1, 0.5 / n1, 0.5 / n0)
        self.lr = cfg.learning_rate
        self.l2 = cfg.l2
        self.feature = feature
        self.a = 0.0
        self.c = 0.0

    def _x(self, z):
        return expit(z) if self.feature == "score" else z

    def step(self, z):
        x = self._x(z)
        r = self.w * (expit(self.a * x + self.c) - self.s)
        self.a -= self.lr * (r @ x + 2.0 * self.l2 * self.a)
        self.c -= self.lr * r.sum()

    def logit_grad(self, idx, z):
        """Gradient of the discriminator loss w.r.t. the target logits of rows ``idx``.

        Weights are renormalized over the batch so full-batch and mini-batch
        training see the same magnitude.
        """
        w = self.w[idx]
        w = w / w.sum()
        x = self._x(z)
        g = w * (expit(self.a * x + self.c) - self.s[idx]) * self.a
        return g * x * (1.0 - x) if self.feature == "score" else g


def advdebias_train(dataset, split, cfg: AdvDebiasConfig = AdvDebiasConfig()):
    """Alternate discriminator and target updates for ``cfg.rounds`` rounds.

    The target minimizes ``task loss - adversary_weight * discriminator loss``
    with the discriminator frozen. With ``adversary_weight == 0`` the target
    updates are exactly those of ``fit_mlp`` for ``rounds * target_steps`` epochs.
    """
    X = dataset.features[split.tr]
    y = dataset.labels[split.tr]
    s = dataset.sensitive[split.tr]
    if s.min() == s.max():
        raise SingleClassSensitive("adversarial debiasing needs both S classes in training")
    trainer = _MlpTrainer(X, y, cfg.hidden, cfg.target_cfg)
    disc = _Discriminator(s, cfg.disc_cfg, cfg.disc_feature)
    alpha = cfg.adversary_weight
    extra = None if alpha == 0 else (lambda idx, z: -alpha * disc.logit_grad(idx, z))
    for _ in range(cfg.rounds):
        if cfg.disc_steps:
            z = trainer.logits()
            for _ in range(cfg.disc_steps):
                disc.step(z)
        for _ in range(cfg.target_steps):
            trainer.epoch(extra)
    return trainer.model()

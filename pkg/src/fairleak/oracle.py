"""Exact attack accuracies on finite joint laws of (Yhat, S) or (Yhat, S, Y).

Nothing here touches trained models; every quantity is a finite sum over a
probability table, which makes these functions the reference the empirical
attacks are checked against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .attacks import HardAttackFunction
from .errors import DegenerateCell, NotEqOdds, ZeroTotal

SUM_TOL = 1e-12
EQODDS_TOL = 1e-12
MIN_MARGINAL = 1e-6


@dataclass(frozen=True)
class JointDistribution:
    """Probability table indexed ``p[yhat, s]`` or ``p[yhat, s, y]``."""

    p: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        if p.shape not in ((2, 2), (2, 2, 2)):
            raise ValueError(f"table must be 2x2 or 2x2x2, got {p.shape}")
        if (p < 0).any():
            raise ValueError("probabilities must be non-negative")
        if abs(p.sum() - 1.0) > SUM_TOL:
            raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
        ps = self.s_marginal_of(p)
        if (ps <= 0).any():
            raise ValueError("both S marginals must be positive")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @staticmethod
    def s_marginal_of(p):
        return p.sum(axis=tuple(k for k in range(p.ndim) if k != 1))

    @property
    def dims(self) -> int:
        return self.p.ndim

    def yhat_s(self) -> np.ndarray:
        """The (Yhat, S) marginal."""
        return self.p if self.dims == 2 else self.p.sum(axis=2)

    def s_marginal(self) -> np.ndarray:
        return self.yhat_s().sum(axis=0)

    def sy_marginal(self) -> np.ndarray:
        if self.dims != 3:
            raise ValueError("needs a (Yhat, S, Y) table")
        return self.p.sum(axis=0)

    def swap_s(self) -> "JointDistribution":
        return JointDistribution(self.p[:, ::-1] if self.dims == 2 else self.p[:, ::-1, :])


def joint_from_counts(counts) -> JointDistribution:
    c = np.asarray(counts, dtype=float)
    if (c < 0).any():
        raise ValueError("counts must be non-negative")
    tot = c.sum()
    if tot <= 0:
        raise ZeroTotal("counts sum to zero")
    return JointDistribution(c / tot)


def positive_rates(j: JointDistribution) -> np.ndarray:
    """``P(Yhat=1 | S=s)`` for s = 0, 1."""
    q = j.yhat_s()
    return q[1] / q.sum(axis=0)


def dempar_level_of(j: JointDistribution) -> float:
    r = positive_rates(j)
    return abs(float(r[1] - r[0]))


def attack_ba(j: JointDistribution, fn: HardAttackFunction) -> float:
    """``(P(fn(Yhat)=0 | S=0) + P(fn(Yhat)=1 | S=1)) / 2`` from the table."""
    q = j.yhat_s()
    ps = q.sum(axis=0)
    out = fn.apply([0, 1])
    hit0 = sum(q[yh, 0] for yh in (0, 1) if out[yh] == 0) / ps[0]
    hit1 = sum(q[yh, 1] for yh in (0, 1) if out[yh] == 1) / ps[1]
    return 0.5 * (float(hit0) + float(hit1))


def exact_attack_ba(j: JointDistribution) -> tuple:
    """Best of the four hard-label maps; ties resolved in enum order."""
    best, best_ba = None, -1.0
    for fn in HardAttackFunction:
        ba = attack_ba(j, fn)
        if ba > best_ba:
            best, best_ba = fn, ba
    return best, best_ba


def dp_theorem_check(j: JointDistribution, tol: float = 1e-12) -> tuple:
    """(brute-force best accuracy, ``(1 + DemPar level) / 2``, agree within tol)."""
    lhs = exact_attack_ba(j)[1]
    rhs = 0.5 * (1.0 + dempar_level_of(j))
    return lhs, rhs, abs(lhs - rhs) < tol


def _conditional_positive(j: JointDistribution, fn=HardAttackFunction.IDENTITY) -> np.ndarray:
    """``P(fn(Yhat)=1 | S=s, Y=y)`` as a 2x2 array indexed [s, y]."""
    sy = j.sy_marginal()
    if (sy <= 0).any():
        raise DegenerateCell("every (S, Y) cell needs positive mass")
    out = fn.apply([0, 1])
    num = sum(j.p[yh] for yh in (0, 1) if out[yh] == 1)
    return np.asarray(num, dtype=float) / sy if np.ndim(num) else np.zeros((2, 2))


def eqodds_gap_of(j: JointDistribution) -> float:
    r = _conditional_positive(j)
    return float(np.max(np.abs(r[0] - r[1])))


def dependency_of(j: JointDistribution) -> float:
    """``|P(Y=0|S=0) - P(Y=0|S=1)|``."""
    sy = j.sy_marginal()
    py0 = sy[:, 0] / sy.sum(axis=1)
    return abs(float(py0[0] - py0[1]))


def _eqodds_formula(py0_given_s, shat1_given_s1_y) -> float:
    # 1/2 + 1/2 (P(Y=0|S=0) - P(Y=0|S=1)) (P(Shat=1|S=1,Y=1) - P(Shat=1|S=1,Y=0))
    return 0.5 + 0.5 * (py0_given_s[0] - py0_given_s[1]) * (shat1_given_s1_y[1] - shat1_given_s1_y[0])


def eqodds_closed_form(j: JointDistribution, attack: HardAttackFunction) -> tuple:
    """(direct balanced accuracy, closed-form balanced accuracy) for an EqOdds law."""
    if j.dims != 3:
        raise ValueError("needs a (Yhat, S, Y) table")
    if eqodds_gap_of(j) >= EQODDS_TOL:
        raise NotEqOdds(f"table violates EqOdds (gap {eqodds_gap_of(j):.3g})")
    direct = attack_ba(j, attack)
    sy = j.sy_marginal()
    py0 = sy[:, 0] / sy.sum(axis=1)
    shat = _conditional_positive(j, attack)
    return direct, float(_eqodds_formula(py0, shat[1]))


def make_eqodds_joint(p_y_given_s, p_s1: float, tpr: float, fpr: float) -> JointDistribution:
    """Law with ``P(Yhat=1|S=s,Y=1) = tpr`` and ``P(Yhat=1|S=s,Y=0) = fpr`` for both s.

    ``p_y_given_s`` is ``(P(Y=1|S=0), P(Y=1|S=1))``.
    """
    vals = [*p_y_given_s, p_s1, tpr, fpr]
    if any(not 0.0 <= v <= 1.0 for v in vals):
        raise ValueError("all inputs must lie in [0, 1]")
    ps = np.array([1.0 - p_s1, p_s1])
    py1 = np.asarray(p_y_given_s, dtype=float)
    sy = np.stack([ps * (1.0 - py1), ps * py1], axis=1)  # [s, y]
    if (sy <= 0).any():
        raise DegenerateCell("every (S, Y) cell needs positive mass")
    rate = np.array([fpr, tpr])  # indexed by y
    p = np.empty((2, 2, 2))
    p[1] = sy * rate
    p[0] = sy * (1.0 - rate)
    return JointDistribution(p / p.sum())


def random_joint(seed: int, dims: int = 2) -> JointDistribution:
    """Normalized exponential variates; redrawn while a needed marginal is tiny."""
    if dims not in (2, 3):
        raise ValueError("dims must be 2 or 3")
    rng = np.random.default_rng(seed)
    while True:
        p = rng.exponential(size=(2,) * dims)
        p = p / p.sum()
        # S marginal for (Yhat, S); (S, Y) cells for (Yhat, S, Y)
        if (p.sum(axis=0) >= MIN_MARGINAL).all():
            return JointDistribution(p)

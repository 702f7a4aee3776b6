"""Brute-force sweeps that check the attack-accuracy identities.

Each check returns a :class:`CheckResult` with the largest deviation seen.
The CLI ``verify-theorems`` command and the acceptance tests both call
:func:`run_all`.
"""

from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass

import numpy as np

from . import oracle
from .attacks import HardAttackFunction, adapt_aia_h
from .metrics import dempar_level

GRID = (0.1, 0.3, 0.5, 0.7, 0.9)
GRID_P_S1 = 0.3
SAMPLE_N = (10, 500)


@dataclass(frozen=True)
class CheckResult:
    name: str
    count: int
    max_deviation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.max_deviation < self.tolerance)

    def to_dict(self) -> dict:
        return {**asdict(self), "passed": self.passed}


def check_dp_joints(k: int, seed: int) -> CheckResult:
    """Best hard-label attack on ``k`` random (Yhat, S) tables vs ``(1 + DemPar level) / 2``."""
    dev = 0.0
    for i in range(k):
        lhs, rhs, _ = oracle.dp_theorem_check(oracle.random_joint(seed + i, 2))
        dev = max(dev, abs(lhs - rhs))
    return CheckResult("dp_theorem_joints", k, dev, 1e-12)


def random_hard_sample(rng) -> tuple:
    """A random finite (Yhat, S) sample with both S classes present."""
    n = int(rng.integers(SAMPLE_N[0], SAMPLE_N[1] + 1))
    p = rng.exponential(size=4)
    p /= p.sum()
    while True:
        cells = rng.choice(4, size=n, p=p)
        s = cells % 2
        if 0 < s.sum() < n:
            return cells // 2, s


def check_dp_samples(k: int, seed: int) -> CheckResult:
    """Tuned hard-label attack on finite samples vs the bound from the same sample."""
    rng = np.random.default_rng(seed)
    dev = 0.0
    for _ in range(k):
        yh, s = random_hard_sample(rng)
        res = adapt_aia_h(yh, s, yh, s)
        dev = max(dev, abs(res.tuned_accuracy - 0.5 * (1.0 + dempar_level(yh, s))))
    return CheckResult("dp_theorem_samples", k, dev, 1e-12)


def eqodds_grid():
    for p0, p1, tpr, fpr in itertools.product(GRID, repeat=4):
        yield (p0, p1, tpr, fpr), oracle.make_eqodds_joint((p0, p1), GRID_P_S1, tpr, fpr)


def check_eqodds_formula() -> CheckResult:
    dev, count = 0.0, 0
    for _, j in eqodds_grid():
        for fn in HardAttackFunction:
            direct, formula = oracle.eqodds_closed_form(j, fn)
            dev = max(dev, abs(direct - formula))
            count += 1
    return CheckResult("eqodds_closed_form", count, dev, 1e-10)


def check_eqodds_null_branches() -> CheckResult:
    """Every attack is a coin flip when ``tpr == fpr`` or Y is independent of S."""
    dev, count = 0.0, 0
    for (p0, p1, tpr, fpr), j in eqodds_grid():
        if tpr != fpr and p0 != p1:
            continue
        for fn in HardAttackFunction:
            dev = max(dev, abs(oracle.eqodds_closed_form(j, fn)[0] - 0.5))
            count += 1
    return CheckResult("eqodds_null_branches", count, dev, 1e-12)


def check_eqodds_leaky_branch() -> CheckResult:
    """Outside both null branches some attack beats a coin flip.

    The deviation reported is how far the weakest such table falls short of
    a margin of 1e-3 above 0.5 (zero when all clear it).
    """
    worst, count = 0.0, 0
    for (p0, p1, tpr, fpr), j in eqodds_grid():
        if tpr == fpr or p0 == p1:
            continue
        best = max(oracle.eqodds_closed_form(j, fn)[0] for fn in HardAttackFunction)
        worst = max(worst, 0.5 + 1e-3 - best)
        count += 1
    return CheckResult("eqodds_leaky_branch", count, worst, 1e-12)


def run_all(sweeps: int, seed: int) -> list:
    if sweeps < 1:
        raise ValueError("sweeps must be at least 1")
    return [
        check_dp_joints(sweeps, seed),
        check_dp_samples(sweeps, seed),
        check_eqodds_formula(),
        check_eqodds_null_branches(),
        check_eqodds_leaky_branch(),
    ]

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fairleak.attacks import adapt_aia_h
from fairleak.errors import EmptyCell, OutOfRange, SingleClassActual, SingleClassSensitive
from fairleak.metrics import (
    SENTINEL,
    FairnessSummary,
    balanced_accuracy,
    candidate_thresholds,
    conditional_rates,
    dempar_level,
    dependency_ys,
    eqodds_gap,
    fairness_summary,
    optimal_threshold,
    positive_rate_by_group,
    roc_curve,
    theoretical_attack_bound,
)

binary = st.lists(st.integers(0, 1), min_size=2, max_size=60)


def _cells(counts):
    """Expand ``{(pred, s, y): count}`` into aligned vectors."""
    pred, s, y = [], [], []
    for (p, g, c), k in counts.items():
        pred += [p] * k
        s += [g] * k
        y += [c] * k
    return np.array(pred), np.array(s), np.array(y)


# -- balanced accuracy ----------------------------------------------------------

def test_balanced_accuracy_examples():
    s = np.array([0, 1, 0, 1, 1])
    assert balanced_accuracy(s, s) == 1.0
    assert balanced_accuracy(np.zeros(5, int), s) == 0.5
    assert balanced_accuracy([0, 1, 0, 1], [0, 0, 0, 1]) == pytest.approx(5 / 6, abs=1e-15)


def test_balanced_accuracy_single_class():
    with pytest.raises(SingleClassActual):
        balanced_accuracy([0, 1], [1, 1])


@given(pairs=st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=2, max_size=80))
def test_complement_symmetry(pairs):
    p, a = np.array(pairs).T
    if a.min() == a.max():
        return
    assert balanced_accuracy(1 - p, a) == pytest.approx(1 - balanced_accuracy(p, a), abs=1e-12)


# -- ROC ------------------------------------------------------------------------------

def test_roc_perfect_separation():
    roc = roc_curve([0.1, 0.9], [0, 1])
    assert any(f == 0 and t == 1 for f, t in zip(roc.fpr, roc.tpr))


def test_roc_all_equal_scores():
    roc = roc_curve([0.3] * 4, [0, 1, 0, 1])
    assert roc.thresholds.tolist() == [0.0, SENTINEL]
    assert list(zip(roc.fpr, roc.tpr)) == [(1.0, 1.0), (0.0, 0.0)]


def test_roc_midpoint_counts():
    roc = roc_curve([0.2, 0.4, 0.6, 0.8], [0, 1, 0, 1])
    k = int(np.flatnonzero(np.isclose(roc.thresholds, 0.5))[0])
    assert (roc.fpr[k], roc.tpr[k]) == (0.5, 0.5)


def test_roc_csv_header():
    lines = roc_curve([0.1, 0.9], [0, 1]).to_csv().splitlines()
    assert lines[0] == "upsilon,fpr,tpr"
    assert lines[1] == "0.0,1.0,1.0"


def test_candidate_set():
    assert candidate_thresholds([0.2, 0.6, 0.2]).tolist() == [0.0, 0.4, SENTINEL]
    assert SENTINEL > 1.0 and np.nextafter(SENTINEL, 0.0) == 1.0


@given(scores=st.lists(st.floats(0, 1), min_size=2, max_size=60), data=st.data())
def test_roc_monotone_with_endpoints(scores, data):
    lab = data.draw(st.lists(st.integers(0, 1), min_size=len(scores), max_size=len(scores)))
    if min(lab) == max(lab):
        return
    roc = roc_curve(scores, lab)
    assert np.all(np.diff(roc.thresholds) > 0)
    assert np.all(np.diff(roc.fpr) <= 0) and np.all(np.diff(roc.tpr) <= 0)
    assert (roc.fpr[0], roc.tpr[0]) == (1.0, 1.0)
    assert (roc.fpr[-1], roc.tpr[-1]) == (0.0, 0.0)


def test_roc_rejects_out_of_range():
    with pytest.raises(ValueError):
        roc_curve([0.5, 1.5], [0, 1])


# -- optimal threshold ------------------------------------------------------------

def brute_force_threshold(scores, labels):
    """O(n k) scan: recount TPR/FPR at every candidate; first minimizer wins."""
    scores, labels = np.asarray(scores), np.asarray(labels)
    u = sorted(set(scores.tolist()))
    cands = [0.0] + [(a + b) / 2 for a, b in zip(u, u[1:])] + [SENTINEL]
    cands = sorted(set(cands))
    best = None
    for c in cands:
        tp = sum(1 for x, l in zip(scores, labels) if l == 1 and x >= c)
        fp = sum(1 for x, l in zip(scores, labels) if l == 0 and x >= c)
        obj = (1 - tp / labels.sum()) ** 2 + (fp / (len(labels) - labels.sum())) ** 2
        if best is None or obj < best[1]:
            best = (c, obj)
    return best


def test_optimal_threshold_separated():
    u, obj = optimal_threshold(roc_curve([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]))
    assert obj == 0.0 and u == pytest.approx(0.5)


def test_optimal_threshold_anticorrelated_tie():
    roc = roc_curve([0.4, 0.6], [1, 0])
    assert len(roc) == 3
    u, obj = optimal_threshold(roc)
    assert (u, obj) == (0.0, 1.0)


def test_optimal_threshold_single_score():
    u, obj = optimal_threshold(roc_curve([0.7, 0.7, 0.7], [0, 1, 1]))
    assert u in (0.0, SENTINEL) and obj == 1.0


def test_optimal_threshold_matches_brute_force_1000():
    r = np.random.default_rng(2024)
    for _ in range(1000):
        n = int(r.integers(2, 40))
        lab = r.integers(0, 2, n)
        lab[:2] = (0, 1)
        # coarse grid so ties are frequent
        scores = r.integers(0, 11, n) / 10.0 if r.random() < 0.5 else r.random(n)
        assert optimal_threshold(roc_curve(scores, lab)) == brute_force_threshold(scores, lab)


# -- group metrics ----------------------------------------------------------------

def test_dempar_examples():
    s = np.array([0, 0, 1, 1])
    assert dempar_level([1, 0, 0, 1], s) == 0.0
    assert dempar_level(s, s) == 1.0
    pred, s, _ = _cells({(1, 1, 0): 40, (0, 1, 0): 10, (1, 0, 0): 15, (0, 0, 0): 35})
    assert dempar_level(pred, s) == pytest.approx(0.5, abs=1e-15)
    with pytest.raises(SingleClassSensitive):
        dempar_level([0, 1], [1, 1])


def test_eqodds_examples():
    y = np.array([0, 1, 0, 1, 0, 1, 0, 1])
    s = np.array([0, 0, 0, 0, 1, 1, 1, 1])
    assert eqodds_gap(y, s, y) == 0.0
    assert eqodds_gap(s, s, y) == 1.0


def test_eqodds_hand_counted():
    # P(pred=1|s,y): (0,0) 3/10, (1,0) 5/10, (0,1) 8/10, (1,1) 9/20 -> gaps 0.2 and 0.35
    pred, s, y = _cells({(1, 0, 0): 3, (0, 0, 0): 7, (1, 1, 0): 5, (0, 1, 0): 5,
                         (1, 0, 1): 8, (0, 0, 1): 2, (1, 1, 1): 9, (0, 1, 1): 11})
    assert eqodds_gap(pred, s, y) == pytest.approx(0.35, abs=1e-15)
    rates = conditional_rates(pred, s, y)
    assert rates[(1, 1)] == 0.45


def test_eqodds_empty_cell():
    with pytest.raises(EmptyCell) as e:
        eqodds_gap([0, 1, 1], [0, 0, 1], [0, 1, 0])
    assert (e.value.s, e.value.y) == (1, 1)


def test_dependency_examples():
    assert dependency_ys([0, 1, 0, 1], [0, 0, 1, 1]) == 0.0
    assert dependency_ys([0, 0, 1, 1], [0, 0, 1, 1]) == 1.0


@pytest.mark.parametrize("level,bound", [(0.0, 0.5), (1.0, 1.0), (0.5, 0.75)])
def test_theoretical_bound(level, bound):
    assert theoretical_attack_bound(level) == bound


def test_theoretical_bound_range():
    for bad in (-0.1, 1.1):
        with pytest.raises(OutOfRange):
            theoretical_attack_bound(bad)


@given(rows=st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1), st.integers(0, 1)),
                     min_size=4, max_size=80))
def test_group_swap_symmetry(rows):
    p, s, y = np.array(rows).T
    if len({(a, b) for a, b in zip(s, y)}) < 4:
        return
    assert dempar_level(p, 1 - s) == dempar_level(p, s)
    assert eqodds_gap(p, 1 - s, y) == eqodds_gap(p, s, y)
    assert dependency_ys(y, 1 - s) == dependency_ys(y, s)


@given(rows=st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=2, max_size=80))
def test_bound_dominates_hard_attack(rows):
    p, s = np.array(rows).T
    if s.min() == s.max():
        return
    res = adapt_aia_h(p, s, p, s)
    assert theoretical_attack_bound(dempar_level(p, s)) >= res.tuned_accuracy - 1e-12


def test_fairness_summary_consistency():
    pred, s, y = _cells({(1, 0, 0): 3, (0, 0, 0): 7, (1, 1, 0): 5, (0, 1, 0): 5,
                         (1, 0, 1): 8, (0, 0, 1): 2, (1, 1, 1): 9, (0, 1, 1): 11})
    fs = fairness_summary(pred, s, y)
    r = fs.group_rates["positive_rate"]
    assert fs.dempar_level == abs(r["s1"] - r["s0"])
    assert r == {f"s{g}": v for g, v in positive_rate_by_group(pred, s).items()}
    assert FairnessSummary.from_dict(fs.to_dict()) == fs
    for v in (fs.dempar_level, fs.eqodds_gap, fs.dependency_ys):
        assert 0 <= v <= 1

import numpy as np
import pytest

from conftest import family_run
from fairleak.attacks import adapt_aia_h
from fairleak.data import SplitPlan, TabularDataset
from fairleak.errors import DegenerateGroups, InvalidConfig, SingleClassSensitive
from fairleak.fairness import (
    AdvDebiasConfig,
    Component,
    EgdConfig,
    RandomizedClassifier,
    advdebias_train,
    egd_train,
    expected_accuracy,
    expected_dempar_level,
    expected_group_rates,
    load_randomized,
    sample_prediction,
    save_randomized,
)
from fairleak.metrics import dempar_level
from fairleak.models import LinearModel, TrainConfig, fit_logreg, fit_mlp, predict_hard, predict_soft

ZERO = LinearModel([0.0], -10.0)
ONE = LinearModel([0.0], 10.0)
STEP = LinearModel([5.0], 0.0)  # positive iff x >= 0


def _tr(ds, split):
    return ds.features[split.tr], ds.labels[split.tr], ds.sensitive[split.tr]


# -- randomized classifier ---------------------------------------------------------

def test_weights_must_sum_to_one():
    with pytest.raises(InvalidConfig):
        RandomizedClassifier((Component(ZERO, 0.5, 0.6), Component(ONE, 0.5, 0.5)))
    with pytest.raises(InvalidConfig):
        RandomizedClassifier(())


def test_single_component_sampling_is_deterministic_prediction():
    X = np.linspace(-2, 2, 41).reshape(-1, 1)
    rc = RandomizedClassifier((Component(STEP, 0.5, 1.0),))
    assert np.array_equal(sample_prediction(rc, X, seed=3), predict_hard(STEP, X, 0.5))


def test_half_half_constant_mixture():
    X = np.zeros((10000, 1))
    rc = RandomizedClassifier((Component(ZERO, 0.5, 0.5), Component(ONE, 0.5, 0.5)))
    a = sample_prediction(rc, X, seed=1)
    assert a.mean() == pytest.approx(0.5, abs=0.02)
    assert np.array_equal(a, sample_prediction(rc, X, seed=1))


def test_expected_rates_constant_mixture():
    X = np.random.default_rng(0).standard_normal((50, 1))
    s = np.arange(50) % 2
    rc = RandomizedClassifier((Component(ZERO, 0.5, 0.3), Component(ONE, 0.5, 0.7)))
    rates = expected_group_rates(rc, X, s)
    assert rates[0] == pytest.approx(0.7, abs=1e-15) and rates[1] == pytest.approx(0.7, abs=1e-15)
    assert expected_dempar_level(rc, X, s) == pytest.approx(0.0, abs=1e-15)


def test_expected_rates_single_component_is_empirical():
    X = np.array([[-1.0], [1.0], [2.0], [-3.0], [0.5]])
    s = np.array([0, 0, 1, 1, 1])
    rc = RandomizedClassifier((Component(STEP, 0.5, 1.0),))
    assert expected_dempar_level(rc, X, s) == dempar_level(predict_hard(STEP, X), s)


def test_expected_rates_three_components():
    # x:      -1   1   2  | -3  0.5
    # STEP:    0   1   1  |  0  1
    # STEP@.99 (x >= ~0.92): 0 1 1 | 0 0
    X = np.array([[-1.0], [1.0], [2.0], [-3.0], [0.5]])
    s = np.array([0, 0, 0, 1, 1])
    rc = RandomizedClassifier((Component(STEP, 0.5, 0.5), Component(STEP, 0.99, 0.3),
                               Component(ONE, 0.5, 0.2)))
    rates = expected_group_rates(rc, X, s)
    assert rates[0] == pytest.approx(0.5 * 2 / 3 + 0.3 * 2 / 3 + 0.2, abs=1e-12)
    assert rates[1] == pytest.approx(0.5 * 1 / 2 + 0.3 * 0 + 0.2, abs=1e-12)
    with pytest.raises(SingleClassSensitive):
        expected_group_rates(rc, X, np.zeros(5, int))


def test_randomized_json_round_trip(tmp_path):
    rc = RandomizedClassifier((Component(STEP, 0.5, 0.25), Component(ONE, 0.3, 0.75)))
    save_randomized(rc, tmp_path / "rc.json")
    assert load_randomized(tmp_path / "rc.json") == rc


# -- EGD ------------------------------------------------------------------------------

def test_egd_config_validation():
    for kw in ({"eps": -0.1}, {"eps": 1.1}, {"iterations": 0}, {"iterations": 10**4 + 1},
               {"eta": 0}, {"bound": -1}, {"constraint": "parity"}):
        with pytest.raises(InvalidConfig):
            EgdConfig(**kw)


def test_egd_vacuous_matches_unconstrained(family):
    ds, split = family
    X, y, _ = _tr(ds, split)
    rc = egd_train(ds, split, EgdConfig(eps=1.0))
    plain = fit_logreg(X, y, cfg=EgdConfig().base_cfg)
    acc_plain = np.mean(predict_hard(plain, X) == y)
    assert abs(expected_accuracy(rc, X, y) - acc_plain) <= 0.02


def test_egd_tight_dempar(family):
    ds, split = family
    X, y, s = _tr(ds, split)
    plain = fit_logreg(X, y, cfg=EgdConfig().base_cfg)
    assert dempar_level(predict_hard(plain, X), s) >= 0.4
    trace = []
    rc = egd_train(ds, split, EgdConfig(eps=0.01), trace=trace)
    assert expected_dempar_level(rc, X, s) <= 0.05
    assert rc.weights.sum() == pytest.approx(1.0, abs=1e-12)
    # multiplier simplex after every round
    assert len(trace) == 50
    for lam in trace:
        assert (lam >= 0).all() and abs(lam.sum() - 100.0) < 1e-9
    # the attack bound chain on sampled predictions
    hard = sample_prediction(rc, X, seed=0)
    res = adapt_aia_h(hard, s, hard, s)
    assert res.tuned_accuracy <= 0.5 * (1 + expected_dempar_level(rc, X, s) + 3 / np.sqrt(len(s)))


def test_egd_eps_monotone(family):
    ds, split = family
    X, _, s = _tr(ds, split)
    levels = [expected_dempar_level(egd_train(ds, split, EgdConfig(eps=e)), X, s)
              for e in (0.3, 0.1, 0.01)]
    assert all(b <= a + 0.03 for a, b in zip(levels, levels[1:]))


def test_egd_eqodds_reduces_gap(family):
    ds, split = family
    X, y, s = _tr(ds, split)
    rc = egd_train(ds, split, EgdConfig(constraint="eqodds", eps=0.02))
    p = rc.weights @ rc.component_predictions(X)
    gaps = [abs(p[(s == 0) & (y == c)].mean() - p[(s == 1) & (y == c)].mean()) for c in (0, 1)]
    plain = predict_hard(fit_logreg(X, y, cfg=EgdConfig().base_cfg), X)
    plain_gaps = [abs(plain[(s == 0) & (y == c)].mean() - plain[(s == 1) & (y == c)].mean())
                  for c in (0, 1)]
    assert max(gaps) < max(plain_gaps)


def test_egd_degenerate_groups():
    ds = TabularDataset(np.arange(8.0).reshape(-1, 1), [0, 1] * 4, [0] * 8)
    split = SplitPlan(np.arange(6), [6, 7], [6], [7])
    with pytest.raises(DegenerateGroups):
        egd_train(ds, split)


def test_egd_deterministic(family):
    ds, split = family
    cfg = EgdConfig(iterations=10)
    assert egd_train(ds, split, cfg) == egd_train(ds, split, cfg)


# -- adversarial debiasing ------------------------------------------------------------

def test_advdebias_config_validation():
    for kw in ({"adversary_weight": -1}, {"adversary_weight": 101}, {"rounds": 0},
               {"disc_steps": -1}, {"disc_feature": "hidden"}):
        with pytest.raises(InvalidConfig):
            AdvDebiasConfig(**kw)


def test_advdebias_alpha_zero_is_plain_mlp(family):
    ds, split = family
    X, y, _ = _tr(ds, split)
    tcfg = TrainConfig(epochs=1, seed=5, batch_size=64)
    cfg = AdvDebiasConfig(adversary_weight=0.0, rounds=20, target_steps=2, target_cfg=tcfg,
                          hidden=(8, 8))
    adv = advdebias_train(ds, split, cfg)
    plain = fit_mlp(X, y, TrainConfig(epochs=40, seed=5, batch_size=64), hidden=(8, 8))
    assert adv == plain


def test_advdebias_deterministic_and_debiases(family):
    ds, split = family
    cfg = AdvDebiasConfig(adversary_weight=1.0, rounds=300, hidden=(16, 16))
    a, b = advdebias_train(ds, split, cfg), advdebias_train(ds, split, cfg)
    assert a == b
    soft = predict_soft(a, ds.features)
    s = ds.sensitive
    base = predict_soft(advdebias_train(ds, split, AdvDebiasConfig(
        adversary_weight=0.0, rounds=300, hidden=(16, 16))), ds.features)
    gap = abs(soft[s == 1].mean() - soft[s == 0].mean())
    base_gap = abs(base[s == 1].mean() - base[s == 0].mean())
    assert gap < 0.5 * base_gap


def test_advdebias_needs_both_groups():
    ds = TabularDataset(np.arange(8.0).reshape(-1, 1), [0, 1] * 4, [0] * 6 + [1] * 2)
    split = SplitPlan(np.arange(6), [6, 7], [6], [7])
    with pytest.raises(SingleClassSensitive):
        advdebias_train(ds, split, AdvDebiasConfig(rounds=1))

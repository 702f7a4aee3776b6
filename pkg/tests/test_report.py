import json

import pytest

from conftest import family_run
from fairleak.attacks import AttackResult, HardAttackFunction
from fairleak.errors import InvalidConfig
from fairleak.metrics import FairnessSummary
from fairleak.pipeline import SEED_OFFSETS, audit_dataset, derive_seeds
from fairleak.report import AuditReport

FS = FairnessSummary(0.1, None, None, {"positive_rate": {"s0": 0.4, "s1": 0.5}})
HARD = AttackResult(0.55, 0.52, chosen_function=HardAttackFunction.IDENTITY, theoretical_bound=0.55)


def _report(**kw):
    base = dict(dataset_summary={"n": 4}, target_utility={"accuracy": 0.9}, fairness=FS,
                attacks={"adapt_aia_h": HARD})
    return AuditReport(**{**base, **kw})


def test_round_trip_and_keys():
    r = _report(seeds={"split": 0})
    d = json.loads(r.to_json())
    assert d["report_version"] == 1
    assert d["attacks"]["adapt_aia_h"]["label_mode"] == "hard"
    assert all(k == k.lower() for k in d)
    assert AuditReport.from_json(r.to_json()) == r


def test_invariants():
    with pytest.raises(InvalidConfig):
        _report(attacks={"adapt_aia_h": AttackResult(1.2, 0.5, theoretical_bound=0.5)})
    with pytest.raises(InvalidConfig):
        _report(attacks={"adapt_aia_h": AttackResult(0.6, 0.5)})
    with pytest.raises(InvalidConfig):
        _report(target_utility={"accuracy": -0.1})


def test_version_checked():
    d = _report().to_dict()
    d["report_version"] = 2
    with pytest.raises(InvalidConfig):
        AuditReport.from_dict(d)


def test_seed_fan_out():
    assert derive_seeds(10) == {k: 10 + v for k, v in SEED_OFFSETS.items()}
    assert sorted(SEED_OFFSETS.values()) == list(range(len(SEED_OFFSETS)))


def test_audit_dataset_reproducible():
    ds, _ = family_run(1)
    a, _ = audit_dataset(ds, seed=4)
    b, _ = audit_dataset(ds, seed=4)
    assert a.to_json() == b.to_json()
    assert a.seeds["attack"] == 6

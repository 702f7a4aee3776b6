"""Machine-readable audit report."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from .attacks import AttackResult
from .errors import InvalidConfig
from .metrics import FairnessSummary

REPORT_VERSION = 1
LABEL_MODES = {"adapt_aia_s": "soft", "baseline_aia": "soft", "adapt_aia_h": "hard"}


def _attacks_to_dict(attacks: dict) -> dict:
    return {name: {**res.to_dict(), "label_mode": LABEL_MODES.get(name, "soft")}
            for name, res in attacks.items()}


def _attacks_from_dict(d: dict) -> dict:
    return {name: AttackResult.from_dict(v) for name, v in d.items()}


def _check_attacks(attacks: dict) -> None:
    for name, res in attacks.items():
        for acc in (res.tuned_accuracy, res.eval_accuracy):
            if not 0.0 <= acc <= 1.0:
                raise InvalidConfig(f"{name}: accuracy {acc} outside [0, 1]")
        if LABEL_MODES.get(name) == "hard" and res.theoretical_bound is None:
            raise InvalidConfig(f"{name}: hard-label result lacks theoretical_bound")


@dataclass(frozen=True)
class AuditReport:
    dataset_summary: dict
    target_utility: Optional[dict]
    fairness: FairnessSummary
    attacks: dict
    defense: Optional[dict] = None
    seeds: dict = field(default_factory=dict)
    configs: dict = field(default_factory=dict)
    report_version: int = REPORT_VERSION

    def __post_init__(self):
        _check_attacks(self.attacks)
        if self.defense is not None:
            _check_attacks(self.defense["attacks"])
        for util in (self.target_utility, (self.defense or {}).get("target_utility")):
            for k, v in (util or {}).items():
                if v is not None and not 0.0 <= v <= 1.0:
                    raise InvalidConfig(f"utility {k}={v} outside [0, 1]")

    def to_dict(self) -> dict:
        out = {
            "report_version": self.report_version,
            "dataset_summary": self.dataset_summary,
            "target_utility": self.target_utility,
            "fairness": self.fairness.to_dict(),
            "attacks": _attacks_to_dict(self.attacks),
            "defense": None,
            "seeds": self.seeds,
            "configs": self.configs,
        }
        if self.defense is not None:
            out["defense"] = {**self.defense,
                              "fairness": self.defense["fairness"].to_dict(),
                              "attacks": _attacks_to_dict(self.defense["attacks"])}
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "AuditReport":
        if d.get("report_version") != REPORT_VERSION:
            raise InvalidConfig(f"unsupported report_version {d.get('report_version')!r}")
        defense = d.get("defense")
        if defense is not None:
            defense = {**defense,
                       "fairness": FairnessSummary.from_dict(defense["fairness"]),
                       "attacks": _attacks_from_dict(defense["attacks"])}
        return cls(
            dataset_summary=d["dataset_summary"],
            target_utility=d["target_utility"],
            fairness=FairnessSummary.from_dict(d["fairness"]),
            attacks=_attacks_from_dict(d["attacks"]),
            defense=defense,
            seeds=d.get("seeds", {}),
            configs=d.get("configs", {}),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "AuditReport":
        return cls.from_dict(json.loads(text))

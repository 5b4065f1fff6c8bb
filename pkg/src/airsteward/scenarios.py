"""Scenario and corpus file schema shared by the evaluator, simulator, and service.

A scenario bundles everything the planner needs for one situation; a
corpus case adds the ground-truth (plan, chain) pair. Corpus files are
JSONL, one case per line.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

from .planner import EnvInput, KnowledgeBase, season_for
from .profiles import Household
from .schema import (
    ControlPlan,
    DeviceState,
    HealthCondition,
    OutdoorWeather,
    PopulationGroup,
    ReasoningChain,
    SchemaError,
    SensorSnapshot,
    ThermalPreference,
    canonical_json,
    parse_timestamp,
)


@dataclass(frozen=True)
class Scenario:
    env: EnvInput
    household: Household
    device: DeviceState
    epidemic_active: bool = False
    prevalent_illnesses: tuple[HealthCondition, ...] = ()
    scenario_id: str = ""

    def knowledge_base(self, kb: KnowledgeBase) -> KnowledgeBase:
        """The configured knowledge base with this scenario's flags applied."""
        return kb.with_flags(
            epidemic_active=self.epidemic_active,
            prevalent_illnesses=self.prevalent_illnesses,
        )

    def to_payload(self) -> dict:
        return {
            "id": self.scenario_id,
            "env": {
                "outdoor": self.env.outdoor.to_payload(),
                "indoor": self.env.indoor.to_payload(),
            },
            "household": household_to_payload(self.household),
            "device": self.device.to_payload(),
            "kb_flags": {
                "epidemic_active": self.epidemic_active,
                "prevalent_illnesses": [c.value for c in self.prevalent_illnesses],
            },
        }

    @classmethod
    def from_payload(cls, payload: Mapping, hemisphere: str = "north") -> "Scenario":
        env_raw = payload.get("env")
        if env_raw is None:
            raise SchemaError("missing field env")
        outdoor = OutdoorWeather.from_payload(env_raw["outdoor"])
        indoor = SensorSnapshot.from_payload(env_raw["indoor"])
        env = EnvInput(outdoor=outdoor, indoor=indoor,
                       season=season_for(outdoor.timestamp, hemisphere))
        kb_flags = payload.get("kb_flags", {})
        return cls(
            env=env,
            household=household_from_payload(payload.get("household", {"members": []}),
                                             default_ts=outdoor.timestamp),
            device=DeviceState.from_payload(payload["device"]),
            epidemic_active=bool(kb_flags.get("epidemic_active", False)),
            prevalent_illnesses=tuple(
                HealthCondition(c) for c in kb_flags.get("prevalent_illnesses", [])
            ),
            scenario_id=str(payload.get("id", "")),
        )


def household_to_payload(household: Household) -> dict:
    return {
        "members": [
            {
                "group": profile.group.value,
                "preference": profile.preference.value,
                "conditions": sorted(c.value for c in profile.active_conditions),
            }
            for _, profile in sorted(household.members.items(), key=lambda kv: kv[0].value)
        ]
    }


def household_from_payload(payload: Mapping, default_ts: str) -> Household:
    """Build the household through apply() so the replay invariant holds."""
    from .profiles import apply as apply_records, empty_household
    from .schema import MemoryTagRecord, TagAction

    added_at = parse_timestamp(default_ts)
    records = []
    for member in payload.get("members", []):
        group = PopulationGroup(member["group"])
        records.append(MemoryTagRecord(group=group, action=TagAction.SET_GROUP_INFO,
                                       source_utterance_id="scenario"))
        preference = ThermalPreference(member.get("preference", "neutral"))
        if preference is not ThermalPreference.NEUTRAL:
            records.append(MemoryTagRecord(group=group, action=TagAction.SET_PREFERENCE,
                                           preference=preference,
                                           source_utterance_id="scenario"))
        for name in member.get("conditions", []):
            records.append(MemoryTagRecord(group=group, action=TagAction.ADD_CONDITION,
                                           condition=HealthCondition(name),
                                           source_utterance_id="scenario"))
    return apply_records(records, empty_household(), added_at)


@dataclass(frozen=True)
class CorpusCase:
    case_id: str
    scenario: Scenario
    truth_plan: ControlPlan
    truth_chain: ReasoningChain

    def to_payload(self) -> dict:
        payload = self.scenario.to_payload()
        return {
            "id": self.case_id or payload.get("id", ""),
            "scenario": {k: v for k, v in payload.items() if k != "id"},
            "truth": {
                "plan": self.truth_plan.to_payload(),
                "chain": self.truth_chain.to_payload(),
            },
        }

    @classmethod
    def from_payload(cls, payload: Mapping, hemisphere: str = "north") -> "CorpusCase":
        scenario_raw = dict(payload["scenario"])
        scenario_raw.setdefault("id", payload.get("id", ""))
        truth = payload["truth"]
        return cls(
            case_id=str(payload.get("id", "")),
            scenario=Scenario.from_payload(scenario_raw, hemisphere),
            truth_plan=ControlPlan.from_payload(truth["plan"]),
            truth_chain=ReasoningChain.from_payload(truth["chain"]),
        )


def load_scenario(path: str | Path, hemisphere: str = "north") -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return Scenario.from_payload(json.load(fh), hemisphere)


def load_corpus(path: str | Path, hemisphere: str = "north") -> list[CorpusCase]:
    cases = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                cases.append(CorpusCase.from_payload(json.loads(line), hemisphere))
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise ValueError(f"corpus line {lineno}: {exc}") from exc
    return cases


def dump_corpus(cases: Iterable[CorpusCase], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for case in cases:
            fh.write(canonical_json(case.to_payload()).decode("utf-8") + "\n")


def builtin_scenario(name: str) -> Scenario:
    """Scenario shipped with the package (data/scenarios/<name>.json)."""
    raw = resources.files("airsteward.data").joinpath(f"scenarios/{name}.json") \
        .read_text(encoding="utf-8")
    return Scenario.from_payload(json.loads(raw))


def builtin_scenario_names() -> list[str]:
    root = resources.files("airsteward.data").joinpath("scenarios")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))

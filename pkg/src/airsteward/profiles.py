"""Household user-memory store with an append-only change log.

The change log is the source of truth: replaying it from an empty
household reproduces the member map exactly, which doubles as crash
recovery for the on-disk format (one header line plus JSONL records).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Iterable, Mapping, Optional

from .schema import (
    HealthCondition,
    MemoryTagRecord,
    PopulationGroup,
    TagAction,
    ThermalPreference,
    canonical_json,
)

SCHEMA_VERSION = 1
HEADER_KIND = "airsteward-profile-log"

OUTCOME_ADDED = "added"
OUTCOME_REFRESHED = "refreshed"
OUTCOME_REMOVED = "removed"
OUTCOME_NOOP = "noop"
OUTCOME_PREFERENCE_SET = "preference_set"
OUTCOME_REGISTERED = "registered"
OUTCOME_TTL_EXPIRED = "ttl_expired"


class CorruptProfileError(ValueError):
    """Profile file cannot be replayed; message names the offending line."""


@dataclass(frozen=True)
class MemberProfile:
    group: PopulationGroup
    preference: ThermalPreference = ThermalPreference.NEUTRAL
    active_conditions: Mapping[HealthCondition, datetime] = field(default_factory=dict)

    def with_condition(self, condition: HealthCondition, at: datetime) -> "MemberProfile":
        conditions = dict(self.active_conditions)
        conditions[condition] = at
        return replace(self, active_conditions=conditions)

    def without_condition(self, condition: HealthCondition) -> "MemberProfile":
        conditions = {c: t for c, t in self.active_conditions.items() if c is not condition}
        return replace(self, active_conditions=conditions)


@dataclass(frozen=True)
class LogEntry:
    timestamp: datetime
    record: MemoryTagRecord
    outcome: str


@dataclass(frozen=True)
class Household:
    members: Mapping[PopulationGroup, MemberProfile] = field(default_factory=dict)
    change_log: tuple[LogEntry, ...] = ()


def empty_household() -> Household:
    return Household()


def _apply_record(members: dict[PopulationGroup, MemberProfile],
                  record: MemoryTagRecord, now: datetime) -> str:
    profile = members.get(record.group, MemberProfile(group=record.group))
    if record.action is TagAction.ADD_CONDITION:
        outcome = OUTCOME_REFRESHED if record.condition in profile.active_conditions else OUTCOME_ADDED
        members[record.group] = profile.with_condition(record.condition, now)
        return outcome
    if record.action is TagAction.REMOVE_CONDITION:
        if record.condition not in profile.active_conditions:
            return OUTCOME_NOOP
        members[record.group] = profile.without_condition(record.condition)
        return OUTCOME_REMOVED
    if record.action is TagAction.SET_PREFERENCE:
        members[record.group] = replace(profile, preference=record.preference)
        return OUTCOME_PREFERENCE_SET
    # SET_GROUP_INFO registers the member with defaults.
    if record.group in members:
        return OUTCOME_NOOP
    members[record.group] = profile
    return OUTCOME_REGISTERED


def apply(records: Iterable[MemoryTagRecord], household: Household,
          now: Optional[datetime] = None) -> Household:
    """Apply a batch of schema-valid records; every record is logged with its outcome."""
    now = now or datetime.now(timezone.utc)
    members = dict(household.members)
    log = list(household.change_log)
    for record in records:
        record.validate()
        outcome = _apply_record(members, record, now)
        log.append(LogEntry(timestamp=now, record=record, outcome=outcome))
    return Household(members=members, change_log=tuple(log))


def replay(entries: Iterable[LogEntry]) -> dict[PopulationGroup, MemberProfile]:
    """Fold the change log from an empty household; must equal stored members."""
    members: dict[PopulationGroup, MemberProfile] = {}
    for entry in entries:
        _apply_record(members, entry.record, entry.timestamp)
    return members


def snapshot(household: Household,
             group: Optional[PopulationGroup] = None) -> dict:
    """Read-only profile view; unknown groups yield a default profile."""
    if group is not None:
        profile = household.members.get(group, MemberProfile(group=group))
        return _member_payload(profile)
    return {
        "members": [
            _member_payload(household.members[g])
            for g in sorted(household.members, key=lambda g: g.value)
        ]
    }


def _member_payload(profile: MemberProfile) -> dict:
    return {
        "group": profile.group.value,
        "preference": profile.preference.value,
        "conditions": [
            {"condition": cond.value, "added_at": ts.isoformat()}
            for cond, ts in sorted(profile.active_conditions.items(), key=lambda kv: kv[0].value)
        ],
    }


def expire_stale(household: Household, now: datetime,
                 ttl: Optional[timedelta] = None) -> Household:
    """Remove conditions older than ttl; identity when ttl is off (None)."""
    if ttl is None:
        return household
    if ttl <= timedelta(0):
        raise ValueError("ttl must be positive")
    expirations = []
    for group in sorted(household.members, key=lambda g: g.value):
        profile = household.members[group]
        for cond in sorted(profile.active_conditions, key=lambda c: c.value):
            if profile.active_conditions[cond] + ttl < now:
                expirations.append(MemoryTagRecord(
                    group=group,
                    action=TagAction.REMOVE_CONDITION,
                    condition=cond,
                    source_utterance_id="ttl",
                ))
    if not expirations:
        return household
    members = dict(household.members)
    log = list(household.change_log)
    for record in expirations:
        _apply_record(members, record, now)
        log.append(LogEntry(timestamp=now, record=record, outcome=OUTCOME_TTL_EXPIRED))
    return Household(members=members, change_log=tuple(log))


# ---------------------------------------------------------------------------
# Persistence

def persist(household: Household, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [canonical_json({"kind": HEADER_KIND, "schema_version": SCHEMA_VERSION}).decode("utf-8")]
    for entry in household.change_log:
        lines.append(canonical_json({
            "ts": entry.timestamp.isoformat(),
            "record": entry.record.to_payload(),
            "outcome": entry.outcome,
        }).decode("utf-8"))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def load(path: str | Path) -> Household:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines:
        raise CorruptProfileError("line 1: empty profile file")
    header = _parse_line(lines[0], 1)
    if header.get("kind") != HEADER_KIND:
        raise CorruptProfileError("line 1: not a profile log header")
    if header.get("schema_version") != SCHEMA_VERSION:
        raise CorruptProfileError(f"line 1: unsupported schema_version {header.get('schema_version')}")
    entries = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        payload = _parse_line(line, lineno)
        try:
            entries.append(LogEntry(
                timestamp=datetime.fromisoformat(payload["ts"]),
                record=MemoryTagRecord.from_payload(payload["record"]),
                outcome=str(payload["outcome"]),
            ))
        except (KeyError, ValueError) as exc:
            raise CorruptProfileError(f"line {lineno}: {exc}") from exc
    members = replay(entries)
    return Household(members=members, change_log=tuple(entries))


def _parse_line(line: str, lineno: int) -> dict:
    try:
        payload = json.loads(line)
    except json.JSONDecodeError as exc:
        raise CorruptProfileError(f"line {lineno}: {exc.msg}") from exc
    if not isinstance(payload, dict):
        raise CorruptProfileError(f"line {lineno}: expected an object")
    return payload

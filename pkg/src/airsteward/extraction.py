"""Lexicon-driven memory-tag extraction from dialogue text.

The engine is deterministic: phrase matching is case-insensitive,
whole-word, longest-phrase-first, and every emitted record is validated
against the schema before it leaves this module. Recovery cues scope to
the comma/period-delimited clause they occur in; a bare cue clears the
resolved subject's conditions wholesale.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Optional

from .schema import (
    HealthCondition,
    MemoryTagRecord,
    PopulationGroup,
    TagAction,
    ThermalPreference,
)

_CLAUSE_SPLIT = re.compile(r"[,.;!?]")
_FIRST_PERSON = re.compile(r"\b(i|i'm|i've|i'll|me|my|myself)\b", re.IGNORECASE)

DEFAULT_HISTORY_LIMIT = 16


@dataclass(frozen=True)
class Lexicon:
    group_aliases: dict[str, PopulationGroup]
    condition_triggers: dict[str, HealthCondition]
    preference_triggers: dict[str, ThermalPreference]
    recovery_cues: tuple[str, ...]

    def __post_init__(self):
        if not self.recovery_cues:
            raise ValueError("lexicon recovery_cues must be non-empty")

    @classmethod
    def from_payload(cls, payload: dict) -> "Lexicon":
        return cls(
            group_aliases={
                alias.lower(): PopulationGroup(group)
                for alias, group in payload["group_aliases"].items()
            },
            condition_triggers={
                phrase.lower(): HealthCondition(cond)
                for phrase, cond in payload["condition_triggers"].items()
            },
            preference_triggers={
                phrase.lower(): ThermalPreference(pref)
                for phrase, pref in payload["preference_triggers"].items()
            },
            recovery_cues=tuple(cue.lower() for cue in payload["recovery_cues"]),
        )

    @classmethod
    def from_file(cls, path) -> "Lexicon":
        with open(path, encoding="utf-8") as fh:
            return cls.from_payload(json.load(fh))


def default_lexicon() -> Lexicon:
    raw = resources.files("airsteward.data").joinpath("lexicon.json").read_text(encoding="utf-8")
    return Lexicon.from_payload(json.loads(raw))


@dataclass
class SessionContext:
    """Per-session dialogue state; owned by exactly one session."""

    last_mentioned_group: Optional[PopulationGroup] = None
    speaker_default_group: Optional[PopulationGroup] = None
    utterance_history: list[str] = field(default_factory=list)
    history_limit: int = DEFAULT_HISTORY_LIMIT

    def remember(self, utterance: str) -> None:
        self.utterance_history.append(utterance)
        if len(self.utterance_history) > self.history_limit:
            del self.utterance_history[: len(self.utterance_history) - self.history_limit]


# ---------------------------------------------------------------------------
# Matching machinery

@dataclass(frozen=True)
class _Match:
    start: int
    end: int
    kind: str  # "group" | "condition" | "preference" | "recovery" | "pronoun"
    value: object


def _find_phrase(text: str, phrase: str) -> Iterable[tuple[int, int]]:
    pattern = re.compile(r"(?<!\w)" + re.escape(phrase) + r"(?!\w)", re.IGNORECASE)
    for m in pattern.finditer(text):
        yield m.start(), m.end()


def _scan(utterance: str, lexicon: Lexicon) -> list[_Match]:
    """All non-overlapping lexicon matches, longest phrase winning on overlap."""
    candidates: list[_Match] = []
    for phrase, group in lexicon.group_aliases.items():
        for start, end in _find_phrase(utterance, phrase):
            candidates.append(_Match(start, end, "group", group))
    for phrase, cond in lexicon.condition_triggers.items():
        for start, end in _find_phrase(utterance, phrase):
            candidates.append(_Match(start, end, "condition", cond))
    for phrase, pref in lexicon.preference_triggers.items():
        for start, end in _find_phrase(utterance, phrase):
            candidates.append(_Match(start, end, "preference", pref))
    for cue in lexicon.recovery_cues:
        for start, end in _find_phrase(utterance, cue):
            candidates.append(_Match(start, end, "recovery", cue))
    # Longer matches claim their span first; ties resolve left to right.
    candidates.sort(key=lambda m: (-(m.end - m.start), m.start))
    taken: list[_Match] = []
    for cand in candidates:
        if all(cand.end <= kept.start or cand.start >= kept.end for kept in taken):
            taken.append(cand)
    taken.sort(key=lambda m: m.start)
    return taken


def _clause_index(utterance: str) -> list[int]:
    """Map each character position to its clause ordinal."""
    index = []
    clause = 0
    for ch in utterance:
        index.append(clause)
        if _CLAUSE_SPLIT.match(ch):
            clause += 1
    return index


def resolve_subject(utterance: str, ctx: SessionContext,
                    lexicon: Optional[Lexicon] = None) -> PopulationGroup:
    """Utterance-level subject: explicit alias > last mentioned > speaker default > other."""
    lexicon = lexicon or default_lexicon()
    matches = [m for m in _scan(utterance, lexicon) if m.kind == "group"]
    if matches:
        return matches[0].value  # type: ignore[return-value]
    if ctx.last_mentioned_group is not None:
        return ctx.last_mentioned_group
    if ctx.speaker_default_group is not None:
        return ctx.speaker_default_group
    return PopulationGroup.OTHER


def _subject_markers(utterance: str, matches: list[_Match]) -> list[_Match]:
    markers = [m for m in matches if m.kind == "group"]
    for m in _FIRST_PERSON.finditer(utterance):
        # "my son" points at the son, not the speaker; the closer alias wins
        # naturally because markers are resolved by proximity.
        markers.append(_Match(m.start(), m.end(), "pronoun", None))
    markers.sort(key=lambda m: m.start)
    return markers


def _subject_at(position: int, markers: list[_Match], ctx: SessionContext) -> PopulationGroup:
    """Nearest subject marker before `position`; falls back to context priority."""
    preceding = [m for m in markers if m.start <= position]
    if preceding:
        nearest = preceding[-1]
        if nearest.kind == "group":
            return nearest.value  # type: ignore[return-value]
        return ctx.speaker_default_group or PopulationGroup.OTHER
    following_groups = [m for m in markers if m.kind == "group"]
    if following_groups:
        return following_groups[0].value  # type: ignore[return-value]
    if ctx.last_mentioned_group is not None:
        return ctx.last_mentioned_group
    if ctx.speaker_default_group is not None:
        return ctx.speaker_default_group
    return PopulationGroup.OTHER


@dataclass(frozen=True)
class RecoveryFlag:
    """A recovery cue and the condition it expires; condition None = all conditions."""

    condition: Optional[HealthCondition]
    span: tuple[int, int]


def detect_recovery(utterance: str, lexicon: Optional[Lexicon] = None) -> list[RecoveryFlag]:
    """Conditions flagged expired by recovery cues.

    A cue sharing a clause with a condition trigger expires exactly that
    condition; a bare cue expires everything (condition None).
    """
    lexicon = lexicon or default_lexicon()
    matches = _scan(utterance, lexicon)
    clause_of = _clause_index(utterance)
    flags: list[RecoveryFlag] = []
    for cue in (m for m in matches if m.kind == "recovery"):
        cue_clause = clause_of[cue.start] if cue.start < len(clause_of) else 0
        same_clause = [
            m for m in matches
            if m.kind == "condition" and clause_of[m.start] == cue_clause
        ]
        if same_clause:
            for cond_match in same_clause:
                flags.append(RecoveryFlag(cond_match.value, (cue.start, cue.end)))  # type: ignore[arg-type]
        else:
            flags.append(RecoveryFlag(None, (cue.start, cue.end)))
    return flags


def extract(utterance: str, ctx: SessionContext,
            lexicon: Optional[Lexicon] = None,
            utterance_id: Optional[str] = None) -> list[MemoryTagRecord]:
    """Convert one utterance into schema-valid memory-tag records.

    Unrecognized text yields an empty list. Updates ctx.last_mentioned_group
    when an explicit alias occurs and appends the utterance to history.
    """
    lexicon = lexicon or default_lexicon()
    if utterance_id is None:
        utterance_id = f"u{len(ctx.utterance_history)}"
    matches = _scan(utterance, lexicon)
    clause_of = _clause_index(utterance)
    markers = _subject_markers(utterance, matches)

    cue_matches = [m for m in matches if m.kind == "recovery"]
    expired_clauses: dict[int, bool] = {}
    for cue in cue_matches:
        expired_clauses[clause_of[cue.start]] = True

    # (group, kind, payload) -> (position, action); recovery beats addition.
    emitted: dict[tuple, tuple[int, TagAction]] = {}

    def note(key: tuple, position: int, action: TagAction) -> None:
        if key in emitted:
            old_pos, old_action = emitted[key]
            if old_action is TagAction.REMOVE_CONDITION:
                return
            if action is TagAction.REMOVE_CONDITION:
                emitted[key] = (old_pos, action)
            return
        emitted[key] = (position, action)

    condition_matches = [m for m in matches if m.kind == "condition"]
    for m in condition_matches:
        subject = _subject_at(m.start, markers, ctx)
        recovered = expired_clauses.get(clause_of[m.start], False)
        action = TagAction.REMOVE_CONDITION if recovered else TagAction.ADD_CONDITION
        note((subject, "condition", m.value), m.start, action)

    for m in (m for m in matches if m.kind == "preference"):
        subject = _subject_at(m.start, markers, ctx)
        note((subject, "preference", m.value), m.start, TagAction.SET_PREFERENCE)

    # Bare cues (no condition in their clause) clear the whole slate for the
    # cue's subject and for any subject whose condition was mentioned earlier.
    bare_cues = [
        cue for cue in cue_matches
        if not any(
            m.kind == "condition" and clause_of[m.start] == clause_of[cue.start]
            for m in matches
        )
    ]
    for cue in bare_cues:
        subjects = {_subject_at(cue.start, markers, ctx)}
        subjects.update(
            _subject_at(m.start, markers, ctx)
            for m in condition_matches
            if m.start < cue.start
        )
        for subject in sorted(subjects, key=lambda g: g.value):
            for cond in HealthCondition:
                note((subject, "condition", cond), cue.start, TagAction.REMOVE_CONDITION)

    # Alias with no other signal registers the member.
    if not emitted:
        for m in matches:
            if m.kind == "group":
                note((m.value, "groupinfo", None), m.start, TagAction.SET_GROUP_INFO)

    records = []
    for key, (position, action) in sorted(emitted.items(), key=lambda kv: (kv[1][0], str(kv[0]))):
        group, kind, payload = key
        if kind == "condition":
            rec = MemoryTagRecord(group=group, action=action, condition=payload,
                                  source_utterance_id=utterance_id)
        elif kind == "preference":
            rec = MemoryTagRecord(group=group, action=action, preference=payload,
                                  source_utterance_id=utterance_id)
        else:
            rec = MemoryTagRecord(group=group, action=action, source_utterance_id=utterance_id)
        rec.validate()
        records.append(rec)

    group_mentions = [m for m in matches if m.kind == "group"]
    if group_mentions:
        ctx.last_mentioned_group = group_mentions[-1].value  # type: ignore[assignment]
    ctx.remember(utterance)
    return records

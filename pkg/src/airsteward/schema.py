"""Domain types, validation, and canonical JSON serialization.

Every artifact boundary in the package (profile files, corpus files, the
HTTP API, the semi-stream command region) speaks the canonical encoding
defined here: key-sorted, whitespace-free UTF-8 JSON with lowercase
snake_case enum names. All types are immutable values.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Mapping, Optional, Sequence, Union


class SchemaError(ValueError):
    """A payload does not satisfy the schema; message names the offending field."""


class DecodeError(ValueError):
    """Input is not well-formed JSON; carries the byte offset of the failure."""

    def __init__(self, message: str, byte_offset: int):
        super().__init__(f"{message} (byte offset {byte_offset})")
        self.byte_offset = byte_offset


# ---------------------------------------------------------------------------
# Enumerations

class PopulationGroup(str, Enum):
    ADULT_MALE = "adult_male"
    ADULT_FEMALE = "adult_female"
    CHILD = "child"
    ELDERLY = "elderly"
    OTHER = "other"


class ThermalPreference(str, Enum):
    VERY_COLD_SENSITIVE = "very_cold_sensitive"
    SLIGHTLY_COLD_SENSITIVE = "slightly_cold_sensitive"
    NEUTRAL = "neutral"
    SLIGHTLY_HEAT_SENSITIVE = "slightly_heat_sensitive"
    VERY_HEAT_SENSITIVE = "very_heat_sensitive"

    @property
    def scale(self) -> int:
        """Position on the five-point scale, -2 (very cold-sensitive) .. +2."""
        return _PREFERENCE_SCALE[self]

    def __lt__(self, other: object) -> bool:
        if not isinstance(other, ThermalPreference):
            return NotImplemented
        return self.scale < other.scale

    def __le__(self, other: object) -> bool:
        if not isinstance(other, ThermalPreference):
            return NotImplemented
        return self.scale <= other.scale

    def __gt__(self, other: object) -> bool:
        if not isinstance(other, ThermalPreference):
            return NotImplemented
        return self.scale > other.scale

    def __ge__(self, other: object) -> bool:
        if not isinstance(other, ThermalPreference):
            return NotImplemented
        return self.scale >= other.scale


_PREFERENCE_SCALE = {
    ThermalPreference.VERY_COLD_SENSITIVE: -2,
    ThermalPreference.SLIGHTLY_COLD_SENSITIVE: -1,
    ThermalPreference.NEUTRAL: 0,
    ThermalPreference.SLIGHTLY_HEAT_SENSITIVE: 1,
    ThermalPreference.VERY_HEAT_SENSITIVE: 2,
}


class HealthCondition(str, Enum):
    COLD = "cold"
    FEVER = "fever"
    COUGH = "cough"
    RHINITIS = "rhinitis"
    ASTHMA = "asthma"
    MENSTRUATION = "menstruation"

    @property
    def is_respiratory(self) -> bool:
        return self is not HealthCondition.MENSTRUATION


class TagAction(str, Enum):
    ADD_CONDITION = "add_condition"
    REMOVE_CONDITION = "remove_condition"
    SET_PREFERENCE = "set_preference"
    SET_GROUP_INFO = "set_group_info"


class DeviceMode(str, Enum):
    COOL = "cool"
    HEAT = "heat"
    FAN_ONLY = "fan_only"
    DEHUMIDIFY = "dehumidify"
    AUTO = "auto"


class WindSpeed(str, Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"
    AUTO = "auto"


class WindSensation(str, Enum):
    NORMAL = "normal"
    NO_WIND = "no_wind"
    SOFT_WIND = "soft_wind"


class AuxFunction(str, Enum):
    AIR_FRESH = "air_fresh"
    AIR_PURIFICATION = "air_purification"
    AIR_HUMIDIFICATION = "air_humidification"
    AIR_STERILIZATION = "air_sterilization"


class AuxLevel(str, Enum):
    OFF = "off"
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"

    @property
    def rank(self) -> int:
        return _AUX_LEVEL_RANK[self]


_AUX_LEVEL_RANK = {
    AuxLevel.OFF: 0,
    AuxLevel.LOW: 1,
    AuxLevel.MEDIUM: 2,
    AuxLevel.HIGH: 3,
}


class Season(str, Enum):
    SPRING = "spring"
    SUMMER = "summer"
    AUTUMN = "autumn"
    WINTER = "winter"


# ---------------------------------------------------------------------------
# Records

@dataclass(frozen=True)
class MemoryTagRecord:
    """One extracted (group, condition/preference, action) tuple from an utterance."""

    group: PopulationGroup
    action: TagAction
    condition: Optional[HealthCondition] = None
    preference: Optional[ThermalPreference] = None
    source_utterance_id: str = ""

    def validate(self) -> None:
        if self.action in (TagAction.ADD_CONDITION, TagAction.REMOVE_CONDITION):
            if self.condition is None:
                raise SchemaError(f"record.condition required for action {self.action.value}")
            if self.preference is not None:
                raise SchemaError(f"record.preference must be absent for action {self.action.value}")
        elif self.action is TagAction.SET_PREFERENCE:
            if self.preference is None:
                raise SchemaError("record.preference required for action set_preference")
            if self.condition is not None:
                raise SchemaError("record.condition must be absent for action set_preference")
        else:  # SET_GROUP_INFO carries no payload; the group itself is the information
            if self.condition is not None or self.preference is not None:
                raise SchemaError("record payload must be absent for action set_group_info")

    def to_payload(self) -> dict:
        return {
            "group": self.group.value,
            "action": self.action.value,
            "condition": self.condition.value if self.condition else None,
            "preference": self.preference.value if self.preference else None,
            "source_utterance_id": self.source_utterance_id,
        }

    @classmethod
    def from_payload(cls, payload: Mapping[str, Any]) -> "MemoryTagRecord":
        _require_mapping(payload, "record")
        rec = cls(
            group=_parse_enum(PopulationGroup, _require(payload, "group", "record"), "record.group"),
            action=_parse_enum(TagAction, _require(payload, "action", "record"), "record.action"),
            condition=_parse_optional_enum(HealthCondition, payload.get("condition"), "record.condition"),
            preference=_parse_optional_enum(ThermalPreference, payload.get("preference"), "record.preference"),
            source_utterance_id=str(payload.get("source_utterance_id", "")),
        )
        rec.validate()
        return rec


@dataclass(frozen=True)
class SensorSnapshot:
    """Indoor sensor array reading."""

    temperature_c: float
    humidity_pct: float
    co2_ppm: float
    tvoc_mg_m3: float
    pm25_ug_m3: float
    hcho_mg_m3: float

    def validate(self) -> None:
        if not 0.0 <= self.humidity_pct <= 100.0:
            raise SchemaError("indoor.humidity_pct must be in [0, 100]")
        for name in ("co2_ppm", "tvoc_mg_m3", "pm25_ug_m3", "hcho_mg_m3"):
            if getattr(self, name) < 0:
                raise SchemaError(f"indoor.{name} must be non-negative")

    def to_payload(self) -> dict:
        return {
            "temperature_c": self.temperature_c,
            "humidity_pct": self.humidity_pct,
            "co2_ppm": self.co2_ppm,
            "tvoc_mg_m3": self.tvoc_mg_m3,
            "pm25_ug_m3": self.pm25_ug_m3,
            "hcho_mg_m3": self.hcho_mg_m3,
        }

    @classmethod
    def from_payload(cls, payload: Mapping[str, Any]) -> "SensorSnapshot":
        _require_mapping(payload, "indoor")
        snap = cls(
            temperature_c=_number(_require(payload, "temperature_c", "indoor"), "indoor.temperature_c"),
            humidity_pct=_number(_require(payload, "humidity_pct", "indoor"), "indoor.humidity_pct"),
            co2_ppm=_number(_require(payload, "co2_ppm", "indoor"), "indoor.co2_ppm"),
            tvoc_mg_m3=_number(_require(payload, "tvoc_mg_m3", "indoor"), "indoor.tvoc_mg_m3"),
            pm25_ug_m3=_number(_require(payload, "pm25_ug_m3", "indoor"), "indoor.pm25_ug_m3"),
            hcho_mg_m3=_number(_require(payload, "hcho_mg_m3", "indoor"), "indoor.hcho_mg_m3"),
        )
        snap.validate()
        return snap


@dataclass(frozen=True)
class OutdoorWeather:
    city: str
    timestamp: str  # ISO-8601 UTC
    temperature_c: float
    humidity_pct: float
    pm25_ug_m3: float

    def validate(self) -> None:
        try:
            parse_timestamp(self.timestamp)
        except ValueError as exc:
            raise SchemaError(f"outdoor.timestamp does not parse: {exc}") from exc
        if self.pm25_ug_m3 < 0:
            raise SchemaError("outdoor.pm25_ug_m3 must be non-negative")

    def to_payload(self) -> dict:
        return {
            "city": self.city,
            "timestamp": self.timestamp,
            "temperature_c": self.temperature_c,
            "humidity_pct": self.humidity_pct,
            "pm25_ug_m3": self.pm25_ug_m3,
        }

    @classmethod
    def from_payload(cls, payload: Mapping[str, Any]) -> "OutdoorWeather":
        _require_mapping(payload, "outdoor")
        weather = cls(
            city=str(_require(payload, "city", "outdoor")),
            timestamp=str(_require(payload, "timestamp", "outdoor")),
            temperature_c=_number(_require(payload, "temperature_c", "outdoor"), "outdoor.temperature_c"),
            humidity_pct=_number(_require(payload, "humidity_pct", "outdoor"), "outdoor.humidity_pct"),
            pm25_ug_m3=_number(_require(payload, "pm25_ug_m3", "outdoor"), "outdoor.pm25_ug_m3"),
        )
        weather.validate()
        return weather


def parse_timestamp(value: str) -> datetime:
    """Parse an ISO-8601 timestamp; naive values are taken as UTC."""
    ts = datetime.fromisoformat(value.replace("Z", "+00:00"))
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts


@dataclass(frozen=True)
class DeviceState:
    location: str
    power: bool
    mode: DeviceMode
    wind_speed: WindSpeed
    wind_sensation: WindSensation
    addon_levels: Mapping[AuxFunction, AuxLevel]
    setpoint_c: Optional[float] = None

    def validate(self) -> None:
        if self.mode is DeviceMode.FAN_ONLY and self.setpoint_c is not None:
            raise SchemaError("device.setpoint_c must be absent in fan_only mode")
        if set(self.addon_levels.keys()) != set(AuxFunction):
            raise SchemaError("device.addon_levels must have exactly the four auxiliary keys")

    def to_payload(self) -> dict:
        return {
            "location": self.location,
            "power": self.power,
            "mode": self.mode.value,
            "setpoint_c": self.setpoint_c,
            "wind_speed": self.wind_speed.value,
            "wind_sensation": self.wind_sensation.value,
            "addon_levels": {aux.value: self.addon_levels[aux].value for aux in AuxFunction},
        }

    @classmethod
    def from_payload(cls, payload: Mapping[str, Any]) -> "DeviceState":
        _require_mapping(payload, "device")
        addons_raw = _require(payload, "addon_levels", "device")
        _require_mapping(addons_raw, "device.addon_levels")
        addons = {}
        for aux in AuxFunction:
            if aux.value not in addons_raw:
                raise SchemaError(f"missing field device.addon_levels.{aux.value}")
            addons[aux] = _parse_enum(AuxLevel, addons_raw[aux.value], f"device.addon_levels.{aux.value}")
        setpoint = payload.get("setpoint_c")
        device = cls(
            location=str(_require(payload, "location", "device")),
            power=bool(_require(payload, "power", "device")),
            mode=_parse_enum(DeviceMode, _require(payload, "mode", "device"), "device.mode"),
            setpoint_c=_number(setpoint, "device.setpoint_c") if setpoint is not None else None,
            wind_speed=_parse_enum(WindSpeed, _require(payload, "wind_speed", "device"), "device.wind_speed"),
            wind_sensation=_parse_enum(
                WindSensation, _require(payload, "wind_sensation", "device"), "device.wind_sensation"
            ),
            addon_levels=addons,
        )
        device.validate()
        return device


class Continuous:
    """Sentinel for an auxiliary scheduled to run without a duty cycle."""

    _instance: Optional["Continuous"] = None

    def __new__(cls) -> "Continuous":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "Continuous"


CONTINUOUS = Continuous()


@dataclass(frozen=True)
class IntervalSchedule:
    """Duty cycle: run for run_minutes, repeat every period_minutes."""

    run_minutes: int
    period_minutes: int

    def validate(self, name: str) -> None:
        if self.run_minutes <= 0:
            raise SchemaError(f"{name}.run_minutes must be positive")
        if self.period_minutes < self.run_minutes:
            raise SchemaError(f"{name}.period_minutes must be >= run_minutes")


IntervalEntry = Union[IntervalSchedule, Continuous, None]

_THRESHOLD_FIELDS = (
    "co2_ppm",
    "pm25_ug_m3",
    "tvoc_mg_m3",
    "formaldehyde_mg_m3",
    "humidity_lower_pct",
    "humidity_upper_pct",
)


@dataclass(frozen=True)
class Thresholds:
    """Target air-quality thresholds used as the closed-loop baseline."""

    co2_ppm: float
    pm25_ug_m3: float
    tvoc_mg_m3: float
    formaldehyde_mg_m3: float
    humidity_lower_pct: float
    humidity_upper_pct: float

    def to_payload(self) -> dict:
        return {name: getattr(self, name) for name in _THRESHOLD_FIELDS}

    @classmethod
    def from_payload(cls, payload: Mapping[str, Any]) -> "Thresholds":
        _require_mapping(payload, "threshold")
        values = {}
        for name in _THRESHOLD_FIELDS:
            values[name] = _number(_require(payload, name, "threshold"), f"threshold.{name}")
        return cls(**values)


@dataclass(frozen=True)
class CommandSet:
    """Immediate control parameters; tips is the user-facing health advice."""

    mode: DeviceMode
    wind_speed: WindSpeed
    wind_sensation: WindSensation
    air_fresh: AuxLevel
    air_purification: AuxLevel
    air_humidification: AuxLevel
    air_sterilization: AuxLevel
    tips: str
    setpoint_c: Optional[float] = None

    def aux_level(self, aux: AuxFunction) -> AuxLevel:
        return getattr(self, aux.value)

    def to_payload(self) -> dict:
        return {
            "mode": self.mode.value,
            "setpoint_c": self.setpoint_c,
            "wind_speed": self.wind_speed.value,
            "wind_sensation": self.wind_sensation.value,
            "air_fresh": self.air_fresh.value,
            "air_purification": self.air_purification.value,
            "air_humidification": self.air_humidification.value,
            "air_sterilization": self.air_sterilization.value,
            "tips": self.tips,
        }

    @classmethod
    def from_payload(cls, payload: Mapping[str, Any]) -> "CommandSet":
        _require_mapping(payload, "cmd")
        setpoint = payload.get("setpoint_c")
        return cls(
            mode=_parse_enum(DeviceMode, _require(payload, "mode", "cmd"), "cmd.mode"),
            setpoint_c=_number(setpoint, "cmd.setpoint_c") if setpoint is not None else None,
            wind_speed=_parse_enum(WindSpeed, _require(payload, "wind_speed", "cmd"), "cmd.wind_speed"),
            wind_sensation=_parse_enum(
                WindSensation, _require(payload, "wind_sensation", "cmd"), "cmd.wind_sensation"
            ),
            air_fresh=_parse_enum(AuxLevel, _require(payload, "air_fresh", "cmd"), "cmd.air_fresh"),
            air_purification=_parse_enum(
                AuxLevel, _require(payload, "air_purification", "cmd"), "cmd.air_purification"
            ),
            air_humidification=_parse_enum(
                AuxLevel, _require(payload, "air_humidification", "cmd"), "cmd.air_humidification"
            ),
            air_sterilization=_parse_enum(
                AuxLevel, _require(payload, "air_sterilization", "cmd"), "cmd.air_sterilization"
            ),
            tips=str(_require(payload, "tips", "cmd")),
        )


@dataclass(frozen=True)
class ControlPlan:
    """The structured command payload: cmd, threshold, and interval_time sections."""

    cmd: CommandSet
    threshold: Thresholds
    interval_time: Mapping[AuxFunction, IntervalEntry]

    def to_payload(self) -> dict:
        intervals = {}
        for aux in AuxFunction:
            entry = self.interval_time.get(aux)
            intervals[aux.value] = _interval_to_payload(entry)
        return {
            "cmd": self.cmd.to_payload(),
            "threshold": self.threshold.to_payload(),
            "interval_time": intervals,
        }

    @classmethod
    def from_payload(cls, payload: Mapping[str, Any]) -> "ControlPlan":
        _require_mapping(payload, "plan")
        cmd = CommandSet.from_payload(_require(payload, "cmd", "plan"))
        threshold = Thresholds.from_payload(_require(payload, "threshold", "plan"))
        intervals_raw = _require(payload, "interval_time", "plan")
        _require_mapping(intervals_raw, "interval_time")
        intervals = {}
        for aux in AuxFunction:
            if aux.value not in intervals_raw:
                raise SchemaError(f"missing field interval_time.{aux.value}")
            intervals[aux] = _interval_from_payload(intervals_raw[aux.value], f"interval_time.{aux.value}")
        plan = cls(cmd=cmd, threshold=threshold, interval_time=intervals)
        for violation in _strict_violations(plan):
            raise SchemaError(violation.message)
        return plan


def _interval_to_payload(entry: IntervalEntry) -> Any:
    if entry is None:
        return None
    if isinstance(entry, Continuous):
        return "continuous"
    return {"run_minutes": entry.run_minutes, "period_minutes": entry.period_minutes}


def _interval_from_payload(raw: Any, name: str) -> IntervalEntry:
    if raw is None:
        return None
    if raw == "continuous":
        return CONTINUOUS
    _require_mapping(raw, name)
    entry = IntervalSchedule(
        run_minutes=int(_number(_require(raw, "run_minutes", name), f"{name}.run_minutes")),
        period_minutes=int(_number(_require(raw, "period_minutes", name), f"{name}.period_minutes")),
    )
    entry.validate(name)
    return entry


@dataclass(frozen=True)
class ReasoningChain:
    """Five-segment explicit rationale accompanying every plan."""

    perception: str
    goals: str
    quantitative_targets: str
    strategy: str
    scheduling: str

    SEGMENTS = ("perception", "goals", "quantitative_targets", "strategy", "scheduling")

    def to_payload(self) -> dict:
        return {name: getattr(self, name) for name in self.SEGMENTS}

    @classmethod
    def from_payload(cls, payload: Mapping[str, Any]) -> "ReasoningChain":
        _require_mapping(payload, "chain")
        return cls(**{name: str(_require(payload, name, "chain")) for name in cls.SEGMENTS})


# ---------------------------------------------------------------------------
# Plan validation

@dataclass(frozen=True)
class Violation:
    code: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: Sequence[Violation] = field(default_factory=tuple)

    @property
    def valid(self) -> bool:
        return not self.violations

    def codes(self) -> list[str]:
        return [v.code for v in self.violations]


def validate_plan(plan: ControlPlan) -> ValidationReport:
    """List every invariant violation in the plan; an empty report means valid."""
    return ValidationReport(violations=tuple(_soft_violations(plan) + _strict_violations(plan)))


def _strict_violations(plan: ControlPlan) -> list[Violation]:
    # Violations that also make a payload undecodable (structural contradictions).
    out = []
    th = plan.threshold
    for name in ("co2_ppm", "pm25_ug_m3", "tvoc_mg_m3", "formaldehyde_mg_m3",
                 "humidity_lower_pct", "humidity_upper_pct"):
        if getattr(th, name) <= 0:
            out.append(Violation("nonpositive-threshold", f"threshold.{name} must be positive"))
    if th.humidity_lower_pct >= th.humidity_upper_pct:
        out.append(Violation(
            "humidity-band-inverted",
            "threshold.humidity_lower_pct must be below humidity_upper_pct",
        ))
    return out


def _soft_violations(plan: ControlPlan) -> list[Violation]:
    # Functionally contradictory but representable plans; the evaluator zeroes these.
    out = []
    if plan.cmd.mode is DeviceMode.FAN_ONLY and plan.cmd.setpoint_c is not None:
        out.append(Violation("setpoint-in-fanonly", "cmd.setpoint_c set while mode is fan_only"))
    if plan.cmd.wind_sensation is WindSensation.NO_WIND and plan.cmd.mode is not DeviceMode.COOL:
        out.append(Violation("nowind-in-noncooling", "cmd.wind_sensation no_wind requires cool mode"))
    for aux in AuxFunction:
        if plan.cmd.aux_level(aux) is not AuxLevel.OFF and plan.interval_time.get(aux) is None:
            out.append(Violation(
                "addon-on-without-interval",
                f"cmd.{aux.value} is on but interval_time.{aux.value} is none",
            ))
    return out


# ---------------------------------------------------------------------------
# Canonical encoding

def canonical_json(payload: Any) -> bytes:
    """Key-sorted, whitespace-free UTF-8 JSON; byte-stable across runs."""
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def decode_json(data: bytes | str, context: str = "payload") -> Any:
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DecodeError(f"{context} is not valid UTF-8", exc.start) from exc
    else:
        text = data
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        byte_offset = len(text[: exc.pos].encode("utf-8"))
        raise DecodeError(f"{context} is not valid JSON: {exc.msg}", byte_offset) from exc


def encode_plan(plan: ControlPlan) -> bytes:
    return canonical_json(plan.to_payload())


def decode_plan(data: bytes | str) -> ControlPlan:
    return ControlPlan.from_payload(decode_json(data, "plan"))


def encode_record(record: MemoryTagRecord) -> bytes:
    return canonical_json(record.to_payload())


def decode_record(data: bytes | str) -> MemoryTagRecord:
    return MemoryTagRecord.from_payload(decode_json(data, "record"))


# ---------------------------------------------------------------------------
# Attribute vector

_CMD_VECTOR_FIELDS = (
    "mode",
    "setpoint_c",
    "wind_speed",
    "wind_sensation",
    "air_fresh",
    "air_purification",
    "air_humidification",
    "air_sterilization",
    "tips",
)


def plan_attribute_vector(plan: ControlPlan) -> list[tuple[str, Any]]:
    """Fixed-order list of the 19 scored plan attributes: 9 cmd, 6 threshold, 4 interval."""
    cmd_payload = plan.cmd.to_payload()
    vector: list[tuple[str, Any]] = [(f"cmd.{name}", cmd_payload[name]) for name in _CMD_VECTOR_FIELDS]
    th_payload = plan.threshold.to_payload()
    vector.extend((f"threshold.{name}", th_payload[name]) for name in _THRESHOLD_FIELDS)
    vector.extend(
        (f"interval_time.{aux.value}", _interval_to_payload(plan.interval_time.get(aux)))
        for aux in AuxFunction
    )
    return vector


# ---------------------------------------------------------------------------
# Parsing helpers

def _require(payload: Mapping[str, Any], key: str, context: str) -> Any:
    if key not in payload:
        prefix = "" if context in ("plan", "record") else f"{context}."
        raise SchemaError(f"missing field {prefix}{key}")
    return payload[key]


def _require_mapping(value: Any, name: str) -> None:
    if not isinstance(value, Mapping):
        raise SchemaError(f"{name} must be an object")


def _number(value: Any, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{name} must be a number")
    return float(value)


def _parse_enum(enum_cls, value: Any, name: str):
    try:
        return enum_cls(value)
    except ValueError:
        allowed = ", ".join(member.value for member in enum_cls)
        raise SchemaError(f"{name} must be one of: {allowed}") from None


def _parse_optional_enum(enum_cls, value: Any, name: str):
    if value is None:
        return None
    return _parse_enum(enum_cls, value, name)

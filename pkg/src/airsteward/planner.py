"""Reference reasoning-and-planning engine.

plan() maps (environment, household, device, knowledge base) to a
ControlPlan plus a five-segment ReasoningChain, deterministically: no
randomness, no wall clock. Hard rules are applied in priority order
health > air quality > comfort > energy defaults, so conflicting
constraints always resolve the same way.

The chain segments embed fixed token patterns ("setpoint 25.5",
"mode cool", "air_sterilization every 240 min") that the evaluator's
chain rules match against; changing a template here is an evaluator
contract change.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from importlib import resources
from typing import Mapping, Optional, Sequence

from .profiles import Household
from .schema import (
    AuxFunction,
    AuxLevel,
    CommandSet,
    ControlPlan,
    DeviceMode,
    DeviceState,
    HealthCondition,
    IntervalSchedule,
    OutdoorWeather,
    PopulationGroup,
    ReasoningChain,
    Season,
    SensorSnapshot,
    ThermalPreference,
    Thresholds,
    WindSensation,
    WindSpeed,
    parse_timestamp,
)

# Sensor risks in scoring order; condition risks use the enum value itself.
SENSOR_RISKS = ("co2", "pm25", "tvoc", "formaldehyde", "humidity_low", "humidity_high")


def fmt_num(value: float) -> str:
    """Render numbers the way the chain templates and scorers expect."""
    return f"{value:g}"


@dataclass(frozen=True)
class ComfortBand:
    low_c: float
    high_c: float
    mode: DeviceMode

    @property
    def midpoint_c(self) -> float:
        return (self.low_c + self.high_c) / 2.0


@dataclass(frozen=True)
class KnowledgeBase:
    thresholds: Thresholds
    comfort_bands: Mapping[Season, ComfortBand]
    preference_offsets: Mapping[ThermalPreference, float]
    templates: Mapping[str, str]
    epidemic_active: bool = False
    prevalent_illnesses: tuple[HealthCondition, ...] = ()
    sensitive_factor: float = 0.8
    low_max_ratio: float = 1.5
    medium_max_ratio: float = 2.5
    sterilization_interval: IntervalSchedule = IntervalSchedule(30, 240)
    default_interval: IntervalSchedule = IntervalSchedule(30, 120)
    continuous_cap_minutes: int = 600
    temp_override_margin_c: float = 2.0
    high_wind_deviation_c: float = 4.0
    hemisphere: str = "north"

    def with_flags(self, epidemic_active: Optional[bool] = None,
                   prevalent_illnesses: Optional[Sequence[HealthCondition]] = None) -> "KnowledgeBase":
        kb = self
        if epidemic_active is not None:
            kb = replace(kb, epidemic_active=epidemic_active)
        if prevalent_illnesses is not None:
            kb = replace(kb, prevalent_illnesses=tuple(prevalent_illnesses))
        return kb

    @classmethod
    def from_payload(cls, payload: Mapping) -> "KnowledgeBase":
        bands = {
            Season(name): ComfortBand(
                low_c=float(band["low_c"]),
                high_c=float(band["high_c"]),
                mode=DeviceMode(band["mode"]),
            )
            for name, band in payload["comfort_bands"].items()
        }
        intervals = payload.get("intervals", {})
        steril = intervals.get("air_sterilization", {"run_minutes": 30, "period_minutes": 240})
        default = intervals.get("default", {"run_minutes": 30, "period_minutes": 120})
        level_bands = payload.get("level_bands", {})
        return cls(
            thresholds=Thresholds.from_payload(payload["thresholds"]),
            comfort_bands=bands,
            preference_offsets={
                ThermalPreference(name): float(off)
                for name, off in payload["preference_offsets"].items()
            },
            templates=dict(payload["templates"]),
            epidemic_active=bool(payload.get("epidemic_active", False)),
            prevalent_illnesses=tuple(
                HealthCondition(c) for c in payload.get("prevalent_illnesses", [])
            ),
            sensitive_factor=float(payload.get("sensitive_factor", 0.8)),
            low_max_ratio=float(level_bands.get("low_max_ratio", 1.5)),
            medium_max_ratio=float(level_bands.get("medium_max_ratio", 2.5)),
            sterilization_interval=IntervalSchedule(int(steril["run_minutes"]), int(steril["period_minutes"])),
            default_interval=IntervalSchedule(int(default["run_minutes"]), int(default["period_minutes"])),
            continuous_cap_minutes=int(payload.get("continuous_cap_minutes", 600)),
            temp_override_margin_c=float(payload.get("temp_override_margin_c", 2.0)),
            high_wind_deviation_c=float(payload.get("high_wind_deviation_c", 4.0)),
            hemisphere=str(payload.get("hemisphere", "north")),
        )

    @classmethod
    def from_file(cls, path) -> "KnowledgeBase":
        with open(path, encoding="utf-8") as fh:
            return cls.from_payload(json.load(fh))


def default_knowledge_base() -> KnowledgeBase:
    raw = resources.files("airsteward.data").joinpath("knowledge_base.json").read_text(encoding="utf-8")
    return KnowledgeBase.from_payload(json.loads(raw))


def season_for(timestamp: str, hemisphere: str = "north") -> Season:
    month = parse_timestamp(timestamp).month
    northern = {12: Season.WINTER, 1: Season.WINTER, 2: Season.WINTER,
                3: Season.SPRING, 4: Season.SPRING, 5: Season.SPRING,
                6: Season.SUMMER, 7: Season.SUMMER, 8: Season.SUMMER,
                9: Season.AUTUMN, 10: Season.AUTUMN, 11: Season.AUTUMN}
    season = northern[month]
    if hemisphere.lower() == "south":
        flip = {Season.WINTER: Season.SUMMER, Season.SUMMER: Season.WINTER,
                Season.SPRING: Season.AUTUMN, Season.AUTUMN: Season.SPRING}
        season = flip[season]
    return season


@dataclass(frozen=True)
class EnvInput:
    outdoor: OutdoorWeather
    indoor: SensorSnapshot
    season: Season

    @classmethod
    def derive(cls, outdoor: OutdoorWeather, indoor: SensorSnapshot,
               hemisphere: str = "north") -> "EnvInput":
        return cls(outdoor=outdoor, indoor=indoor,
                   season=season_for(outdoor.timestamp, hemisphere))


# ---------------------------------------------------------------------------
# Household digests

def active_conditions(household: Household) -> list[tuple[PopulationGroup, HealthCondition]]:
    pairs = []
    for group in sorted(household.members, key=lambda g: g.value):
        profile = household.members[group]
        for cond in sorted(profile.active_conditions, key=lambda c: c.value):
            pairs.append((group, cond))
    return pairs


def has_condition(household: Household, condition: HealthCondition) -> bool:
    return any(cond is condition for _, cond in active_conditions(household))


def any_respiratory(household: Household) -> bool:
    return any(cond.is_respiratory for _, cond in active_conditions(household))


def dominant_offset(household: Household, kb: KnowledgeBase) -> float:
    """Offset of the most extreme preference; cold-sensitivity wins ties."""
    offsets = [kb.preference_offsets[m.preference] for m in household.members.values()]
    if not offsets:
        return 0.0
    return max(offsets, key=lambda off: (abs(off), off))


def preferences_of(household: Household) -> list[ThermalPreference]:
    return [m.preference for m in household.members.values()]


# ---------------------------------------------------------------------------
# Operations

def derive_thresholds(household: Household, kb: KnowledgeBase) -> Thresholds:
    """Threshold defaults, tightened once (not compounded) for sensitive occupants."""
    th = kb.thresholds
    if any_respiratory(household):
        factor = kb.sensitive_factor
        th = replace(
            th,
            pm25_ug_m3=th.pm25_ug_m3 * factor,
            tvoc_mg_m3=th.tvoc_mg_m3 * factor,
            formaldehyde_mg_m3=th.formaldehyde_mg_m3 * factor,
        )
    return th


def _level_for_ratio(ratio: float, kb: KnowledgeBase) -> AuxLevel:
    if ratio <= 1.0:
        return AuxLevel.OFF
    if ratio <= kb.low_max_ratio:
        return AuxLevel.LOW
    if ratio <= kb.medium_max_ratio:
        return AuxLevel.MEDIUM
    return AuxLevel.HIGH


def schedule_intervals(cmd: CommandSet, kb: KnowledgeBase) -> dict[AuxFunction, object]:
    """Duty cycles for every active auxiliary; inactive auxiliaries get None."""
    intervals: dict[AuxFunction, object] = {}
    for aux in AuxFunction:
        level = cmd.aux_level(aux)
        if level is AuxLevel.OFF:
            intervals[aux] = None
        elif aux is AuxFunction.AIR_STERILIZATION:
            intervals[aux] = kb.sterilization_interval
        else:
            intervals[aux] = kb.default_interval
    return intervals


@dataclass(frozen=True)
class Perception:
    """Intermediate values shared by the plan, the chain, and the tips."""

    thresholds: Thresholds
    sensor_risks: tuple[str, ...]
    condition_risks: tuple[HealthCondition, ...]
    epidemic: bool
    offset_c: float
    band: ComfortBand

    @property
    def risk_keys(self) -> tuple[str, ...]:
        keys = [cond.value for cond in self.condition_risks]
        if self.epidemic:
            keys.append("epidemic")
        keys.extend(self.sensor_risks)
        return tuple(keys)


def perceive(env: EnvInput, household: Household, kb: KnowledgeBase) -> Perception:
    th = derive_thresholds(household, kb)
    indoor = env.indoor
    risks = []
    if indoor.co2_ppm > th.co2_ppm:
        risks.append("co2")
    if indoor.pm25_ug_m3 > th.pm25_ug_m3:
        risks.append("pm25")
    if indoor.tvoc_mg_m3 > th.tvoc_mg_m3:
        risks.append("tvoc")
    if indoor.hcho_mg_m3 > th.formaldehyde_mg_m3:
        risks.append("formaldehyde")
    if indoor.humidity_pct < th.humidity_lower_pct:
        risks.append("humidity_low")
    elif indoor.humidity_pct > th.humidity_upper_pct:
        risks.append("humidity_high")
    conditions = tuple(cond for _, cond in active_conditions(household))
    return Perception(
        thresholds=th,
        sensor_risks=tuple(risks),
        condition_risks=conditions,
        epidemic=kb.epidemic_active,
        offset_c=dominant_offset(household, kb),
        band=kb.comfort_bands[env.season],
    )


def compose_tips(perception: Perception, kb: KnowledgeBase) -> str:
    """One template sentence per triggered risk; a generic sentence otherwise."""
    sentences = [kb.templates[key] for key in perception.risk_keys if key in kb.templates]
    if not sentences:
        sentences = [kb.templates["nominal"]]
    return " ".join(sentences)


def plan(env: EnvInput, household: Household, device: DeviceState,
         kb: KnowledgeBase) -> tuple[ControlPlan, ReasoningChain]:
    """Produce a valid plan plus the chain built from the same intermediates."""
    p = perceive(env, household, kb)
    th = p.thresholds
    indoor = env.indoor
    band = p.band
    offset = p.offset_c
    shifted_low = band.low_c + offset
    shifted_high = band.high_c + offset
    setpoint = band.midpoint_c + offset

    # Mode: season default, overridden by large temperature or humidity excursions.
    mode = band.mode
    if indoor.temperature_c > shifted_high + kb.temp_override_margin_c:
        mode = DeviceMode.COOL
    elif indoor.temperature_c < shifted_low - kb.temp_override_margin_c:
        mode = DeviceMode.HEAT
    elif "humidity_high" in p.sensor_risks:
        mode = DeviceMode.DEHUMIDIFY

    members = list(household.members.values())
    very_cold_sensitive = any(
        m.preference is ThermalPreference.VERY_COLD_SENSITIVE for m in members
    )
    asthma = any(HealthCondition.ASTHMA in m.active_conditions for m in members)
    respiratory = any_respiratory(household)

    # Wind: speed for convergence, then the health caps in priority order.
    wind_speed = WindSpeed.AUTO
    if abs(indoor.temperature_c - setpoint) > kb.high_wind_deviation_c:
        wind_speed = WindSpeed.HIGH
    if very_cold_sensitive and wind_speed is WindSpeed.HIGH:
        wind_speed = WindSpeed.MEDIUM
    if asthma:
        wind_speed = WindSpeed.LOW

    if mode is DeviceMode.COOL and very_cold_sensitive:
        wind_sensation = WindSensation.NO_WIND
    elif respiratory:
        wind_sensation = WindSensation.SOFT_WIND
    else:
        wind_sensation = WindSensation.NORMAL

    # Auxiliary levels from exceedance ratios against the derived thresholds.
    fresh = _level_for_ratio(indoor.co2_ppm / th.co2_ppm, kb)
    purification = _level_for_ratio(
        max(
            indoor.pm25_ug_m3 / th.pm25_ug_m3,
            indoor.tvoc_mg_m3 / th.tvoc_mg_m3,
            indoor.hcho_mg_m3 / th.formaldehyde_mg_m3,
        ),
        kb,
    )
    humidification = _level_for_ratio(
        th.humidity_lower_pct / max(indoor.humidity_pct, 1e-6), kb
    )
    if respiratory and kb.epidemic_active:
        sterilization = AuxLevel.MEDIUM
    elif respiratory or kb.epidemic_active:
        sterilization = AuxLevel.LOW
    else:
        sterilization = AuxLevel.OFF

    cmd = CommandSet(
        mode=mode,
        setpoint_c=setpoint,
        wind_speed=wind_speed,
        wind_sensation=wind_sensation,
        air_fresh=fresh,
        air_purification=purification,
        air_humidification=humidification,
        air_sterilization=sterilization,
        tips=compose_tips(p, kb),
    )
    intervals = schedule_intervals(cmd, kb)
    control_plan = ControlPlan(cmd=cmd, threshold=th, interval_time=intervals)
    chain = _build_chain(env, household, device, p, control_plan)
    return control_plan, chain


def _build_chain(env: EnvInput, household: Household, device: DeviceState,
                 p: Perception, control_plan: ControlPlan) -> ReasoningChain:
    indoor = env.indoor
    cmd = control_plan.cmd
    th = control_plan.threshold

    sensor_names = {"co2": "co2", "pm25": "pm2.5", "tvoc": "tvoc",
                    "formaldehyde": "formaldehyde",
                    "humidity_low": "humidity", "humidity_high": "humidity"}
    flagged = [sensor_names[key] for key in p.sensor_risks]
    parts = [
        f"{device.location or 'room'}: indoor {fmt_num(indoor.temperature_c)}C at "
        f"{fmt_num(indoor.humidity_pct)}% RH, season {env.season.value}, "
        f"{env.outdoor.city or 'outdoors'} {fmt_num(env.outdoor.temperature_c)}C outside."
    ]
    if flagged:
        parts.append("Readings above target: " + ", ".join(flagged) + ".")
    else:
        parts.append("All readings within target.")
    if p.condition_risks:
        notes = ", ".join(cond.value for cond in p.condition_risks)
        parts.append(f"Health notes: {notes}.")
    else:
        parts.append("No active health conditions.")
    if p.epidemic:
        parts.append("Regional epidemic advisory in effect.")
    perception_text = " ".join(parts)

    goal_parts = [
        f"Keep occupants comfortable: hold setpoint {fmt_num(cmd.setpoint_c)}C "
        f"with wind speed {cmd.wind_speed.value}."
    ]
    if p.risk_keys:
        goal_parts.append("Address: " + ", ".join(p.risk_keys) + ".")
    goals_text = " ".join(goal_parts)

    targets_text = (
        f"Targets: co2 < {fmt_num(th.co2_ppm)} ppm; pm2.5 < {fmt_num(th.pm25_ug_m3)} ug/m3; "
        f"tvoc < {fmt_num(th.tvoc_mg_m3)} mg/m3; formaldehyde < {fmt_num(th.formaldehyde_mg_m3)} mg/m3; "
        f"humidity {fmt_num(th.humidity_lower_pct)}-{fmt_num(th.humidity_upper_pct)}%."
    )

    active_aux = [aux for aux in AuxFunction if cmd.aux_level(aux) is not AuxLevel.OFF]
    strategy_parts = [
        f"Set mode {cmd.mode.value} at {fmt_num(cmd.setpoint_c)}C, "
        f"wind {cmd.wind_speed.value}, sensation {cmd.wind_sensation.value}."
    ]
    if active_aux:
        strategy_parts.append(
            "Activate " + ", ".join(
                f"{aux.value} {cmd.aux_level(aux).value}" for aux in active_aux
            ) + "."
        )
    else:
        strategy_parts.append("No auxiliary treatment needed.")
    strategy_text = " ".join(strategy_parts)

    scheduled = [
        (aux, control_plan.interval_time[aux])
        for aux in AuxFunction
        if isinstance(control_plan.interval_time.get(aux), IntervalSchedule)
    ]
    if scheduled:
        scheduling_text = "Schedule: " + "; ".join(
            f"{aux.value} every {entry.period_minutes} min for {entry.run_minutes} min"
            for aux, entry in scheduled
        ) + "."
    else:
        scheduling_text = "No auxiliary schedules required."

    return ReasoningChain(
        perception=perception_text,
        goals=goals_text,
        quantitative_targets=targets_text,
        strategy=strategy_text,
        scheduling=scheduling_text,
    )

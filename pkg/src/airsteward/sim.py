"""Discrete-time indoor-environment simulator and closed-loop schedule driver.

Dynamics are first-order relaxations integrated with explicit Euler:
every quantity leaks toward its outdoor value, device functions pull
toward their targets while active, and sources add at a constant rate.
The model exists to exercise the closed loop, not to be physically
accurate; every rate ships in SimParams and is tunable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Callable, Mapping, Optional

from .planner import EnvInput, KnowledgeBase, plan as run_planner
from .profiles import Household
from .schema import (
    AuxFunction,
    AuxLevel,
    Continuous,
    ControlPlan,
    DeviceMode,
    DeviceState,
    IntervalSchedule,
    OutdoorWeather,
    ReasoningChain,
    SensorSnapshot,
    canonical_json,
)

QUANTITIES = ("temperature_c", "humidity_pct", "co2_ppm", "tvoc_mg_m3",
              "pm25_ug_m3", "hcho_mg_m3")

# Quantity each auxiliary protects; breaches force the auxiliary on.
AUX_QUANTITY = {
    AuxFunction.AIR_FRESH: "co2_ppm",
    AuxFunction.AIR_PURIFICATION: "pm25_ug_m3",
    AuxFunction.AIR_HUMIDIFICATION: "humidity_pct",
    AuxFunction.AIR_STERILIZATION: None,
}


@dataclass(frozen=True)
class SimParams:
    leakage_rate: float = 0.02          # 1/min toward outdoor, every quantity
    temp_pull_rate: float = 0.10        # 1/min toward setpoint while conditioning
    aux_pull_rates: Mapping[str, float] = field(
        default_factory=lambda: {"low": 0.05, "medium": 0.10, "high": 0.20})
    occupancy_co2_source: float = 2.0   # ppm/min
    hcho_emission: float = 0.0005       # mg/m3/min
    outdoor_co2_ppm: float = 420.0
    outdoor_tvoc_mg_m3: float = 0.05
    outdoor_hcho_mg_m3: float = 0.01

    def __post_init__(self):
        if self.leakage_rate <= 0:
            raise ValueError("leakage_rate must be positive")
        for name in ("temp_pull_rate", "occupancy_co2_source", "hcho_emission",
                     "outdoor_co2_ppm", "outdoor_tvoc_mg_m3", "outdoor_hcho_mg_m3"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        for level, rate in self.aux_pull_rates.items():
            if rate < 0:
                raise ValueError(f"aux_pull_rates[{level}] must be non-negative")

    def aux_rate(self, level: AuxLevel) -> float:
        if level is AuxLevel.OFF:
            return 0.0
        return self.aux_pull_rates[level.value]

    @classmethod
    def from_payload(cls, payload: Mapping) -> "SimParams":
        kwargs = {}
        for name in ("leakage_rate", "temp_pull_rate", "occupancy_co2_source",
                     "hcho_emission", "outdoor_co2_ppm", "outdoor_tvoc_mg_m3",
                     "outdoor_hcho_mg_m3"):
            if name in payload:
                kwargs[name] = float(payload[name])
        if "aux_pull_rates" in payload:
            kwargs["aux_pull_rates"] = {
                str(k): float(v) for k, v in payload["aux_pull_rates"].items()
            }
        return cls(**kwargs)


def default_sim_params() -> SimParams:
    raw = resources.files("airsteward.data").joinpath("sim_params.json").read_text(encoding="utf-8")
    return SimParams.from_payload(json.loads(raw))


@dataclass(frozen=True)
class SimState:
    indoor: SensorSnapshot
    device: DeviceState
    clock_minutes: float = 0.0

    def to_payload(self) -> dict:
        return {
            "clock_minutes": self.clock_minutes,
            "indoor": self.indoor.to_payload(),
            "device": self.device.to_payload(),
        }


def _threshold_breached(indoor: SensorSnapshot, plan: ControlPlan, aux: AuxFunction) -> bool:
    th = plan.threshold
    if aux is AuxFunction.AIR_FRESH:
        return indoor.co2_ppm > th.co2_ppm
    if aux is AuxFunction.AIR_PURIFICATION:
        return (indoor.pm25_ug_m3 > th.pm25_ug_m3
                or indoor.tvoc_mg_m3 > th.tvoc_mg_m3
                or indoor.hcho_mg_m3 > th.formaldehyde_mg_m3)
    if aux is AuxFunction.AIR_HUMIDIFICATION:
        return indoor.humidity_pct < th.humidity_lower_pct
    return False


def tick_scheduler(state: SimState, sim_plan: ControlPlan) -> dict[AuxFunction, bool]:
    """Which auxiliaries run during the tick starting at state.clock_minutes.

    The duty cycle is a pure function of the clock, so an unforced
    auxiliary's pattern is exactly periodic. A threshold breach of the
    associated quantity forces a planned (non-off) auxiliary on even in
    its rest phase; auxiliaries the plan left off stay off until the
    next replan turns them on properly.
    """
    active: dict[AuxFunction, bool] = {}
    for aux in AuxFunction:
        planned = sim_plan.cmd.aux_level(aux) is not AuxLevel.OFF
        entry = sim_plan.interval_time.get(aux)
        if isinstance(entry, Continuous):
            scheduled_on = True
        elif isinstance(entry, IntervalSchedule):
            phase = state.clock_minutes % entry.period_minutes
            scheduled_on = phase < entry.run_minutes
        else:
            scheduled_on = False
        forced = planned and _threshold_breached(state.indoor, sim_plan, aux)
        active[aux] = (planned and scheduled_on) or forced
    return active


def _relax(value: float, target: float, rate: float, dt: float) -> float:
    return value + dt * rate * (target - value)


def step(state: SimState, sim_plan: ControlPlan, outdoor: OutdoorWeather,
         params: SimParams, dt: float = 1.0,
         active: Optional[Mapping[AuxFunction, bool]] = None) -> SimState:
    """One explicit-Euler step of dt minutes; clamps keep readings physical."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if active is None:
        active = tick_scheduler(state, sim_plan)
    indoor = state.indoor
    device = state.device
    cmd = sim_plan.cmd
    leak = params.leakage_rate

    def aux_pull(aux: AuxFunction) -> float:
        if not active.get(aux, False):
            return 0.0
        return params.aux_rate(cmd.aux_level(aux))

    temperature = _relax(indoor.temperature_c, outdoor.temperature_c, leak, dt)
    if device.power and cmd.setpoint_c is not None and cmd.mode is not DeviceMode.FAN_ONLY:
        temperature = _relax(temperature, cmd.setpoint_c, params.temp_pull_rate, dt)

    humidity = _relax(indoor.humidity_pct, outdoor.humidity_pct, leak, dt)
    band_mid = (sim_plan.threshold.humidity_lower_pct + sim_plan.threshold.humidity_upper_pct) / 2.0
    hum_rate = aux_pull(AuxFunction.AIR_HUMIDIFICATION)
    if hum_rate > 0:
        humidity = _relax(humidity, band_mid, hum_rate, dt)
    if device.power and cmd.mode is DeviceMode.DEHUMIDIFY:
        humidity = _relax(humidity, band_mid, params.temp_pull_rate, dt)

    co2 = _relax(indoor.co2_ppm, params.outdoor_co2_ppm, leak, dt)
    co2 += dt * params.occupancy_co2_source
    fresh_rate = aux_pull(AuxFunction.AIR_FRESH)
    if fresh_rate > 0:
        co2 = _relax(co2, params.outdoor_co2_ppm, fresh_rate, dt)

    purif_rate = aux_pull(AuxFunction.AIR_PURIFICATION)
    pm25 = _relax(indoor.pm25_ug_m3, outdoor.pm25_ug_m3, leak, dt)
    tvoc = _relax(indoor.tvoc_mg_m3, params.outdoor_tvoc_mg_m3, leak, dt)
    hcho = _relax(indoor.hcho_mg_m3, params.outdoor_hcho_mg_m3, leak, dt)
    hcho += dt * params.hcho_emission
    if purif_rate > 0:
        pm25 = _relax(pm25, 0.0, purif_rate, dt)
        tvoc = _relax(tvoc, 0.0, purif_rate, dt)
        hcho = _relax(hcho, 0.0, purif_rate, dt)

    new_indoor = SensorSnapshot(
        temperature_c=temperature,
        humidity_pct=min(100.0, max(0.0, humidity)),
        co2_ppm=max(0.0, co2),
        tvoc_mg_m3=max(0.0, tvoc),
        pm25_ug_m3=max(0.0, pm25),
        hcho_mg_m3=max(0.0, hcho),
    )
    return SimState(indoor=new_indoor, device=device,
                    clock_minutes=state.clock_minutes + dt)


def perturb(state: SimState, deltas: Mapping[str, float]) -> SimState:
    """Add deltas to named quantities, then clamp back to invariants."""
    values = {name: getattr(state.indoor, name) for name in QUANTITIES}
    for name, delta in deltas.items():
        if name not in values:
            raise KeyError(f"unknown quantity {name!r}")
        values[name] = values[name] + float(delta)
    values["humidity_pct"] = min(100.0, max(0.0, values["humidity_pct"]))
    for name in ("co2_ppm", "tvoc_mg_m3", "pm25_ug_m3", "hcho_mg_m3"):
        values[name] = max(0.0, values[name])
    return replace(state, indoor=SensorSnapshot(**values))


def apply_plan_to_device(device: DeviceState, sim_plan: ControlPlan) -> DeviceState:
    """Device state after executing the plan's immediate command set."""
    cmd = sim_plan.cmd
    return DeviceState(
        location=device.location,
        power=True,
        mode=cmd.mode,
        setpoint_c=cmd.setpoint_c,
        wind_speed=cmd.wind_speed,
        wind_sensation=cmd.wind_sensation,
        addon_levels={aux: cmd.aux_level(aux) for aux in AuxFunction},
    )


@dataclass(frozen=True)
class TrajectoryStep:
    clock_minutes: float
    state: SimState
    sim_plan: ControlPlan
    chain: ReasoningChain
    active: Mapping[AuxFunction, bool]
    replanned: bool

    def to_payload(self) -> dict:
        return {
            "clock_minutes": self.clock_minutes,
            "indoor": self.state.indoor.to_payload(),
            "device": self.state.device.to_payload(),
            "active": {aux.value: on for aux, on in sorted(
                self.active.items(), key=lambda kv: kv[0].value)},
            "replanned": self.replanned,
            "plan": self.sim_plan.to_payload(),
            "chain": self.chain.to_payload(),
        }


Planner = Callable[[EnvInput, Household, DeviceState, KnowledgeBase],
                   tuple[ControlPlan, ReasoningChain]]


def run_episode(scenario, kb: KnowledgeBase, params: SimParams,
                horizon_minutes: float, replan_every: float = 30.0,
                dt: float = 1.0, planner: Planner = run_planner) -> list[TrajectoryStep]:
    """Closed loop: plan at t=0 and every replan_every minutes, step in between."""
    if horizon_minutes <= 0:
        raise ValueError("horizon must be positive")
    scenario_kb = scenario.knowledge_base(kb)
    state = SimState(indoor=scenario.env.indoor, device=scenario.device, clock_minutes=0.0)
    outdoor = scenario.env.outdoor
    household = scenario.household
    season = scenario.env.season

    current_plan: Optional[ControlPlan] = None
    current_chain: Optional[ReasoningChain] = None
    trajectory: list[TrajectoryStep] = []
    last_replan = -replan_every

    while state.clock_minutes < horizon_minutes:
        replanned = False
        if current_plan is None or state.clock_minutes - last_replan >= replan_every:
            env = EnvInput(outdoor=outdoor, indoor=state.indoor, season=season)
            current_plan, current_chain = planner(env, household, state.device, scenario_kb)
            state = replace(state, device=apply_plan_to_device(state.device, current_plan))
            last_replan = state.clock_minutes
            replanned = True
        active = tick_scheduler(state, current_plan)
        state = step(state, current_plan, outdoor, params, dt, active=active)
        trajectory.append(TrajectoryStep(
            clock_minutes=state.clock_minutes,
            state=state,
            sim_plan=current_plan,
            chain=current_chain,
            active=active,
            replanned=replanned,
        ))
    return trajectory


def trajectory_to_jsonl(trajectory: list[TrajectoryStep]) -> bytes:
    lines = [canonical_json(step_record.to_payload()) for step_record in trajectory]
    return b"\n".join(lines) + b"\n" if lines else b""

"""Weighted 25-rule scoring of candidate outputs against scenario ground truth.

Rules 1-6 judge the reasoning chain segment by segment (perception, goals,
quantitative targets, strategy, scheduling); rules 7-25 judge the 19 plan
attributes. Chain judgments are mechanized as template-token matches, so
a candidate equal to the truth always scores full points, and scenario-level
hard checks (sterilization need, cold-sensitive + high fan, no-wind outside
cooling) zero their rules regardless of the truth.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Sequence

from .planner import KnowledgeBase, any_respiratory, fmt_num
from .scenarios import CorpusCase, Scenario
from .schema import (
    AuxFunction,
    AuxLevel,
    Continuous,
    ControlPlan,
    DeviceMode,
    IntervalSchedule,
    ReasoningChain,
    ThermalPreference,
    WindSensation,
    WindSpeed,
    validate_plan,
)

RULE_NAMES: dict[int, str] = {
    1: "Check air params & user status",
    2: "Temp & wind speed req.",
    3: "Air quality thresholds",
    4: "Basic AC plan",
    5: "Auxiliary function plan",
    6: "Activation interval",
    7: "cmd.mode",
    8: "cmd.temperature",
    9: "cmd.wind_speed",
    10: "cmd.wind_sensation",
    11: "cmd.air_fresh",
    12: "cmd.air_purification",
    13: "cmd.air_humidification",
    14: "cmd.air_sterilization",
    15: "threshold.co2",
    16: "threshold.pm25",
    17: "threshold.tvoc",
    18: "threshold.formaldehyde",
    19: "threshold.humidity_lower",
    20: "threshold.humidity_upper",
    21: "interval_time.air_fresh",
    22: "interval_time.air_purification",
    23: "interval_time.air_humidification",
    24: "interval_time.air_sterilization",
    25: "cmd.tips (Health Advice)",
}

RULE_WEIGHTS: dict[int, float] = {
    1: 1, 2: 5, 3: 1, 4: 5, 5: 5, 6: 4,
    7: 5, 8: 5, 9: 5, 10: 5,
    11: 10, 12: 10, 13: 10, 14: 10,
    15: 1, 16: 0, 17: 0, 18: 0, 19: 0, 20: 0,
    21: 2, 22: 2, 23: 2, 24: 2,
    25: 10,
}

# Joint threshold scoring: rule 15's single point covers rules 16-20 too.
UNWEIGHTED_RULES = (16, 17, 18, 19, 20)

# Tolerated deviation of a candidate activation period from the truth period;
# with the 2 h default period this is exactly the 2±1 h acceptance band.
INTERVAL_BAND_MINUTES = 60

SETPOINT_NORM_TOLERANCE_C = 3.0
SANE_SETPOINT_RANGE_C = (10.0, 35.0)

TIP_KEYWORDS: dict[str, str] = {
    "co2": "co2",
    "pm25": "particulate",
    "tvoc": "volatile",
    "formaldehyde": "formaldehyde",
    "humidity_low": "dry",
    "humidity_high": "muggy",
    "cold": "cold",
    "fever": "fever",
    "cough": "cough",
    "rhinitis": "rhinitis",
    "asthma": "asthma",
    "menstruation": "menstruation",
    "epidemic": "epidemic",
}

_SENSOR_MENTION = {
    "co2": "co2",
    "pm25": "pm2.5",
    "tvoc": "tvoc",
    "formaldehyde": "formaldehyde",
    "humidity_low": "humidity",
    "humidity_high": "humidity",
}


def total_weight() -> float:
    return sum(RULE_WEIGHTS.values())


assert total_weight() == 100, "rubric weights must sum to exactly 100"


@dataclass(frozen=True)
class PassPolicy:
    min_total: float = 80.0
    forbid_zero_on_weight10: bool = True

    def to_payload(self) -> dict:
        return {
            "min_total": self.min_total,
            "forbid_zero_on_weight10": self.forbid_zero_on_weight10,
        }


@dataclass(frozen=True)
class CandidateOutput:
    plan: Optional[ControlPlan]
    chain: Optional[ReasoningChain]
    diagnostic: str = ""


@dataclass(frozen=True)
class RuleScore:
    points: float
    reason: str

    def __iter__(self):
        # Unpacks as the (points, reason) pair the scoring API promises.
        return iter((self.points, self.reason))


@dataclass(frozen=True)
class RuleScoreReport:
    per_rule: Mapping[int, RuleScore]
    total: float
    passed: bool
    policy: PassPolicy
    diagnostics: tuple[str, ...] = ()

    def to_payload(self) -> dict:
        return {
            "total": self.total,
            "passed": self.passed,
            "policy": self.policy.to_payload(),
            "diagnostics": list(self.diagnostics),
            "per_rule": {
                str(rule_id): {
                    "name": RULE_NAMES[rule_id],
                    "weight": RULE_WEIGHTS[rule_id],
                    "points": score.points,
                    "reason": score.reason,
                }
                for rule_id, score in sorted(self.per_rule.items())
            },
        }


@dataclass
class _Ctx:
    scenario: Scenario
    kb: KnowledgeBase
    candidate: CandidateOutput
    truth_plan: ControlPlan
    truth_chain: ReasoningChain
    violations: tuple = ()

    @property
    def cplan(self) -> ControlPlan:
        return self.candidate.plan  # type: ignore[return-value]

    @property
    def cchain(self) -> ReasoningChain:
        return self.candidate.chain  # type: ignore[return-value]

    def violation_codes(self) -> set[str]:
        return {v.code for v in self.violations}


# ---------------------------------------------------------------------------
# Shared derivations

def sterilization_needed(scenario: Scenario) -> bool:
    return scenario.epidemic_active or any_respiratory(scenario.household)


def scenario_risk_keys(scenario: Scenario, truth_plan: ControlPlan,
                       kb: KnowledgeBase) -> tuple[str, ...]:
    """Risks the tips must mention, recomputed from scenario and truth thresholds."""
    indoor = scenario.env.indoor
    th = truth_plan.threshold
    risks = [cond.value for _, cond in _scenario_conditions(scenario)]
    if scenario.epidemic_active:
        risks.append("epidemic")
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
    return tuple(dict.fromkeys(risks))


def _scenario_conditions(scenario: Scenario):
    for group in sorted(scenario.household.members, key=lambda g: g.value):
        profile = scenario.household.members[group]
        for cond in sorted(profile.active_conditions, key=lambda c: c.value):
            yield group, cond


def _has_preference(scenario: Scenario, preference: ThermalPreference) -> bool:
    return any(m.preference is preference for m in scenario.household.members.values())


# ---------------------------------------------------------------------------
# Chain rules (1-6)

def _score_rule_1(ctx: _Ctx) -> RuleScore:
    if ctx.cchain is None:
        return RuleScore(0, "no reasoning chain supplied")
    text = ctx.cchain.perception.lower()
    if ctx.cchain.perception == ctx.truth_chain.perception:
        return RuleScore(RULE_WEIGHTS[1], "perception matches ground truth")
    required = set()
    indoor = ctx.scenario.env.indoor
    th = ctx.truth_plan.threshold
    if indoor.co2_ppm > th.co2_ppm:
        required.add(_SENSOR_MENTION["co2"])
    if indoor.pm25_ug_m3 > th.pm25_ug_m3:
        required.add(_SENSOR_MENTION["pm25"])
    if indoor.tvoc_mg_m3 > th.tvoc_mg_m3:
        required.add(_SENSOR_MENTION["tvoc"])
    if indoor.hcho_mg_m3 > th.formaldehyde_mg_m3:
        required.add(_SENSOR_MENTION["formaldehyde"])
    if not th.humidity_lower_pct <= indoor.humidity_pct <= th.humidity_upper_pct:
        required.add("humidity")
    required.update(cond.value for _, cond in _scenario_conditions(ctx.scenario))
    missing = sorted(tok for tok in required if tok not in text)
    if missing:
        return RuleScore(0, f"perception omits: {', '.join(missing)}")
    return RuleScore(RULE_WEIGHTS[1], "perception covers out-of-band readings and conditions")


def _score_rule_2(ctx: _Ctx) -> RuleScore:
    if ctx.cchain is None:
        return RuleScore(0, "no reasoning chain supplied")
    goals = ctx.cchain.goals.lower()
    if ctx.cchain.goals == ctx.truth_chain.goals:
        return RuleScore(RULE_WEIGHTS[2], "goals match ground truth")
    truth_cmd = ctx.truth_plan.cmd
    sp_ok = True
    if truth_cmd.setpoint_c is not None:
        sp_ok = f"setpoint {fmt_num(truth_cmd.setpoint_c)}" in goals
    ws_ok = f"wind speed {truth_cmd.wind_speed.value}" in goals
    if sp_ok and ws_ok:
        return RuleScore(RULE_WEIGHTS[2], "temperature and wind-speed requirements stated")
    if sp_ok or ws_ok:
        which = "temperature" if sp_ok else "wind speed"
        return RuleScore(3, f"partial: only the {which} requirement is stated")
    return RuleScore(0, "goals ignore the temperature and wind-speed requirements")


def _score_rule_3(ctx: _Ctx) -> RuleScore:
    if ctx.cchain is None:
        return RuleScore(0, "no reasoning chain supplied")
    if ctx.cchain.quantitative_targets == ctx.truth_chain.quantitative_targets:
        return RuleScore(RULE_WEIGHTS[3], "quantitative targets match ground truth")
    text = ctx.cchain.quantitative_targets
    th = ctx.truth_plan.threshold
    values = [th.co2_ppm, th.pm25_ug_m3, th.tvoc_mg_m3, th.formaldehyde_mg_m3,
              th.humidity_lower_pct, th.humidity_upper_pct]
    missing = [fmt_num(v) for v in values if fmt_num(v) not in text]
    if missing:
        return RuleScore(0, f"targets omit threshold value(s): {', '.join(missing)}")
    return RuleScore(RULE_WEIGHTS[3], "all six threshold values stated")


def _score_rule_4(ctx: _Ctx) -> RuleScore:
    if "setpoint-in-fanonly" in ctx.violation_codes():
        return RuleScore(0, "functionally contradictory: sets temperature in fan-only mode")
    if ctx.cchain is None:
        return RuleScore(0, "no reasoning chain supplied")
    strategy = ctx.cchain.strategy.lower()
    if ctx.cchain.strategy == ctx.truth_chain.strategy:
        return RuleScore(RULE_WEIGHTS[4], "strategy matches ground truth")
    if f"mode {ctx.truth_plan.cmd.mode.value}" in strategy:
        return RuleScore(RULE_WEIGHTS[4], "strategy proposes the expected mode")
    for mode in DeviceMode:
        if mode is not ctx.truth_plan.cmd.mode and f"mode {mode.value}" in strategy:
            return RuleScore(0, f"strategy proposes contradictory mode {mode.value}")
    return RuleScore(3, "strategy does not state the operating mode")


def _score_rule_5(ctx: _Ctx) -> RuleScore:
    if ctx.cchain is None:
        return RuleScore(0, "no reasoning chain supplied")
    strategy = ctx.cchain.strategy.lower()
    if ctx.cchain.strategy == ctx.truth_chain.strategy:
        return RuleScore(RULE_WEIGHTS[5], "auxiliary plan matches ground truth")
    needed = {aux.value for aux in AuxFunction
              if ctx.truth_plan.cmd.aux_level(aux) is not AuxLevel.OFF}
    mentioned = {aux.value for aux in AuxFunction if aux.value in strategy}
    if needed == mentioned:
        return RuleScore(RULE_WEIGHTS[5], "auxiliary plan covers exactly the needed functions")
    if needed and not (needed & mentioned):
        return RuleScore(0, f"auxiliary plan missing: {', '.join(sorted(needed))}")
    return RuleScore(3, "auxiliary plan partially matches the needed functions")


def _score_rule_6(ctx: _Ctx) -> RuleScore:
    if ctx.cchain is None:
        return RuleScore(0, "no reasoning chain supplied")
    scheduling = ctx.cchain.scheduling.lower()
    if ctx.cchain.scheduling == ctx.truth_chain.scheduling:
        return RuleScore(RULE_WEIGHTS[6], "scheduling matches ground truth")
    truth_periods = {
        aux.value: entry.period_minutes
        for aux, entry in ctx.truth_plan.interval_time.items()
        if isinstance(entry, IntervalSchedule)
    }
    if not truth_periods:
        if "every" in scheduling:
            return RuleScore(2, "schedules stated where none are required")
        return RuleScore(RULE_WEIGHTS[6], "no schedules required and none stated")
    hits = 0
    for aux_name, period in truth_periods.items():
        m = re.search(rf"{re.escape(aux_name)} every (\d+) min", scheduling)
        if m and abs(int(m.group(1)) - period) <= INTERVAL_BAND_MINUTES:
            hits += 1
    if hits == len(truth_periods):
        return RuleScore(RULE_WEIGHTS[6], "all activation intervals stated within the accepted band")
    if hits == 0:
        return RuleScore(0, "no usable activation interval stated")
    return RuleScore(2, "some activation intervals missing or outside the accepted band")


# ---------------------------------------------------------------------------
# Plan attribute rules (7-25)

def _score_rule_7(ctx: _Ctx) -> RuleScore:
    c, t = ctx.cplan.cmd.mode, ctx.truth_plan.cmd.mode
    if c is t:
        return RuleScore(RULE_WEIGHTS[7], "mode matches")
    opposite = {DeviceMode.COOL: DeviceMode.HEAT, DeviceMode.HEAT: DeviceMode.COOL}
    if opposite.get(t) is c:
        return RuleScore(0, f"mode {c.value} contradicts required {t.value}")
    return RuleScore(3, f"mode {c.value} suboptimal (expected {t.value})")


def _score_rule_8(ctx: _Ctx) -> RuleScore:
    c, t = ctx.cplan.cmd.setpoint_c, ctx.truth_plan.cmd.setpoint_c
    if "setpoint-in-fanonly" in ctx.violation_codes():
        return RuleScore(0, "illogical: temperature set in fan-only mode")
    if c == t:
        return RuleScore(RULE_WEIGHTS[8], "setpoint matches")
    if c is None:
        return RuleScore(0, "setpoint missing")
    band = ctx.kb.comfort_bands[ctx.scenario.env.season]
    if band.low_c - SETPOINT_NORM_TOLERANCE_C <= c <= band.high_c + SETPOINT_NORM_TOLERANCE_C:
        return RuleScore(RULE_WEIGHTS[8], "setpoint within +/-3C of the season norm")
    lo, hi = SANE_SETPOINT_RANGE_C
    if lo <= c <= hi:
        return RuleScore(3, "setpoint outside the season norm band")
    return RuleScore(0, f"illogical setpoint {fmt_num(c)}C")


def _score_rule_9(ctx: _Ctx) -> RuleScore:
    c, t = ctx.cplan.cmd.wind_speed, ctx.truth_plan.cmd.wind_speed
    very_cold = _has_preference(ctx.scenario, ThermalPreference.VERY_COLD_SENSITIVE)
    if very_cold and c is WindSpeed.HIGH:
        return RuleScore(0, "cold-sensitive occupant with high fan")
    if c is t:
        return RuleScore(RULE_WEIGHTS[9], "wind speed matches")
    order = {WindSpeed.LOW: 0, WindSpeed.MEDIUM: 1, WindSpeed.HIGH: 2}
    if c in order and t in order and abs(order[c] - order[t]) >= 2:
        return RuleScore(0, f"wind speed {c.value} contradicts required {t.value}")
    return RuleScore(3, f"wind speed {c.value} acceptable (expected {t.value})")


def _score_rule_10(ctx: _Ctx) -> RuleScore:
    c, t = ctx.cplan.cmd.wind_sensation, ctx.truth_plan.cmd.wind_sensation
    if c is WindSensation.NO_WIND and ctx.cplan.cmd.mode is not DeviceMode.COOL:
        return RuleScore(0, "no-wind sensation in non-cooling mode")
    if c is t:
        return RuleScore(RULE_WEIGHTS[10], "wind sensation matches")
    return RuleScore(3, f"wind sensation {c.value} acceptable (expected {t.value})")


def _aux_rule(rule_id: int, aux: AuxFunction):
    def score(ctx: _Ctx) -> RuleScore:
        c = ctx.cplan.cmd.aux_level(aux)
        t = ctx.truth_plan.cmd.aux_level(aux)
        if c is t:
            return RuleScore(RULE_WEIGHTS[rule_id], f"{aux.value} level correct")
        if t is not AuxLevel.OFF and c is AuxLevel.OFF:
            return RuleScore(0, f"{aux.value} missing: should be on but was off")
        return RuleScore(RULE_WEIGHTS[rule_id] / 2,
                         f"{aux.value} wrong level ({c.value}, expected {t.value})")
    return score


def _score_rule_14(ctx: _Ctx) -> RuleScore:
    needed = sterilization_needed(ctx.scenario)
    on = ctx.cplan.cmd.air_sterilization is not AuxLevel.OFF
    if needed and on:
        return RuleScore(RULE_WEIGHTS[14], "activated for respiratory illness or epidemic")
    if needed and not on:
        return RuleScore(0, "illness/epidemic present but sterilization is off")
    if on:
        return RuleScore(8, "no illness/epidemic but sterilization is on")
    return RuleScore(RULE_WEIGHTS[14], "correctly off with no illness/epidemic")


def _score_rule_15(ctx: _Ctx) -> RuleScore:
    if ctx.cplan.threshold == ctx.truth_plan.threshold:
        return RuleScore(RULE_WEIGHTS[15], "all six thresholds correct (covers rules 16-20)")
    return RuleScore(0, "threshold set differs from ground truth")


def _unweighted_rule(rule_id: int):
    def score(ctx: _Ctx) -> RuleScore:
        return RuleScore(0, "weight carried jointly by rule 15")
    return score


def _interval_rule(rule_id: int, aux: AuxFunction):
    def score(ctx: _Ctx) -> RuleScore:
        c = ctx.cplan.interval_time.get(aux)
        t = ctx.truth_plan.interval_time.get(aux)
        full = RULE_WEIGHTS[rule_id]
        if c == t:
            return RuleScore(full, f"{aux.value} interval correct")
        if isinstance(t, IntervalSchedule):
            if c is None:
                return RuleScore(0, f"{aux.value}: no interval given")
            if isinstance(c, Continuous):
                return RuleScore(full / 2, f"{aux.value}: continuous operation instead of a cycle")
            if abs(c.period_minutes - t.period_minutes) <= INTERVAL_BAND_MINUTES:
                return RuleScore(full, f"{aux.value} interval within the accepted band")
            return RuleScore(full / 2, f"{aux.value} interval outside the accepted band")
        if isinstance(t, Continuous):
            if c is None:
                return RuleScore(0, f"{aux.value}: no interval given")
            return RuleScore(full / 2, f"{aux.value}: cycle given where continuous was expected")
        # Truth has no schedule for this auxiliary.
        return RuleScore(full / 2, f"{aux.value}: spurious interval")
    return score


def _score_rule_25(ctx: _Ctx) -> RuleScore:
    tips = ctx.cplan.cmd.tips
    if tips == ctx.truth_plan.cmd.tips:
        return RuleScore(RULE_WEIGHTS[25], "tips match ground truth")
    risks = scenario_risk_keys(ctx.scenario, ctx.truth_plan, ctx.kb)
    if not risks:
        if tips.strip():
            return RuleScore(RULE_WEIGHTS[25], "relevant general advice for a nominal scenario")
        return RuleScore(0, "tips missing")
    text = tips.lower()
    hits = [key for key in risks if TIP_KEYWORDS.get(key, key) in text]
    if len(hits) == len(risks):
        return RuleScore(RULE_WEIGHTS[25], "tips address every triggered risk")
    if hits:
        missing = [k for k in risks if k not in hits]
        return RuleScore(5, f"weak care: tips omit {', '.join(missing)}")
    return RuleScore(0, "tips miss every triggered risk")


_CHAIN_SCORERS: dict[int, Callable[[_Ctx], RuleScore]] = {
    1: _score_rule_1,
    2: _score_rule_2,
    3: _score_rule_3,
    4: _score_rule_4,
    5: _score_rule_5,
    6: _score_rule_6,
}

_PLAN_SCORERS: dict[int, Callable[[_Ctx], RuleScore]] = {
    7: _score_rule_7,
    8: _score_rule_8,
    9: _score_rule_9,
    10: _score_rule_10,
    11: _aux_rule(11, AuxFunction.AIR_FRESH),
    12: _aux_rule(12, AuxFunction.AIR_PURIFICATION),
    13: _aux_rule(13, AuxFunction.AIR_HUMIDIFICATION),
    14: _score_rule_14,
    15: _score_rule_15,
    16: _unweighted_rule(16),
    17: _unweighted_rule(17),
    18: _unweighted_rule(18),
    19: _unweighted_rule(19),
    20: _unweighted_rule(20),
    21: _interval_rule(21, AuxFunction.AIR_FRESH),
    22: _interval_rule(22, AuxFunction.AIR_PURIFICATION),
    23: _interval_rule(23, AuxFunction.AIR_HUMIDIFICATION),
    24: _interval_rule(24, AuxFunction.AIR_STERILIZATION),
    25: _score_rule_25,
}


def score_rule(rule_id: int, scenario: Scenario, candidate: CandidateOutput,
               truth_plan: ControlPlan, truth_chain: ReasoningChain,
               kb: Optional[KnowledgeBase] = None) -> RuleScore:
    """Score a single rule; raises on unknown rule ids."""
    if rule_id not in RULE_WEIGHTS:
        raise KeyError(f"unknown rubric rule id {rule_id}")
    from .planner import default_knowledge_base

    kb = kb or default_knowledge_base()
    ctx = _Ctx(
        scenario=scenario,
        kb=scenario.knowledge_base(kb),
        candidate=candidate,
        truth_plan=truth_plan,
        truth_chain=truth_chain,
        violations=tuple(validate_plan(candidate.plan).violations) if candidate.plan else (),
    )
    if rule_id in _CHAIN_SCORERS:
        return _CHAIN_SCORERS[rule_id](ctx)
    if candidate.plan is None:
        return RuleScore(0, "candidate plan unusable: " + (candidate.diagnostic or "missing"))
    return _PLAN_SCORERS[rule_id](ctx)


def score_case(scenario: Scenario, candidate: CandidateOutput,
               truth_plan: ControlPlan, truth_chain: ReasoningChain,
               kb: Optional[KnowledgeBase] = None,
               policy: PassPolicy = PassPolicy()) -> RuleScoreReport:
    """Score all 25 rules; never raises for bad candidates, only deducts."""
    from .planner import default_knowledge_base

    kb = kb or default_knowledge_base()
    diagnostics = []
    if candidate.diagnostic:
        diagnostics.append(candidate.diagnostic)
    ctx = _Ctx(
        scenario=scenario,
        kb=scenario.knowledge_base(kb),
        candidate=candidate,
        truth_plan=truth_plan,
        truth_chain=truth_chain,
        violations=tuple(validate_plan(candidate.plan).violations) if candidate.plan else (),
    )
    if candidate.plan is not None and ctx.violations:
        diagnostics.append(
            "candidate plan violations: " + ", ".join(sorted(ctx.violation_codes()))
        )
    per_rule: dict[int, RuleScore] = {}
    for rule_id in sorted(RULE_WEIGHTS):
        if rule_id in _CHAIN_SCORERS:
            per_rule[rule_id] = _CHAIN_SCORERS[rule_id](ctx)
        elif candidate.plan is None:
            per_rule[rule_id] = RuleScore(
                0, "candidate plan unusable: " + (candidate.diagnostic or "missing"))
        else:
            per_rule[rule_id] = _PLAN_SCORERS[rule_id](ctx)
    total = sum(score.points for score in per_rule.values())
    passed = total >= policy.min_total
    if policy.forbid_zero_on_weight10 and passed:
        for rule_id, score in per_rule.items():
            if RULE_WEIGHTS[rule_id] == 10 and score.points == 0:
                passed = False
                break
    return RuleScoreReport(
        per_rule=per_rule,
        total=total,
        passed=passed,
        policy=policy,
        diagnostics=tuple(diagnostics),
    )


# ---------------------------------------------------------------------------
# Corpus runs

@dataclass(frozen=True)
class CaseResult:
    case_id: str
    total: float
    passed: bool
    lost_by_rule: Mapping[int, float]
    reasons: Mapping[int, str]


@dataclass(frozen=True)
class CorpusReport:
    n_cases: int
    pass_rate: float
    mean_total: float
    deduction_share: Mapping[int, float]
    common_reasons: Mapping[int, str]
    policy: PassPolicy
    cases: tuple[CaseResult, ...] = ()

    def to_payload(self) -> dict:
        return {
            "n_cases": self.n_cases,
            "pass_rate": self.pass_rate,
            "mean_total": self.mean_total,
            "policy": self.policy.to_payload(),
            "deduction_share": {
                str(rule_id): share for rule_id, share in sorted(
                    self.deduction_share.items(), key=lambda kv: -kv[1])
            },
            "common_deduction_reasons": {
                str(rule_id): reason for rule_id, reason in sorted(self.common_reasons.items())
            },
            "cases": [
                {"id": case.case_id, "total": case.total, "passed": case.passed}
                for case in self.cases
            ],
        }


CandidateSource = Callable[[CorpusCase], CandidateOutput]


def run_corpus(cases: Sequence[CorpusCase], candidate_source: CandidateSource,
               kb: Optional[KnowledgeBase] = None,
               policy: PassPolicy = PassPolicy()) -> CorpusReport:
    from .planner import default_knowledge_base

    kb = kb or default_knowledge_base()
    results: list[CaseResult] = []
    lost_totals: dict[int, float] = {}
    reason_counts: dict[int, dict[str, int]] = {}
    for index, case in enumerate(cases):
        candidate = candidate_source(case)
        report = score_case(case.scenario, candidate, case.truth_plan, case.truth_chain,
                            kb=kb, policy=policy)
        lost = {}
        reasons = {}
        for rule_id, score in report.per_rule.items():
            deficit = RULE_WEIGHTS[rule_id] - score.points
            if deficit > 0:
                lost[rule_id] = deficit
                reasons[rule_id] = score.reason
                lost_totals[rule_id] = lost_totals.get(rule_id, 0.0) + deficit
                counts = reason_counts.setdefault(rule_id, {})
                counts[score.reason] = counts.get(score.reason, 0) + 1
        results.append(CaseResult(
            case_id=case.case_id or f"case-{index}",
            total=report.total,
            passed=report.passed,
            lost_by_rule=lost,
            reasons=reasons,
        ))
    n = len(results)
    total_lost = sum(lost_totals.values())
    shares = {rule_id: lost / total_lost for rule_id, lost in lost_totals.items()} \
        if total_lost > 0 else {}
    common = {
        rule_id: max(counts.items(), key=lambda kv: (kv[1], kv[0]))[0]
        for rule_id, counts in reason_counts.items()
    }
    return CorpusReport(
        n_cases=n,
        pass_rate=(sum(1 for r in results if r.passed) / n) if n else 0.0,
        mean_total=(sum(r.total for r in results) / n) if n else 0.0,
        deduction_share=shares,
        common_reasons=common,
        policy=policy,
        cases=tuple(results),
    )


def planner_source(kb: Optional[KnowledgeBase] = None) -> CandidateSource:
    """Candidate source that re-plans each scenario with the reference planner."""
    from .planner import default_knowledge_base, plan as run_planner

    base_kb = kb or default_knowledge_base()

    def source(case: CorpusCase) -> CandidateOutput:
        scenario_kb = case.scenario.knowledge_base(base_kb)
        plan_out, chain = run_planner(case.scenario.env, case.scenario.household,
                                      case.scenario.device, scenario_kb)
        return CandidateOutput(plan=plan_out, chain=chain)

    return source


def file_source(path) -> CandidateSource:
    """Candidate source reading {"id", "plan", "chain"} JSONL.

    Candidates match by case id when present, falling back to file order.
    Undecodable lines become unusable candidates that score zero on the
    plan rules rather than aborting the run.
    """
    import json

    by_id: dict[str, CandidateOutput] = {}
    ordered: list[CandidateOutput] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            case_id = ""
            try:
                payload = json.loads(line)
                case_id = str(payload.get("id", ""))
                out = CandidateOutput(
                    plan=ControlPlan.from_payload(payload["plan"]),
                    chain=ReasoningChain.from_payload(payload["chain"])
                    if payload.get("chain") else None,
                )
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                out = CandidateOutput(plan=None, chain=None,
                                      diagnostic=f"candidate line {lineno}: {exc}")
            ordered.append(out)
            if case_id:
                by_id[case_id] = out

    counter = {"next": 0}

    def source(case: CorpusCase) -> CandidateOutput:
        if case.case_id and case.case_id in by_id:
            return by_id[case.case_id]
        index = counter["next"]
        counter["next"] += 1
        if index < len(ordered):
            return ordered[index]
        return CandidateOutput(plan=None, chain=None,
                               diagnostic="no candidate supplied for this case")

    return source


def backend_source(adapter, segmentation=None) -> CandidateSource:
    """Candidate source that asks a remote backend for a semi-stream per scenario."""
    from .schema import canonical_json
    from .streamparse import (
        DEFAULT_CONFIG,
        StreamCollector,
        chain_from_text,
        parse_stream,
    )

    config = segmentation or DEFAULT_CONFIG

    def source(case: CorpusCase) -> CandidateOutput:
        prompt = canonical_json(case.scenario.to_payload()).decode("utf-8")
        try:
            raw = "".join(adapter.submit(prompt)).encode("utf-8")
        except Exception as exc:  # transport failures deduct, never abort
            return CandidateOutput(plan=None, chain=None,
                                   diagnostic=f"backend error: {exc}")
        collector = StreamCollector()
        collector.add(parse_stream(raw, config, strict=False))
        if collector.errors:
            first = collector.errors[0]
            return CandidateOutput(plan=None, chain=None,
                                   diagnostic=f"backend stream: {first.message}")
        chain = None
        try:
            chain = chain_from_text(collector.reasoning_text)
        except ValueError:
            pass  # usable plan with an unparseable chain still scores rules 7-25
        return CandidateOutput(plan=collector.plan, chain=chain,
                               diagnostic="" if collector.plan else "backend stream had no command")

    return source

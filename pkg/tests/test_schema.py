"""Schema-core: enums, validation, canonical encoding, attribute vector."""

from __future__ import annotations

import itertools
import random

import pytest

from generators import random_plan, random_record
from airsteward.schema import (
    AuxFunction,
    AuxLevel,
    CommandSet,
    ControlPlan,
    DecodeError,
    DeviceMode,
    DeviceState,
    HealthCondition,
    IntervalSchedule,
    MemoryTagRecord,
    OutdoorWeather,
    PopulationGroup,
    SchemaError,
    SensorSnapshot,
    TagAction,
    ThermalPreference,
    Thresholds,
    WindSensation,
    WindSpeed,
    canonical_json,
    decode_plan,
    decode_record,
    encode_plan,
    encode_record,
    plan_attribute_vector,
    validate_plan,
)


def make_plan(**overrides) -> ControlPlan:
    cmd_kwargs = dict(
        mode=DeviceMode.COOL,
        setpoint_c=25.5,
        wind_speed=WindSpeed.AUTO,
        wind_sensation=WindSensation.NORMAL,
        air_fresh=AuxLevel.OFF,
        air_purification=AuxLevel.OFF,
        air_humidification=AuxLevel.OFF,
        air_sterilization=AuxLevel.LOW,
        tips="Sterilizing periodically while the epidemic advisory lasts.",
    )
    threshold = Thresholds(800.0, 15.0, 0.6, 0.08, 40.0, 60.0)
    intervals = {
        AuxFunction.AIR_FRESH: None,
        AuxFunction.AIR_PURIFICATION: None,
        AuxFunction.AIR_HUMIDIFICATION: None,
        AuxFunction.AIR_STERILIZATION: IntervalSchedule(30, 240),
    }
    cmd_kwargs.update({k: v for k, v in overrides.items() if k in cmd_kwargs})
    plan = ControlPlan(cmd=CommandSet(**cmd_kwargs), threshold=overrides.get("threshold", threshold),
                       interval_time=overrides.get("interval_time", intervals))
    return plan


class TestEnums:
    def test_population_group_variants(self):
        assert {g.value for g in PopulationGroup} == {
            "adult_male", "adult_female", "child", "elderly", "other"}

    def test_health_condition_respiratory_predicate(self):
        respiratory = {c for c in HealthCondition if c.is_respiratory}
        assert respiratory == {
            HealthCondition.COLD, HealthCondition.FEVER, HealthCondition.COUGH,
            HealthCondition.RHINITIS, HealthCondition.ASTHMA}
        assert not HealthCondition.MENSTRUATION.is_respiratory

    def test_thermal_preference_total_order(self):
        prefs = list(ThermalPreference)
        # Antisymmetry + transitivity over all 5x5 pairs.
        for a, b in itertools.product(prefs, prefs):
            assert (a < b) == (a.scale < b.scale)
            assert (a <= b and b <= a) == (a is b)
        for a, b, c in itertools.product(prefs, prefs, prefs):
            if a < b and b < c:
                assert a < c
        ordered = sorted(prefs)
        assert ordered[0] is ThermalPreference.VERY_COLD_SENSITIVE
        assert ordered[-1] is ThermalPreference.VERY_HEAT_SENSITIVE


class TestRecordValidation:
    def test_action_payload_consistency(self):
        with pytest.raises(SchemaError):
            MemoryTagRecord(group=PopulationGroup.CHILD,
                            action=TagAction.ADD_CONDITION).validate()
        with pytest.raises(SchemaError):
            MemoryTagRecord(group=PopulationGroup.CHILD, action=TagAction.SET_PREFERENCE,
                            condition=HealthCondition.COUGH).validate()
        MemoryTagRecord(group=PopulationGroup.CHILD, action=TagAction.ADD_CONDITION,
                        condition=HealthCondition.FEVER).validate()
        MemoryTagRecord(group=PopulationGroup.CHILD, action=TagAction.SET_GROUP_INFO).validate()

    def test_sensor_snapshot_bounds(self):
        with pytest.raises(SchemaError, match="humidity"):
            SensorSnapshot(22, 120, 500, 0.1, 5, 0.01).validate()
        with pytest.raises(SchemaError, match="co2"):
            SensorSnapshot(22, 50, -1, 0.1, 5, 0.01).validate()

    def test_outdoor_timestamp_must_parse(self):
        with pytest.raises(SchemaError, match="timestamp"):
            OutdoorWeather("X", "not-a-time", 20, 50, 10).validate()

    def test_device_fanonly_setpoint_rejected(self):
        with pytest.raises(SchemaError, match="fan_only"):
            DeviceState(
                location="den", power=True, mode=DeviceMode.FAN_ONLY, setpoint_c=26.0,
                wind_speed=WindSpeed.LOW, wind_sensation=WindSensation.NORMAL,
                addon_levels={aux: AuxLevel.OFF for aux in AuxFunction},
            ).validate()

    def test_device_addon_keys_exact(self):
        with pytest.raises(SchemaError, match="four"):
            DeviceState(
                location="den", power=True, mode=DeviceMode.AUTO, setpoint_c=24.0,
                wind_speed=WindSpeed.LOW, wind_sensation=WindSensation.NORMAL,
                addon_levels={AuxFunction.AIR_FRESH: AuxLevel.OFF},
            ).validate()


class TestValidatePlan:
    def test_setpoint_in_fanonly_flagged(self):
        plan = make_plan(mode=DeviceMode.FAN_ONLY, setpoint_c=26.0)
        assert "setpoint-in-fanonly" in validate_plan(plan).codes()

    def test_nowind_in_noncooling_flagged(self):
        plan = make_plan(mode=DeviceMode.HEAT, wind_sensation=WindSensation.NO_WIND)
        assert "nowind-in-noncooling" in validate_plan(plan).codes()

    def test_addon_on_without_interval_flagged(self):
        plan = make_plan(interval_time={aux: None for aux in AuxFunction})
        assert "addon-on-without-interval" in validate_plan(plan).codes()

    def test_consistent_cool_plan_is_valid(self):
        assert validate_plan(make_plan()).valid

    def test_inverted_humidity_band_flagged(self):
        plan = make_plan(threshold=Thresholds(800, 15, 0.6, 0.08, 60.0, 40.0))
        assert "humidity-band-inverted" in validate_plan(plan).codes()


class TestCanonicalEncoding:
    def test_round_trip_fixed_plan(self):
        plan = make_plan()
        assert decode_plan(encode_plan(plan)) == plan

    def test_round_trip_randomized(self):
        rng = random.Random(20250810)
        for _ in range(200):
            plan = random_plan(rng)
            assert decode_plan(encode_plan(plan)) == plan
            record = random_record(rng)
            assert decode_record(encode_record(record)) == record

    def test_round_trip_all_five_public_types(self):
        import json as json_mod

        from generators import random_device, random_outdoor, random_sensor_snapshot

        rng = random.Random(515151)
        for _ in range(200):
            for value, parser in (
                (random_sensor_snapshot(rng), SensorSnapshot.from_payload),
                (random_outdoor(rng), OutdoorWeather.from_payload),
                (random_device(rng), DeviceState.from_payload),
                (random_plan(rng), ControlPlan.from_payload),
                (random_record(rng), MemoryTagRecord.from_payload),
            ):
                encoded = canonical_json(value.to_payload())
                assert parser(json_mod.loads(encoded)) == value
                assert canonical_json(parser(json_mod.loads(encoded)).to_payload()) == encoded

    def test_encoding_deterministic_and_compact(self):
        plan = make_plan()
        first = encode_plan(plan)
        assert all(encode_plan(plan) == first for _ in range(5))
        assert b"\n" not in first and b": " not in first
        # Key-sorted at every level.
        import json
        payload = json.loads(first)
        assert list(payload) == sorted(payload)
        assert list(payload["cmd"]) == sorted(payload["cmd"])

    def test_decode_missing_cmd(self):
        with pytest.raises(SchemaError, match="missing field cmd"):
            decode_plan(b"{}")

    def test_decode_negative_co2_threshold(self):
        plan = make_plan()
        import json
        payload = json.loads(encode_plan(plan))
        payload["threshold"]["co2_ppm"] = -1
        with pytest.raises(SchemaError, match="threshold.co2_ppm must be positive"):
            decode_plan(canonical_json(payload))

    def test_decode_malformed_reports_byte_offset(self):
        data = b'{"cmd": {]'
        with pytest.raises(DecodeError) as excinfo:
            decode_plan(data)
        assert excinfo.value.byte_offset == data.index(b"]")

    def test_decode_byte_offset_counts_multibyte(self):
        data = '{"cmd": "日本語"'.encode("utf-8") + b"]"
        with pytest.raises(DecodeError) as excinfo:
            decode_plan(data)
        assert excinfo.value.byte_offset >= data.index(b"]") - 1


class TestAttributeVector:
    def test_length_and_first_name(self):
        vector = plan_attribute_vector(make_plan())
        assert len(vector) == 19
        assert vector[0][0] == "cmd.mode"

    def test_section_order(self):
        names = [name for name, _ in plan_attribute_vector(make_plan())]
        assert all(n.startswith("cmd.") for n in names[:9])
        assert all(n.startswith("threshold.") for n in names[9:15])
        assert all(n.startswith("interval_time.") for n in names[15:])

    def test_equal_plans_equal_vectors(self):
        rng = random.Random(7)
        for _ in range(50):
            plan = random_plan(rng)
            clone = decode_plan(encode_plan(plan))
            assert plan_attribute_vector(plan) == plan_attribute_vector(clone)

import { describe, expect, it } from "vitest";

import type { SessionCreated, StateView } from "../src/api.js";
import { DashboardModel } from "../src/model.js";

function stateAt(clock: number, co2 = 600): StateView {
  return {
    session_id: "s1",
    clock_minutes: clock,
    indoor: {
      temperature_c: 25, humidity_pct: 50, co2_ppm: co2,
      tvoc_mg_m3: 0.1, pm25_ug_m3: 8, hcho_mg_m3: 0.02,
    },
    device: {
      location: "lab", power: true, mode: "cool", setpoint_c: 25.5,
      wind_speed: "auto", wind_sensation: "normal",
      addon_levels: { air_fresh: "low", air_purification: "off",
        air_humidification: "off", air_sterilization: "low" },
    },
    active: { air_fresh: false, air_purification: false,
      air_humidification: false, air_sterilization: true },
    plan: null,
    plan_canonical: null,
    chain: null,
  };
}

function sessionBody(): SessionCreated {
  return {
    session_id: "s1",
    scenario_id: "demo",
    profile: {
      members: [{
        group: "elderly", preference: "neutral",
        conditions: [{ condition: "asthma", added_at: "2025-01-01T00:00:00+00:00" }],
      }],
    },
    state: stateAt(0),
  };
}

describe("DashboardModel", () => {
  it("profile chips update only from API responses", () => {
    const model = new DashboardModel();
    model.sessionCreated(sessionBody());
    expect(model.snapshot.profile?.members[0].conditions).toHaveLength(1);
    model.utteranceHandled([], "lexicon", { members: [{
      group: "elderly", preference: "neutral", conditions: [],
    }] });
    expect(model.snapshot.profile?.members[0].conditions).toHaveLength(0);
  });

  it("transcript equals the concatenation of deltas", () => {
    const model = new DashboardModel();
    model.sessionCreated(sessionBody());
    model.streamStarted();
    for (const piece of ["warm", " and ", "stale", " air"]) model.reasoningDelta(piece);
    expect(model.snapshot.currentRun?.text).toBe("warm and stale air");
    model.reasoningDone();
    expect(model.snapshot.currentRun?.complete).toBe(true);
  });

  it("a new stream archives the previous transcript", () => {
    const model = new DashboardModel();
    model.sessionCreated(sessionBody());
    model.streamStarted();
    model.reasoningDelta("first run");
    model.streamStarted();
    expect(model.snapshot.archivedRuns).toHaveLength(1);
    expect(model.snapshot.archivedRuns[0].text).toBe("first run");
    expect(model.snapshot.currentRun?.text).toBe("");
  });

  it("stream errors keep the partial transcript", () => {
    const model = new DashboardModel();
    model.sessionCreated(sessionBody());
    model.streamStarted();
    model.reasoningDelta("partial thought");
    model.streamFailed("connection reset");
    expect(model.snapshot.currentRun?.text).toBe("partial thought");
    expect(model.snapshot.currentRun?.error).toBe("connection reset");
    expect(model.snapshot.streamStatus).toBe("error");
  });

  it("the inspector stores the command payload untouched", () => {
    const model = new DashboardModel();
    model.sessionCreated(sessionBody());
    model.streamStarted();
    const payload = `{"cmd":{"mode":"cool","setpoint_c":25.5},"threshold":{"co2_ppm":800.0}}`;
    model.commandReady(payload);
    expect(model.snapshot.planText).toBe(payload);
    expect(model.snapshot.streamStatus).toBe("done");
    expect(model.planFields()).toMatchObject({ cmd: { mode: "cool" } });
  });

  it("gauges keep a rolling two-hour window", () => {
    const model = new DashboardModel();
    model.sessionCreated(sessionBody());
    for (let clock = 10; clock <= 300; clock += 10) {
      model.stateUpdated(stateAt(clock));
    }
    const clocks = model.snapshot.gauges.map((p) => p.clock);
    expect(Math.min(...clocks)).toBeGreaterThanOrEqual(300 - 120);
    expect(Math.max(...clocks)).toBe(300);
  });
});

/** Dashboard state container.
 *
 * All state derives from API responses and stream events; nothing here
 * recomputes a plan. The inspector keeps the command region exactly as
 * received, and the transcript is the plain concatenation of deltas.
 */

import type { ProfileView, SessionCreated, StateView, TagRecord } from "./api.js";

export interface GaugePoint {
  clock: number;
  temperature_c: number;
  humidity_pct: number;
  co2_ppm: number;
  tvoc_mg_m3: number;
  pm25_ug_m3: number;
  hcho_mg_m3: number;
}

export interface TranscriptRun {
  text: string;
  complete: boolean;
  error: string | null;
}

export type StreamStatus = "idle" | "streaming" | "done" | "error";

export interface ViewState {
  sessionId: string | null;
  scenarioId: string;
  profile: ProfileView | null;
  lastRecords: TagRecord[];
  lastProvenance: string;
  gauges: GaugePoint[];
  gaugeWindowMinutes: number;
  archivedRuns: TranscriptRun[];
  currentRun: TranscriptRun | null;
  planText: string | null;
  state: StateView | null;
  streamStatus: StreamStatus;
  banner: string | null;
}

export type Listener = (state: ViewState) => void;

export class DashboardModel {
  private state: ViewState = {
    sessionId: null,
    scenarioId: "",
    profile: null,
    lastRecords: [],
    lastProvenance: "",
    gauges: [],
    gaugeWindowMinutes: 120,
    archivedRuns: [],
    currentRun: null,
    planText: null,
    state: null,
    streamStatus: "idle",
    banner: null,
  };
  private listeners: Listener[] = [];

  get snapshot(): ViewState {
    return this.state;
  }

  subscribe(listener: Listener): void {
    this.listeners.push(listener);
  }

  private emit(patch: Partial<ViewState>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) listener(this.state);
  }

  sessionCreated(body: SessionCreated): void {
    this.emit({
      sessionId: body.session_id,
      scenarioId: body.scenario_id,
      profile: body.profile,
      state: body.state,
      gauges: [pointFrom(body.state)],
      banner: null,
    });
  }

  utteranceHandled(records: TagRecord[], provenance: string, profile: ProfileView): void {
    this.emit({ lastRecords: records, lastProvenance: provenance, profile, banner: null });
  }

  stateUpdated(state: StateView): void {
    const point = pointFrom(state);
    const cutoff = point.clock - this.state.gaugeWindowMinutes;
    const gauges = [...this.state.gauges.filter((p) => p.clock >= cutoff), point];
    this.emit({ state, gauges });
  }

  streamStarted(): void {
    const archived = this.state.currentRun
      ? [...this.state.archivedRuns, this.state.currentRun]
      : this.state.archivedRuns;
    this.emit({
      archivedRuns: archived,
      currentRun: { text: "", complete: false, error: null },
      streamStatus: "streaming",
      banner: null,
    });
  }

  reasoningDelta(text: string): void {
    const run = this.state.currentRun ?? { text: "", complete: false, error: null };
    this.emit({ currentRun: { ...run, text: run.text + text } });
  }

  reasoningDone(): void {
    const run = this.state.currentRun;
    if (run) this.emit({ currentRun: { ...run, complete: true } });
  }

  commandReady(payload: string): void {
    this.emit({ planText: payload, streamStatus: "done" });
  }

  streamFailed(message: string): void {
    const run = this.state.currentRun;
    this.emit({
      streamStatus: "error",
      banner: message,
      currentRun: run ? { ...run, error: message } : run,
    });
  }

  transportError(message: string): void {
    this.emit({ banner: message });
  }

  /** Parsed view of the inspector payload, for the summary cards only. */
  planFields(): Record<string, unknown> | null {
    if (this.state.planText == null) return null;
    try {
      return JSON.parse(this.state.planText) as Record<string, unknown>;
    } catch {
      return null;
    }
  }
}

function pointFrom(state: StateView): GaugePoint {
  return {
    clock: state.clock_minutes,
    temperature_c: state.indoor.temperature_c,
    humidity_pct: state.indoor.humidity_pct,
    co2_ppm: state.indoor.co2_ppm,
    tvoc_mg_m3: state.indoor.tvoc_mg_m3,
    pm25_ug_m3: state.indoor.pm25_ug_m3,
    hcho_mg_m3: state.indoor.hcho_mg_m3,
  };
}

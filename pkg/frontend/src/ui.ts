/** DOM rendering and event wiring for the operator console. */

import { StewardApi } from "./api.js";
import { DashboardModel, GaugePoint, ViewState } from "./model.js";
import { SemiStreamParser } from "./semistream.js";
import { readSseStream } from "./sse.js";

const GAUGE_SPECS: { key: keyof GaugePoint; label: string; unit: string; digits: number }[] = [
  { key: "temperature_c", label: "Temperature", unit: "°C", digits: 1 },
  { key: "humidity_pct", label: "Humidity", unit: "%RH", digits: 0 },
  { key: "co2_ppm", label: "CO₂", unit: "ppm", digits: 0 },
  { key: "pm25_ug_m3", label: "PM2.5", unit: "µg/m³", digits: 1 },
  { key: "tvoc_mg_m3", label: "TVOC", unit: "mg/m³", digits: 3 },
  { key: "hcho_mg_m3", label: "Formaldehyde", unit: "mg/m³", digits: 4 },
];

const QUANTITIES = ["co2_ppm", "pm25_ug_m3", "tvoc_mg_m3", "hcho_mg_m3",
  "temperature_c", "humidity_pct"];

export class DashboardApp {
  readonly model = new DashboardModel();
  private streaming = false;

  constructor(private readonly root: HTMLElement, private readonly api: StewardApi) {
    this.root.innerHTML = layout();
    this.model.subscribe((state) => this.render(state));
    this.wire();
  }

  async start(scenario = "demo"): Promise<void> {
    try {
      this.model.sessionCreated(await this.api.createSession(scenario));
    } catch (err) {
      this.model.transportError(`could not create a session: ${String(err)}`);
    }
  }

  private el<T extends HTMLElement>(selector: string): T {
    const node = this.root.querySelector<T>(selector);
    if (!node) throw new Error(`missing element ${selector}`);
    return node;
  }

  private wire(): void {
    const input = this.el<HTMLInputElement>("#utterance-input");
    const send = this.el<HTMLButtonElement>("#utterance-send");
    input.addEventListener("input", () => {
      send.disabled = input.value.trim() === "";
    });
    send.addEventListener("click", () => void this.submitUtterance());
    input.addEventListener("keydown", (event) => {
      if (event.key === "Enter" && !send.disabled) void this.submitUtterance();
    });

    this.el<HTMLButtonElement>("#plan-request").addEventListener(
      "click", () => void this.requestPlan());

    this.el<HTMLButtonElement>("#advance-run").addEventListener("click", () => {
      const minutes = Number(this.el<HTMLInputElement>("#advance-minutes").value);
      void this.steerAdvance(minutes);
    });
    const deltaInput = this.el<HTMLInputElement>("#perturb-delta");
    const perturbRun = this.el<HTMLButtonElement>("#perturb-run");
    deltaInput.addEventListener("input", () => {
      perturbRun.disabled = deltaInput.value.trim() === "";
    });
    perturbRun.addEventListener("click", () => {
      const quantity = this.el<HTMLSelectElement>("#perturb-quantity").value;
      void this.steerPerturb(quantity, Number(deltaInput.value));
    });
  }

  async submitUtterance(): Promise<void> {
    const input = this.el<HTMLInputElement>("#utterance-input");
    const text = input.value.trim();
    if (!text || !this.model.snapshot.sessionId) return;
    try {
      const body = await this.api.sendUtterance(this.model.snapshot.sessionId, text);
      this.model.utteranceHandled(body.records, body.provenance, body.profile);
      input.value = "";
      this.el<HTMLButtonElement>("#utterance-send").disabled = true;
    } catch (err) {
      this.model.transportError(`utterance failed: ${String(err)}`);
    }
  }

  async requestPlan(): Promise<void> {
    const sessionId = this.model.snapshot.sessionId;
    if (!sessionId || this.streaming) return;
    this.streaming = true;
    this.model.streamStarted();
    const parser = new SemiStreamParser();
    const apply = (events: ReturnType<SemiStreamParser["feed"]>) => {
      for (const event of events) {
        if (event.kind === "delta") this.model.reasoningDelta(event.text);
        else if (event.kind === "reasoning_done") this.model.reasoningDone();
        else if (event.kind === "command") this.model.commandReady(event.payload);
        else this.model.streamFailed(event.message);
      }
    };
    try {
      const body = await this.api.openPlanStream(sessionId);
      let sawError = false;
      await readSseStream(body, (frame) => {
        if (frame.event === "chunk") {
          const payload = JSON.parse(frame.data) as { chunk: string };
          apply(parser.feed(payload.chunk));
        } else if (frame.event === "error") {
          sawError = true;
          const payload = JSON.parse(frame.data) as { message: string };
          this.model.streamFailed(payload.message);
        }
      });
      if (!sawError) apply(parser.finish());
      this.model.stateUpdated(await this.api.getState(sessionId));
    } catch (err) {
      this.model.streamFailed(`stream dropped: ${String(err)}`);
    } finally {
      this.streaming = false;
    }
  }

  async steerAdvance(minutes: number): Promise<void> {
    const sessionId = this.model.snapshot.sessionId;
    if (!sessionId || !(minutes > 0)) return;
    try {
      this.model.stateUpdated(await this.api.advance(sessionId, minutes));
    } catch (err) {
      this.model.transportError(`advance failed: ${String(err)}`);
    }
  }

  async steerPerturb(quantity: string, delta: number): Promise<void> {
    const sessionId = this.model.snapshot.sessionId;
    if (!sessionId || Number.isNaN(delta)) return;
    try {
      this.model.stateUpdated(await this.api.perturb(sessionId, quantity, delta));
    } catch (err) {
      this.model.transportError(`perturb failed: ${String(err)}`);
    }
  }

  // -- rendering ---------------------------------------------------------

  private render(state: ViewState): void {
    this.el<HTMLElement>("#session-label").textContent = state.sessionId
      ? `session ${state.sessionId} · scenario ${state.scenarioId}`
      : "connecting…";
    const banner = this.el<HTMLElement>("#banner");
    banner.textContent = state.banner ?? "";
    banner.classList.toggle("visible", state.banner != null);

    this.renderProfile(state);
    this.renderGauges(state);
    this.renderDevice(state);
    this.renderTranscript(state);
    this.renderInspector(state);
  }

  private renderProfile(state: ViewState): void {
    const host = this.el<HTMLElement>("#profile-cards");
    if (!state.profile || state.profile.members.length === 0) {
      host.innerHTML = `<p class="empty">No household members yet.</p>`;
      return;
    }
    host.innerHTML = state.profile.members.map((member) => `
      <article class="member-card" data-group="${member.group}">
        <h3>${escapeHtml(member.group.replace("_", " "))}</h3>
        <p class="pref">${escapeHtml(member.preference.replace(/_/g, " "))}</p>
        <div class="chips">
          ${member.conditions.length === 0
            ? `<span class="chip healthy">healthy</span>`
            : member.conditions.map((c) =>
              `<span class="chip condition" data-condition="${c.condition}">`
              + `${escapeHtml(c.condition)}</span>`).join("")}
        </div>
      </article>`).join("");
  }

  private renderGauges(state: ViewState): void {
    const host = this.el<HTMLElement>("#gauges");
    const points = state.gauges;
    host.innerHTML = GAUGE_SPECS.map((spec) => {
      const series = points.map((p) => p[spec.key] as number);
      const latest = series.length ? series[series.length - 1] : null;
      return `
        <div class="gauge" data-quantity="${String(spec.key)}">
          <span class="gauge-label">${spec.label}</span>
          <span class="gauge-value">${latest === null ? "–" : latest.toFixed(spec.digits)}
            <small>${spec.unit}</small></span>
          ${sparkline(series)}
        </div>`;
    }).join("");
    this.el<HTMLElement>("#clock-label").textContent =
      state.state ? `t = ${state.state.clock_minutes.toFixed(0)} min` : "";
  }

  private renderDevice(state: ViewState): void {
    const host = this.el<HTMLElement>("#device-card");
    const device = state.state?.device;
    if (!device) {
      host.innerHTML = `<p class="empty">No device state.</p>`;
      return;
    }
    const active = state.state?.active ?? {};
    host.innerHTML = `
      <p><strong>${escapeHtml(device.location)}</strong> ·
        ${device.power ? "on" : "off"} · mode ${escapeHtml(device.mode)}
        ${device.setpoint_c != null ? `@ ${device.setpoint_c}°C` : ""}</p>
      <p>wind ${escapeHtml(device.wind_speed)} / ${escapeHtml(device.wind_sensation)}</p>
      <div class="badges">
        ${Object.entries(device.addon_levels).map(([aux, level]) => `
          <span class="badge ${level !== "off" ? "planned" : ""} ${active[aux] ? "running" : ""}"
                data-aux="${aux}">
            ${escapeHtml(aux.replace("air_", ""))}: ${escapeHtml(level)}${active[aux] ? " ●" : ""}
          </span>`).join("")}
      </div>`;
  }

  private renderTranscript(state: ViewState): void {
    const host = this.el<HTMLElement>("#transcript");
    const runs = state.currentRun
      ? [...state.archivedRuns, state.currentRun]
      : state.archivedRuns;
    host.innerHTML = runs.length === 0
      ? `<p class="empty">Request a plan to see the reasoning stream.</p>`
      : runs.map((run, index) => `
        <pre class="run ${index === runs.length - 1 ? "latest" : "archived"}
             ${run.error ? "failed" : ""}">${escapeHtml(run.text)}${
               run.error ? `\n[stream error: ${escapeHtml(run.error)}]` : ""}</pre>`).join("");
    this.el<HTMLElement>("#stream-status").textContent = state.streamStatus;
  }

  private renderInspector(state: ViewState): void {
    const host = this.el<HTMLElement>("#plan-inspector");
    if (state.planText == null) {
      host.innerHTML = `<p class="empty">No plan yet.</p>`;
      return;
    }
    const fields = this.model.planFields();
    const summary = fields ? summarize(fields) : "";
    host.innerHTML = `
      ${summary}
      <details open>
        <summary>exact command payload</summary>
        <pre id="plan-payload">${escapeHtml(state.planText)}</pre>
      </details>`;
  }
}

function summarize(fields: Record<string, unknown>): string {
  const cmd = (fields["cmd"] ?? {}) as Record<string, unknown>;
  const threshold = (fields["threshold"] ?? {}) as Record<string, unknown>;
  const intervals = (fields["interval_time"] ?? {}) as Record<string, unknown>;
  const rows = Object.entries(intervals).map(([aux, entry]) => {
    let text = "off";
    if (entry && typeof entry === "object") {
      const e = entry as { run_minutes: number; period_minutes: number };
      text = `${e.run_minutes} min every ${e.period_minutes} min`;
    } else if (entry === "continuous") {
      text = "continuous";
    }
    return `<tr><td>${escapeHtml(aux)}</td><td>${escapeHtml(String(cmd[aux] ?? "–"))}</td>
      <td>${text}</td></tr>`;
  }).join("");
  return `
    <p class="plan-headline">mode <strong>${escapeHtml(String(cmd["mode"]))}</strong>
      ${cmd["setpoint_c"] != null ? `@ ${String(cmd["setpoint_c"])}°C` : ""}
      · wind ${escapeHtml(String(cmd["wind_speed"]))}
      / ${escapeHtml(String(cmd["wind_sensation"]))}</p>
    <table class="plan-table">
      <thead><tr><th>auxiliary</th><th>level</th><th>schedule</th></tr></thead>
      <tbody>${rows}</tbody>
    </table>
    <p class="thresholds">targets: co2 &lt; ${String(threshold["co2_ppm"])} ppm ·
      pm2.5 &lt; ${String(threshold["pm25_ug_m3"])} ·
      hcho &lt; ${String(threshold["formaldehyde_mg_m3"])} ·
      humidity ${String(threshold["humidity_lower_pct"])}–${String(threshold["humidity_upper_pct"])}%</p>
    <p class="tips">💬 ${escapeHtml(String(cmd["tips"] ?? ""))}</p>`;
}

function sparkline(series: number[]): string {
  if (series.length < 2) return `<svg class="spark" viewBox="0 0 120 28"></svg>`;
  const min = Math.min(...series);
  const max = Math.max(...series);
  const span = max - min || 1;
  const points = series.map((value, i) => {
    const x = (i / (series.length - 1)) * 118 + 1;
    const y = 26 - ((value - min) / span) * 24;
    return `${x.toFixed(1)},${y.toFixed(1)}`;
  }).join(" ");
  return `<svg class="spark" viewBox="0 0 120 28">
    <polyline points="${points}" fill="none" stroke="currentColor" stroke-width="1.5"/>
  </svg>`;
}

function escapeHtml(text: string): string {
  return text.replace(/[&<>"']/g, (ch) => ({
    "&": "&amp;", "<": "&lt;", ">": "&gt;", '"': "&quot;", "'": "&#39;",
  }[ch] as string));
}

function layout(): string {
  return `
    <header>
      <h1>airsteward console</h1>
      <span id="session-label">connecting…</span>
      <span id="clock-label"></span>
    </header>
    <div id="banner" class="banner"></div>
    <main>
      <section class="column">
        <h2>Household</h2>
        <div id="profile-cards"></div>
        <div class="utterance-box">
          <input id="utterance-input" type="text"
                 placeholder="Say something… e.g. Grandma's asthma has cleared up"/>
          <button id="utterance-send" disabled>send</button>
        </div>
        <h2>Environment <span id="gauge-window">(2 h window)</span></h2>
        <div id="gauges"></div>
        <div class="steer-box">
          <label>advance <input id="advance-minutes" type="number" value="30" min="1"/> min</label>
          <button id="advance-run">advance</button>
          <label>perturb
            <select id="perturb-quantity">
              ${QUANTITIES.map((q) => `<option value="${q}">${q}</option>`).join("")}
            </select>
            by <input id="perturb-delta" type="number" placeholder="+600"/>
          </label>
          <button id="perturb-run" disabled>inject</button>
        </div>
        <h2>Device</h2>
        <div id="device-card"></div>
      </section>
      <section class="column">
        <h2>Reasoning <button id="plan-request">request plan</button>
          <span id="stream-status" class="status">idle</span></h2>
        <div id="transcript"></div>
        <h2>Plan inspector</h2>
        <div id="plan-inspector"></div>
      </section>
    </main>`;
}

/** Typed client for the steward HTTP API. */

export interface ConditionChip {
  condition: string;
  added_at: string;
}

export interface MemberView {
  group: string;
  preference: string;
  conditions: ConditionChip[];
}

export interface ProfileView {
  members: MemberView[];
}

export interface TagRecord {
  group: string;
  action: string;
  condition: string | null;
  preference: string | null;
  source_utterance_id: string;
}

export interface UtteranceResponse {
  records: TagRecord[];
  provenance: string;
  profile: ProfileView;
}

export interface IndoorReadings {
  temperature_c: number;
  humidity_pct: number;
  co2_ppm: number;
  tvoc_mg_m3: number;
  pm25_ug_m3: number;
  hcho_mg_m3: number;
}

export interface DeviceView {
  location: string;
  power: boolean;
  mode: string;
  setpoint_c: number | null;
  wind_speed: string;
  wind_sensation: string;
  addon_levels: Record<string, string>;
}

export interface StateView {
  session_id: string;
  clock_minutes: number;
  indoor: IndoorReadings;
  device: DeviceView;
  active: Record<string, boolean>;
  plan: unknown;
  plan_canonical: string | null;
  chain: Record<string, string> | null;
}

export interface SessionCreated {
  session_id: string;
  scenario_id: string;
  profile: ProfileView;
  state: StateView;
}

export class ApiError extends Error {
  constructor(message: string, readonly status: number) {
    super(message);
  }
}

async function expectOk(response: Response): Promise<Response> {
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const body = (await response.json()) as { detail?: string };
      if (body.detail) detail = body.detail;
    } catch {
      /* non-JSON error body */
    }
    throw new ApiError(detail, response.status);
  }
  return response;
}

export class StewardApi {
  constructor(readonly baseUrl: string = "") {}

  private url(path: string): string {
    return this.baseUrl + path;
  }

  async createSession(scenario = "demo"): Promise<SessionCreated> {
    const response = await expectOk(await fetch(this.url("/sessions"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ scenario }),
    }));
    return (await response.json()) as SessionCreated;
  }

  async sendUtterance(sessionId: string, text: string): Promise<UtteranceResponse> {
    const response = await expectOk(await fetch(this.url(`/sessions/${sessionId}/utterance`), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ text }),
    }));
    return (await response.json()) as UtteranceResponse;
  }

  async getState(sessionId: string): Promise<StateView> {
    const response = await expectOk(await fetch(this.url(`/sessions/${sessionId}/state`)));
    return (await response.json()) as StateView;
  }

  async getProfile(sessionId: string): Promise<ProfileView> {
    const response = await expectOk(await fetch(this.url(`/sessions/${sessionId}/profile`)));
    return ((await response.json()) as { profile: ProfileView }).profile;
  }

  async advance(sessionId: string, minutes: number): Promise<StateView> {
    const response = await expectOk(await fetch(this.url(`/sessions/${sessionId}/advance`), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ minutes }),
    }));
    return (await response.json()) as StateView;
  }

  async perturb(sessionId: string, quantity: string, delta: number): Promise<StateView> {
    const response = await expectOk(await fetch(this.url(`/sessions/${sessionId}/perturb`), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ deltas: { [quantity]: delta } }),
    }));
    return (await response.json()) as StateView;
  }

  /** POST the plan request and hand the raw SSE body to the caller. */
  async openPlanStream(sessionId: string): Promise<ReadableStream<Uint8Array>> {
    const response = await expectOk(await fetch(this.url(`/sessions/${sessionId}/plan`), {
      method: "POST",
    }));
    if (!response.body) {
      throw new ApiError("plan stream had no body", response.status);
    }
    return response.body;
  }
}

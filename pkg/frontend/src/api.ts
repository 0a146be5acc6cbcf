// Typed client for the phn HTTP API. The dashboard never computes
// domain numbers itself; everything displayed comes from these payloads.

export interface Confidence {
  risk_pct: number;
  vo2: number | null;
}

export interface HealthState {
  ts: string;
  ascvd_risk_pct: number;
  vo2max_indicator: number | null;
  resting_hr: number;
  confidence: Confidence;
}

export interface Dimension {
  name: string;
  unit: string;
  orientation: "higher_is_better" | "lower_is_better";
  bounds: [number, number];
  bucket_count: number;
}

export interface GraphEdge {
  from: number;
  to: number;
  cost_weeks: number;
  input_label: string;
}

export interface Rules {
  tsb_optimal: [number, number];
  tsb_rest_floor: number;
  trimp_min: number;
}

export interface Statespace {
  dimensions: Dimension[];
  shape: [number, number];
  edges: GraphEdge[];
  roi_labels: Record<string, string>;
  roi_colors: Record<string, string>;
  current_node: number | null;
  clamped: boolean;
  goal_roi: string | null;
  rules: Rules;
}

export interface Route {
  nodes: number[];
  total_cost_weeks: number;
  input_labels: string[];
}

export interface RoutesPayload {
  current_node: number;
  clamped: boolean;
  goal_roi: string;
  routes: Route[];
}

export interface TripletOption {
  intensity: "low" | "medium" | "high";
  minutes: number;
  hr_band: [number, number];
}

export interface WeekSummary {
  week_start: string;
  trimp_w: number;
  scaled_down: boolean;
  ramp_limited: boolean;
  floor_overridden: boolean;
}

export interface Guidance {
  date: string;
  trimp_goal: number;
  rest_day: boolean;
  options: TripletOption[];
  rationale: string;
  week: WeekSummary;
}

export interface LoadRow {
  date: string;
  trimp: number;
  ctl: number;
  atl: number;
  tsb: number;
}

export interface WorkoutEntry {
  date: string;
  low_min?: number;
  med_min?: number;
  high_min?: number;
}

export interface WhatifPayload {
  projection: LoadRow[];
}

export class ApiError extends Error {
  constructor(readonly status: number, detail: string) {
    super(detail);
    this.name = "ApiError";
  }
}

export function parseLoadsCsv(text: string): LoadRow[] {
  const lines = text.trim().split("\n");
  const rows: LoadRow[] = [];
  for (const line of lines.slice(1)) {
    const [date, trimp, ctl, atl, tsb] = line.split(",");
    if (!date) continue;
    rows.push({
      date,
      trimp: Number(trimp),
      ctl: Number(ctl),
      atl: Number(atl),
      tsb: Number(tsb),
    });
  }
  return rows;
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly token: string,
    private readonly fetchFn: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request(method: string, path: string, body?: unknown): Promise<Response> {
    const init: RequestInit = {
      method,
      headers: { Authorization: `Bearer ${this.token}` },
    };
    if (body !== undefined) {
      init.body = JSON.stringify(body);
      (init.headers as Record<string, string>)["Content-Type"] = "application/json";
    }
    const response = await this.fetchFn(this.baseUrl + path, init);
    if (!response.ok) {
      let detail = `${response.status}`;
      try {
        const doc = await response.json();
        if (doc && typeof doc.detail === "string") detail = doc.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return response;
  }

  async getState(userId: string): Promise<HealthState> {
    return (await this.request("GET", `/users/${userId}/state`)).json();
  }

  async getStatespace(userId: string): Promise<Statespace> {
    return (await this.request("GET", `/users/${userId}/statespace`)).json();
  }

  async getRoutes(userId: string, k = 3): Promise<RoutesPayload> {
    return (await this.request("GET", `/users/${userId}/routes?k=${k}`)).json();
  }

  async getGuidance(userId: string, date: string): Promise<Guidance> {
    return (await this.request("GET", `/users/${userId}/guidance?date=${date}`)).json();
  }

  async getLoads(userId: string): Promise<LoadRow[]> {
    const response = await this.request("GET", `/users/${userId}/loads.csv`);
    return parseLoadsCsv(await response.text());
  }

  async postGoal(userId: string, roiLabel: string): Promise<void> {
    await this.request("POST", `/users/${userId}/goal`, { roi_label: roiLabel });
  }

  async postWorkout(userId: string, workout: WorkoutEntry): Promise<void> {
    await this.request("POST", `/users/${userId}/workouts`, workout);
  }

  async whatIf(userId: string, workouts: WorkoutEntry[]): Promise<WhatifPayload> {
    const response = await this.request("POST", "/whatif", { user_id: userId, workouts });
    return response.json();
  }
}

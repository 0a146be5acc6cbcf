// Fixture API: canned responses captured from the real service
// (tests/fixtures.json), served through a fetch-compatible function
// that records every call.

import fixturesJson from "./fixtures.json" with { type: "json" };

import type { FetchLike } from "../src/api.js";

export const fixtures = fixturesJson as unknown as {
  state: unknown;
  statespace: unknown;
  routes: unknown;
  guidance: unknown;
  guidance_after_workout: unknown;
  loads_csv: string;
  loads_csv_after_workout: string;
  whatif: unknown;
};

export interface RecordedCall {
  method: string;
  path: string;
  body: unknown;
}

export class FakeApi {
  calls: RecordedCall[] = [];
  workoutLogged = false;
  failPaths = new Set<string>();

  fetch: FetchLike = async (input, init) => {
    const method = init?.method ?? "GET";
    const path = input.replace(/^https?:\/\/[^/]+/, "");
    const body = init?.body ? JSON.parse(init.body as string) : undefined;
    this.calls.push({ method, path, body });

    if (this.failPaths.has(path)) {
      return json({ detail: "synthetic failure" }, 422);
    }
    if (method === "GET" && path.endsWith("/state")) return json(fixtures.state);
    if (method === "GET" && path.endsWith("/statespace")) return json(fixtures.statespace);
    if (method === "GET" && path.includes("/routes")) return json(fixtures.routes);
    if (method === "GET" && path.includes("/guidance")) {
      return json(this.workoutLogged ? fixtures.guidance_after_workout : fixtures.guidance);
    }
    if (method === "GET" && path.endsWith("/loads.csv")) {
      return csv(this.workoutLogged ? fixtures.loads_csv_after_workout : fixtures.loads_csv);
    }
    if (method === "POST" && path.endsWith("/workouts")) {
      this.workoutLogged = true;
      return json({ seq: 99, trimp: 30 });
    }
    if (method === "POST" && path.endsWith("/goal")) return json({ seq: 100 });
    if (method === "POST" && path === "/whatif") return json(fixtures.whatif);
    return json({ detail: `no fixture for ${method} ${path}` }, 404);
  };

  callsTo(path: string): RecordedCall[] {
    return this.calls.filter((c) => c.path.includes(path));
  }
}

function json(doc: unknown, status = 200): Response {
  return new Response(JSON.stringify(doc), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

function csv(text: string): Response {
  return new Response(text, { status: 200, headers: { "Content-Type": "text/csv" } });
}

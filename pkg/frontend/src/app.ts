// Dashboard controller: owns the view state, runs the refresh cycle,
// and serializes mutations (one in flight, refresh settles before the
// next is allowed). All numbers rendered come from API payloads.

import {
  ApiClient,
  type Guidance,
  type HealthState,
  type LoadRow,
  type RoutesPayload,
  type Statespace,
  type WhatifPayload,
  type WorkoutEntry,
} from "./api.js";
import { renderLoadChart } from "./charts.js";
import { renderGuidanceCard, renderStateSummary } from "./guidance.js";
import { renderMap, renderRouteList } from "./map.js";

export interface DashboardState {
  state: HealthState | null;
  statespace: Statespace | null;
  routes: RoutesPayload | null;
  loads: LoadRow[];
  guidance: Guidance | null;
  whatif: WhatifPayload | null;
  selectedRoute: number | null;
  error: string | null;
  stale: boolean;
  busy: boolean;
}

function isoToday(): string {
  return new Date().toISOString().slice(0, 10);
}

export class Dashboard {
  readonly state: DashboardState = {
    state: null,
    statespace: null,
    routes: null,
    loads: [],
    guidance: null,
    whatif: null,
    selectedRoute: null,
    error: null,
    stale: false,
    busy: false,
  };

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
    private readonly userId: string,
    private readonly today: string = isoToday(),
  ) {
    this.root.addEventListener("click", (event) => {
      void this.onClick(event);
    });
  }

  async refresh(): Promise<void> {
    try {
      this.state.state = await this.api.getState(this.userId);
      this.state.statespace = await this.api.getStatespace(this.userId);
      this.state.loads = await this.api.getLoads(this.userId);
      this.state.guidance = await this.api.getGuidance(this.userId, this.today);
      if (this.state.statespace.goal_roi) {
        this.state.routes = await this.api.getRoutes(this.userId);
      } else {
        this.state.routes = null;
      }
      this.state.error = null;
      this.state.stale = false;
    } catch (error) {
      this.state.error = error instanceof Error ? error.message : String(error);
      this.state.stale = true;
    }
    this.render();
  }

  /** Re-fetch what a logged workout changes: the load series and today's card. */
  private async refreshAfterWorkout(): Promise<void> {
    this.state.loads = await this.api.getLoads(this.userId);
    this.state.guidance = await this.api.getGuidance(this.userId, this.today);
    this.state.error = null;
    this.state.stale = false;
  }

  private async withMutationLock(run: () => Promise<void>): Promise<void> {
    if (this.state.busy) return;
    this.state.busy = true;
    try {
      await run();
    } catch (error) {
      this.state.error = error instanceof Error ? error.message : String(error);
      this.state.stale = true;
    } finally {
      this.state.busy = false;
    }
    this.render();
  }

  async selectRoute(index: number): Promise<void> {
    await this.withMutationLock(async () => {
      const goal = this.state.routes?.goal_roi ?? this.state.statespace?.goal_roi;
      if (goal) await this.api.postGoal(this.userId, goal);
      this.state.selectedRoute = index;
    });
  }

  async logWorkout(entry: WorkoutEntry): Promise<void> {
    await this.withMutationLock(async () => {
      await this.api.postWorkout(this.userId, entry);
      await this.refreshAfterWorkout();
    });
  }

  async runWhatIf(workouts: WorkoutEntry[]): Promise<void> {
    await this.withMutationLock(async () => {
      this.state.whatif = await this.api.whatIf(this.userId, workouts);
    });
  }

  private async onClick(event: Event): Promise<void> {
    const target = event.target as HTMLElement | null;
    const actionEl = target?.closest("[data-action]") as HTMLElement | null;
    if (!actionEl) {
      const routeLine = target?.closest("polyline.route") as SVGElement | null;
      if (routeLine?.dataset.routeIndex !== undefined) {
        await this.selectRoute(Number(routeLine.dataset.routeIndex));
      }
      return;
    }
    const action = actionEl.dataset.action;
    if (action === "select-route") {
      await this.selectRoute(Number(actionEl.dataset.routeIndex));
    } else if (action === "log-workout") {
      const entry = this.readWorkoutForm();
      if (entry) await this.logWorkout(entry);
    } else if (action === "what-if") {
      await this.runWhatIf(this.readWhatIfForm());
    } else if (action === "refresh") {
      await this.refresh();
    }
  }

  private readWorkoutForm(): WorkoutEntry | null {
    const minutes = Number(
      (this.root.querySelector("#workout-minutes") as HTMLInputElement | null)?.value ?? "0",
    );
    const intensity =
      (this.root.querySelector("#workout-intensity") as HTMLSelectElement | null)?.value ?? "low";
    const date =
      (this.root.querySelector("#workout-date") as HTMLInputElement | null)?.value || this.today;
    if (!(minutes > 0)) {
      this.state.error = "workout minutes must be positive";
      this.render();
      return null;
    }
    const entry: WorkoutEntry = { date };
    if (intensity === "low") entry.low_min = minutes;
    else if (intensity === "medium") entry.med_min = minutes;
    else entry.high_min = minutes;
    return entry;
  }

  private readWhatIfForm(): WorkoutEntry[] {
    const days = Number(
      (this.root.querySelector("#whatif-days") as HTMLInputElement | null)?.value ?? "3",
    );
    const minutes = Number(
      (this.root.querySelector("#whatif-minutes") as HTMLInputElement | null)?.value ?? "60",
    );
    const start = this.state.guidance?.date ?? this.today;
    const entries: WorkoutEntry[] = [];
    const base = new Date(start + "T00:00:00Z");
    for (let i = 0; i < days; i++) {
      const d = new Date(base.getTime() + i * 86_400_000);
      entries.push({ date: d.toISOString().slice(0, 10), high_min: minutes });
    }
    return entries;
  }

  render(): void {
    const s = this.state;
    const parts: string[] = [];

    if (s.error) {
      parts.push(
        `<div class="banner error" data-testid="error-banner">` +
          `${s.error}${s.stale ? ` <span class="stale" data-testid="stale-flag">showing stale data</span>` : ""}` +
          `</div>`,
      );
    }
    if (s.state && s.statespace) {
      parts.push(renderStateSummary(s.state, s.statespace.clamped));
    }
    if (s.statespace) {
      parts.push(
        `<section class="map-panel"><h2>State space</h2>` +
          renderMap(s.statespace, s.routes?.routes ?? [], s.selectedRoute) +
          renderRouteList(s.routes?.routes ?? [], s.selectedRoute) +
          `</section>`,
      );
    }
    if (s.guidance) {
      parts.push(renderGuidanceCard(s.guidance));
    }
    if (s.statespace) {
      parts.push(
        `<section class="load-panel"><h2>Load trend</h2>` +
          renderLoadChart(s.loads, s.statespace.rules) +
          `</section>`,
      );
    }
    parts.push(this.renderWorkoutForm());
    if (s.statespace) {
      parts.push(this.renderWhatIfPanel());
    }
    this.root.innerHTML = `<main class="dashboard">${parts.join("")}</main>`;
  }

  private renderWorkoutForm(): string {
    const busy = this.state.busy ? " disabled" : "";
    return (
      `<section class="log-panel" data-testid="workout-form"><h2>Log a workout</h2>` +
      `<label>date <input id="workout-date" type="date" value="${this.today}"></label>` +
      `<label>minutes <input id="workout-minutes" type="number" min="1" value="30"></label>` +
      `<label>zone <select id="workout-intensity">` +
      `<option value="low">low</option><option value="medium">medium</option><option value="high">high</option>` +
      `</select></label>` +
      `<button type="button" data-action="log-workout"${busy}>log workout</button>` +
      `</section>`
    );
  }

  private renderWhatIfPanel(): string {
    const s = this.state;
    const chart =
      s.whatif && s.statespace
        ? renderLoadChart(s.whatif.projection, s.statespace.rules, {
            title: "What-if projection",
          })
        : "";
    return (
      `<section class="whatif-panel" data-testid="whatif-panel"><h2>What if</h2>` +
      `<label>hard days <input id="whatif-days" type="number" min="1" value="3"></label>` +
      `<label>minutes each <input id="whatif-minutes" type="number" min="1" value="60"></label>` +
      `<button type="button" data-action="what-if"${s.busy ? " disabled" : ""}>project</button>` +
      chart +
      `</section>`
    );
  }
}

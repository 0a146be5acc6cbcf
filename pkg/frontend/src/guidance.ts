// Today's guidance card and the health-state summary.

import type { Guidance, HealthState } from "./api.js";

export function renderGuidanceCard(guidance: Guidance): string {
  const flags: string[] = [];
  if (guidance.week.scaled_down) flags.push("scaled down");
  if (guidance.week.ramp_limited) flags.push("ramp limited");
  if (guidance.week.floor_overridden) flags.push("below weekly minimum");
  const flagHtml = flags.length
    ? `<span class="flags" data-testid="plan-flags">${flags.join(", ")}</span>`
    : "";

  let body: string;
  if (guidance.rest_day) {
    body = `<p class="rest-day" data-testid="rest-day">Rest day</p>`;
  } else {
    const rows = guidance.options
      .map(
        (o) =>
          `<tr class="option option-${o.intensity}">` +
          `<td>${o.intensity}</td><td>${o.minutes} min</td>` +
          `<td>${o.hr_band[0]}–${o.hr_band[1]} bpm</td></tr>`,
      )
      .join("");
    body =
      `<table class="options" data-testid="guidance-options">` +
      `<thead><tr><th>intensity</th><th>duration</th><th>heart rate</th></tr></thead>` +
      `<tbody>${rows}</tbody></table>`;
  }
  return (
    `<section class="guidance-card" data-testid="guidance-card">` +
    `<h2>Guidance for ${guidance.date}</h2>` +
    `<p class="week">Week of ${guidance.week.week_start}: goal ${guidance.week.trimp_w.toFixed(0)} TRIMP ${flagHtml}</p>` +
    body +
    `<p class="rationale">${guidance.rationale}</p>` +
    `</section>`
  );
}

export function renderStateSummary(state: HealthState, clamped: boolean): string {
  const vo2 =
    state.vo2max_indicator === null
      ? "no test yet"
      : `${state.vo2max_indicator.toFixed(1)} ± ${state.confidence.vo2?.toFixed(1) ?? "?"}`;
  const badge = clamped
    ? `<span class="badge clamped" data-testid="clamped-badge">outside personal map (clamped)</span>`
    : "";
  return (
    `<section class="state-summary" data-testid="state-summary">` +
    `<h2>Heart health state</h2>${badge}` +
    `<dl>` +
    `<dt>10-year risk</dt><dd>${state.ascvd_risk_pct.toFixed(2)}% ± ${state.confidence.risk_pct.toFixed(2)}</dd>` +
    `<dt>VO2Max indicator</dt><dd>${vo2}</dd>` +
    `<dt>Resting HR</dt><dd>${state.resting_hr.toFixed(1)} bpm</dd>` +
    `</dl></section>`
  );
}

// Training-load chart: CTL and ATL as lines, daily TSB as bars, with
// the optimal-training band shaded behind them. Pure string renderer so
// output is snapshot-testable; only pixel scaling happens here, every
// plotted value is an API number.

import type { LoadRow, Rules } from "./api.js";

export interface ChartOptions {
  width?: number;
  height?: number;
  title?: string;
}

const PAD = { left: 42, right: 12, top: 18, bottom: 24 };

function px(value: number): string {
  return String(Math.round(value * 100) / 100);
}

export function renderLoadChart(
  rows: LoadRow[],
  rules: Rules,
  options: ChartOptions = {},
): string {
  const width = options.width ?? 640;
  const height = options.height ?? 240;
  const title = options.title ?? "Training load";
  if (rows.length === 0) {
    return `<svg class="load-chart" data-testid="load-chart" width="${width}" height="${height}"><text x="12" y="24">no load data yet</text></svg>`;
  }
  const innerW = width - PAD.left - PAD.right;
  const innerH = height - PAD.top - PAD.bottom;
  const [bandLo, bandHi] = rules.tsb_optimal;

  const values = rows.flatMap((r) => [r.ctl, r.atl, r.tsb]);
  const yMin = Math.min(bandLo, 0, ...values);
  const yMax = Math.max(0, bandHi, ...values);
  const ySpan = yMax - yMin || 1;
  const y = (v: number) => PAD.top + ((yMax - v) / ySpan) * innerH;
  const slot = innerW / rows.length;
  const x = (i: number) => PAD.left + slot * (i + 0.5);

  const parts: string[] = [];
  parts.push(
    `<svg class="load-chart" data-testid="load-chart" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">`,
  );
  parts.push(`<text class="title" x="${PAD.left}" y="12">${title}</text>`);

  // optimal-zone band (bounds supplied by the API, never recomputed)
  parts.push(
    `<rect class="optimal-band" data-testid="optimal-band" x="${PAD.left}" y="${px(y(bandHi))}" ` +
      `width="${px(innerW)}" height="${px(y(bandLo) - y(bandHi))}" fill="#a5d6a7" opacity="0.45"/>`,
  );
  // zero line
  parts.push(
    `<line class="zero-axis" x1="${PAD.left}" y1="${px(y(0))}" x2="${px(width - PAD.right)}" y2="${px(y(0))}" stroke="#999" stroke-dasharray="3,3"/>`,
  );

  // TSB bars
  const barW = Math.max(1, slot * 0.55);
  for (let i = 0; i < rows.length; i++) {
    const row = rows[i]!;
    const top = Math.min(y(0), y(row.tsb));
    const h = Math.abs(y(row.tsb) - y(0));
    parts.push(
      `<rect class="tsb-bar" data-date="${row.date}" data-tsb="${row.tsb}" ` +
        `x="${px(x(i) - barW / 2)}" y="${px(top)}" width="${px(barW)}" height="${px(h)}" ` +
        `fill="#fbc02d"/>`,
    );
  }

  // CTL / ATL lines
  const line = (key: "ctl" | "atl", cls: string, color: string) => {
    const points = rows.map((r, i) => `${px(x(i))},${px(y(r[key]))}`).join(" ");
    return `<polyline class="${cls}" data-testid="${cls}" points="${points}" fill="none" stroke="${color}" stroke-width="1.8"/>`;
  };
  parts.push(line("ctl", "ctl-line", "#1565c0"));
  parts.push(line("atl", "atl-line", "#c2185b"));

  // y-axis labels and x extent labels
  for (const v of [yMax, bandHi, 0, bandLo, yMin]) {
    parts.push(
      `<text class="y-label" x="4" y="${px(y(v) + 3)}" font-size="9">${v.toFixed(0)}</text>`,
    );
  }
  parts.push(
    `<text class="x-label" x="${PAD.left}" y="${height - 8}" font-size="9">${rows[0]!.date}</text>`,
  );
  parts.push(
    `<text class="x-label" x="${px(width - PAD.right)}" y="${height - 8}" font-size="9" text-anchor="end">${rows[rows.length - 1]!.date}</text>`,
  );
  parts.push("</svg>");
  return parts.join("");
}

// State-space map: the bucket lattice as a colored grid with ROI
// regions, the current node, and selectable route overlays.

import type { Route, Statespace } from "./api.js";

const CELL = 18;
const PAD = { left: 30, top: 10, bottom: 30, right: 10 };

export function nodeTuple(index: number, shape: [number, number]): [number, number] {
  return [Math.floor(index / shape[1]), index % shape[1]];
}

function cellRect(index: number, shape: [number, number]): { x: number; y: number } {
  const [i, j] = nodeTuple(index, shape);
  // x axis: second dimension (fitness), y axis: first dimension (risk),
  // low risk drawn at the top
  return { x: PAD.left + j * CELL, y: PAD.top + i * CELL };
}

export function renderMap(
  statespace: Statespace,
  routes: Route[],
  selectedRoute: number | null,
): string {
  const shape = statespace.shape;
  const width = PAD.left + shape[1] * CELL + PAD.right;
  const height = PAD.top + shape[0] * CELL + PAD.bottom;
  const parts: string[] = [];
  parts.push(
    `<svg class="state-map" data-testid="state-map" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">`,
  );

  for (let index = 0; index < shape[0] * shape[1]; index++) {
    const { x, y } = cellRect(index, shape);
    const label = statespace.roi_labels[String(index)];
    const fill = label ? statespace.roi_colors[label] ?? "#cccccc" : "#f2f2f2";
    const classes = label ? `cell roi roi-${label}` : "cell";
    parts.push(
      `<rect class="${classes}" data-node="${index}" x="${x}" y="${y}" width="${CELL - 1}" height="${CELL - 1}" fill="${fill}"/>`,
    );
  }

  routes.forEach((route, routeIndex) => {
    const points = route.nodes
      .map((n) => {
        const { x, y } = cellRect(n, shape);
        return `${x + (CELL - 1) / 2},${y + (CELL - 1) / 2}`;
      })
      .join(" ");
    const selected = routeIndex === selectedRoute;
    parts.push(
      `<polyline class="route${selected ? " selected" : ""}" data-route-index="${routeIndex}" ` +
        `points="${points}" fill="none" stroke="${selected ? "#212121" : "#757575"}" ` +
        `stroke-width="${selected ? 3 : 1.5}" stroke-dasharray="${selected ? "none" : "4,3"}"/>`,
    );
  });

  if (statespace.current_node !== null) {
    const { x, y } = cellRect(statespace.current_node, shape);
    parts.push(
      `<rect class="current-node" data-testid="current-node" x="${x}" y="${y}" ` +
        `width="${CELL - 1}" height="${CELL - 1}" fill="none" stroke="#000" stroke-width="2.5"/>`,
    );
  }

  const [dimRisk, dimFit] = statespace.dimensions;
  if (dimFit && dimRisk) {
    parts.push(
      `<text class="axis" x="${PAD.left}" y="${height - 8}" font-size="10">${dimFit.name} (${dimFit.unit}) ${dimFit.bounds[0]}..${dimFit.bounds[1]} →</text>`,
    );
    parts.push(
      `<text class="axis" x="10" y="${PAD.top + 4}" font-size="10" transform="rotate(90 10 ${PAD.top + 4})">${dimRisk.name} (${dimRisk.unit}) →</text>`,
    );
  }
  parts.push("</svg>");
  return parts.join("");
}

export function renderRouteList(routes: Route[], selectedRoute: number | null): string {
  if (routes.length === 0) {
    return `<p class="no-routes">No routes: set a goal region first.</p>`;
  }
  const items = routes
    .map((route, i) => {
      const selected = i === selectedRoute ? " selected" : "";
      const steps = route.input_labels.length;
      return (
        `<li class="route-item${selected}" data-route-index="${i}">` +
        `<button type="button" data-action="select-route" data-route-index="${i}">` +
        `Route ${i + 1}: ${route.total_cost_weeks} weeks, ${steps} step${steps === 1 ? "" : "s"}` +
        `</button></li>`
      );
    })
    .join("");
  return `<ol class="route-list" data-testid="route-list">${items}</ol>`;
}

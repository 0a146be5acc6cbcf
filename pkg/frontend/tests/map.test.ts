import { describe, expect, it } from "vitest";

import type { RoutesPayload, Statespace } from "../src/api.js";
import { nodeTuple, renderMap, renderRouteList } from "../src/map.js";
import { fixtures } from "./helpers.js";

const statespace = fixtures.statespace as Statespace;
const routes = (fixtures.routes as RoutesPayload).routes;

describe("renderMap", () => {
  it("draws one cell per lattice node", () => {
    const svg = renderMap(statespace, [], null);
    const cells = svg.match(/class="cell/g)?.length ?? 0;
    expect(cells).toBe(statespace.shape[0] * statespace.shape[1]);
  });

  it("paints ROI cells with their colors", () => {
    const svg = renderMap(statespace, [], null);
    for (const [label, color] of Object.entries(statespace.roi_colors)) {
      if (Object.values(statespace.roi_labels).includes(label)) {
        expect(svg).toContain(`fill="${color}"`);
      }
    }
  });

  it("highlights the current node", () => {
    const svg = renderMap(statespace, [], null);
    expect(svg).toContain('data-testid="current-node"');
  });

  it("renders routes in ranked order with the selection emphasized", () => {
    const svg = renderMap(statespace, routes, 1);
    const indices = [...svg.matchAll(/data-route-index="(\d+)"/g)].map((m) => Number(m[1]));
    expect(indices).toEqual(routes.map((_, i) => i));
    expect(svg).toContain('class="route selected"');
  });

  it("omits overlays when there are no routes", () => {
    const svg = renderMap(statespace, [], null);
    expect(svg).not.toContain('class="route');
  });

  it("matches the snapshot with the first route selected", () => {
    expect(renderMap(statespace, routes, 0)).toMatchSnapshot();
  });

  it("nodeTuple inverts row-major node indices", () => {
    const [rows, cols] = statespace.shape;
    expect(nodeTuple(0, statespace.shape)).toEqual([0, 0]);
    expect(nodeTuple(cols, statespace.shape)).toEqual([1, 0]);
    expect(nodeTuple(rows * cols - 1, statespace.shape)).toEqual([rows - 1, cols - 1]);
  });
});

describe("renderRouteList", () => {
  it("lists routes in API order with cost and length", () => {
    const html = renderRouteList(routes, null);
    expect(html).toContain("Route 1");
    expect(html).toContain(`${routes[0]!.total_cost_weeks} weeks`);
  });

  it("shows a hint when no goal is set", () => {
    expect(renderRouteList([], null)).toContain("set a goal");
  });
});

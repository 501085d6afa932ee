// Generic SVG charting: line charts, box plots, relevance bars, an isometric
// 3-D trajectory projection and the optimization iteration overlay. Pure
// DOM construction from numbers that came out of API responses; nothing here
// recomputes model outputs.

import type { ParameterQualityDoc, RelevanceBarDoc, ValPairDoc } from "./types.js";
import { el, fmt } from "./util.js";

const SVG_NS = "http://www.w3.org/2000/svg";

export const SUCCESS_COLOR = "#2e8b57";
export const FAILURE_COLOR = "#c0392b";

export function svg(tag: string, attrs: Record<string, string> = {}): SVGElement {
  const node = document.createElementNS(SVG_NS, tag) as SVGElement;
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  return node;
}

export interface Series {
  values: number[];
  color: string;
  label: string;
}

function extent(all: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of all) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (!Number.isFinite(lo)) return [0, 1];
  if (lo === hi) return [lo - 1, hi + 1];
  return [lo, hi];
}

function polylinePoints(
  values: number[],
  width: number,
  height: number,
  lo: number,
  hi: number,
): string {
  const n = values.length;
  return values
    .map((v, i) => {
      const x = n === 1 ? width / 2 : (i / (n - 1)) * width;
      const y = height - ((v - lo) / (hi - lo)) * height;
      return `${x.toFixed(2)},${y.toFixed(2)}`;
    })
    .join(" ");
}

/** Index-vs-value line chart (loss curves, force traces). */
export function lineChart(series: Series[], width = 420, height = 160): SVGElement {
  const root = svg("svg", {
    viewBox: `0 0 ${width} ${height}`,
    class: "chart line-chart",
    role: "img",
  });
  const [lo, hi] = extent(series.flatMap((s) => s.values));
  for (const s of series) {
    if (s.values.length === 0) continue;
    const line = svg("polyline", {
      points: polylinePoints(s.values, width, height, lo, hi),
      fill: "none",
      stroke: s.color,
      "stroke-width": "1.5",
      "data-label": s.label,
    });
    root.append(line);
  }
  return root;
}

/** One horizontal box plot row on the parameter's [lower, upper] scale. */
export function boxPlotRow(
  quality: ParameterQualityDoc,
  lowerBound: number,
  upperBound: number,
  width = 420,
): HTMLElement {
  const height = 28;
  const mid = height / 2;
  const scale = (v: number) => ((v - lowerBound) / (upperBound - lowerBound)) * width;
  const root = svg("svg", {
    viewBox: `0 0 ${width} ${height}`,
    class: "chart box-plot",
    "data-parameter": quality.name,
  });
  const q = quality.quartiles;
  const whisker = svg("line", {
    x1: scale(quality.min).toFixed(2),
    x2: scale(quality.max).toFixed(2),
    y1: String(mid),
    y2: String(mid),
    stroke: "currentColor",
    class: "whisker",
  });
  const box = svg("rect", {
    x: scale(q.q1).toFixed(2),
    width: Math.max(1, scale(q.q3) - scale(q.q1)).toFixed(2),
    y: String(mid - 8),
    height: "16",
    class: "box",
  });
  const median = svg("line", {
    x1: scale(q.median).toFixed(2),
    x2: scale(q.median).toFixed(2),
    y1: String(mid - 8),
    y2: String(mid + 8),
    class: "median",
    stroke: "currentColor",
  });
  root.append(whisker, box, median);

  const row = el("div", { class: "boxplot-row", "data-parameter": quality.name }, [
    el("span", { class: "boxplot-name", text: quality.name }),
    root,
  ]);
  if (!quality.sufficient) {
    row.classList.add("insufficient");
    row.append(el("p", { class: "quality-warning", text: quality.message }));
  }
  return row;
}

/** Relevance bars in the given (template) order; widths are the server's
 * normalized magnitudes, sign shown by class. */
export function relevanceBars(bars: RelevanceBarDoc[], width = 420): HTMLElement {
  const container = el("div", { class: "lrp-bars" });
  for (const bar of bars) {
    const track = el("div", { class: "lrp-track" });
    const fill = el("div", {
      class: `lrp-fill ${bar.relevance >= 0 ? "positive" : "negative"}`,
      "data-parameter": bar.parameter,
    });
    fill.style.width = `${(bar.normalized_magnitude * 100).toFixed(1)}%`;
    track.append(fill);
    container.append(
      el("div", { class: "lrp-row", "data-parameter": bar.parameter }, [
        el("span", { class: "lrp-name", text: bar.parameter }),
        track,
        el("span", { class: "lrp-value", text: fmt(bar.relevance) }),
      ]),
    );
  }
  void width;
  return container;
}

export interface Track3d {
  positions: [number, number, number][];
  success: boolean;
}

/** Isometric projection of (x, y, z) onto the page: u along (x - y), v along
 * -(z) with a (x + y) depth tilt. Good enough to read spiral vs straight. */
export function project(p: [number, number, number]): [number, number] {
  const c = Math.SQRT1_2;
  return [(p[0] - p[1]) * c, (p[0] + p[1]) * c * 0.5 - p[2]];
}

export function trajectoryPlot(tracks: Track3d[], width = 420, height = 260): SVGElement {
  const root = svg("svg", {
    viewBox: `0 0 ${width} ${height}`,
    class: "chart trajectory-3d",
  });
  const projected = tracks.map((t) => t.positions.map(project));
  const us = projected.flat().map((p) => p[0]);
  const vs = projected.flat().map((p) => p[1]);
  const [ulo, uhi] = extent(us);
  const [vlo, vhi] = extent(vs);
  const sx = (u: number) => ((u - ulo) / (uhi - ulo)) * (width - 10) + 5;
  const sy = (v: number) => ((v - vlo) / (vhi - vlo)) * (height - 10) + 5;
  tracks.forEach((track, i) => {
    const points = projected[i].map(([u, v]) => `${sx(u).toFixed(1)},${sy(v).toFixed(1)}`).join(" ");
    root.append(
      svg("polyline", {
        points,
        fill: "none",
        stroke: track.success ? SUCCESS_COLOR : FAILURE_COLOR,
        "stroke-width": "1",
        class: track.success ? "track success" : "track failure",
      }),
    );
  });
  return root;
}

/** Legend entries for exactly the outcome classes present in the data. */
export function outcomeLegend(tracks: { success: boolean }[]): HTMLElement {
  const legend = el("div", { class: "legend" });
  const seen = new Set(tracks.map((t) => t.success));
  if (seen.has(true)) {
    legend.append(el("span", { class: "legend-item success", text: "success" }));
  }
  if (seen.has(false)) {
    legend.append(el("span", { class: "legend-item failure", text: "failure" }));
  }
  return legend;
}

export function forcePlot(
  tracks: { forces: number[]; success: boolean }[],
  width = 420,
  height = 160,
): SVGElement {
  return lineChart(
    tracks.map((t, i) => ({
      values: t.forces,
      color: t.success ? SUCCESS_COLOR : FAILURE_COLOR,
      label: `record ${i}`,
    })),
    width,
    height,
  );
}

/** Held-out predicted-vs-label cycle time; the diagonal is perfect
 * calibration and points are colored by the true success label. */
export function predictionScatter(pairs: ValPairDoc[], width = 260, height = 260): SVGElement {
  const root = svg("svg", {
    viewBox: `0 0 ${width} ${height}`,
    class: "chart prediction-scatter",
  });
  const all = pairs.flatMap((p) => [p.cycle_time_pred, p.cycle_time_label]);
  const [lo, hi] = extent(all);
  const sx = (v: number) => ((v - lo) / (hi - lo)) * (width - 10) + 5;
  const sy = (v: number) => height - (((v - lo) / (hi - lo)) * (height - 10) + 5);
  root.append(
    svg("line", {
      x1: String(sx(lo)),
      y1: String(sy(lo)),
      x2: String(sx(hi)),
      y2: String(sy(hi)),
      stroke: "currentColor",
      "stroke-dasharray": "4 3",
      class: "diagonal",
    }),
  );
  for (const pair of pairs) {
    root.append(
      svg("circle", {
        cx: sx(pair.cycle_time_label).toFixed(1),
        cy: sy(pair.cycle_time_pred).toFixed(1),
        r: "3",
        fill: pair.success_label ? SUCCESS_COLOR : FAILURE_COLOR,
        class: "val-pair",
      }),
    );
  }
  return root;
}

/** Objective total per iteration with the best one highlighted and clickable
 * points for inspecting any iteration's parameters. */
export function iterationChart(
  totals: number[],
  bestIndex: number,
  onSelect: (index: number) => void,
  width = 420,
  height = 160,
): SVGElement {
  const root = svg("svg", {
    viewBox: `0 0 ${width} ${height}`,
    class: "chart iteration-chart",
  });
  const [lo, hi] = extent(totals);
  root.append(
    svg("polyline", {
      points: polylinePoints(totals, width, height, lo, hi),
      fill: "none",
      stroke: "currentColor",
      "stroke-width": "1",
    }),
  );
  totals.forEach((total, i) => {
    const cx = totals.length === 1 ? width / 2 : (i / (totals.length - 1)) * width;
    const cy = height - ((total - lo) / (hi - lo)) * height;
    const dot = svg("circle", {
      cx: cx.toFixed(2),
      cy: cy.toFixed(2),
      r: i === bestIndex ? "6" : "3",
      class: i === bestIndex ? "iteration best" : "iteration",
      "data-index": String(i),
    });
    dot.addEventListener("click", () => onSelect(i));
    root.append(dot);
  });
  return root;
}

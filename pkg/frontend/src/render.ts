/**
 * Deterministic SVG figures from parsed CSV tables.
 *
 * Two figure kinds mirror the simulator outputs: "convergence" draws one line
 * per optimizer trace (grouped by kind/scheme/seed columns when present) from
 * iteration/value rows, and "sweep" draws one line per scheme over the sweep
 * axis with error bars when a standard-error column exists. Rendering is a
 * pure function of the table: fixed canvas, fixed palette, no timestamps.
 */

import { CsvError, Table, numericColumn, optionalStringColumn } from "./csv";

export class UnknownKindError extends CsvError {
  constructor(kind: string) {
    super(`unknown figure kind "${kind}" (expected convergence or sweep)`);
    this.name = "UnknownKindError";
  }
}

export interface PlotSpec {
  kind: "convergence" | "sweep";
  title?: string;
  xLabel?: string;
  yLabel?: string;
}

const WIDTH = 640;
const HEIGHT = 420;
const MARGIN = { left: 64, right: 16, top: 28, bottom: 44 };

const PALETTE = ["#1f6fb4", "#d1495b", "#3e8e5a", "#8265a7", "#c07d2b", "#4a4a4a"];
const DASHES = ["", "6 3", "2 2", "8 3 2 3", "4 4", "1 3"];

function fmt(x: number): string {
  if (!Number.isFinite(x)) return String(x);
  if (x === 0) return "0";
  const abs = Math.abs(x);
  if (abs >= 1e-4 && abs < 1e7) {
    const out = Number(x.toPrecision(6)).toString();
    return out;
  }
  return x.toExponential(3);
}

interface Scale {
  lo: number;
  hi: number;
  toPx(v: number): number;
}

function makeScale(values: number[], pxLo: number, pxHi: number): Scale {
  let lo = Math.min(...values);
  let hi = Math.max(...values);
  if (lo === hi) {
    const pad = lo === 0 ? 1 : Math.abs(lo) * 0.05;
    lo -= pad;
    hi += pad;
  } else {
    const pad = (hi - lo) * 0.05;
    lo -= pad;
    hi += pad;
  }
  const span = hi - lo;
  return {
    lo,
    hi,
    toPx: (v: number) => pxLo + ((v - lo) / span) * (pxHi - pxLo),
  };
}

function ticks(lo: number, hi: number, n = 5): number[] {
  const span = hi - lo;
  const step0 = span / n;
  const mag = Math.pow(10, Math.floor(Math.log10(step0)));
  const candidates = [1, 2, 5, 10].map((m) => m * mag);
  const step = candidates.find((c) => span / c <= n) ?? candidates[3];
  const first = Math.ceil(lo / step) * step;
  const out: number[] = [];
  for (let v = first; v <= hi + step * 1e-9; v += step) {
    out.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return out;
}

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

interface Series {
  label: string;
  x: number[];
  y: number[];
  err?: number[];
}

function axes(xs: Scale, ys: Scale, xLabel: string, yLabel: string, title: string): string[] {
  const parts: string[] = [];
  const x0 = MARGIN.left;
  const x1 = WIDTH - MARGIN.right;
  const y0 = HEIGHT - MARGIN.bottom;
  const y1 = MARGIN.top;
  parts.push(`<rect x="0" y="0" width="${WIDTH}" height="${HEIGHT}" fill="#ffffff"/>`);
  if (title) {
    parts.push(
      `<text x="${(x0 + x1) / 2}" y="18" text-anchor="middle" font-size="14" font-family="sans-serif">${esc(title)}</text>`,
    );
  }
  parts.push(`<line x1="${x0}" y1="${y0}" x2="${x1}" y2="${y0}" stroke="#222" stroke-width="1"/>`);
  parts.push(`<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${y1}" stroke="#222" stroke-width="1"/>`);
  for (const t of ticks(xs.lo, xs.hi)) {
    const px = xs.toPx(t);
    parts.push(`<line x1="${fmt(px)}" y1="${y0}" x2="${fmt(px)}" y2="${y0 + 4}" stroke="#222"/>`);
    parts.push(
      `<text x="${fmt(px)}" y="${y0 + 17}" text-anchor="middle" font-size="11" font-family="sans-serif">${fmt(t)}</text>`,
    );
  }
  for (const t of ticks(ys.lo, ys.hi)) {
    const py = ys.toPx(t);
    parts.push(`<line x1="${x0 - 4}" y1="${fmt(py)}" x2="${x0}" y2="${fmt(py)}" stroke="#222"/>`);
    parts.push(
      `<text x="${x0 - 7}" y="${fmt(py + 3.5)}" text-anchor="end" font-size="11" font-family="sans-serif">${fmt(t)}</text>`,
    );
  }
  parts.push(
    `<text x="${(x0 + x1) / 2}" y="${HEIGHT - 10}" text-anchor="middle" font-size="12" font-family="sans-serif">${esc(xLabel)}</text>`,
  );
  parts.push(
    `<text x="16" y="${(y0 + y1) / 2}" text-anchor="middle" font-size="12" font-family="sans-serif" transform="rotate(-90 16 ${(y0 + y1) / 2})">${esc(yLabel)}</text>`,
  );
  return parts;
}

function drawSeries(all: Series[], xLabel: string, yLabel: string, title: string, markers: boolean): string {
  const xsAll = all.flatMap((s) => s.x);
  const ysAll = all.flatMap((s, _i) =>
    s.err ? s.y.flatMap((v, j) => [v - s.err![j], v + s.err![j]]) : s.y,
  );
  const xs = makeScale(xsAll, MARGIN.left, WIDTH - MARGIN.right);
  const ys = makeScale(ysAll, HEIGHT - MARGIN.bottom, MARGIN.top);
  const parts = axes(xs, ys, xLabel, yLabel, title);

  all.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    const dash = DASHES[i % DASHES.length];
    const pts = s.x.map((v, j) => `${fmt(xs.toPx(v))},${fmt(ys.toPx(s.y[j]))}`).join(" ");
    const dashAttr = dash ? ` stroke-dasharray="${dash}"` : "";
    parts.push(
      `<polyline points="${pts}" fill="none" stroke="${color}" stroke-width="1.6"${dashAttr}/>`,
    );
    if (s.err) {
      s.x.forEach((v, j) => {
        const px = fmt(xs.toPx(v));
        const lo = fmt(ys.toPx(s.y[j] - s.err![j]));
        const hi = fmt(ys.toPx(s.y[j] + s.err![j]));
        parts.push(`<line x1="${px}" y1="${lo}" x2="${px}" y2="${hi}" stroke="${color}" stroke-width="1"/>`);
      });
    }
    if (markers) {
      s.x.forEach((v, j) => {
        parts.push(
          `<circle cx="${fmt(xs.toPx(v))}" cy="${fmt(ys.toPx(s.y[j]))}" r="2.6" fill="${color}"/>`,
        );
      });
    }
    parts.push(
      `<text x="${WIDTH - MARGIN.right - 8}" y="${MARGIN.top + 14 + 16 * i}" text-anchor="end" font-size="11" font-family="sans-serif" fill="${color}">${esc(s.label)}</text>`,
    );
  });
  return `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}">\n${parts.join("\n")}\n</svg>\n`;
}

function groupBy(keys: string[]): Map<string, number[]> {
  const groups = new Map<string, number[]>();
  keys.forEach((k, i) => {
    const bucket = groups.get(k);
    if (bucket) {
      bucket.push(i);
    } else {
      groups.set(k, [i]);
    }
  });
  return groups;
}

export function renderConvergence(table: Table, spec: Omit<PlotSpec, "kind"> = {}): string {
  const iteration = numericColumn(table, "iteration");
  const value = numericColumn(table, "value");
  const kind = optionalStringColumn(table, "kind", "trace");
  const scheme = optionalStringColumn(table, "scheme", "");
  const seed = optionalStringColumn(table, "seed", "");
  const keys = table.rows.map((_r, i) =>
    [kind[i], scheme[i], seed[i]].filter((p) => p.length > 0).join("/"),
  );
  const series: Series[] = [];
  for (const [label, idx] of [...groupBy(keys).entries()].sort((a, b) =>
    a[0] < b[0] ? -1 : a[0] > b[0] ? 1 : 0,
  )) {
    const order = [...idx].sort((a, b) => iteration[a] - iteration[b]);
    series.push({
      label,
      x: order.map((i) => iteration[i]),
      y: order.map((i) => value[i]),
    });
  }
  return drawSeries(
    series,
    spec.xLabel ?? "iteration",
    spec.yLabel ?? "objective value",
    spec.title ?? "",
    false,
  );
}

export function renderSweep(table: Table, spec: Omit<PlotSpec, "kind"> = {}): string {
  const scheme = optionalStringColumn(table, "scheme", "all");
  const axisValue = numericColumn(table, "axis_value");
  const rate = numericColumn(table, "rate");
  const hasErr = table.header.indexOf("rate_stderr") >= 0;
  const err = hasErr ? numericColumn(table, "rate_stderr") : undefined;
  const series: Series[] = [];
  for (const [label, idx] of [...groupBy(scheme).entries()].sort((a, b) =>
    a[0] < b[0] ? -1 : a[0] > b[0] ? 1 : 0,
  )) {
    const order = [...idx].sort((a, b) => axisValue[a] - axisValue[b]);
    series.push({
      label,
      x: order.map((i) => axisValue[i]),
      y: order.map((i) => rate[i]),
      err: err ? order.map((i) => err[i]) : undefined,
    });
  }
  return drawSeries(
    series,
    spec.xLabel ?? "axis value",
    spec.yLabel ?? "average sum rate (bps/Hz)",
    spec.title ?? "",
    true,
  );
}

export function render(table: Table, spec: PlotSpec): string {
  if (spec.kind === "convergence") {
    return renderConvergence(table, spec);
  }
  if (spec.kind === "sweep") {
    return renderSweep(table, spec);
  }
  throw new UnknownKindError(String((spec as PlotSpec).kind));
}

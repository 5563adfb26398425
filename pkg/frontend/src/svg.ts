/**
 * Minimal deterministic SVG chart builder: line charts with optional
 * logarithmic x axis, horizontal reference lines, and bar charts. No
 * timestamps, randomness, or environment-dependent output — identical
 * inputs yield byte-identical SVG.
 */

export interface Point {
  x: number;
  y: number;
}

export interface Series {
  label: string;
  color: string;
  points: Point[];
  dash?: string;
}

export interface RefLine {
  value: number;
  label: string;
  color: string;
}

export interface LineChartSpec {
  title: string;
  xLabel: string;
  yLabel: string;
  logX: boolean;
  series: Series[];
  refLines?: RefLine[];
}

export interface Bar {
  label: string;
  value: number;
}

export interface BarChartSpec {
  title: string;
  yLabel: string;
  bars: Bar[];
}

const WIDTH = 720;
const HEIGHT = 440;
const MARGIN = { top: 48, right: 24, bottom: 56, left: 72 };
const PLOT_W = WIDTH - MARGIN.left - MARGIN.right;
const PLOT_H = HEIGHT - MARGIN.top - MARGIN.bottom;

export const PALETTE = [
  "#4361ee",
  "#e63946",
  "#2d6a4f",
  "#f4a261",
  "#7b2d8b",
  "#118ab2",
];

/** Fixed-precision coordinate so output never depends on float printing. */
const fmt = (v: number): string => v.toFixed(2);

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;");
}

function niceTicks(min: number, max: number, count = 6): number[] {
  if (min === max) return [min];
  const span = max - min;
  const step = Math.pow(10, Math.floor(Math.log10(span / count)));
  const err = (span / count) / step;
  const factor = err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1;
  const nice = step * factor;
  const ticks: number[] = [];
  for (let v = Math.ceil(min / nice) * nice; v <= max + nice / 1e6; v += nice) {
    ticks.push(Math.round(v * 1e9) / 1e9);
  }
  return ticks;
}

function logTicks(min: number, max: number): number[] {
  const ticks: number[] = [];
  for (
    let exp = Math.floor(Math.log10(min));
    exp <= Math.ceil(Math.log10(max));
    exp++
  ) {
    const v = Math.pow(10, exp);
    if (v >= min && v <= max) ticks.push(v);
  }
  return ticks.length >= 2 ? ticks : [min, max];
}

function tickLabel(v: number): string {
  if (v !== 0 && (Math.abs(v) >= 1e6 || Math.abs(v) < 1e-3)) {
    return v.toExponential(0);
  }
  return Number.isInteger(v) ? String(v) : String(Math.round(v * 1000) / 1000);
}

export function renderLineChart(spec: LineChartSpec): string {
  const xs = spec.series.flatMap((s) => s.points.map((p) => p.x));
  const ys = spec.series
    .flatMap((s) => s.points.map((p) => p.y))
    .concat((spec.refLines ?? []).map((r) => r.value));
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs);
  const yMax = Math.max(...ys) * 1.06;
  const yMin = Math.min(0, Math.min(...ys));

  const sx = (x: number): number => {
    if (spec.logX) {
      const t =
        xMax === xMin
          ? 0.5
          : (Math.log10(x) - Math.log10(xMin)) /
            (Math.log10(xMax) - Math.log10(xMin));
      return MARGIN.left + t * PLOT_W;
    }
    const t = xMax === xMin ? 0.5 : (x - xMin) / (xMax - xMin);
    return MARGIN.left + t * PLOT_W;
  };
  const sy = (y: number): number =>
    MARGIN.top + PLOT_H - ((y - yMin) / (yMax - yMin)) * PLOT_H;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" ` +
      `height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}" ` +
      `font-family="sans-serif">`
  );
  parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`);
  parts.push(
    `<text x="${WIDTH / 2}" y="24" text-anchor="middle" font-size="16">` +
      `${esc(spec.title)}</text>`
  );

  const xTicks = spec.logX ? logTicks(xMin, xMax) : niceTicks(xMin, xMax);
  for (const t of xTicks) {
    const x = sx(t);
    parts.push(
      `<line x1="${fmt(x)}" y1="${MARGIN.top}" x2="${fmt(x)}" ` +
        `y2="${MARGIN.top + PLOT_H}" stroke="#eee"/>`
    );
    parts.push(
      `<text x="${fmt(x)}" y="${MARGIN.top + PLOT_H + 18}" ` +
        `text-anchor="middle" font-size="11">${tickLabel(t)}</text>`
    );
  }
  for (const t of niceTicks(yMin, yMax)) {
    const y = sy(t);
    parts.push(
      `<line x1="${MARGIN.left}" y1="${fmt(y)}" ` +
        `x2="${MARGIN.left + PLOT_W}" y2="${fmt(y)}" stroke="#eee"/>`
    );
    parts.push(
      `<text x="${MARGIN.left - 8}" y="${fmt(y + 4)}" text-anchor="end" ` +
        `font-size="11">${tickLabel(t)}</text>`
    );
  }
  parts.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${PLOT_W}" ` +
      `height="${PLOT_H}" fill="none" stroke="#333"/>`
  );
  parts.push(
    `<text x="${MARGIN.left + PLOT_W / 2}" y="${HEIGHT - 12}" ` +
      `text-anchor="middle" font-size="12">${esc(spec.xLabel)}` +
      `${spec.logX ? " (log scale)" : ""}</text>`
  );
  parts.push(
    `<text x="18" y="${MARGIN.top + PLOT_H / 2}" text-anchor="middle" ` +
      `font-size="12" transform="rotate(-90 18 ` +
      `${MARGIN.top + PLOT_H / 2})">${esc(spec.yLabel)}</text>`
  );

  for (const ref of spec.refLines ?? []) {
    const y = sy(ref.value);
    parts.push(
      `<line x1="${MARGIN.left}" y1="${fmt(y)}" ` +
        `x2="${MARGIN.left + PLOT_W}" y2="${fmt(y)}" ` +
        `stroke="${ref.color}" stroke-dasharray="6,3"/>`
    );
    parts.push(
      `<text x="${MARGIN.left + PLOT_W - 4}" y="${fmt(y - 6)}" ` +
        `text-anchor="end" font-size="11" fill="${ref.color}">` +
        `${esc(ref.label)}</text>`
    );
  }

  for (const series of spec.series) {
    const d = series.points
      .map((p, i) => `${i === 0 ? "M" : "L"}${fmt(sx(p.x))},${fmt(sy(p.y))}`)
      .join(" ");
    const dash = series.dash ? ` stroke-dasharray="${series.dash}"` : "";
    parts.push(
      `<path d="${d}" fill="none" stroke="${series.color}" ` +
        `stroke-width="1.6"${dash}/>`
    );
    for (const p of series.points) {
      parts.push(
        `<circle cx="${fmt(sx(p.x))}" cy="${fmt(sy(p.y))}" r="2.2" ` +
          `fill="${series.color}"/>`
      );
    }
  }

  spec.series.forEach((series, i) => {
    const y = MARGIN.top + 14 + i * 16;
    parts.push(
      `<line x1="${MARGIN.left + 10}" y1="${y - 4}" ` +
        `x2="${MARGIN.left + 34}" y2="${y - 4}" ` +
        `stroke="${series.color}" stroke-width="1.6"/>`
    );
    parts.push(
      `<text x="${MARGIN.left + 40}" y="${y}" font-size="11">` +
        `${esc(series.label)}</text>`
    );
  });

  parts.push("</svg>");
  return parts.join("\n") + "\n";
}

export function renderBarChart(spec: BarChartSpec): string {
  const yMax = Math.max(...spec.bars.map((b) => b.value)) * 1.1;
  const slot = PLOT_W / spec.bars.length;
  const barW = slot * 0.6;
  const sy = (y: number): number => MARGIN.top + PLOT_H - (y / yMax) * PLOT_H;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" ` +
      `height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}" ` +
      `font-family="sans-serif">`
  );
  parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`);
  parts.push(
    `<text x="${WIDTH / 2}" y="24" text-anchor="middle" font-size="16">` +
      `${esc(spec.title)}</text>`
  );
  for (const t of niceTicks(0, yMax)) {
    const y = sy(t);
    parts.push(
      `<line x1="${MARGIN.left}" y1="${fmt(y)}" ` +
        `x2="${MARGIN.left + PLOT_W}" y2="${fmt(y)}" stroke="#eee"/>`
    );
    parts.push(
      `<text x="${MARGIN.left - 8}" y="${fmt(y + 4)}" text-anchor="end" ` +
        `font-size="11">${tickLabel(t)}</text>`
    );
  }
  spec.bars.forEach((bar, i) => {
    const x = MARGIN.left + i * slot + (slot - barW) / 2;
    const y = sy(bar.value);
    parts.push(
      `<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(barW)}" ` +
        `height="${fmt(MARGIN.top + PLOT_H - y)}" fill="${PALETTE[0]}"/>`
    );
    parts.push(
      `<text x="${fmt(x + barW / 2)}" y="${fmt(y - 6)}" ` +
        `text-anchor="middle" font-size="11">${tickLabel(bar.value)}</text>`
    );
    parts.push(
      `<text x="${fmt(x + barW / 2)}" y="${MARGIN.top + PLOT_H + 18}" ` +
        `text-anchor="middle" font-size="11">${esc(bar.label)}</text>`
    );
  });
  parts.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${PLOT_W}" ` +
      `height="${PLOT_H}" fill="none" stroke="#333"/>`
  );
  parts.push(
    `<text x="18" y="${MARGIN.top + PLOT_H / 2}" text-anchor="middle" ` +
      `font-size="12" transform="rotate(-90 18 ` +
      `${MARGIN.top + PLOT_H / 2})">${esc(spec.yLabel)}</text>`
  );
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}

/**
 * Deterministic SVG builders: no dates, no randomness, fixed number
 * formatting, so identical inputs produce byte-identical files.
 */

export interface Series {
  label: string;
  points: [number, number][];
}

const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
  "#8c564b", "#e377c2", "#17becf"];

const W = 640;
const H = 420;
const MARGIN = { left: 64, right: 24, top: 40, bottom: 48 };

export function fmt(x: number): string {
  if (!Number.isFinite(x)) {
    return "0";
  }
  const s = x.toPrecision(6);
  return s.includes(".") ? s.replace(/\.?0+$/, "") : s;
}

function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (!Number.isFinite(lo)) {
    return [0, 1];
  }
  if (lo === hi) {
    return [lo - 0.5, hi + 0.5];
  }
  return [lo, hi];
}

function scale([lo, hi]: [number, number], rangeLo: number, rangeHi: number) {
  return (v: number) => rangeLo + ((v - lo) / (hi - lo)) * (rangeHi - rangeLo);
}

function ticks([lo, hi]: [number, number], count: number): number[] {
  const out: number[] = [];
  for (let i = 0; i <= count; i += 1) {
    out.push(lo + ((hi - lo) * i) / count);
  }
  return out;
}

function axes(xDomain: [number, number], yDomain: [number, number],
  xLabel: string, yLabel: string): string {
  const sx = scale(xDomain, MARGIN.left, W - MARGIN.right);
  const sy = scale(yDomain, H - MARGIN.bottom, MARGIN.top);
  const parts: string[] = [];
  parts.push(`<line x1="${MARGIN.left}" y1="${H - MARGIN.bottom}" x2="${W - MARGIN.right}" y2="${H - MARGIN.bottom}" stroke="#333"/>`);
  parts.push(`<line x1="${MARGIN.left}" y1="${MARGIN.top}" x2="${MARGIN.left}" y2="${H - MARGIN.bottom}" stroke="#333"/>`);
  for (const t of ticks(xDomain, 4)) {
    const x = fmt(sx(t));
    parts.push(`<line x1="${x}" y1="${H - MARGIN.bottom}" x2="${x}" y2="${H - MARGIN.bottom + 5}" stroke="#333"/>`);
    parts.push(`<text x="${x}" y="${H - MARGIN.bottom + 18}" font-size="11" text-anchor="middle">${fmt(t)}</text>`);
  }
  for (const t of ticks(yDomain, 4)) {
    const y = fmt(sy(t));
    parts.push(`<line x1="${MARGIN.left - 5}" y1="${y}" x2="${MARGIN.left}" y2="${y}" stroke="#333"/>`);
    parts.push(`<text x="${MARGIN.left - 8}" y="${y}" font-size="11" text-anchor="end" dominant-baseline="middle">${fmt(t)}</text>`);
  }
  parts.push(`<text x="${(MARGIN.left + W - MARGIN.right) / 2}" y="${H - 10}" font-size="12" text-anchor="middle">${xLabel}</text>`);
  parts.push(`<text x="16" y="${(MARGIN.top + H - MARGIN.bottom) / 2}" font-size="12" text-anchor="middle" transform="rotate(-90 16 ${(MARGIN.top + H - MARGIN.bottom) / 2})">${yLabel}</text>`);
  return parts.join("\n");
}

function document(body: string, title: string): string {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${W}" height="${H}" viewBox="0 0 ${W} ${H}">`,
    `<rect width="${W}" height="${H}" fill="white"/>`,
    `<text x="${W / 2}" y="22" font-size="14" text-anchor="middle" font-weight="bold">${title}</text>`,
    body,
    "</svg>",
    "",
  ].join("\n");
}

export function linePlot(title: string, xLabel: string, yLabel: string,
  series: Series[]): string {
  const xs = series.flatMap((s) => s.points.map((p) => p[0]));
  const ys = series.flatMap((s) => s.points.map((p) => p[1]));
  const xDomain = extent(xs);
  const yDomain = extent(ys);
  const sx = scale(xDomain, MARGIN.left, W - MARGIN.right);
  const sy = scale(yDomain, H - MARGIN.bottom, MARGIN.top);
  const parts: string[] = [axes(xDomain, yDomain, xLabel, yLabel)];
  series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    const pts = s.points
      .map(([x, y]) => `${fmt(sx(x))},${fmt(sy(y))}`)
      .join(" ");
    parts.push(`<polyline points="${pts}" fill="none" stroke="${color}" stroke-width="2"/>`);
    for (const [x, y] of s.points) {
      parts.push(`<circle cx="${fmt(sx(x))}" cy="${fmt(sy(y))}" r="2.5" fill="${color}"/>`);
    }
    const ly = MARGIN.top + 14 * i;
    parts.push(`<line x1="${W - MARGIN.right - 110}" y1="${ly}" x2="${W - MARGIN.right - 90}" y2="${ly}" stroke="${color}" stroke-width="2"/>`);
    parts.push(`<text x="${W - MARGIN.right - 84}" y="${ly + 4}" font-size="11">${s.label}</text>`);
  });
  return document(parts.join("\n"), title);
}

/** Blue to yellow ramp, clamped; deterministic across platforms. */
export function rampColor(t: number): string {
  const u = Math.max(0, Math.min(1, t));
  const r = Math.round(40 + 215 * u);
  const g = Math.round(40 + 180 * u);
  const b = Math.round(160 - 130 * u);
  return `rgb(${r},${g},${b})`;
}

export function heatMap(title: string, xLabel: string, yLabel: string,
  xs: number[], ys: number[],
  values: (number | null)[][]): string {
  const flat = values.flat().filter((v): v is number => v !== null);
  const [lo, hi] = extent(flat);
  const sx = scale(extent(xs), MARGIN.left, W - MARGIN.right);
  const sy = scale(extent(ys), H - MARGIN.bottom, MARGIN.top);
  const cellW = xs.length > 1 ? (W - MARGIN.left - MARGIN.right) / (xs.length - 1) : 40;
  const cellH = ys.length > 1 ? (H - MARGIN.top - MARGIN.bottom) / (ys.length - 1) : 40;
  const parts: string[] = [];
  ys.forEach((y, j) => {
    xs.forEach((x, i) => {
      const v = values[j][i];
      if (v === null) {
        return;
      }
      const t = hi > lo ? (v - lo) / (hi - lo) : 0.5;
      parts.push(
        `<rect x="${fmt(sx(x) - cellW / 2)}" y="${fmt(sy(y) - cellH / 2)}" `
        + `width="${fmt(cellW)}" height="${fmt(cellH)}" fill="${rampColor(t)}"/>`);
    });
  });
  parts.push(axes(extent(xs), extent(ys), xLabel, yLabel));
  parts.push(`<text x="${W - MARGIN.right}" y="${MARGIN.top - 8}" font-size="11" text-anchor="end">range ${fmt(lo)} to ${fmt(hi)}</text>`);
  return document(parts.join("\n"), title);
}

export function barChart(title: string, xLabel: string, yLabel: string,
  labels: string[], values: number[]): string {
  const yDomain: [number, number] = [0, extent(values)[1]];
  const sy = scale(yDomain, H - MARGIN.bottom, MARGIN.top);
  const span = W - MARGIN.left - MARGIN.right;
  const slot = span / Math.max(1, labels.length);
  const parts: string[] = [axes([0, Math.max(1, labels.length)], yDomain, xLabel, yLabel)];
  values.forEach((v, i) => {
    const x = MARGIN.left + slot * i + slot * 0.15;
    const y = sy(v);
    parts.push(`<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(slot * 0.7)}" height="${fmt(H - MARGIN.bottom - y)}" fill="${PALETTE[i % PALETTE.length]}"/>`);
    parts.push(`<text x="${fmt(x + slot * 0.35)}" y="${H - MARGIN.bottom + 18}" font-size="11" text-anchor="middle">${labels[i]}</text>`);
  });
  return document(parts.join("\n"), title);
}

/**
 * Panel builders mapping the solver's CSV contract onto figure panels.
 *
 * Five panel kinds:
 *   line-vs-cost    one curve per group value, metric against cost
 *   line-vs-env     one curve per cost, metric against the symmetric p
 *   p-star-vs-cost  the environment with the most computation, per cost
 *   heat-map        a sensitivity column over the (p1, p2) grid
 *   bar             mean of a metric per group value
 */

import { CsvTable, columnIndex, numericColumn, parseCsv, stringColumn } from "./csv.js";
import { Series, barChart, heatMap, linePlot } from "./svg.js";

export type PanelKind =
  | "line-vs-cost"
  | "line-vs-env"
  | "p-star-vs-cost"
  | "heat-map"
  | "bar";

export interface PanelSpec {
  input: string;
  out: string;
  kind: PanelKind;
  /** metric column for line and bar kinds */
  y?: string;
  /** grouping column, default T */
  group?: string;
  /** value column for heat maps, default chi_V */
  value?: string;
  title?: string;
}

function groupedSeries(xs: (number | null)[], ys: (number | null)[],
  groups: string[], prefix: string): Series[] {
  const byGroup = new Map<string, [number, number][]>();
  for (let i = 0; i < groups.length; i += 1) {
    const x = xs[i];
    const y = ys[i];
    if (x === null || y === null) {
      continue;
    }
    const key = groups[i];
    if (!byGroup.has(key)) {
      byGroup.set(key, []);
    }
    byGroup.get(key)!.push([x, y]);
  }
  const labels = [...byGroup.keys()].sort((a, b) => Number(a) - Number(b));
  return labels.map((label) => {
    const points = byGroup.get(label)!;
    points.sort((a, b) => a[0] - b[0]);
    return { label: `${prefix}=${label}`, points };
  });
}

function lineVsCost(table: CsvTable, spec: PanelSpec): string {
  const metric = spec.y ?? "V_N";
  const series = groupedSeries(
    numericColumn(table, "c"),
    numericColumn(table, metric),
    stringColumn(table, spec.group ?? "T"),
    spec.group ?? "T");
  return linePlot(spec.title ?? `${metric} vs cost`, "computational cost", metric, series);
}

function lineVsEnv(table: CsvTable, spec: PanelSpec): string {
  const metric = spec.y ?? "n_c_mean";
  const series = groupedSeries(
    numericColumn(table, "env_p1"),
    numericColumn(table, metric),
    stringColumn(table, "c"),
    "c");
  return linePlot(spec.title ?? `${metric} vs environment`, "reward probability", metric, series);
}

function pStarVsCost(table: CsvTable, spec: PanelSpec): string {
  const costs = numericColumn(table, "c");
  const ps = numericColumn(table, "env_p1");
  const counts = numericColumn(table, spec.y ?? "n_c_mean");
  const best = new Map<number, [number, number]>();
  for (let i = 0; i < costs.length; i += 1) {
    const c = costs[i];
    const p = ps[i];
    const n = counts[i];
    if (c === null || p === null || n === null || n <= 0) {
      continue;
    }
    const cur = best.get(c);
    if (cur === undefined || n > cur[1] || (n === cur[1] && p < cur[0])) {
      best.set(c, [p, n]);
    }
  }
  const points: [number, number][] = [...best.entries()]
    .sort((a, b) => a[0] - b[0])
    .map(([c, [p]]) => [c, p]);
  const series: Series[] = [{ label: "p*", points }];
  return linePlot(spec.title ?? "most computed environment vs cost",
    "computational cost", "p*", series);
}

function heatPanel(table: CsvTable, spec: PanelSpec): string {
  const metric = spec.value ?? "chi_V";
  const p1 = numericColumn(table, "p1");
  const p2 = numericColumn(table, "p2");
  const vals = numericColumn(table, metric);
  const xs = [...new Set(p1.filter((v): v is number => v !== null))].sort((a, b) => a - b);
  const ys = [...new Set(p2.filter((v): v is number => v !== null))].sort((a, b) => a - b);
  const grid: (number | null)[][] = ys.map(() => xs.map(() => null));
  for (let i = 0; i < vals.length; i += 1) {
    const x = p1[i];
    const y = p2[i];
    if (x === null || y === null) {
      continue;
    }
    grid[ys.indexOf(y)][xs.indexOf(x)] = vals[i];
  }
  return heatMap(spec.title ?? `${metric} over environments`, "p1", "p2", xs, ys, grid);
}

function barPanel(table: CsvTable, spec: PanelSpec): string {
  const metric = spec.y ?? "n_c_mean";
  const groups = stringColumn(table, spec.group ?? "T");
  const values = numericColumn(table, metric);
  const sums = new Map<string, [number, number]>();
  for (let i = 0; i < groups.length; i += 1) {
    const v = values[i];
    if (v === null) {
      continue;
    }
    const cur = sums.get(groups[i]) ?? [0, 0];
    sums.set(groups[i], [cur[0] + v, cur[1] + 1]);
  }
  const labels = [...sums.keys()].sort((a, b) => Number(a) - Number(b));
  const means = labels.map((l) => {
    const [total, count] = sums.get(l)!;
    return total / count;
  });
  return barChart(spec.title ?? `mean ${metric} by ${spec.group ?? "T"}`,
    spec.group ?? "T", metric, labels, means);
}

/** Render one panel; null means the CSV had no data rows (no-op). */
export function renderPanel(spec: PanelSpec, csvText: string): string | null {
  const table = parseCsv(csvText);
  if (table.rows.length === 0) {
    return null;
  }
  switch (spec.kind) {
    case "line-vs-cost":
      return lineVsCost(table, spec);
    case "line-vs-env":
      return lineVsEnv(table, spec);
    case "p-star-vs-cost":
      return pStarVsCost(table, spec);
    case "heat-map":
      return heatPanel(table, spec);
    case "bar":
      return barPanel(table, spec);
    default:
      throw new Error(`unknown panel kind: ${(spec as PanelSpec).kind}`);
  }
}

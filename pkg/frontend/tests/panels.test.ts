import { readFileSync } from "fs";
import { describe, expect, it } from "vitest";

import { MissingColumnError, parseCsv } from "../src/csv.js";
import { PanelSpec, renderPanel } from "../src/panels.js";

const uniform = readFileSync("testdata/sweep-uniform.csv", "utf8");
const symmetric = readFileSync("testdata/sweep-symmetric.csv", "utf8");
const sensitivity = readFileSync("testdata/sensitivity.csv", "utf8");

function spec(partial: Partial<PanelSpec> & { kind: PanelSpec["kind"] }): PanelSpec {
  return { input: "in.csv", out: "out.svg", ...partial };
}

describe("panel rendering", () => {
  it("renders the normalized-reward lines per horizon", () => {
    const svg = renderPanel(spec({ kind: "line-vs-cost", y: "V_N" }), uniform);
    expect(svg).toContain("<svg");
    expect(svg).toContain("polyline");
    expect(svg).toContain("T=4");
    expect(svg).toContain("T=8");
  });

  it("renders computation-timing, entropy and omega lines", () => {
    for (const y of ["tau_c_mean_norm", "H_pi_bits", "omega"]) {
      const svg = renderPanel(spec({ kind: "line-vs-cost", y }), uniform);
      expect(svg).toContain("<svg");
      expect(svg).toContain(y);
    }
  });

  it("renders computation profiles against the environment", () => {
    const svg = renderPanel(spec({ kind: "line-vs-env", y: "n_c_mean" }), symmetric);
    expect(svg).toContain("polyline");
    expect(svg).toContain("c=0");
  });

  it("derives the most-computed environment per cost", () => {
    const svg = renderPanel(spec({ kind: "p-star-vs-cost" }), symmetric);
    expect(svg).toContain("p*");
    expect(svg).toContain("polyline");
  });

  it("renders sensitivity heat maps for both observables", () => {
    for (const value of ["chi_V", "chi_tau"]) {
      const svg = renderPanel(spec({ kind: "heat-map", value }), sensitivity);
      expect(svg).toContain("<rect");
      expect(svg).toContain("range");
    }
  });

  it("renders a bar panel of mean computation count by horizon", () => {
    const svg = renderPanel(spec({ kind: "bar", y: "n_c_mean" }), uniform);
    expect(svg).toContain("<rect");
    expect(svg).toContain("T");
  });

  it("re-rendering identical input is byte-stable", () => {
    for (const [kind, csv] of [
      ["line-vs-cost", uniform],
      ["line-vs-env", symmetric],
      ["p-star-vs-cost", symmetric],
      ["heat-map", sensitivity],
      ["bar", uniform],
    ] as const) {
      const a = renderPanel(spec({ kind }), csv);
      const b = renderPanel(spec({ kind }), csv);
      expect(a).toBe(b);
    }
  });

  it("reports the offending column by name", () => {
    expect(() => renderPanel(spec({ kind: "line-vs-cost", y: "nope" }), uniform))
      .toThrowError(/nope/);
    try {
      renderPanel(spec({ kind: "heat-map" }), uniform);
      expect.unreachable();
    } catch (err) {
      expect(err).toBeInstanceOf(MissingColumnError);
      expect((err as MissingColumnError).column).toBe("p1");
    }
  });

  it("treats an empty CSV as a no-op", () => {
    expect(renderPanel(spec({ kind: "line-vs-cost" }), "")).toBeNull();
    const headerOnly = uniform.split("\n")[0];
    expect(renderPanel(spec({ kind: "line-vs-cost" }), headerOnly)).toBeNull();
  });

  it("parses the fixture contract", () => {
    const table = parseCsv(uniform);
    expect(table.header.slice(0, 6)).toEqual(["N", "T", "c", "env_p1", "env_p2", "env_kind"]);
    expect(table.rows.length).toBeGreaterThan(0);
    for (const row of table.rows) {
      expect(row.length).toBe(table.header.length);
    }
  });
});

/**
 * Render figure panels from solver CSV outputs.
 *
 * Usage:
 *   node dist/cli.js --spec panels.json
 *   node dist/cli.js --input sweep.csv --kind line-vs-cost --y V_N --out fig.svg
 *
 * A panel-spec file holds an array of PanelSpec objects. Inputs are never
 * modified; re-rendering identical inputs writes identical bytes. An empty
 * CSV is a warning, not an error.
 */

import { readFileSync, writeFileSync } from "fs";
import { MissingColumnError } from "./csv.js";
import { PanelKind, PanelSpec, renderPanel } from "./panels.js";

function parseArgs(argv: string[]): Map<string, string> {
  const out = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    const value = argv[i + 1];
    if (!key.startsWith("--") || value === undefined) {
      throw new Error(`malformed arguments near '${key}'`);
    }
    out.set(key.slice(2), value);
  }
  return out;
}

function specsFromArgs(args: Map<string, string>): PanelSpec[] {
  const specFile = args.get("spec");
  if (specFile !== undefined) {
    return JSON.parse(readFileSync(specFile, "utf8")) as PanelSpec[];
  }
  const input = args.get("input");
  const out = args.get("out");
  const kind = args.get("kind") as PanelKind | undefined;
  if (input === undefined || out === undefined || kind === undefined) {
    throw new Error("need --spec or all of --input, --kind, --out");
  }
  return [{
    input,
    out,
    kind,
    y: args.get("y"),
    group: args.get("group"),
    value: args.get("value"),
    title: args.get("title"),
  }];
}

export function main(argv: string[]): number {
  let specs: PanelSpec[];
  try {
    specs = specsFromArgs(parseArgs(argv));
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    return 2;
  }
  for (const spec of specs) {
    let svg: string | null;
    try {
      svg = renderPanel(spec, readFileSync(spec.input, "utf8"));
    } catch (err) {
      if (err instanceof MissingColumnError) {
        console.error(`${spec.input}: missing column '${err.column}'`);
        return 1;
      }
      throw err;
    }
    if (svg === null) {
      console.warn(`${spec.input}: no data rows, skipping ${spec.out}`);
      continue;
    }
    writeFileSync(spec.out, svg);
    console.log(`wrote ${spec.out}`);
  }
  return 0;
}

const isMain = process.argv[1] !== undefined
  && import.meta.url.endsWith(process.argv[1].split("/").pop() ?? "");
if (isMain) {
  process.exit(main(process.argv.slice(2)));
}

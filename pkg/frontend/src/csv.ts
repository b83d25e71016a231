/**
 * Minimal CSV handling for the fixed-header sweep and sensitivity files.
 * Fields never contain commas or quotes, so a plain split is exact.
 */

export interface CsvTable {
  header: string[];
  rows: string[][];
}

export class MissingColumnError extends Error {
  constructor(public readonly column: string) {
    super(`missing column: ${column}`);
  }
}

export function parseCsv(text: string): CsvTable {
  const lines = text.split("\n").filter((l) => l.trim().length > 0);
  if (lines.length === 0) {
    return { header: [], rows: [] };
  }
  const header = lines[0].split(",");
  const rows = lines.slice(1).map((l) => l.split(","));
  return { header, rows };
}

export function columnIndex(table: CsvTable, name: string): number {
  const idx = table.header.indexOf(name);
  if (idx < 0) {
    throw new MissingColumnError(name);
  }
  return idx;
}

/** Numeric view of a column; empty cells become null. */
export function numericColumn(table: CsvTable, name: string): (number | null)[] {
  const idx = columnIndex(table, name);
  return table.rows.map((row) => {
    const cell = row[idx] ?? "";
    if (cell === "") {
      return null;
    }
    const value = Number(cell);
    if (Number.isNaN(value)) {
      throw new Error(`non-numeric cell '${cell}' in column ${name}`);
    }
    return value;
  });
}

export function stringColumn(table: CsvTable, name: string): string[] {
  const idx = columnIndex(table, name);
  return table.rows.map((row) => row[idx] ?? "");
}

import * as fs from "fs";

export interface Table {
  header: string[];
  rows: string[][];
}

export class SchemaError extends Error {}

export function readCsv(path: string): Table {
  if (!fs.existsSync(path)) {
    throw new SchemaError(`input CSV not found: ${path}`);
  }
  const text = fs.readFileSync(path, "utf8").trimEnd();
  const lines = text.length ? text.split("\n") : [];
  if (lines.length === 0) {
    throw new SchemaError(`${path}: empty file`);
  }
  const header = lines[0].split(",");
  const rows = lines.slice(1).map((l) => l.split(","));
  return { header, rows };
}

/** Check the header against the documented schema; report the diff. */
export function requireColumns(path: string, table: Table, wanted: string[]): void {
  const have = new Set(table.header);
  const missing = wanted.filter((c) => !have.has(c));
  if (missing.length > 0) {
    const extra = table.header.filter((c) => !wanted.includes(c));
    throw new SchemaError(
      `${path}: schema mismatch: missing columns [${missing.join(", ")}]` +
        (extra.length ? `, unexpected [${extra.join(", ")}]` : ""),
    );
  }
  if (table.rows.length === 0) {
    throw new SchemaError(`${path}: no data rows`);
  }
}

export function column(table: Table, name: string): string[] {
  const idx = table.header.indexOf(name);
  return table.rows.map((r) => r[idx]);
}

export function numericColumn(table: Table, name: string): number[] {
  return column(table, name).map((v) => {
    const x = Number(v);
    if (!Number.isFinite(x)) {
      throw new SchemaError(`column ${name}: non-numeric value ${JSON.stringify(v)}`);
    }
    return x;
  });
}

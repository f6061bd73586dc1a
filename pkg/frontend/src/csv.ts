/**
 * CSV access with schema checks.
 *
 * The harness writers never quote cells, so parsing is a plain split; all
 * validation errors name the offending column so a schema drift in the
 * producing pipeline is reported precisely.
 */

export interface Table {
  columns: string[];
  rows: string[][];
}

export function parseCsv(text: string, context: string): Table {
  const lines = text.split("\n").filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new Error(`${context}: empty CSV`);
  }
  const columns = lines[0]!.split(",");
  const rows: string[][] = [];
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i]!.split(",");
    if (cells.length !== columns.length) {
      throw new Error(
        `${context}: row ${i} has ${cells.length} cells, header has ${columns.length}`,
      );
    }
    rows.push(cells);
  }
  return { columns, rows };
}

export function requireColumns(table: Table, names: string[], context: string): void {
  const missing = names.filter((name) => !table.columns.includes(name));
  if (missing.length > 0) {
    throw new Error(`${context}: missing column(s) ${missing.join(", ")}`);
  }
}

export function stringColumn(table: Table, name: string, context: string): string[] {
  const index = table.columns.indexOf(name);
  if (index < 0) {
    throw new Error(`${context}: missing column(s) ${name}`);
  }
  return table.rows.map((row) => row[index]!);
}

/** Numeric column; empty cells (failed-trial metrics) become NaN. */
export function numericColumn(table: Table, name: string, context: string): number[] {
  return stringColumn(table, name, context).map((cell, i) => {
    if (cell === "") {
      return NaN;
    }
    const value = Number(cell);
    if (!Number.isFinite(value)) {
      throw new Error(`${context}: column ${name}, row ${i + 1}: not a number: ${cell}`);
    }
    return value;
  });
}

/** Names prefix_0..prefix_{d-1} present in the header, in index order. */
export function vectorColumns(table: Table, prefix: string, context: string): string[] {
  const names: string[] = [];
  for (let i = 0; table.columns.includes(`${prefix}_${i}`); i++) {
    names.push(`${prefix}_${i}`);
  }
  if (names.length === 0) {
    throw new Error(`${context}: missing column(s) ${prefix}_0`);
  }
  return names;
}

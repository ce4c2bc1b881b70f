/**
 * Strict reader for the simulator's CSV outputs.
 *
 * The files are plain comma-separated text with a header row and no quoting
 * (array-valued fields use semicolons internally). All errors are named so
 * callers and tests can distinguish a malformed file from a missing column.
 */

export class CsvError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "CsvError";
  }
}

export class EmptyCsvError extends CsvError {
  constructor(path: string) {
    super(`no data rows in ${path}`);
    this.name = "EmptyCsvError";
  }
}

export class MissingColumnError extends CsvError {
  constructor(column: string, header: string[]) {
    super(`required column "${column}" not in header [${header.join(", ")}]`);
    this.name = "MissingColumnError";
  }
}

export class BadNumberError extends CsvError {
  constructor(column: string, value: string, line: number) {
    super(`column "${column}" line ${line}: "${value}" is not a number`);
    this.name = "BadNumberError";
  }
}

export interface Table {
  header: string[];
  rows: string[][];
}

export function parseCsv(text: string, path = "<string>"): Table {
  const lines = text
    .split("\n")
    .map((l) => (l.endsWith("\r") ? l.slice(0, -1) : l))
    .filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new EmptyCsvError(path);
  }
  const header = lines[0].split(",").map((h) => h.trim());
  const rows: string[][] = [];
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i].split(",");
    if (cells.length !== header.length) {
      throw new CsvError(
        `${path} line ${i + 1}: expected ${header.length} fields, found ${cells.length}`,
      );
    }
    rows.push(cells);
  }
  if (rows.length === 0) {
    throw new EmptyCsvError(path);
  }
  return { header, rows };
}

export function columnIndex(table: Table, column: string): number {
  const idx = table.header.indexOf(column);
  if (idx < 0) {
    throw new MissingColumnError(column, table.header);
  }
  return idx;
}

export function numericColumn(table: Table, column: string): number[] {
  const idx = columnIndex(table, column);
  return table.rows.map((row, i) => {
    const value = Number(row[idx]);
    if (!Number.isFinite(value)) {
      throw new BadNumberError(column, row[idx], i + 2);
    }
    return value;
  });
}

export function stringColumn(table: Table, column: string): string[] {
  const idx = columnIndex(table, column);
  return table.rows.map((row) => row[idx]);
}

/** Column values if present, else a constant fallback for every row. */
export function optionalStringColumn(table: Table, column: string, fallback: string): string[] {
  if (table.header.indexOf(column) < 0) {
    return table.rows.map(() => fallback);
  }
  return stringColumn(table, column);
}

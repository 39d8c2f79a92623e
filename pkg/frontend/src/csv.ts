/**
 * Minimal CSV reader for the run-directory artifacts.
 *
 * The files are machine-written: comma separated, no quoting, `.` decimal
 * separator, optional `# ...` comment lines, one header row.
 */

export interface Table {
  header: string[];
  rows: string[][];
}

export function parseCsv(text: string): Table {
  const lines = text
    .split(/\r?\n/)
    .map((l) => l.trim())
    .filter((l) => l.length > 0 && !l.startsWith("#"));
  if (lines.length === 0) {
    throw new Error("empty CSV (no header row)");
  }
  const header = lines[0].split(",").map((c) => c.trim());
  const rows = lines.slice(1).map((line, i) => {
    const cells = line.split(",");
    if (cells.length !== header.length) {
      throw new Error(
        `row ${i + 2}: expected ${header.length} fields, got ${cells.length}`,
      );
    }
    return cells;
  });
  return { header, rows };
}

export function numericColumn(table: Table, name: string): number[] {
  const idx = table.header.indexOf(name);
  if (idx < 0) {
    throw new Error(`missing column ${name} (header: ${table.header.join(",")})`);
  }
  return table.rows.map((row, i) => {
    const value = Number(row[idx]);
    if (!Number.isFinite(value)) {
      throw new Error(`row ${i + 2}: column ${name} is not numeric: ${row[idx]}`);
    }
    return value;
  });
}

/** Column names matching a prefix followed by an integer, in index order. */
export function prefixedColumns(table: Table, prefix: string): string[] {
  return table.header
    .filter((name) => name.startsWith(prefix) && /^\d+$/.test(name.slice(prefix.length)))
    .sort((a, b) => Number(a.slice(prefix.length)) - Number(b.slice(prefix.length)));
}

/** Minimal RFC-4180-ish CSV reader: quoted fields, embedded commas and
 * newlines, doubled-quote escapes. Enough for real-world text columns. */

export class CsvError extends Error {}

export function parseCsv(content: string): string[][] {
  const rows: string[][] = [];
  let row: string[] = [];
  let field = "";
  let inQuotes = false;
  let i = 0;
  const pushField = () => {
    row.push(field);
    field = "";
  };
  const pushRow = () => {
    pushField();
    rows.push(row);
    row = [];
  };
  while (i < content.length) {
    const ch = content[i];
    if (inQuotes) {
      if (ch === '"') {
        if (content[i + 1] === '"') {
          field += '"';
          i += 2;
          continue;
        }
        inQuotes = false;
        i++;
        continue;
      }
      field += ch;
      i++;
      continue;
    }
    if (ch === '"') {
      inQuotes = true;
      i++;
      continue;
    }
    if (ch === ",") {
      pushField();
      i++;
      continue;
    }
    if (ch === "\r") {
      i++;
      continue;
    }
    if (ch === "\n") {
      pushRow();
      i++;
      continue;
    }
    field += ch;
    i++;
  }
  if (inQuotes) {
    throw new CsvError("unterminated quoted field");
  }
  if (field.length > 0 || row.length > 0) {
    pushRow();
  }
  return rows;
}

/** Extract one named column from a headered CSV, preserving row order. */
export function readTextColumn(content: string, column: string): string[] {
  const rows = parseCsv(content);
  if (rows.length === 0) {
    throw new CsvError("empty CSV");
  }
  const header = rows[0].map((h) => h.trim());
  const index = header.indexOf(column);
  if (index < 0) {
    throw new CsvError(
      `no column named '${column}' (have: ${header.join(", ")})`,
    );
  }
  const texts: string[] = [];
  for (let r = 1; r < rows.length; r++) {
    if (rows[r].length !== header.length) {
      throw new CsvError(
        `row ${r + 1} has ${rows[r].length} cells, expected ${header.length}`,
      );
    }
    texts.push(rows[r][index]);
  }
  return texts;
}

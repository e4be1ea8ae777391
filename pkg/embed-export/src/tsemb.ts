/**
 * TSEMB1 binary interchange format.
 *
 * Layout (little-endian regardless of host):
 *   bytes 0..5    magic "TSEMB1"
 *   bytes 6..9    T (uint32) — number of rows
 *   bytes 10..13  d (uint32) — embedding width
 *   bytes 14..    T*d float32 values, row-major
 */

export const MAGIC = "TSEMB1";
export const HEADER_BYTES = 14;

export class TsembFormatError extends Error {}

export function encodeTsemb(rows: Float32Array[], d: number): Buffer {
  const t = rows.length;
  const buf = Buffer.alloc(HEADER_BYTES + 4 * t * d);
  buf.write(MAGIC, 0, "ascii");
  buf.writeUInt32LE(t, 6);
  buf.writeUInt32LE(d, 10);
  let offset = HEADER_BYTES;
  for (const row of rows) {
    if (row.length !== d) {
      throw new TsembFormatError(
        `row width ${row.length} does not match d=${d}`,
      );
    }
    for (const value of row) {
      if (!Number.isFinite(value)) {
        throw new TsembFormatError("embedding values must be finite");
      }
      buf.writeFloatLE(value, offset);
      offset += 4;
    }
  }
  return buf;
}

export interface TsembData {
  t: number;
  d: number;
  rows: Float32Array[];
}

/** Parse and validate a TSEMB1 buffer (magic, header, payload length, finiteness). */
export function decodeTsemb(buf: Buffer): TsembData {
  if (buf.length < HEADER_BYTES || buf.toString("ascii", 0, 6) !== MAGIC) {
    throw new TsembFormatError("not a TSEMB1 buffer");
  }
  const t = buf.readUInt32LE(6);
  const d = buf.readUInt32LE(10);
  const expected = HEADER_BYTES + 4 * t * d;
  if (buf.length < expected) {
    throw new TsembFormatError(
      `payload truncated: expected ${expected} bytes, found ${buf.length}`,
    );
  }
  const rows: Float32Array[] = [];
  let offset = HEADER_BYTES;
  for (let i = 0; i < t; i++) {
    const row = new Float32Array(d);
    for (let j = 0; j < d; j++) {
      const value = buf.readFloatLE(offset);
      if (!Number.isFinite(value)) {
        throw new TsembFormatError(`non-finite value at row ${i}, col ${j}`);
      }
      row[j] = value;
      offset += 4;
    }
    rows.push(row);
  }
  return { t, d, rows };
}

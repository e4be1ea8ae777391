import { promises as fs } from "node:fs";

import { readTextColumn } from "./csv.js";
import { Encoder } from "./encoder.js";
import { meanPool } from "./pooling.js";
import { encodeTsemb } from "./tsemb.js";

export type EmptyTextPolicy = "zero" | "abort";

export interface ExportJob {
  csvPath: string;
  textColumn: string;
  outPath: string;
  maxTokens: number;
  emptyTextPolicy: EmptyTextPolicy;
}

export interface ExportSummary {
  model: string;
  t: number;
  d: number;
  truncated_count: number;
  empty_text_count: number;
}

export class EmptyTextError extends Error {}

/**
 * Embed every row of the text column, in order: tokenize, take the
 * encoder's final-layer token states, average-pool, write one float32
 * row. Returns the sidecar summary; the sidecar JSON is written next to
 * the output file.
 */
export async function runExport(
  job: ExportJob,
  encoder: Encoder,
  modelName: string,
): Promise<ExportSummary> {
  const content = await fs.readFile(job.csvPath, "utf-8");
  const texts = readTextColumn(content, job.textColumn);
  const rows: Float32Array[] = [];
  let truncatedCount = 0;
  let emptyCount = 0;
  for (const text of texts) {
    const states = await encoder.encode(text, job.maxTokens);
    truncatedCount += states.truncated;
    if (states.vectors.length === 0) {
      if (job.emptyTextPolicy === "abort") {
        throw new EmptyTextError(
          `row ${rows.length + 1} has no tokens and --empty-text=abort`,
        );
      }
      emptyCount += 1;
      rows.push(new Float32Array(encoder.dim));
      continue;
    }
    rows.push(meanPool(states.vectors));
  }
  const buf = encodeTsemb(rows, encoder.dim);
  await fs.writeFile(job.outPath, buf);
  const summary: ExportSummary = {
    model: modelName,
    t: rows.length,
    d: encoder.dim,
    truncated_count: truncatedCount,
    empty_text_count: emptyCount,
  };
  await fs.writeFile(
    `${job.outPath}.json`,
    JSON.stringify(summary, Object.keys(summary).sort(), 2) + "\n",
  );
  return summary;
}

import { mkdtemp, readFile, writeFile } from "node:fs/promises";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { MockEncoder } from "../src/encoder.js";
import { EmptyTextError, runExport } from "../src/export.js";
import { decodeTsemb } from "../src/tsemb.js";
import { meanPool } from "../src/pooling.js";

async function workdir(): Promise<string> {
  return mkdtemp(join(tmpdir(), "embed-export-"));
}

const CSV = "t,v,report\n1,1.0,rates rose\n2,2.0,rates fell\n3,3.0,calm\n";

describe("export pipeline", () => {
  it("writes one pooled row per input row, in order", async () => {
    const dir = await workdir();
    const csvPath = join(dir, "d.csv");
    const outPath = join(dir, "e.tsemb");
    await writeFile(csvPath, CSV);
    const encoder = new MockEncoder(6, 1);
    const summary = await runExport(
      {
        csvPath,
        textColumn: "report",
        outPath,
        maxTokens: 512,
        emptyTextPolicy: "zero",
      },
      encoder,
      "mock-6",
    );
    expect(summary.t).toBe(3);
    expect(summary.d).toBe(6);
    const decoded = decodeTsemb(await readFile(outPath));
    expect(decoded.t).toBe(3);
    // row 0 must equal the mean of the two token states for "rates rose"
    const states = await encoder.encode("rates rose", 512);
    const expected = meanPool(states.vectors);
    expect(Array.from(decoded.rows[0])).toEqual(Array.from(expected));
  });

  it("is deterministic across runs", async () => {
    const dir = await workdir();
    const csvPath = join(dir, "d.csv");
    await writeFile(csvPath, CSV);
    const run = async (name: string) => {
      const outPath = join(dir, name);
      await runExport(
        {
          csvPath,
          textColumn: "report",
          outPath,
          maxTokens: 512,
          emptyTextPolicy: "zero",
        },
        new MockEncoder(6, 1),
        "mock-6",
      );
      return readFile(outPath);
    };
    const a = await run("a.tsemb");
    const b = await run("b.tsemb");
    expect(a.equals(b)).toBe(true);
  });

  it("counts truncated tokens", async () => {
    const dir = await workdir();
    const csvPath = join(dir, "d.csv");
    const outPath = join(dir, "e.tsemb");
    await writeFile(csvPath, "report\none two three four\nfive\n");
    const summary = await runExport(
      {
        csvPath,
        textColumn: "report",
        outPath,
        maxTokens: 2,
        emptyTextPolicy: "zero",
      },
      new MockEncoder(4, 0),
      "mock-4",
    );
    expect(summary.truncated_count).toBe(2);
  });

  it("zero-fills empty texts under the default policy", async () => {
    const dir = await workdir();
    const csvPath = join(dir, "d.csv");
    const outPath = join(dir, "e.tsemb");
    await writeFile(csvPath, 'report\n"  "\nhello\n');
    const summary = await runExport(
      {
        csvPath,
        textColumn: "report",
        outPath,
        maxTokens: 512,
        emptyTextPolicy: "zero",
      },
      new MockEncoder(4, 0),
      "mock-4",
    );
    expect(summary.empty_text_count).toBe(1);
    const decoded = decodeTsemb(await readFile(outPath));
    expect(Array.from(decoded.rows[0])).toEqual([0, 0, 0, 0]);
  });

  it("aborts on empty texts when asked", async () => {
    const dir = await workdir();
    const csvPath = join(dir, "d.csv");
    await writeFile(csvPath, 'report\n""\n');
    await expect(
      runExport(
        {
          csvPath,
          textColumn: "report",
          outPath: join(dir, "e.tsemb"),
          maxTokens: 512,
          emptyTextPolicy: "abort",
        },
        new MockEncoder(4, 0),
        "mock-4",
      ),
    ).rejects.toThrow(EmptyTextError);
  });

  it("writes a sidecar summary", async () => {
    const dir = await workdir();
    const csvPath = join(dir, "d.csv");
    const outPath = join(dir, "e.tsemb");
    await writeFile(csvPath, CSV);
    await runExport(
      {
        csvPath,
        textColumn: "report",
        outPath,
        maxTokens: 512,
        emptyTextPolicy: "zero",
      },
      new MockEncoder(6, 1),
      "mock-6",
    );
    const sidecar = JSON.parse(await readFile(`${outPath}.json`, "utf-8"));
    expect(sidecar).toMatchObject({ model: "mock-6", t: 3, d: 6 });
  });
});

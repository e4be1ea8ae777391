#!/usr/bin/env node
/**
 * embed-export: run a pretrained language model over a CSV text column
 * and write pooled per-row embeddings as a TSEMB1 file (plus a JSON
 * sidecar with model name, dimensions and truncation counts).
 *
 * Exit codes: 0 ok, 2 usage/validation error, 1 internal error.
 */

import { EmptyTextPolicy, runExport } from "./export.js";
import {
  Encoder,
  loadTransformersEncoder,
  MockEncoder,
  ModelLoadError,
} from "./encoder.js";
import { CsvError } from "./csv.js";

interface Args {
  csv?: string;
  textCol?: string;
  model: string;
  out?: string;
  maxTokens: number;
  emptyText: EmptyTextPolicy;
  mock: boolean;
  mockDim: number;
}

const USAGE = `usage: embed-export --csv data.csv --text-col report --out e.tsemb
                    [--model <hf-model-id>] [--max-tokens N]
                    [--empty-text zero|abort] [--mock] [--mock-dim D]`;

function parseArgs(argv: string[]): Args {
  const args: Args = {
    model: "Xenova/gpt2",
    maxTokens: 512,
    emptyText: "zero",
    mock: false,
    mockDim: 8,
  };
  for (let i = 0; i < argv.length; i++) {
    const flag = argv[i];
    const next = () => {
      i++;
      if (i >= argv.length) {
        throw new UsageError(`missing value for ${flag}`);
      }
      return argv[i];
    };
    switch (flag) {
      case "--csv":
        args.csv = next();
        break;
      case "--text-col":
        args.textCol = next();
        break;
      case "--model":
        args.model = next();
        break;
      case "--out":
        args.out = next();
        break;
      case "--max-tokens":
        args.maxTokens = Number(next());
        break;
      case "--empty-text": {
        const value = next();
        if (value !== "zero" && value !== "abort") {
          throw new UsageError("--empty-text must be 'zero' or 'abort'");
        }
        args.emptyText = value;
        break;
      }
      case "--mock":
        args.mock = true;
        break;
      case "--mock-dim":
        args.mockDim = Number(next());
        break;
      case "--help":
      case "-h":
        console.log(USAGE);
        process.exit(0);
        break;
      default:
        throw new UsageError(`unknown flag ${flag}`);
    }
  }
  if (!args.csv || !args.textCol || !args.out) {
    throw new UsageError(USAGE);
  }
  if (!Number.isInteger(args.maxTokens) || args.maxTokens < 0) {
    throw new UsageError("--max-tokens must be a non-negative integer");
  }
  return args;
}

class UsageError extends Error {}

export async function main(argv: string[]): Promise<number> {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (err) {
    console.error(err instanceof Error ? err.message : String(err));
    return 2;
  }
  try {
    let encoder: Encoder;
    let modelName: string;
    if (args.mock) {
      encoder = new MockEncoder(args.mockDim);
      modelName = `mock-${args.mockDim}`;
    } else {
      encoder = await loadTransformersEncoder(args.model);
      modelName = args.model;
    }
    const summary = await runExport(
      {
        csvPath: args.csv!,
        textColumn: args.textCol!,
        outPath: args.out!,
        maxTokens: args.maxTokens,
        emptyTextPolicy: args.emptyText,
      },
      encoder,
      modelName,
    );
    console.log(
      `wrote ${summary.t} x ${summary.d} embeddings to ${args.out} ` +
        `(model ${summary.model}, ${summary.truncated_count} tokens truncated, ` +
        `${summary.empty_text_count} empty texts)`,
    );
    return 0;
  } catch (err) {
    if (err instanceof CsvError || err instanceof ModelLoadError) {
      console.error(`error: ${err.message}`);
      return 2;
    }
    console.error(`internal error: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
}

const isDirectRun =
  process.argv[1] !== undefined &&
  import.meta.url === new URL(`file://${process.argv[1]}`).href;
if (isDirectRun) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}

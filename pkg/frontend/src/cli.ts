#!/usr/bin/env node
/** Command line: `plots render --csv PATH --kind convergence|sweep --out PATH`. */

import { readFileSync, writeFileSync } from "fs";

import { CsvError, parseCsv } from "./csv";
import { PlotSpec, UnknownKindError, render } from "./render";

const USAGE = `usage: plots render --csv PATH --kind convergence|sweep --out PATH [--title TEXT]
                    [--x-label TEXT] [--y-label TEXT]`;

interface Args {
  csv: string;
  kind: string;
  out: string;
  title?: string;
  xLabel?: string;
  yLabel?: string;
}

function parseArgs(argv: string[]): Args {
  if (argv[0] !== "render") {
    throw new Error(`unknown command "${argv[0] ?? ""}"`);
  }
  const args: Partial<Args> = {};
  for (let i = 1; i < argv.length; i += 2) {
    const flag = argv[i];
    const value = argv[i + 1];
    if (value === undefined) {
      throw new Error(`flag ${flag} needs a value`);
    }
    switch (flag) {
      case "--csv":
        args.csv = value;
        break;
      case "--kind":
        args.kind = value;
        break;
      case "--out":
        args.out = value;
        break;
      case "--title":
        args.title = value;
        break;
      case "--x-label":
        args.xLabel = value;
        break;
      case "--y-label":
        args.yLabel = value;
        break;
      default:
        throw new Error(`unknown flag "${flag}"`);
    }
  }
  if (!args.csv || !args.kind || !args.out) {
    throw new Error("--csv, --kind, and --out are required");
  }
  return args as Args;
}

export function main(argv: string[]): number {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n${USAGE}\n`);
    return 2;
  }
  if (args.kind !== "convergence" && args.kind !== "sweep") {
    process.stderr.write(`error: ${new UnknownKindError(args.kind).message}\n${USAGE}\n`);
    return 2;
  }
  let text: string;
  try {
    text = readFileSync(args.csv, "utf8");
  } catch (err) {
    process.stderr.write(`error: cannot read ${args.csv}: ${(err as Error).message}\n`);
    return 1;
  }
  try {
    const table = parseCsv(text, args.csv);
    const spec: PlotSpec = {
      kind: args.kind,
      title: args.title,
      xLabel: args.xLabel,
      yLabel: args.yLabel,
    };
    writeFileSync(args.out, render(table, spec));
  } catch (err) {
    const e = err as Error;
    if (e instanceof CsvError) {
      process.stderr.write(`${e.name}: ${e.message}\n`);
      return 1;
    }
    throw err;
  }
  process.stdout.write(`wrote ${args.out}\n`);
  return 0;
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}

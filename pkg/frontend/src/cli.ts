#!/usr/bin/env node
/**
 * plot — render benchmark CSVs as SVG figures.
 *
 *   plot --kind transfer-sizes --in bench-plots/bench-transfer-sizes.csv \
 *        --out bench-plots/transfer-sizes.svg
 *   plot --all --dir bench-plots
 *
 * `--all` looks for every canonical CSV in the directory and renders the
 * matching figure next to it; CSVs that are absent are skipped.
 */

import { existsSync, mkdirSync, writeFileSync } from "fs";
import path from "path";
import { parseArgs } from "util";
import { PlotterError } from "./errors.js";
import { FIGURE_KINDS, FigureKind, KIND_TO_CSV, RENDERERS } from "./figures.js";
import { loadCsv } from "./schema.js";

const USAGE = `usage: plot --kind <${FIGURE_KINDS.join("|")}> --in <csv> --out <svg>
       plot --all [--dir <directory>]`;

export function renderFile(kind: FigureKind, input: string, output: string): void {
  const rows = loadCsv(input);
  const svg = RENDERERS[kind](rows);
  mkdirSync(path.dirname(output), { recursive: true });
  writeFileSync(output, svg);
}

export function renderAll(dir: string): string[] {
  const written: string[] = [];
  for (const kind of FIGURE_KINDS) {
    const input = path.join(dir, KIND_TO_CSV[kind]);
    if (!existsSync(input)) continue;
    const output = path.join(dir, `${kind}.svg`);
    renderFile(kind, input, output);
    written.push(output);
  }
  return written;
}

export function main(argv: string[]): number {
  let args;
  try {
    args = parseArgs({
      args: argv,
      options: {
        kind: { type: "string" },
        in: { type: "string" },
        out: { type: "string" },
        all: { type: "boolean", default: false },
        dir: { type: "string", default: "bench-plots" },
        help: { type: "boolean", short: "h", default: false },
      },
      strict: true,
    }).values;
  } catch (err) {
    console.error((err as Error).message);
    console.error(USAGE);
    return 2;
  }
  if (args.help) {
    console.log(USAGE);
    return 0;
  }

  try {
    if (args.all) {
      const written = renderAll(args.dir!);
      for (const file of written) console.log(`wrote ${file}`);
      if (written.length === 0) {
        console.error(`no benchmark CSVs found in ${args.dir}`);
        return 1;
      }
      return 0;
    }
    if (!args.kind || !args.in || !args.out) {
      console.error("either --all or all of --kind/--in/--out are required");
      console.error(USAGE);
      return 2;
    }
    if (!(FIGURE_KINDS as readonly string[]).includes(args.kind)) {
      console.error(
        `unknown kind ${args.kind}; expected one of ${FIGURE_KINDS.join(", ")}`
      );
      return 2;
    }
    renderFile(args.kind as FigureKind, args.in, args.out);
    console.log(`wrote ${args.out}`);
    return 0;
  } catch (err) {
    if (err instanceof PlotterError) {
      console.error(`${err.name}: ${err.message}`);
      return 1;
    }
    throw err;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url === new URL(`file://${path.resolve(process.argv[1])}`).href;
if (invokedDirectly) {
  process.exitCode = main(process.argv.slice(2));
}

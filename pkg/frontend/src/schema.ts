/**
 * The benchmark CSV schema. This is the plotter's only contract with the
 * harness: a header row naming every field below, in order, followed by
 * one row per measurement.
 */

import { readFileSync } from "fs";
import { z } from "zod";
import { MissingData, MissingFile, SchemaMismatch } from "./errors.js";

export const CSV_FIELDS = [
  "sweep",
  "signer_mode",
  "n_validators",
  "n_targets",
  "n_items",
  "checkpoint_tx_vbytes",
  "batch_tx_vbytes",
  "amortized_vbytes_per_item",
  "fee_sat",
  "fee_usd",
  "effective_tps",
  "capped",
  "note",
] as const;

const numeric = z.coerce.number().finite();

export const BenchRowSchema = z.object({
  sweep: z.string().min(1),
  signer_mode: z.string().min(1),
  n_validators: numeric.int(),
  n_targets: numeric.int(),
  n_items: numeric.int(),
  checkpoint_tx_vbytes: numeric,
  batch_tx_vbytes: numeric,
  amortized_vbytes_per_item: numeric,
  fee_sat: numeric,
  fee_usd: numeric,
  effective_tps: numeric,
  capped: numeric.int(),
  note: z.string(),
});

export type BenchRow = z.infer<typeof BenchRowSchema>;

/** Split one CSV line, honouring double-quoted fields. */
function splitLine(line: string): string[] {
  const fields: string[] = [];
  let current = "";
  let quoted = false;
  for (let i = 0; i < line.length; i++) {
    const ch = line[i];
    if (quoted) {
      if (ch === '"' && line[i + 1] === '"') {
        current += '"';
        i++;
      } else if (ch === '"') {
        quoted = false;
      } else {
        current += ch;
      }
    } else if (ch === '"' && current === "") {
      quoted = true;
    } else if (ch === ",") {
      fields.push(current);
      current = "";
    } else {
      current += ch;
    }
  }
  fields.push(current);
  return fields;
}

export function parseCsv(text: string, source = "<csv>"): BenchRow[] {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new MissingData(`${source}: empty file`);
  }
  const header = splitLine(lines[0]!);
  if (
    header.length !== CSV_FIELDS.length ||
    header.some((name, i) => name !== CSV_FIELDS[i])
  ) {
    throw new SchemaMismatch(
      `${source}: header [${header.join(", ")}] does not match the ` +
        `benchmark schema [${CSV_FIELDS.join(", ")}]`
    );
  }
  const rows: BenchRow[] = [];
  for (const [index, line] of lines.slice(1).entries()) {
    const values = splitLine(line);
    if (values.length !== CSV_FIELDS.length) {
      throw new SchemaMismatch(
        `${source}: row ${index + 2} has ${values.length} fields, ` +
          `expected ${CSV_FIELDS.length}`
      );
    }
    const record = Object.fromEntries(
      CSV_FIELDS.map((name, i) => [name, values[i]])
    );
    const parsed = BenchRowSchema.safeParse(record);
    if (!parsed.success) {
      throw new SchemaMismatch(
        `${source}: row ${index + 2}: ${parsed.error.issues
          .map((iss) => `${iss.path.join(".")}: ${iss.message}`)
          .join("; ")}`
      );
    }
    rows.push(parsed.data);
  }
  if (rows.length === 0) {
    throw new MissingData(`${source}: no data rows`);
  }
  return rows;
}

export function loadCsv(path: string): BenchRow[] {
  let text: string;
  try {
    text = readFileSync(path, "utf-8");
  } catch (err) {
    if ((err as NodeJS.ErrnoException).code === "ENOENT") {
      throw new MissingFile(`no such CSV: ${path}`);
    }
    throw err;
  }
  return parseCsv(text, path);
}

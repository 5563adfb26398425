import { existsSync, mkdtempSync, readFileSync, writeFileSync } from "fs";
import { tmpdir } from "os";
import path from "path";
import { describe, expect, it } from "vitest";
import { renderAll, renderFile } from "../src/cli.js";
import { MissingFile, SchemaMismatch } from "../src/errors.js";
import { KIND_TO_CSV } from "../src/figures.js";
import { CSV_FIELDS } from "../src/schema.js";

const HEADER = CSV_FIELDS.join(",");

function sampleCsv(): string {
  const rows = [
    "s,native,0,0,1,141,0,141.0,28200,28.2,11.8,0,single P2WPKH transfer baseline",
    "s,threshold,1,1,10,300,400,70,140000,140,23.8,0,period_hours=2;checkpoints_per_day=12",
    "s,multisig,100,1,100,400,600,10,200000,200,166.7,0,period_hours=24;checkpoints_per_day=1",
  ];
  return `${HEADER}\n${rows.join("\n")}\n`;
}

function tempDir(): string {
  return mkdtempSync(path.join(tmpdir(), "plotter-cli-"));
}

describe("renderFile", () => {
  it("writes an SVG for a single kind", () => {
    const dir = tempDir();
    const input = path.join(dir, "in.csv");
    const output = path.join(dir, "out.svg");
    writeFileSync(input, sampleCsv());
    renderFile("transfer-sizes", input, output);
    const svg = readFileSync(output, "utf-8");
    expect(svg).toContain("<svg ");
    expect(svg).toContain("(log scale)");
  });

  it("propagates MissingFile", () => {
    const dir = tempDir();
    expect(() =>
      renderFile("transfer-sizes", path.join(dir, "nope.csv"), path.join(dir, "o.svg"))
    ).toThrow(MissingFile);
  });

  it("propagates SchemaMismatch and writes nothing", () => {
    const dir = tempDir();
    const input = path.join(dir, "in.csv");
    const output = path.join(dir, "out.svg");
    writeFileSync(input, "a,b,c\n1,2,3\n");
    expect(() => renderFile("transfer-sizes", input, output)).toThrow(
      SchemaMismatch
    );
    expect(existsSync(output)).toBe(false);
  });
});

describe("renderAll", () => {
  it("renders every canonical CSV present and skips the rest", () => {
    const dir = tempDir();
    writeFileSync(path.join(dir, KIND_TO_CSV["transfer-sizes"]), sampleCsv());
    writeFileSync(
      path.join(dir, KIND_TO_CSV["checkpoint-overhead"]),
      sampleCsv()
    );
    const written = renderAll(dir);
    expect(written.map((p) => path.basename(p)).sort()).toEqual([
      "checkpoint-overhead.svg",
      "transfer-sizes.svg",
    ]);
    expect(existsSync(path.join(dir, "throughput.svg"))).toBe(false);
  });

  it("returns an empty list for a directory without CSVs", () => {
    expect(renderAll(tempDir())).toEqual([]);
  });

  it("is byte-identical across runs", () => {
    const a = tempDir();
    const b = tempDir();
    for (const dir of [a, b]) {
      writeFileSync(path.join(dir, KIND_TO_CSV["transfer-sizes"]), sampleCsv());
      renderAll(dir);
    }
    expect(readFileSync(path.join(a, "transfer-sizes.svg"), "utf-8")).toBe(
      readFileSync(path.join(b, "transfer-sizes.svg"), "utf-8")
    );
  });
});

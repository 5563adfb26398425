/**
 * The five figure kinds, each a pure function from parsed benchmark rows to
 * an SVG string. Grouping conventions follow the harness CSVs: one line per
 * target-subnet count on transfer plots, one line per signer mode on the
 * threshold comparison, bars per checkpoint period.
 */

import { MissingData } from "./errors.js";
import type { BenchRow } from "./schema.js";
import {
  PALETTE,
  RefLine,
  Series,
  renderBarChart,
  renderLineChart,
} from "./svg.js";

export const FIGURE_KINDS = [
  "transfer-sizes",
  "throughput",
  "withdraw-sizes",
  "checkpoint-overhead",
  "threshold-comparison",
] as const;

export type FigureKind = (typeof FIGURE_KINDS)[number];

/** Canonical CSV filename for each figure kind (as written by the harness). */
export const KIND_TO_CSV: Record<FigureKind, string> = {
  "transfer-sizes": "bench-transfer-sizes.csv",
  throughput: "bench-throughput.csv",
  "withdraw-sizes": "bench-withdraw-sizes.csv",
  "checkpoint-overhead": "bench-checkpoint-overhead.csv",
  "threshold-comparison": "bench-threshold-comparison.csv",
};

const NATIVE_BASELINE_VBYTES = 141;

function groupBy<K>(rows: BenchRow[], key: (r: BenchRow) => K): Map<K, BenchRow[]> {
  const groups = new Map<K, BenchRow[]>();
  for (const row of rows) {
    const k = key(row);
    const bucket = groups.get(k);
    if (bucket) bucket.push(row);
    else groups.set(k, [row]);
  }
  return groups;
}

function bySize(rows: BenchRow[]): BenchRow[] {
  return [...rows].sort((a, b) => a.n_items - b.n_items);
}

function baseline(): RefLine {
  return {
    value: NATIVE_BASELINE_VBYTES,
    label: `native transfer (${NATIVE_BASELINE_VBYTES} vB)`,
    color: "#888",
  };
}

function require(rows: BenchRow[], what: string): void {
  if (rows.length === 0) {
    throw new MissingData(`no rows to plot for ${what}`);
  }
}

export function figureTransferSizes(rows: BenchRow[]): string {
  const data = rows.filter((r) => r.signer_mode !== "native");
  require(data, "transfer-sizes");
  const series: Series[] = [...groupBy(data, (r) => r.n_targets).entries()]
    .sort(([a], [b]) => a - b)
    .map(([targets, group], i) => ({
      label: `${targets} target subnet${targets === 1 ? "" : "s"}`,
      color: PALETTE[i % PALETTE.length]!,
      points: bySize(group).map((r) => ({
        x: r.n_items,
        y: r.amortized_vbytes_per_item,
      })),
    }));
  return renderLineChart({
    title: "Amortized on-chain size per transfer",
    xLabel: "transfers per batch",
    yLabel: "vbytes per transfer",
    logX: true,
    series,
    refLines: [baseline()],
  });
}

export function figureThroughput(rows: BenchRow[]): string {
  const data = rows.filter((r) => r.signer_mode !== "native");
  require(data, "throughput");
  const series: Series[] = [...groupBy(data, (r) => r.n_targets).entries()]
    .sort(([a], [b]) => a - b)
    .map(([targets, group], i) => ({
      label: `${targets} target subnet${targets === 1 ? "" : "s"}`,
      color: PALETTE[i % PALETTE.length]!,
      points: bySize(group).map((r) => ({ x: r.n_items, y: r.effective_tps })),
    }));
  const refLines: RefLine[] = rows
    .filter((r) => r.signer_mode === "native")
    .map((r) => ({
      value: r.effective_tps,
      label: `${r.note || "native"} (${r.effective_tps.toFixed(1)} tps)`,
      color: "#888",
    }));
  return renderLineChart({
    title: "Effective transfer throughput",
    xLabel: "transfers per batch",
    yLabel: "transfers per second",
    logX: true,
    series,
    refLines,
  });
}

export function figureWithdrawSizes(rows: BenchRow[]): string {
  require(rows, "withdraw-sizes");
  const series: Series[] = [
    {
      label: "batched withdrawals",
      color: PALETTE[0]!,
      points: bySize(rows).map((r) => ({
        x: r.n_items,
        y: r.amortized_vbytes_per_item,
      })),
    },
  ];
  return renderLineChart({
    title: "Amortized on-chain size per withdrawal",
    xLabel: "withdrawals per bundle",
    yLabel: "vbytes per withdrawal",
    logX: true,
    series,
    refLines: [baseline()],
  });
}

function periodHours(row: BenchRow): number | undefined {
  const match = /(?:^|;)period_hours=([0-9.]+)/.exec(row.note);
  return match ? Number(match[1]) : undefined;
}

export function figureCheckpointOverhead(rows: BenchRow[]): string {
  const bars = rows
    .map((r) => ({ period: periodHours(r), row: r }))
    .filter((e): e is { period: number; row: BenchRow } => e.period !== undefined)
    .sort((a, b) => a.period - b.period)
    .map((e) => ({
      label: `${e.period}h`,
      value: e.row.amortized_vbytes_per_item,
    }));
  if (bars.length === 0) {
    throw new MissingData("no rows with a period_hours note");
  }
  return renderBarChart({
    title: "Daily checkpoint overhead by period",
    yLabel: "vbytes per day",
    bars,
  });
}

export function figureThresholdComparison(rows: BenchRow[]): string {
  require(rows, "threshold-comparison");
  const series: Series[] = [...groupBy(rows, (r) => r.signer_mode).entries()]
    .sort(([a], [b]) => a.localeCompare(b))
    .map(([mode, group], i) => {
      const validators = group[0]!.n_validators;
      return {
        label:
          mode === "threshold"
            ? "threshold signature"
            : `${validators}-validator multisig`,
        color: PALETTE[i % PALETTE.length]!,
        points: bySize(group).map((r) => ({
          x: r.n_items,
          y: r.amortized_vbytes_per_item,
        })),
      };
    });
  return renderLineChart({
    title: "Threshold signature vs checksig-chain multisig",
    xLabel: "transfers per batch",
    yLabel: "vbytes per transfer",
    logX: true,
    series,
    refLines: [baseline()],
  });
}

export const RENDERERS: Record<FigureKind, (rows: BenchRow[]) => string> = {
  "transfer-sizes": figureTransferSizes,
  throughput: figureThroughput,
  "withdraw-sizes": figureWithdrawSizes,
  "checkpoint-overhead": figureCheckpointOverhead,
  "threshold-comparison": figureThresholdComparison,
};

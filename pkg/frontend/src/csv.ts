/**
 * Readers for the simulator's CSV outputs: field snapshots with a
 * `# N=.. t=.. name=..` header line and diagnostics.csv with its fixed
 * column order. These files are the only interface to the simulator;
 * nothing here computes physics.
 */

import { readdirSync, readFileSync } from "fs";
import { join } from "path";

export interface Snapshot {
  n: number;
  t: number;
  name: string;
  step: number;
  /** values[i][j]: row-major, i = x1 index, j = x2 index */
  values: number[][];
}

export const DIAGNOSTICS_COLUMNS = [
  "n",
  "t",
  "entropy_f",
  "entropy_g",
  "dissipation",
  "linf_rho_plus",
  "linf_rho_minus",
  "deviation_plus",
  "deviation_minus",
  "theta_min_plus_L",
  "lambda_max",
  "velocity_l2",
  "velocity_h1_semi",
  "fp_iters",
  "bounds_ok",
] as const;

export type DiagnosticsRow = Record<(typeof DIAGNOSTICS_COLUMNS)[number], number>;

export function parseSnapshot(text: string, step = -1): Snapshot {
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  const header = lines[0];
  if (!header || !header.startsWith("# ")) {
    throw new Error("snapshot missing `# N=.. t=.. name=..` header");
  }
  const meta = new Map<string, string>();
  for (const token of header.slice(2).trim().split(/\s+/)) {
    const eq = token.indexOf("=");
    if (eq > 0) meta.set(token.slice(0, eq), token.slice(eq + 1));
  }
  const n = Number(meta.get("N"));
  const t = Number(meta.get("t"));
  const name = meta.get("name") ?? "";
  if (!Number.isInteger(n) || n < 1 || !Number.isFinite(t) || !name) {
    throw new Error(`snapshot header malformed: ${header}`);
  }
  const values = lines.slice(1).map((line) => line.split(",").map(Number));
  if (values.length !== n || values.some((row) => row.length !== n)) {
    throw new Error(`snapshot body is not ${n}x${n}`);
  }
  if (values.some((row) => row.some((v) => !Number.isFinite(v)))) {
    throw new Error("snapshot contains non-finite values");
  }
  return { n, t, name, step, values };
}

export function readSnapshots(runDir: string, field: string): Snapshot[] {
  const pattern = new RegExp(`^${field}_n(\\d+)\\.csv$`);
  const out: Snapshot[] = [];
  for (const entry of readdirSync(runDir)) {
    const match = pattern.exec(entry);
    if (!match) continue;
    const text = readFileSync(join(runDir, entry), "utf8");
    out.push(parseSnapshot(text, Number(match[1])));
  }
  out.sort((a, b) => a.step - b.step);
  return out;
}

export function parseDiagnostics(text: string): DiagnosticsRow[] {
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0) throw new Error("diagnostics file is empty");
  const header = lines[0].split(",");
  if (header.join(",") !== DIAGNOSTICS_COLUMNS.join(",")) {
    throw new Error(`unexpected diagnostics columns: ${lines[0]}`);
  }
  return lines.slice(1).map((line) => {
    const parts = line.split(",").map(Number);
    const row = {} as DiagnosticsRow;
    DIAGNOSTICS_COLUMNS.forEach((col, k) => {
      row[col] = parts[k];
    });
    return row;
  });
}

export function readDiagnostics(runDir: string): DiagnosticsRow[] {
  return parseDiagnostics(readFileSync(join(runDir, "diagnostics.csv"), "utf8"));
}

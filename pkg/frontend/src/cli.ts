#!/usr/bin/env node
/**
 * plots heatmap <run_dir> --field theta_plus --times 0,1.98,3.38 [--out f.png]
 * plots series  <run_dir> [--out f.png]
 *
 * Reads the simulator's CSV outputs and writes PNG figures; never
 * computes physics. Exit codes: 0 ok, 1 missing/invalid data, 2 usage.
 */

import { writeFileSync } from "fs";
import { join } from "path";

import { MissingSnapshotError, renderHeatmap } from "./heatmap";
import { MissingDiagnosticsError, renderSeries } from "./series";

function parseFlags(argv: string[]): { positional: string[]; flags: Map<string, string> } {
  const positional: string[] = [];
  const flags = new Map<string, string>();
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (arg.startsWith("--")) {
      const value = argv[i + 1];
      if (value === undefined) throw new Error(`flag ${arg} needs a value`);
      flags.set(arg.slice(2), value);
      i++;
    } else {
      positional.push(arg);
    }
  }
  return { positional, flags };
}

function usage(): number {
  console.error(
    "usage: plots heatmap <run_dir> --field <name> --times t1,t2,... [--out file.png]\n" +
      "       plots series <run_dir> [--out file.png]",
  );
  return 2;
}

export function main(argv: string[]): number {
  let parsed;
  try {
    parsed = parseFlags(argv);
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 2;
  }
  const { positional, flags } = parsed;
  const [command, runDir] = positional;
  if (!command || !runDir) return usage();

  try {
    if (command === "heatmap") {
      const field = flags.get("field") ?? "theta_plus";
      const timesRaw = flags.get("times");
      if (!timesRaw) return usage();
      const times = timesRaw.split(",").filter((s) => s.trim() !== "").map(Number);
      if (times.length === 0 || times.some((t) => !Number.isFinite(t))) {
        console.error(`error: bad --times value ${timesRaw}`);
        return 2;
      }
      const out = flags.get("out") ?? join(runDir, `heatmap_${field}.png`);
      const result = renderHeatmap(runDir, field, times);
      writeFileSync(out, result.png);
      for (const p of result.panels) {
        console.log(
          `panel t=${p.t} (requested ${p.requestedT}, step ${p.step}): ` +
            `min=${p.min} max=${p.max} range=${p.range}`,
        );
      }
      console.log(`wrote ${out}`);
      return 0;
    }
    if (command === "series") {
      const out = flags.get("out") ?? join(runDir, "series.png");
      const result = renderSeries(runDir);
      writeFileSync(out, result.png);
      console.log(`wrote ${out} (${result.rows.length} records)`);
      return 0;
    }
  } catch (err) {
    if (err instanceof MissingSnapshotError || err instanceof MissingDiagnosticsError) {
      console.error(`error: ${err.message}`);
      return 1;
    }
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
  return usage();
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}

/**
 * Multi-panel heatmap of field snapshots at requested times, one panel
 * per time, all panels sharing one color scale so contrast changes
 * between times stay visually comparable.
 */

import { Snapshot, readSnapshots } from "./csv";
import { encodePng } from "./png";
import { BLACK, GREY, Raster, colormap, textWidth } from "./raster";

export class MissingSnapshotError extends Error {}

export interface PanelInfo {
  requestedT: number;
  t: number;
  step: number;
  min: number;
  max: number;
  /** max - min: the spatial contrast of the panel */
  range: number;
}

export interface HeatmapResult {
  png: Buffer;
  panels: PanelInfo[];
  scaleMin: number;
  scaleMax: number;
}

function nearestByTime(snapshots: Snapshot[], t: number): Snapshot {
  let best = snapshots[0];
  for (const snap of snapshots) {
    if (Math.abs(snap.t - t) < Math.abs(best.t - t)) best = snap;
  }
  return best;
}

function fieldStats(values: number[][]): { min: number; max: number } {
  let min = Infinity;
  let max = -Infinity;
  for (const row of values) {
    for (const v of row) {
      if (v < min) min = v;
      if (v > max) max = v;
    }
  }
  return { min, max };
}

export function renderHeatmap(runDir: string, field: string, times: number[]): HeatmapResult {
  if (times.length === 0) {
    throw new Error("at least one snapshot time is required");
  }
  const snapshots = readSnapshots(runDir, field);
  if (snapshots.length === 0) {
    throw new MissingSnapshotError(`no ${field}_n*.csv snapshots in ${runDir}`);
  }
  const picked = times.map((t) => ({ requestedT: t, snap: nearestByTime(snapshots, t) }));

  const panels: PanelInfo[] = picked.map(({ requestedT, snap }) => {
    const { min, max } = fieldStats(snap.values);
    return { requestedT, t: snap.t, step: snap.step, min, max, range: max - min };
  });
  const scaleMin = Math.min(...panels.map((p) => p.min));
  const scaleMax = Math.max(...panels.map((p) => p.max));
  const span = scaleMax - scaleMin || 1;

  const n = picked[0].snap.n;
  const cell = Math.max(2, Math.floor(200 / n));
  const panelPx = n * cell;
  const top = 30; // figure title + panel titles
  const left = 26; // vertical x2 label + panel edge
  const bottom = 18; // x1 labels
  const gap = 14;
  const barWidth = 14;
  const barGap = 18;
  const width =
    left + picked.length * panelPx + (picked.length - 1) * gap + barGap + barWidth + 64;
  const height = top + panelPx + bottom;

  const img = new Raster(width, height);
  img.text(left, 4, `${field}  shared scale ${fmt(scaleMin)} to ${fmt(scaleMax)}`);

  picked.forEach(({ snap }, k) => {
    const x0 = left + k * (panelPx + gap);
    img.text(x0, 18, `t = ${fmt(snap.t)}`);
    for (let i = 0; i < n; i++) {
      for (let j = 0; j < n; j++) {
        const u = (snap.values[i][j] - scaleMin) / span;
        // x1 runs right, x2 runs up
        img.rect(x0 + i * cell, top + (n - 1 - j) * cell, cell, cell, colormap(u));
      }
    }
    img.line(x0, top + panelPx, x0 + panelPx - 1, top + panelPx, BLACK);
    img.line(x0, top, x0, top + panelPx, BLACK);
    img.text(x0 + Math.floor(panelPx / 2) - textWidth("x1") / 2, top + panelPx + 6, "x1");
  });
  img.textVertical(6, top + Math.floor(panelPx / 2) - 8, "x2");

  // shared colorbar with the scale endpoints
  const barX = left + picked.length * panelPx + (picked.length - 1) * gap + barGap;
  for (let y = 0; y < panelPx; y++) {
    const u = 1 - y / (panelPx - 1);
    img.rect(barX, top + y, barWidth, 1, colormap(u));
  }
  img.line(barX, top, barX, top + panelPx, GREY);
  img.text(barX + barWidth + 4, top - 3, fmt(scaleMax));
  img.text(barX + barWidth + 4, top + panelPx - 4, fmt(scaleMin));

  return { png: encodePng(img.width, img.height, img.data), panels, scaleMin, scaleMax };
}

function fmt(v: number): string {
  if (v === 0) return "0";
  const abs = Math.abs(v);
  if (abs >= 0.01 && abs < 1000) return v.toPrecision(3);
  return v.toExponential(2);
}

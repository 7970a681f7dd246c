/**
 * Time-series figure of the entropy and dissipation columns of
 * diagnostics.csv: entropy_f, entropy_g and dissipation against t on
 * one pair of axes with a legend.
 */

import { existsSync } from "fs";
import { join } from "path";

import { DiagnosticsRow, readDiagnostics } from "./csv";
import { BLACK, Color, GREY, Raster, textWidth } from "./raster";
import { encodePng } from "./png";

export class MissingDiagnosticsError extends Error {}

const SERIES: { column: keyof DiagnosticsRow; label: string; color: Color }[] = [
  { column: "entropy_f", label: "entropy_f", color: [31, 119, 180] },
  { column: "entropy_g", label: "entropy_g", color: [44, 160, 44] },
  { column: "dissipation", label: "dissipation", color: [255, 127, 14] },
];

export interface SeriesResult {
  png: Buffer;
  rows: DiagnosticsRow[];
}

export function renderSeries(runDir: string): SeriesResult {
  if (!existsSync(join(runDir, "diagnostics.csv"))) {
    throw new MissingDiagnosticsError(`no diagnostics.csv in ${runDir}`);
  }
  const rows = readDiagnostics(runDir);
  if (rows.length === 0) {
    throw new MissingDiagnosticsError(`diagnostics.csv in ${runDir} has no rows`);
  }

  const width = 640;
  const height = 400;
  const left = 70;
  const right = 16;
  const top = 24;
  const bottom = 40;
  const plotW = width - left - right;
  const plotH = height - top - bottom;

  const ts = rows.map((r) => r.t);
  const tMin = Math.min(...ts);
  const tMax = Math.max(...ts);
  const tSpan = tMax - tMin || 1;
  let vMin = Infinity;
  let vMax = -Infinity;
  for (const { column } of SERIES) {
    for (const row of rows) {
      vMin = Math.min(vMin, row[column]);
      vMax = Math.max(vMax, row[column]);
    }
  }
  const vSpan = vMax - vMin || 1;

  const img = new Raster(width, height);
  img.text(left, 6, "entropy and dissipation vs t");
  img.line(left, top, left, top + plotH, BLACK);
  img.line(left, top + plotH, left + plotW, top + plotH, BLACK);

  const toX = (t: number) => left + ((t - tMin) / tSpan) * (plotW - 1);
  const toY = (v: number) => top + (1 - (v - vMin) / vSpan) * (plotH - 1);

  for (let k = 0; k <= 4; k++) {
    const t = tMin + (k / 4) * tSpan;
    const x = Math.round(toX(t));
    img.line(x, top + plotH, x, top + plotH + 4, BLACK);
    const label = fmt(t);
    img.text(x - Math.floor(textWidth(label) / 2), top + plotH + 8, label);
    const v = vMin + (k / 4) * vSpan;
    const y = Math.round(toY(v));
    img.line(left - 4, y, left, y, BLACK);
    const vLabel = fmt(v);
    img.text(left - 8 - textWidth(vLabel), y - 3, vLabel);
    if (k > 0) img.line(left + 1, y, left + plotW, y, [235, 235, 235]);
  }
  img.text(left + Math.floor(plotW / 2) - textWidth("t") / 2, height - 12, "t");

  for (const { column, color } of SERIES) {
    for (let k = 0; k + 1 < rows.length; k++) {
      img.line(
        Math.round(toX(rows[k].t)),
        Math.round(toY(rows[k][column])),
        Math.round(toX(rows[k + 1].t)),
        Math.round(toY(rows[k + 1][column])),
        color,
      );
    }
  }

  let legendY = top + 6;
  for (const { label, color } of SERIES) {
    const x = left + plotW - textWidth(label) - 30;
    img.line(x, legendY + 3, x + 14, legendY + 3, color);
    img.line(x, legendY + 4, x + 14, legendY + 4, color);
    img.text(x + 18, legendY, label, GREY);
    legendY += 12;
  }

  return { png: encodePng(img.width, img.height, img.data), rows };
}

function fmt(v: number): string {
  if (v === 0) return "0";
  const abs = Math.abs(v);
  if (abs >= 0.01 && abs < 1000) return v.toPrecision(3);
  return v.toExponential(1);
}

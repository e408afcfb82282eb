/** Tiny SVG line/bar charts. Pure string builders, no DOM dependency.
 *
 * The series values are plotted as-is; nulls break the line into segments.
 */

import type { Series } from "./views.js";

export interface ChartOptions {
  width?: number;
  height?: number;
  xLabel?: string;
  yLabel?: string;
}

const COLORS = ["#2563eb", "#16a34a", "#dc2626", "#9333ea", "#ea580c"];
const PAD = { left: 46, right: 12, top: 12, bottom: 30 };

function finite(values: (number | null)[]): number[] {
  return values.filter((v): v is number => v !== null && Number.isFinite(v));
}

function bounds(series: Series[]): { x0: number; x1: number; y0: number; y1: number } {
  const xs = series.flatMap((s) => finite(s.xs));
  const ys = series.flatMap((s) => finite(s.ys));
  if (!xs.length || !ys.length) return { x0: 0, x1: 1, y0: 0, y1: 1 };
  let [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  let [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  if (x0 === x1) [x0, x1] = [x0 - 1, x1 + 1];
  if (y0 === y1) [y0, y1] = [y0 - 1, y1 + 1];
  return { x0, x1, y0, y1 };
}

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function fmtTick(v: number): string {
  const a = Math.abs(v);
  if (a !== 0 && (a >= 10000 || a < 0.01)) return v.toExponential(1);
  return String(Math.round(v * 100) / 100);
}

export function lineChartSvg(series: Series[], opts: ChartOptions = {}): string {
  const width = opts.width ?? 420;
  const height = opts.height ?? 220;
  const b = bounds(series);
  const plotW = width - PAD.left - PAD.right;
  const plotH = height - PAD.top - PAD.bottom;
  const tx = (x: number) => PAD.left + ((x - b.x0) / (b.x1 - b.x0)) * plotW;
  const ty = (y: number) => PAD.top + (1 - (y - b.y0) / (b.y1 - b.y0)) * plotH;

  const parts: string[] = [];
  parts.push(`<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}" class="chart">`);
  parts.push(`<rect x="${PAD.left}" y="${PAD.top}" width="${plotW}" height="${plotH}" class="chart-bg"/>`);

  // zero line when it is inside the y range
  if (b.y0 < 0 && b.y1 > 0) {
    const y = ty(0);
    parts.push(`<line x1="${PAD.left}" y1="${y}" x2="${PAD.left + plotW}" y2="${y}" class="chart-zero"/>`);
  }

  for (const [x, anchor] of [[b.x0, "start"], [b.x1, "end"]] as const) {
    parts.push(`<text x="${tx(x)}" y="${height - 10}" text-anchor="${anchor}" class="chart-tick">${fmtTick(x)}</text>`);
  }
  for (const y of [b.y0, (b.y0 + b.y1) / 2, b.y1]) {
    parts.push(`<text x="${PAD.left - 6}" y="${ty(y) + 4}" text-anchor="end" class="chart-tick">${fmtTick(y)}</text>`);
  }

  series.forEach((s, si) => {
    const color = COLORS[si % COLORS.length];
    let d = "";
    let pen = false;
    for (let i = 0; i < s.xs.length; i++) {
      const x = s.xs[i];
      const y = s.ys[i];
      if (x === null || y === null || !Number.isFinite(x) || !Number.isFinite(y)) {
        pen = false;
        continue;
      }
      d += `${pen ? "L" : "M"}${tx(x).toFixed(1)} ${ty(y).toFixed(1)} `;
      pen = true;
    }
    if (d) parts.push(`<path d="${d.trim()}" fill="none" stroke="${color}" stroke-width="2"/>`);
    parts.push(
      `<text x="${PAD.left + 8}" y="${PAD.top + 16 + si * 16}" fill="${color}" class="chart-legend">${esc(s.label)}</text>`,
    );
  });

  if (opts.xLabel) {
    parts.push(`<text x="${PAD.left + plotW / 2}" y="${height - 10}" text-anchor="middle" class="chart-label">${esc(opts.xLabel)}</text>`);
  }
  parts.push("</svg>");
  return parts.join("");
}

export function barChartSvg(labels: string[], values: number[], opts: ChartOptions = {}): string {
  const width = opts.width ?? 420;
  const height = opts.height ?? 220;
  const plotW = width - PAD.left - PAD.right;
  const plotH = height - PAD.top - PAD.bottom;
  const top = values.length ? Math.max(...values, 0) : 1;
  const y1 = top === 0 ? 1 : top;
  const ty = (v: number) => PAD.top + (1 - v / y1) * plotH;
  const bw = plotW / Math.max(values.length, 1);

  const parts: string[] = [];
  parts.push(`<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}" class="chart">`);
  parts.push(`<rect x="${PAD.left}" y="${PAD.top}" width="${plotW}" height="${plotH}" class="chart-bg"/>`);
  for (const v of [0, y1 / 2, y1]) {
    parts.push(`<text x="${PAD.left - 6}" y="${ty(v) + 4}" text-anchor="end" class="chart-tick">${fmtTick(v)}</text>`);
  }
  values.forEach((v, i) => {
    const x = PAD.left + i * bw + bw * 0.15;
    parts.push(`<rect x="${x.toFixed(1)}" y="${ty(v).toFixed(1)}" width="${(bw * 0.7).toFixed(1)}" ` +
      `height="${(ty(0) - ty(v)).toFixed(1)}" fill="${COLORS[0]}"/>`);
    parts.push(`<text x="${(x + bw * 0.35).toFixed(1)}" y="${height - 10}" text-anchor="middle" ` +
      `class="chart-tick">${esc(labels[i] ?? "")}</text>`);
  });
  parts.push("</svg>");
  return parts.join("");
}

/**
 * Panel renderers for the study CSVs: occupation heat maps with overlay
 * curves, outcome histograms, and sample-path panels.
 *
 * Every renderer returns the SVG fragment plus the digest of the numbers
 * it drew (see digest.ts); it never filters or transforms the input
 * values, so the digest must match a fresh parse of the CSV.
 */

import { Grid, Histogram, PathsFile } from "./csv.js";
import { digestValues } from "./digest.js";
import { colormap, DASH, DASHDOT, esc, fmtTick, niceTicks } from "./svg.js";

export interface Overlay {
  label: string;
  times: number[];
  values: number[];
  style: "dashed" | "dashdot";
  color?: string;
}

export interface PanelOptions {
  id: string;          // unique per panel (clip-path ids)
  title: string;
  xLabel: string;
  yLabel: string;
  overlays?: Overlay[];
}

export interface PanelBox {
  body: string;
  width: number;
  height: number;
  digest: string;
}

const W = 380, H = 270;
const ML = 56, MR = 16, MT = 30, MB = 44;
const PW = W - ML - MR;
const PH = H - MT - MB;

const OVERLAY_COLORS = { dashed: "#d62828", dashdot: "#e85d04" } as const;

function frame(opts: PanelOptions, xOf: (v: number) => number,
               yOf: (v: number) => number, xMin: number, xMax: number,
               yMin: number, yMax: number): string {
  let s = "";
  s += `<text x="${ML}" y="${MT - 10}" font-size="11" font-weight="600" fill="#222">${esc(opts.title)}</text>\n`;
  s += `<line x1="${ML}" y1="${MT}" x2="${ML}" y2="${MT + PH}" stroke="#333" stroke-width="0.8"/>\n`;
  s += `<line x1="${ML}" y1="${MT + PH}" x2="${ML + PW}" y2="${MT + PH}" stroke="#333" stroke-width="0.8"/>\n`;
  for (const v of niceTicks(xMin, xMax, 6)) {
    if (v < xMin - 1e-9 || v > xMax + 1e-9) continue;
    const x = xOf(v);
    s += `<line x1="${x.toFixed(1)}" y1="${MT + PH}" x2="${x.toFixed(1)}" y2="${MT + PH + 3}" stroke="#333" stroke-width="0.5"/>\n`;
    s += `<text x="${x.toFixed(1)}" y="${MT + PH + 13}" text-anchor="middle" font-size="8" fill="#555">${esc(fmtTick(v))}</text>\n`;
  }
  for (const v of niceTicks(yMin, yMax, 5)) {
    if (v < yMin - 1e-9 || v > yMax + 1e-9) continue;
    const y = yOf(v);
    s += `<line x1="${ML - 3}" y1="${y.toFixed(1)}" x2="${ML}" y2="${y.toFixed(1)}" stroke="#333" stroke-width="0.5"/>\n`;
    s += `<text x="${ML - 5}" y="${(y + 2.5).toFixed(1)}" text-anchor="end" font-size="8" fill="#555">${esc(fmtTick(v))}</text>\n`;
  }
  s += `<text x="${ML + PW / 2}" y="${H - 6}" text-anchor="middle" font-size="9" fill="#444">${esc(opts.xLabel)}</text>\n`;
  s += `<text x="14" y="${MT + PH / 2}" text-anchor="middle" font-size="9" fill="#444" transform="rotate(-90,14,${MT + PH / 2})">${esc(opts.yLabel)}</text>\n`;
  return s;
}

function drawOverlays(overlays: Overlay[], xOf: (v: number) => number,
                      yOf: (v: number) => number, clipId: string): string {
  let s = "";
  overlays.forEach((ov) => {
    const color = ov.color ?? OVERLAY_COLORS[ov.style];
    const dash = ov.style === "dashed" ? DASH : DASHDOT;
    const pts = ov.times.map((t, i) =>
      `${xOf(t).toFixed(1)},${yOf(ov.values[i]).toFixed(1)}`).join(" ");
    s += `<polyline clip-path="url(#${clipId})" fill="none" stroke="${color}" stroke-width="1.3" stroke-dasharray="${dash}" points="${pts}"/>\n`;
  });
  return s;
}

function legend(entries: { label: string; color: string; dash?: string }[]): string {
  if (entries.length === 0) return "";
  const lw = Math.max(...entries.map((e) => e.label.length)) * 4.6 + 26;
  const lh = entries.length * 11 + 4;
  const lx = ML + PW - lw - 2, ly = MT + 4;
  let s = `<rect x="${lx}" y="${ly}" width="${lw}" height="${lh}" rx="2" fill="white" fill-opacity="0.8"/>\n`;
  entries.forEach((e, i) => {
    const yy = ly + 8 + i * 11;
    s += `<line x1="${lx + 4}" y1="${yy}" x2="${lx + 18}" y2="${yy}" stroke="${e.color}" stroke-width="1.3" ${e.dash ? `stroke-dasharray="${e.dash}"` : ""}/>\n`;
    s += `<text x="${lx + 22}" y="${yy + 3}" font-size="7.5" fill="#444">${esc(e.label)}</text>\n`;
  });
  return s;
}

// ---------------------------------------------------------------------------

/** Per-slice median of a binned distribution (bin-centre convention). */
export function gridMedian(grid: Grid): { times: number[]; values: number[] } {
  const times: number[] = [];
  const values: number[] = [];
  for (const s of grid.slices) {
    const total = s.count.reduce((a, b) => a + b, 0);
    let acc = 0;
    let med = 0.5 * (s.lo[0] + s.hi[0]);
    for (let i = 0; i < s.count.length; i++) {
      acc += s.count[i];
      if (acc * 2 >= total) {
        med = 0.5 * (s.lo[i] + s.hi[i]);
        break;
      }
    }
    times.push(s.t);
    values.push(med);
  }
  return { times, values };
}

export function renderHeatmap(grid: Grid, opts: PanelOptions): PanelBox {
  const slices = grid.slices;
  const ts = slices.map((s) => s.t);
  const yMin = Math.min(...slices[0].lo);
  const yMax = Math.max(...slices[0].hi);
  // band edges midway between slice times
  const half = ts.length > 1 ? (ts[1] - ts[0]) / 2 : 0.5;
  const edges: number[] = [ts[0] - half];
  for (let i = 0; i + 1 < ts.length; i++) edges.push((ts[i] + ts[i + 1]) / 2);
  edges.push(ts[ts.length - 1] +
             (ts.length > 1 ? (ts[ts.length - 1] - ts[ts.length - 2]) / 2 : 0.5));
  const xMin = edges[0], xMax = edges[edges.length - 1];
  const xOf = (v: number) => ML + ((v - xMin) / (xMax - xMin || 1)) * PW;
  const yOf = (v: number) => MT + PH - ((v - yMin) / (yMax - yMin || 1)) * PH;

  const maxCount = Math.max(...slices.flatMap((s) => s.count), 1);
  const drawn: number[] = [];
  let s = `<rect x="${ML}" y="${MT}" width="${PW}" height="${PH}" fill="${colormap(0)}"/>\n`;
  s += `<defs><clipPath id="${opts.id}-clip"><rect x="${ML}" y="${MT}" width="${PW}" height="${PH}"/></clipPath></defs>\n`;
  slices.forEach((sl, i) => {
    const x0 = xOf(edges[i]), x1 = xOf(edges[i + 1]);
    for (let b = 0; b < sl.count.length; b++) {
      drawn.push(sl.t, sl.lo[b], sl.hi[b], sl.count[b]);
      if (sl.count[b] === 0) continue;
      const y0 = yOf(sl.hi[b]), y1 = yOf(sl.lo[b]);
      s += `<rect x="${x0.toFixed(2)}" y="${y0.toFixed(2)}" width="${(x1 - x0 + 0.05).toFixed(2)}" height="${(y1 - y0 + 0.05).toFixed(2)}" fill="${colormap(sl.count[b] / maxCount)}"/>\n`;
    }
  });
  const overlays = opts.overlays ?? [];
  s += drawOverlays(overlays, xOf, yOf, `${opts.id}-clip`);
  s += frame(opts, xOf, yOf, xMin, xMax, yMin, yMax);
  s += legend(overlays.map((ov) => ({
    label: ov.label,
    color: ov.color ?? OVERLAY_COLORS[ov.style],
    dash: ov.style === "dashed" ? DASH : DASHDOT,
  })));
  return { body: s, width: W, height: H, digest: digestValues(drawn) };
}

export function renderHistogram(hist: Histogram, opts: PanelOptions): PanelBox {
  const xMin = Math.min(...hist.lo);
  const xMax = Math.max(...hist.hi);
  const yMax = Math.max(...hist.count, 1);
  const xOf = (v: number) => ML + ((v - xMin) / (xMax - xMin || 1)) * PW;
  const yOf = (v: number) => MT + PH - (v / (yMax * 1.06)) * PH;
  const drawn: number[] = [];
  let s = "";
  for (let i = 0; i < hist.count.length; i++) {
    drawn.push(hist.lo[i], hist.hi[i], hist.count[i]);
    const x0 = xOf(hist.lo[i]), x1 = xOf(hist.hi[i]);
    const y = yOf(hist.count[i]);
    s += `<rect x="${x0.toFixed(2)}" y="${y.toFixed(2)}" width="${Math.max(x1 - x0 - 0.4, 0.4).toFixed(2)}" height="${(MT + PH - y).toFixed(2)}" fill="#4361ee" opacity="0.8"/>\n`;
  }
  if (xMin < 0 && xMax > 0) {
    const xz = xOf(0);
    s += `<line x1="${xz.toFixed(1)}" y1="${MT}" x2="${xz.toFixed(1)}" y2="${MT + PH}" stroke="#888" stroke-width="0.8" stroke-dasharray="${DASH}"/>\n`;
  }
  const total = hist.count.reduce((a, b) => a + b, 0);
  s += `<text x="${ML + PW - 4}" y="${MT + PH - 6}" text-anchor="end" font-size="8" fill="#666">${total} paths</text>\n`;
  s += frame(opts, xOf, yOf, xMin, xMax, 0, yMax * 1.06);
  return { body: s, width: W, height: H, digest: digestValues(drawn) };
}

const PATH_COLORS = ["#4361ee", "#2d6a4f", "#7b2d8b", "#b07d02"];

export function renderPaths(file: PathsFile, opts: PanelOptions): PanelBox {
  const finite = (vs: number[]) => vs.filter((v) => Number.isFinite(v));
  const all = file.paths.flatMap((p) => [...finite(p.F), ...finite(p.level)]);
  const yMin = Math.min(...all), yMax = Math.max(...all);
  const pad = 0.04 * (yMax - yMin || 1);
  const y0 = yMin - pad, y1 = yMax + pad;
  const ts = file.paths[0].t;
  const xMin = ts[0], xMax = ts[ts.length - 1];
  const xOf = (v: number) => ML + ((v - xMin) / (xMax - xMin || 1)) * PW;
  const yOf = (v: number) => MT + PH - ((v - y0) / (y1 - y0 || 1)) * PH;
  const drawn: number[] = [];
  let s = `<defs><clipPath id="${opts.id}-clip"><rect x="${ML}" y="${MT}" width="${PW}" height="${PH}"/></clipPath></defs>\n`;
  file.paths.forEach((p, k) => {
    const color = PATH_COLORS[k % PATH_COLORS.length];
    const fPts: string[] = [];
    const lPts: string[] = [];
    for (let i = 0; i < p.t.length; i++) {
      drawn.push(p.t[i], p.F[i], p.level[i]);
      fPts.push(`${xOf(p.t[i]).toFixed(1)},${yOf(p.F[i]).toFixed(1)}`);
      if (Number.isFinite(p.level[i])) {
        lPts.push(`${xOf(p.t[i]).toFixed(1)},${yOf(p.level[i]).toFixed(1)}`);
      }
    }
    if (lPts.length > 0) {
      s += `<polyline clip-path="url(#${opts.id}-clip)" fill="none" stroke="${color}" stroke-width="1" stroke-dasharray="${DASH}" opacity="0.55" points="${lPts.join(" ")}"/>\n`;
    }
    s += `<polyline clip-path="url(#${opts.id}-clip)" fill="none" stroke="${color}" stroke-width="0.9" points="${fPts.join(" ")}"/>\n`;
  });
  s += frame(opts, xOf, yOf, xMin, xMax, y0, y1);
  s += legend([
    { label: "price", color: PATH_COLORS[0] },
    { label: "true level", color: PATH_COLORS[0], dash: DASH },
  ]);
  return { body: s, width: W, height: H, digest: digestValues(drawn) };
}

// ---------------------------------------------------------------------------

export function standalone(panel: PanelBox): string {
  return `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${panel.width} ${panel.height}" font-family="Helvetica, Arial, sans-serif">\n<rect width="${panel.width}" height="${panel.height}" fill="#fff"/>\n${panel.body}</svg>\n`;
}

/** Arrange panels in a fixed grid (row-major) into one SVG document. */
export function composeSvg(rows: PanelBox[][]): string {
  const nCols = Math.max(...rows.map((r) => r.length));
  const cw = Math.max(...rows.flat().map((p) => p.width));
  const ch = Math.max(...rows.flat().map((p) => p.height));
  const tw = nCols * cw, th = rows.length * ch;
  let s = `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${tw} ${th}" font-family="Helvetica, Arial, sans-serif">\n<rect width="${tw}" height="${th}" fill="#fff"/>\n`;
  rows.forEach((row, r) => {
    row.forEach((panel, c) => {
      s += `<g transform="translate(${c * cw},${r * ch})">\n${panel.body}</g>\n`;
    });
  });
  s += "</svg>\n";
  return s;
}

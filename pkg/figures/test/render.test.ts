import assert from "node:assert/strict";
import { existsSync, mkdtempSync, readdirSync, readFileSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import test from "node:test";

import { parseGrid, parseHistogram, parsePaths } from "../src/csv.js";
import { gridDigest, histDigest, pathsDigest, referenceSchedule } from "../src/common.js";
import { canonical, digestValues } from "../src/digest.js";
import {
  composeSvg, gridMedian, renderHeatmap, renderHistogram, renderPaths,
  standalone,
} from "../src/render.js";
import { atomicWrite, DASH, DASHDOT } from "../src/svg.js";

function gridText(counts: number[][]): string {
  const lines = ["t,bin_lo,bin_hi,count"];
  counts.forEach((slice, s) => {
    slice.forEach((c, b) => lines.push(`${s * 10}.0,${b}.0,${b + 1}.0,${c}`));
  });
  return lines.join("\n");
}

const OPTS = { id: "p1", title: "T", xLabel: "x", yLabel: "y" };

test("canonical digest values: NaN, -0, plain numbers", () => {
  assert.equal(canonical(NaN), "NaN");
  assert.equal(canonical(-0), "0");
  assert.equal(canonical(1.5), "1.5");
  assert.notEqual(digestValues([1, 2]), digestValues([1, 2, 3]));
});

test("heatmap digest equals a fresh parse of the same file", () => {
  const text = gridText([[0, 3, 1], [2, 2, 0], [4, 0, 0]]);
  const panel = renderHeatmap(parseGrid(text, "g.csv"), OPTS);
  assert.equal(panel.digest, gridDigest(parseGrid(text, "g.csv")));
});

test("heatmap digest detects a tampered count", () => {
  const clean = gridText([[0, 3, 1], [2, 2, 0]]);
  const tampered = gridText([[0, 3, 1], [2, 1, 0]]);
  const panel = renderHeatmap(parseGrid(clean, "g.csv"), OPTS);
  assert.notEqual(panel.digest, gridDigest(parseGrid(tampered, "g.csv")));
});

test("heatmap draws both overlay styles with their dash patterns", () => {
  const grid = parseGrid(gridText([[1, 0], [0, 1]]), "g.csv");
  const panel = renderHeatmap(grid, {
    ...OPTS,
    overlays: [
      { label: "bench", times: [0, 10], values: [0.5, 1.5], style: "dashed" },
      { label: "median", times: [0, 10], values: [0.4, 1.4], style: "dashdot" },
    ],
  });
  assert.ok(panel.body.includes(`stroke-dasharray="${DASH}"`));
  assert.ok(panel.body.includes(`stroke-dasharray="${DASHDOT}"`));
  assert.ok(panel.body.includes("bench"));
  assert.ok(panel.body.includes("median"));
});

test("single-path grid renders as a one-ridge heatmap", () => {
  const grid = parseGrid(gridText([[1, 0, 0], [0, 0, 1]]), "g.csv");
  const panel = renderHeatmap(grid, OPTS);
  assert.equal(panel.digest, gridDigest(grid));
  assert.ok(panel.body.includes("<rect"));
});

test("per-slice median uses bin centres and cumulative counts", () => {
  const grid = parseGrid(gridText([[0, 3, 1], [4, 0, 0]]), "g.csv");
  const med = gridMedian(grid);
  assert.deepEqual(med.times, [0, 10]);
  assert.deepEqual(med.values, [1.5, 0.5]);
});

test("histogram digest matches fresh parse; zero line when range spans 0", () => {
  const text = "bin_lo,bin_hi,count\n-2.0,-1.0,3\n-1.0,1.0,7\n1.0,2.0,2";
  const hist = parseHistogram(text, "h.csv");
  const panel = renderHistogram(hist, OPTS);
  assert.equal(panel.digest, histDigest(parseHistogram(text, "h.csv")));
  assert.ok(panel.body.includes(`stroke-dasharray="${DASH}"`));
  assert.ok(panel.body.includes("12 paths"));
});

const PATHS = [
  "path,t,F,S,Q,X,nu,level,pi_1",
  "0,0.0,5.0,5.0,1.0,0.0,-2.0,5.1,0.5",
  "0,1.0,5.2,5.0,0.5,1.0,nan,5.1,0.6",
  "1,0.0,5.0,5.0,1.0,0.0,-2.0,4.9,0.5",
  "1,1.0,4.8,5.0,0.4,1.2,nan,4.9,0.4",
].join("\n");

test("paths panel digest matches fresh parse and draws level dashed", () => {
  const file = parsePaths(PATHS, "p.csv");
  const panel = renderPaths(file, OPTS);
  assert.equal(panel.digest, pathsDigest(parsePaths(PATHS, "p.csv")));
  assert.ok(panel.body.includes(`stroke-dasharray="${DASH}"`));
  const solids = panel.body.match(/<polyline(?![^>]*dasharray)/g) ?? [];
  assert.equal(solids.length, 2);
});

test("compose places panels on a grid; standalone wraps one panel", () => {
  const grid = parseGrid(gridText([[1], [1]]), "g.csv");
  const p = renderHeatmap(grid, OPTS);
  const svg = composeSvg([[p, p], [p, p]]);
  assert.ok(svg.startsWith("<svg"));
  assert.ok(svg.includes(`viewBox="0 0 ${2 * p.width} ${2 * p.height}"`));
  assert.ok(svg.includes(`translate(${p.width},${p.height})`));
  const single = standalone(p);
  assert.ok(single.includes(`viewBox="0 0 ${p.width} ${p.height}"`));
});

test("reference schedule: starts at full inventory, liquidates by T", () => {
  const cfg = { a: 1e-5, phi: 2e-5, beta: 1e-3, T: 1.0, nInit: 10000, alphaIsInf: true };
  const times = [0, 0.25, 0.5, 0.75, 1.0];
  const { speed, inventory } = referenceSchedule(cfg, times);
  assert.ok(Math.abs(inventory[0] - 10000) < 1e-9);
  assert.ok(Math.abs(inventory[4]) < 1e-9);
  for (let i = 1; i < times.length; i++) assert.ok(inventory[i] < inventory[i - 1]);
  for (const v of speed) assert.ok(v < 0);
  const g = Math.sqrt(cfg.phi / cfg.a);
  const want = -cfg.nInit * g * Math.cosh(g * cfg.T) / Math.sinh(g * cfg.T);
  assert.ok(Math.abs(speed[0] - want) < 1e-9);
});

test("atomicWrite leaves only the final file behind", () => {
  const dir = mkdtempSync(join(tmpdir(), "figtest-"));
  try {
    const out = join(dir, "nested", "fig.svg");
    atomicWrite(out, "<svg/>");
    assert.ok(existsSync(out));
    assert.equal(readFileSync(out, "utf8"), "<svg/>");
    assert.deepEqual(readdirSync(join(dir, "nested")), ["fig.svg"]);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
});

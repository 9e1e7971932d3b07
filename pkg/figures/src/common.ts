/**
 * Shared plumbing for the figure drivers: config loading, reference
 * curves for the constant-level execution schedule, and the digest
 * cross-check between what a renderer drew and a fresh parse of the
 * same CSV.
 */

import { readFileSync } from "node:fs";

import { Grid, Histogram, PathsFile, parseGrid, parseHistogram, parsePaths } from "./csv.js";
import { digestValues } from "./digest.js";

export function readText(path: string): string {
  return readFileSync(path, "utf8");
}

export interface RunSettings {
  a: number;
  phi: number;
  beta: number;
  T: number;
  nInit: number;
  alphaIsInf: boolean;
}

export function loadSettings(path: string): RunSettings {
  const raw = JSON.parse(readText(path)) as Record<string, unknown>;
  const num = (k: string): number => {
    const v = raw[k];
    if (typeof v !== "number" || !Number.isFinite(v)) {
      throw new Error(`${path}: expected finite number for '${k}'`);
    }
    return v;
  };
  return {
    a: num("a"),
    phi: num("phi"),
    beta: num("beta"),
    T: num("T"),
    nInit: num("N_init"),
    alphaIsInf: raw["alpha"] === "inf" || raw["alpha"] === Infinity,
  };
}

/**
 * Deterministic liquidation schedule for an agent with no view on the
 * level: full-liquidation boundary, running inventory penalty phi,
 * quadratic trading cost a.  Used as the reference curve on the speed
 * and inventory panels.
 */
export function referenceSchedule(cfg: RunSettings, times: number[]):
    { speed: number[]; inventory: number[] } {
  const g = Math.sqrt(cfg.phi / cfg.a);
  const speed: number[] = [];
  const inventory: number[] = [];
  for (const t of times) {
    const tau = cfg.T - t;
    if (g === 0) {
      speed.push(tau > 0 ? -cfg.nInit / cfg.T : 0);
      inventory.push(cfg.nInit * (tau / cfg.T));
    } else {
      const d = Math.sinh(g * cfg.T);
      speed.push(-cfg.nInit * g * Math.cosh(g * tau) / d);
      inventory.push(cfg.nInit * Math.sinh(g * tau) / d);
    }
  }
  return { speed, inventory };
}

// --- digests of freshly parsed files (structural traversal order) ---------

export function gridDigest(grid: Grid): string {
  const vals: number[] = [];
  for (const s of grid.slices) {
    for (let b = 0; b < s.count.length; b++) {
      vals.push(s.t, s.lo[b], s.hi[b], s.count[b]);
    }
  }
  return digestValues(vals);
}

export function histDigest(hist: Histogram): string {
  const vals: number[] = [];
  for (let i = 0; i < hist.count.length; i++) {
    vals.push(hist.lo[i], hist.hi[i], hist.count[i]);
  }
  return digestValues(vals);
}

export function pathsDigest(file: PathsFile): string {
  const vals: number[] = [];
  for (const p of file.paths) {
    for (let i = 0; i < p.t.length; i++) {
      vals.push(p.t[i], p.F[i], p.level[i]);
    }
  }
  return digestValues(vals);
}

export function freshGridDigest(path: string, name: string): string {
  return gridDigest(parseGrid(readText(path), name));
}

export function freshHistDigest(path: string, name: string): string {
  return histDigest(parseHistogram(readText(path), name));
}

export function freshPathsDigest(path: string, name: string): string {
  return pathsDigest(parsePaths(readText(path), name));
}

/** Throws when the drawn digest disagrees with the re-parsed file. */
export function checkDigest(label: string, drawn: string, fresh: string): void {
  if (drawn !== fresh) {
    throw new Error(
      `digest mismatch for ${label}: drawn ${drawn.slice(0, 12)}… != file ${fresh.slice(0, 12)}…`);
  }
  console.log(`  ${label}: digest ${drawn.slice(0, 12)} ok`);
}

/**
 * Canonical digests of plotted values.
 *
 * Every renderer returns the sha-256 digest of the numbers it actually
 * drew, in drawing order; callers recompute the digest from a fresh parse
 * of the CSV and require equality, guaranteeing the renderer never
 * filtered, reordered or rescaled the data.
 */

import { createHash } from "node:crypto";

/** Shortest-round-trip decimal text for a float; NaN and -0 normalised. */
export function canonical(v: number): string {
  if (Number.isNaN(v)) return "NaN";
  if (Object.is(v, -0)) return "0";
  return String(v);
}

export function digestValues(values: readonly number[]): string {
  const h = createHash("sha256");
  h.update(values.map(canonical).join(","));
  return h.digest("hex");
}

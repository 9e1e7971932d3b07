/**
 * Four-panel figure for the jump-level trading study: sample price paths
 * against the prevailing level, posterior of the high level, inventory
 * occupation, and the terminal-profit histogram.  The strategy starts
 * flat, so no static liquidation benchmark is drawn.
 *
 * Inputs are the CSVs written by `artifact simulate`; run e.g.
 *   artifact simulate --config ../src/artifact/configs/table2_jump.cfg \
 *       --out results/table2 --paths 300
 *   npm run fig3
 */

import { parseArgs } from "node:util";
import { join } from "node:path";

import { parseGrid, parseHistogram, parsePaths } from "./csv.js";
import { atomicWrite } from "./svg.js";
import {
  composeSvg, gridMedian, renderHeatmap, renderHistogram, renderPaths, Overlay,
} from "./render.js";
import {
  checkDigest, freshGridDigest, freshHistDigest, freshPathsDigest, readText,
} from "./common.js";

function main(): void {
  const { values } = parseArgs({
    options: {
      results: { type: "string", default: "results/table2" },
      out: { type: "string", default: "out/fig3.svg" },
    },
  });
  const dir = values.results!;

  const pathsPath = join(dir, "paths_sample.csv");
  const postPath = join(dir, "grid_posterior.csv");
  const invPath = join(dir, "grid_inventory.csv");
  const histPath = join(dir, "histogram.csv");

  const samples = parsePaths(readText(pathsPath), "paths_sample.csv");
  const post = parseGrid(readText(postPath), "grid_posterior.csv");
  const inv = parseGrid(readText(invPath), "grid_inventory.csv");
  const hist = parseHistogram(readText(histPath), "histogram.csv");

  const med = (g: ReturnType<typeof parseGrid>): Overlay => {
    const m = gridMedian(g);
    return { label: "median", times: m.times, values: m.values, style: "dashdot" };
  };

  const pPaths = renderPaths(samples, {
    id: "px", title: "Sample price paths and prevailing level",
    xLabel: "time (s)", yLabel: "price",
  });
  const pPost = renderHeatmap(post, {
    id: "post", title: "Posterior of the high level", xLabel: "time (s)",
    yLabel: "probability", overlays: [med(post)],
  });
  const pInv = renderHeatmap(inv, {
    id: "inv", title: "Inventory across paths", xLabel: "time (s)",
    yLabel: "inventory", overlays: [med(inv)],
  });
  const pHist = renderHistogram(hist, {
    id: "hist", title: "Terminal profit", xLabel: "profit", yLabel: "paths",
  });

  checkDigest("paths_sample", pPaths.digest, freshPathsDigest(pathsPath, "paths_sample.csv"));
  checkDigest("grid_posterior", pPost.digest, freshGridDigest(postPath, "grid_posterior.csv"));
  checkDigest("grid_inventory", pInv.digest, freshGridDigest(invPath, "grid_inventory.csv"));
  checkDigest("histogram", pHist.digest, freshHistDigest(histPath, "histogram.csv"));

  const svg = composeSvg([[pPaths, pPost], [pInv, pHist]]);
  atomicWrite(values.out!, svg);
  console.log(`wrote ${values.out} (${svg.length} bytes)`);
}

try {
  main();
} catch (err) {
  console.error(`error: ${err instanceof Error ? err.message : String(err)}`);
  process.exit(1);
}

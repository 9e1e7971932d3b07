/**
 * Four-panel figure for the diffusive-level liquidation study: trading
 * speed and inventory occupation heat maps with the no-learning static
 * schedule and the per-slice median overlaid, the posterior of the high
 * level, and the histogram of excess return over the static benchmark.
 *
 * Inputs are the CSVs written by `artifact simulate`; run e.g.
 *   artifact simulate --config ../src/artifact/configs/table1_ou.cfg \
 *       --out results/table1 --paths 500
 *   npm run fig1
 */

import { parseArgs } from "node:util";
import { join } from "node:path";

import { parseGrid, parseHistogram } from "./csv.js";
import { atomicWrite } from "./svg.js";
import { composeSvg, gridMedian, renderHeatmap, renderHistogram, Overlay } from "./render.js";
import {
  checkDigest, freshGridDigest, freshHistDigest, loadSettings,
  readText, referenceSchedule,
} from "./common.js";

const SECONDS_PER_UNIT = 3600;

function main(): void {
  const { values } = parseArgs({
    options: {
      results: { type: "string", default: "results/table1" },
      config: { type: "string", default: "../src/artifact/configs/table1_ou.cfg" },
      out: { type: "string", default: "out/fig1.svg" },
    },
  });
  const dir = values.results!;
  const cfg = loadSettings(values.config!);

  const speedPath = join(dir, "grid_speed.csv");
  const invPath = join(dir, "grid_inventory.csv");
  const postPath = join(dir, "grid_posterior.csv");
  const histPath = join(dir, "histogram.csv");

  const speed = parseGrid(readText(speedPath), "grid_speed.csv");
  const inv = parseGrid(readText(invPath), "grid_inventory.csv");
  const post = parseGrid(readText(postPath), "grid_posterior.csv");
  const hist = parseHistogram(readText(histPath), "histogram.csv");

  const tSec = speed.slices.map((s) => s.t);
  const ref = referenceSchedule(cfg, tSec.map((t) => t / SECONDS_PER_UNIT));
  const refSpeed: Overlay = {
    label: "static benchmark", times: tSec, values: ref.speed, style: "dashed",
  };
  const refInv: Overlay = {
    label: "static benchmark", times: tSec, values: ref.inventory, style: "dashed",
  };
  const med = (g: ReturnType<typeof parseGrid>): Overlay => {
    const m = gridMedian(g);
    return { label: "median", times: m.times, values: m.values, style: "dashdot" };
  };

  const pSpeed = renderHeatmap(speed, {
    id: "sp", title: "Trading speed across paths", xLabel: "time (s)",
    yLabel: "speed (units/hr)", overlays: [refSpeed, med(speed)],
  });
  const pInv = renderHeatmap(inv, {
    id: "inv", title: "Inventory across paths", xLabel: "time (s)",
    yLabel: "inventory", overlays: [refInv, med(inv)],
  });
  const pPost = renderHeatmap(post, {
    id: "post", title: "Posterior of the high level", xLabel: "time (s)",
    yLabel: "probability", overlays: [med(post)],
  });
  const pHist = renderHistogram(hist, {
    id: "hist", title: "Excess return vs static benchmark",
    xLabel: "excess return (bps)", yLabel: "paths",
  });

  // each panel must have drawn exactly what a fresh parse of the file holds
  checkDigest("grid_speed", pSpeed.digest, freshGridDigest(speedPath, "grid_speed.csv"));
  checkDigest("grid_inventory", pInv.digest, freshGridDigest(invPath, "grid_inventory.csv"));
  checkDigest("grid_posterior", pPost.digest, freshGridDigest(postPath, "grid_posterior.csv"));
  checkDigest("histogram", pHist.digest, freshHistDigest(histPath, "histogram.csv"));

  const svg = composeSvg([[pSpeed, pInv], [pPost, pHist]]);
  atomicWrite(values.out!, svg);
  console.log(`wrote ${values.out} (${svg.length} bytes)`);
}

try {
  main();
} catch (err) {
  console.error(`error: ${err instanceof Error ? err.message : String(err)}`);
  process.exit(1);
}

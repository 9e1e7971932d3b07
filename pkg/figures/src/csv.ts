/**
 * Parsers for the study CSVs written by the `artifact` CLI.
 *
 * Schemas:
 *   summary.csv       metric,value
 *   grid_<name>.csv   t,bin_lo,bin_hi,count     (one row per time-slice bin)
 *   histogram.csv     bin_lo,bin_hi,count
 *   paths_sample.csv  path,t,F,S,Q,X,nu,level,pi_1..pi_J
 *
 * Parsing is strict: a missing column or a malformed number raises a
 * SchemaError naming the column or the offending line.
 */

export class SchemaError extends Error {}

export interface Table {
  header: string[];
  /** raw string cells, one array per data row */
  rows: string[][];
}

export interface GridSlice {
  t: number;
  lo: number[];
  hi: number[];
  count: number[];
}

export interface Grid {
  slices: GridSlice[];
  /** every numeric cell in file order, for digesting */
  cells: number[];
}

export interface Histogram {
  lo: number[];
  hi: number[];
  count: number[];
  cells: number[];
}

export interface SamplePath {
  path: number;
  t: number[];
  F: number[];
  S: number[];
  Q: number[];
  X: number[];
  nu: number[];
  level: number[];
  /** pi[j][k] = posterior weight of regime j at grid point k */
  pi: number[][];
}

export interface PathsFile {
  paths: SamplePath[];
  nStates: number;
}

// ---------------------------------------------------------------------------

function parseNumber(cell: string, where: string): number {
  if (cell === "nan") return NaN;
  if (cell === "inf") return Infinity;
  if (cell === "-inf") return -Infinity;
  const v = Number(cell);
  if (cell.trim() === "" || Number.isNaN(v)) {
    throw new SchemaError(`${where}: not a number: '${cell}'`);
  }
  return v;
}

export function parseTable(text: string, name: string, required: string[]): Table {
  const lines = text.split(/\r?\n/).filter((l) => l.trim() !== "");
  if (lines.length === 0) throw new SchemaError(`${name}: empty file`);
  const header = lines[0].split(",");
  for (const col of required) {
    if (!header.includes(col)) {
      throw new SchemaError(`${name}: missing column '${col}'`);
    }
  }
  const rows: string[][] = [];
  for (let i = 1; i < lines.length; i++) {
    const parts = lines[i].split(",");
    if (parts.length !== header.length) {
      throw new SchemaError(
        `${name}:${i + 1}: expected ${header.length} fields, got ${parts.length}`);
    }
    rows.push(parts);
  }
  return { header, rows };
}

function column(table: Table, name: string): number {
  return table.header.indexOf(name);
}

// ---------------------------------------------------------------------------

export function parseSummary(text: string, name = "summary.csv"): Map<string, string> {
  const table = parseTable(text, name, ["metric", "value"]);
  const out = new Map<string, string>();
  const im = column(table, "metric");
  const iv = column(table, "value");
  for (const row of table.rows) out.set(row[im], row[iv]);
  return out;
}

export function parseGrid(text: string, name = "grid.csv"): Grid {
  const table = parseTable(text, name, ["t", "bin_lo", "bin_hi", "count"]);
  if (table.rows.length === 0) throw new SchemaError(`${name}: no data rows`);
  const [it, ilo, ihi, ic] = ["t", "bin_lo", "bin_hi", "count"].map((c) =>
    column(table, c));
  const slices: GridSlice[] = [];
  const cells: number[] = [];
  let cur: GridSlice | null = null;
  table.rows.forEach((row, i) => {
    const where = `${name}:${i + 2}`;
    const t = parseNumber(row[it], where);
    const lo = parseNumber(row[ilo], where);
    const hi = parseNumber(row[ihi], where);
    const count = parseNumber(row[ic], where);
    if (!Number.isInteger(count) || count < 0) {
      throw new SchemaError(`${where}: count must be a nonnegative integer`);
    }
    if (cur === null || cur.t !== t) {
      cur = { t, lo: [], hi: [], count: [] };
      slices.push(cur);
    }
    cur.lo.push(lo);
    cur.hi.push(hi);
    cur.count.push(count);
    cells.push(t, lo, hi, count);
  });
  const nBins = slices[0].count.length;
  for (const s of slices) {
    if (s.count.length !== nBins) {
      throw new SchemaError(`${name}: time slices have unequal bin counts`);
    }
  }
  return { slices, cells };
}

export function parseHistogram(text: string, name = "histogram.csv"): Histogram {
  const table = parseTable(text, name, ["bin_lo", "bin_hi", "count"]);
  if (table.rows.length === 0) throw new SchemaError(`${name}: no data rows`);
  const [ilo, ihi, ic] = ["bin_lo", "bin_hi", "count"].map((c) => column(table, c));
  const out: Histogram = { lo: [], hi: [], count: [], cells: [] };
  table.rows.forEach((row, i) => {
    const where = `${name}:${i + 2}`;
    const lo = parseNumber(row[ilo], where);
    const hi = parseNumber(row[ihi], where);
    const count = parseNumber(row[ic], where);
    out.lo.push(lo);
    out.hi.push(hi);
    out.count.push(count);
    out.cells.push(lo, hi, count);
  });
  return out;
}

export function parsePaths(text: string, name = "paths_sample.csv"): PathsFile {
  const fixed = ["path", "t", "F", "S", "Q", "X", "nu", "level"];
  const table = parseTable(text, name, fixed);
  const piCols = table.header.filter((h) => /^pi_\d+$/.test(h));
  if (piCols.length === 0) throw new SchemaError(`${name}: missing column 'pi_1'`);
  const idx = fixed.map((c) => column(table, c));
  const piIdx = piCols.map((c) => column(table, c));
  const byId = new Map<number, SamplePath>();
  const order: SamplePath[] = [];
  table.rows.forEach((row, i) => {
    const where = `${name}:${i + 2}`;
    const vals = idx.map((j) => parseNumber(row[j], where));
    const id = vals[0];
    let rec = byId.get(id);
    if (!rec) {
      rec = { path: id, t: [], F: [], S: [], Q: [], X: [], nu: [], level: [],
              pi: piIdx.map(() => []) };
      byId.set(id, rec);
      order.push(rec);
    }
    rec.t.push(vals[1]);
    rec.F.push(vals[2]);
    rec.S.push(vals[3]);
    rec.Q.push(vals[4]);
    rec.X.push(vals[5]);
    rec.nu.push(vals[6]);
    rec.level.push(vals[7]);
    piIdx.forEach((j, k) => rec!.pi[k].push(parseNumber(row[j], where)));
  });
  if (order.length === 0) throw new SchemaError(`${name}: no data rows`);
  return { paths: order, nStates: piCols.length };
}

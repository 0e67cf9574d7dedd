/**
 * Category grid and sampling distribution (docs/formats.md §6 and §8).
 * Floating-point evaluation order mirrors the core exactly: row-major
 * sequential sums and left-associated elementwise products.
 */

export const ROW_BIN_NAMES = "ABCDE";
export const N_ROW_BINS = 5;
export const N_COL_BINS = 4;
export const GRID_CELLS = N_ROW_BINS * N_COL_BINS;

const ROW_BIN_EDGES = [3, 6, 9, 12];
const COL_BIN_EDGES = [3, 6, 8];

/** Row-major flat index into the 5x4 grid. */
export function categoryIndex(rowBin: number, colBin: number): number {
  return rowBin * N_COL_BINS + colBin;
}

export function categoryLabel(index: number): string {
  const rowBin = Math.floor(index / N_COL_BINS);
  const colBin = index % N_COL_BINS;
  return `${ROW_BIN_NAMES[rowBin]}${colBin + 1}`;
}

export function categoryFromLabel(label: string): number {
  const rowBin = ROW_BIN_NAMES.indexOf(label[0]);
  const colBin = parseInt(label.slice(1), 10) - 1;
  if (rowBin < 0 || colBin < 0 || colBin >= N_COL_BINS) {
    throw new Error(`bad category label ${label}`);
  }
  return categoryIndex(rowBin, colBin);
}

function binOf(count: number, edges: number[]): number {
  for (let i = 0; i < edges.length; i++) {
    if (count <= edges[i]) return i;
  }
  return edges.length;
}

export function categorize(rowCount: number, colCount: number): number {
  if (rowCount < 1 || colCount < 1) throw new Error("counts must be >= 1");
  return categoryIndex(binOf(rowCount, ROW_BIN_EDGES), binOf(colCount, COL_BIN_EDGES));
}

// Pinned exp: bit-identical to the core's weight kernel (libm exp differs
// across platforms in the last ulp; this uses only correctly rounded IEEE
// basic ops in a fixed order). See docs/formats.md §8.
const INV_LN2 = 1.4426950408889634;
const LN2_HI = 0.6931471803691238;
const LN2_LO = 1.9082149292705877e-10;
const EXP_TERMS = 13;

function productPow2(value: number, n: number): number {
  for (let i = 0; i < n; i++) value *= 2.0;
  for (let i = 0; i < -n; i++) {
    value *= 0.5;
    if (value === 0.0) break;
  }
  return value;
}

export function pinnedExp(x: number): number {
  const n = Math.floor(x * INV_LN2 + 0.5);
  const r = (x - n * LN2_HI) - n * LN2_LO;
  let term = 1.0;
  let acc = 1.0;
  for (let k = 1; k <= EXP_TERMS; k++) {
    term = (term * r) / k;
    acc += term;
  }
  return productPow2(acc, n);
}

export function gaussianGrid(centerIndex: number, sigma: number): Float64Array {
  if (sigma <= 0) throw new Error("sigma must be positive");
  const b0 = Math.floor(centerIndex / N_COL_BINS);
  const j0 = centerIndex % N_COL_BINS;
  const grid = new Float64Array(GRID_CELLS);
  for (let b = 0; b < N_ROW_BINS; b++) {
    for (let j = 0; j < N_COL_BINS; j++) {
      const distSq = (b - b0) * (b - b0) + (j - j0) * (j - j0);
      grid[categoryIndex(b, j)] = pinnedExp(-distSq / (2.0 * sigma * sigma));
    }
  }
  return grid;
}

export function frequencyGrid(categoryIndices: number[]): Float64Array {
  const grid = new Float64Array(GRID_CELLS);
  for (const index of categoryIndices) grid[index] += 1.0;
  return grid;
}

/** normalize(gauss * fg * fi), or null when the product vanishes. */
export function buildDistribution(
  gauss: Float64Array,
  fg: Float64Array,
  fi: Float64Array,
): Float64Array | null {
  const product = new Float64Array(GRID_CELLS);
  for (let i = 0; i < GRID_CELLS; i++) {
    product[i] = gauss[i] * fg[i] * fi[i];
  }
  let total = 0.0;
  for (let i = 0; i < GRID_CELLS; i++) total += product[i];
  if (total <= 0.0) return null;
  for (let i = 0; i < GRID_CELLS; i++) product[i] /= total;
  return product;
}

/** Invert the row-major CDF at u; floating residue falls back to the last
 * positive cell. */
export function drawCategory(p: Float64Array, u: number): number {
  let cum = 0.0;
  let lastPositive = -1;
  for (let i = 0; i < GRID_CELLS; i++) {
    const weight = p[i];
    if (weight <= 0.0) continue;
    cum += weight;
    lastPositive = i;
    if (u < cum) return i;
  }
  if (lastPositive < 0) throw new Error("probability grid has no positive mass");
  return lastPositive;
}

/**
 * The canonical annotation structures (docs/formats.md §1) and their
 * validity rules, mirrored from the core toolkit.
 */

import { RawImage } from "./png";

export interface ColumnBox {
  x1: number;
  x2: number;
}

export interface RowBox {
  y1: number;
  y2: number;
}

export interface CellRecord {
  startRow: number;
  endRow: number;
  startCol: number;
  endCol: number;
  bbox: [number, number, number, number];
  empty: boolean;
}

export interface AnnotationRecord {
  id: string;
  imageWidth: number;
  imageHeight: number;
  columns: ColumnBox[];
  rows: RowBox[];
  cells: CellRecord[];
}

export interface TableDoc {
  record: AnnotationRecord;
  image: RawImage;
}

export function parseAnnotationRecord(json: string): AnnotationRecord {
  const obj = JSON.parse(json);
  const record: AnnotationRecord = {
    id: String(obj.id),
    imageWidth: obj.imageWidth,
    imageHeight: obj.imageHeight,
    columns: obj.columns.map((c: ColumnBox) => ({ x1: c.x1, x2: c.x2 })),
    rows: obj.rows.map((r: RowBox) => ({ y1: r.y1, y2: r.y2 })),
    cells: obj.cells.map((c: CellRecord) => ({
      startRow: c.startRow,
      endRow: c.endRow,
      startCol: c.startCol,
      endCol: c.endCol,
      bbox: [c.bbox[0], c.bbox[1], c.bbox[2], c.bbox[3]] as [number, number, number, number],
      empty: Boolean(c.empty),
    })),
  };
  return record;
}

/**
 * Canonical serialization: identical bytes to the core's writer for ASCII
 * ids (two-space indent, fixed key order, trailing newline).
 */
export function serializeAnnotationRecord(record: AnnotationRecord): string {
  const ordered = {
    id: record.id,
    imageWidth: record.imageWidth,
    imageHeight: record.imageHeight,
    columns: record.columns.map((c) => ({ x1: c.x1, x2: c.x2 })),
    rows: record.rows.map((r) => ({ y1: r.y1, y2: r.y2 })),
    cells: record.cells.map((c) => ({
      startRow: c.startRow,
      endRow: c.endRow,
      startCol: c.startCol,
      endCol: c.endCol,
      bbox: c.bbox,
      empty: c.empty,
    })),
  };
  return JSON.stringify(ordered, null, 2) + "\n";
}

/** Every violated invariant, empty when the record is valid. */
export function validateRecord(record: AnnotationRecord, image?: RawImage): string[] {
  const out: string[] = [];
  const { columns, rows, cells } = record;

  if (columns.length === 0) out.push("column-missing");
  if (rows.length === 0) out.push("row-missing");
  if (cells.length === 0) out.push("cell-missing");

  const checkAxis = (
    kind: string,
    pairs: Array<[number, number]>,
  ): void => {
    for (const [lo, hi] of pairs) {
      if (!Number.isInteger(lo) || !Number.isInteger(hi) || lo < 0 || lo >= hi) {
        out.push(`${kind}-extent`);
      }
    }
    if (pairs.length > 0 && pairs[0][0] !== 0) out.push(`${kind}-origin`);
    for (let i = 0; i + 1 < pairs.length; i++) {
      if (pairs[i][1] > pairs[i + 1][0]) out.push(`${kind}-overlap`);
      else if (pairs[i][1] < pairs[i + 1][0]) out.push(`${kind}-gap`);
    }
  };
  checkAxis("column", columns.map((c) => [c.x1, c.x2]));
  checkAxis("row", rows.map((r) => [r.y1, r.y2]));

  if (columns.length > 0) {
    const span = columns[columns.length - 1].x2 - columns[0].x1;
    if (record.imageWidth !== span) out.push("image-size");
  }
  if (rows.length > 0) {
    const span = rows[rows.length - 1].y2 - rows[0].y1;
    if (record.imageHeight !== span) out.push("image-size");
  }
  if (image && (image.width !== record.imageWidth || image.height !== record.imageHeight)) {
    out.push("image-size");
  }

  const nRows = rows.length;
  const nCols = columns.length;
  const coverage = new Int32Array(nRows * nCols);
  let spanError = false;
  for (const cell of cells) {
    const inRange =
      cell.startRow >= 0 && cell.startRow <= cell.endRow && cell.endRow < nRows &&
      cell.startCol >= 0 && cell.startCol <= cell.endCol && cell.endCol < nCols;
    if (!inRange) {
      out.push("cell-span");
      spanError = true;
      continue;
    }
    for (let r = cell.startRow; r <= cell.endRow; r++) {
      for (let c = cell.startCol; c <= cell.endCol; c++) {
        coverage[r * nCols + c] += 1;
      }
    }
    const xLo = columns[cell.startCol].x1;
    const xHi = columns[cell.endCol].x2;
    const yLo = rows[cell.startRow].y1;
    const yHi = rows[cell.endRow].y2;
    const [bx1, by1, bx2, by2] = cell.bbox;
    if (!(xLo <= bx1 && bx1 <= bx2 && bx2 <= xHi && yLo <= by1 && by1 <= by2 && by2 <= yHi)) {
      out.push("cell-bbox");
    }
  }
  if (!spanError) {
    for (let i = 0; i < coverage.length; i++) {
      if (coverage[i] === 0) out.push("coverage-gap");
      else if (coverage[i] > 1) out.push("duplicate-coverage");
    }
  }
  return out;
}

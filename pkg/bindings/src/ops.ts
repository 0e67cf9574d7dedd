/**
 * Replay of recorded augmentation operations (docs/formats.md §7): column
 * deletion/replication natively, row variants as the exact transpose.
 * Pixel arithmetic is pure copying, so replayed variants are bit-identical
 * to the core's.
 */

import { AnnotationRecord, CellRecord, TableDoc } from "./model";
import { RawImage } from "./png";

export type OpKind = "row-delete" | "column-delete" | "row-replicate" | "column-replicate";

export interface OpRecord {
  kind: OpKind;
  cMin: number;
  cMax: number;
  d?: number;
}

function transposeImage(image: RawImage): RawImage {
  const { width, height, channels, data } = image;
  const out = new Uint8Array(data.length);
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      for (let ch = 0; ch < channels; ch++) {
        out[(x * height + y) * channels + ch] = data[(y * width + x) * channels + ch];
      }
    }
  }
  return { width: height, height: width, channels, data: out };
}

function transposeCell(cell: CellRecord): CellRecord {
  const [x1, y1, x2, y2] = cell.bbox;
  return {
    startRow: cell.startCol,
    endRow: cell.endCol,
    startCol: cell.startRow,
    endCol: cell.endRow,
    bbox: [y1, x1, y2, x2],
    empty: cell.empty,
  };
}

export function transposeDoc(doc: TableDoc): TableDoc {
  return {
    record: {
      id: doc.record.id,
      imageWidth: doc.record.imageHeight,
      imageHeight: doc.record.imageWidth,
      columns: doc.record.rows.map((r) => ({ x1: r.y1, x2: r.y2 })),
      rows: doc.record.columns.map((c) => ({ y1: c.x1, y2: c.x2 })),
      cells: doc.record.cells.map(transposeCell),
    },
    image: transposeImage(doc.image),
  };
}

/** Horizontal concatenation of source column ranges (half-open, in source
 * coordinates), mirroring numpy concatenate on axis 1. */
function copyColumnRanges(image: RawImage, ranges: Array<[number, number]>): RawImage {
  const { height, channels, data, width } = image;
  const newWidth = ranges.reduce((acc, [lo, hi]) => acc + (hi - lo), 0);
  const out = new Uint8Array(newWidth * height * channels);
  for (let y = 0; y < height; y++) {
    let cursor = (y * newWidth) * channels;
    for (const [lo, hi] of ranges) {
      const start = (y * width + lo) * channels;
      const end = (y * width + hi) * channels;
      out.set(data.subarray(start, end), cursor);
      cursor += end - start;
    }
  }
  return { width: newWidth, height, channels, data: out };
}

function shiftCell(cell: CellRecord, dcol: number, dx: number): CellRecord {
  return {
    startRow: cell.startRow,
    endRow: cell.endRow,
    startCol: cell.startCol + dcol,
    endCol: cell.endCol + dcol,
    bbox: [cell.bbox[0] + dx, cell.bbox[1], cell.bbox[2] + dx, cell.bbox[3]],
    empty: cell.empty,
  };
}

function deleteColumns(doc: TableDoc, cMin: number, cMax: number): TableDoc {
  const { record, image } = doc;
  const nCols = record.columns.length;
  if (!(cMin >= 1 && cMin <= cMax && cMax < nCols)) {
    throw new Error(`deletion block [${cMin}, ${cMax}] out of range`);
  }
  const xMin = record.columns[cMin].x1;
  const xMax = record.columns[cMax].x2;
  const w = xMax - xMin;
  const k = cMax - cMin + 1;

  const columns = [
    ...record.columns.slice(0, cMin),
    ...record.columns.slice(cMax + 1).map((c) => ({ x1: c.x1 - w, x2: c.x2 - w })),
  ];
  const cells: CellRecord[] = [];
  for (const cell of record.cells) {
    if (cell.endCol < cMin) cells.push(cell);
    else if (cell.startCol > cMax) cells.push(shiftCell(cell, -k, -w));
    else if (!(cell.startCol >= cMin && cell.endCol <= cMax)) {
      throw new Error("deletion block is not convex against this document");
    }
  }
  return {
    record: {
      id: record.id,
      imageWidth: record.imageWidth - w,
      imageHeight: record.imageHeight,
      columns,
      rows: record.rows,
      cells,
    },
    image: copyColumnRanges(image, [[0, xMin], [xMax, image.width]]),
  };
}

function replicateColumns(doc: TableDoc, cMin: number, cMax: number, d: number): TableDoc {
  const { record, image } = doc;
  const nCols = record.columns.length;
  if (!(cMin >= 1 && cMin <= cMax && cMax < nCols)) {
    throw new Error(`replication block [${cMin}, ${cMax}] out of range`);
  }
  if (!(d >= 1 && d <= nCols)) throw new Error(`target index ${d} out of range`);
  const xMin = record.columns[cMin].x1;
  const xMax = record.columns[cMax].x2;
  const w = xMax - xMin;
  const k = cMax - cMin + 1;
  const xDst = d < nCols ? record.columns[d].x1 : record.columns[nCols - 1].x2;
  const copyDx = xDst - xMin;
  const copyDcol = d - cMin;

  const columns = [
    ...record.columns.slice(0, d),
    ...record.columns.slice(cMin, cMax + 1).map((c) => ({ x1: c.x1 + copyDx, x2: c.x2 + copyDx })),
    ...record.columns.slice(d).map((c) => ({ x1: c.x1 + w, x2: c.x2 + w })),
  ];

  // Existing cells keep their order; copies are appended in source order.
  const cells: CellRecord[] = [];
  for (const cell of record.cells) {
    if (cell.endCol < d) cells.push(cell);
    else if (cell.startCol >= d) cells.push(shiftCell(cell, k, w));
    else throw new Error("target index splits a spanning cell in this document");
  }
  for (const cell of record.cells) {
    if (cell.startCol >= cMin && cell.endCol <= cMax) {
      cells.push(shiftCell(cell, copyDcol, copyDx));
    }
  }

  return {
    record: {
      id: record.id,
      imageWidth: record.imageWidth + w,
      imageHeight: record.imageHeight,
      columns,
      rows: record.rows,
      cells,
    },
    image: copyColumnRanges(image, [[0, xDst], [xMin, xMax], [xDst, image.width]]),
  };
}

export function replayRecord(doc: TableDoc, op: OpRecord): TableDoc {
  const isRow = op.kind === "row-delete" || op.kind === "row-replicate";
  const work = isRow ? transposeDoc(doc) : doc;
  let result: TableDoc;
  if (op.kind === "row-delete" || op.kind === "column-delete") {
    result = deleteColumns(work, op.cMin, op.cMax);
  } else {
    if (op.d === undefined) throw new Error("replication record is missing its target index");
    result = replicateColumns(work, op.cMin, op.cMax, op.d);
  }
  return isRow ? transposeDoc(result) : result;
}

export function replayPath(root: TableDoc, path: OpRecord[]): TableDoc {
  let doc = root;
  for (const op of path) {
    doc = replayRecord(doc, op);
  }
  return doc;
}

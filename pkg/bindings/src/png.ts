/**
 * Minimal PNG reader for the images the core toolkit emits: 8-bit depth,
 * grayscale (color type 0) or RGB (color type 2), non-interlaced. Unknown
 * ancillary chunks are skipped. No dependencies beyond node:zlib.
 */

import { inflateSync } from "node:zlib";

export interface RawImage {
  width: number;
  height: number;
  channels: 1 | 3;
  /** Row-major, channel-interleaved. */
  data: Uint8Array;
}

const SIGNATURE = [0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a];

export function decodePng(buffer: Uint8Array): RawImage {
  for (let i = 0; i < SIGNATURE.length; i++) {
    if (buffer[i] !== SIGNATURE[i]) throw new Error("not a PNG file");
  }
  const view = new DataView(buffer.buffer, buffer.byteOffset, buffer.byteLength);

  let width = 0;
  let height = 0;
  let channels: 1 | 3 = 1;
  const idatParts: Uint8Array[] = [];
  let offset = 8;
  while (offset < buffer.length) {
    const length = view.getUint32(offset);
    const type = String.fromCharCode(
      buffer[offset + 4], buffer[offset + 5], buffer[offset + 6], buffer[offset + 7],
    );
    const dataStart = offset + 8;
    if (type === "IHDR") {
      width = view.getUint32(dataStart);
      height = view.getUint32(dataStart + 4);
      const bitDepth = buffer[dataStart + 8];
      const colorType = buffer[dataStart + 9];
      const interlace = buffer[dataStart + 12];
      if (bitDepth !== 8) throw new Error(`unsupported bit depth ${bitDepth}`);
      if (colorType === 0) channels = 1;
      else if (colorType === 2) channels = 3;
      else throw new Error(`unsupported color type ${colorType}`);
      if (interlace !== 0) throw new Error("interlaced PNG not supported");
    } else if (type === "IDAT") {
      idatParts.push(buffer.subarray(dataStart, dataStart + length));
    } else if (type === "IEND") {
      break;
    }
    offset = dataStart + length + 4; // skip CRC
  }
  if (width === 0 || height === 0) throw new Error("PNG missing IHDR");

  const compressed = Buffer.concat(idatParts.map((p) => Buffer.from(p)));
  const raw = inflateSync(compressed);
  const stride = width * channels;
  if (raw.length !== (stride + 1) * height) {
    throw new Error(`unexpected PNG payload size ${raw.length}`);
  }

  const out = new Uint8Array(stride * height);
  const bpp = channels;
  for (let y = 0; y < height; y++) {
    const filter = raw[y * (stride + 1)];
    const line = raw.subarray(y * (stride + 1) + 1, (y + 1) * (stride + 1));
    const row = out.subarray(y * stride, (y + 1) * stride);
    const prev = y > 0 ? out.subarray((y - 1) * stride, y * stride) : null;
    switch (filter) {
      case 0:
        row.set(line);
        break;
      case 1: // Sub
        for (let x = 0; x < stride; x++) {
          row[x] = (line[x] + (x >= bpp ? row[x - bpp] : 0)) & 0xff;
        }
        break;
      case 2: // Up
        for (let x = 0; x < stride; x++) {
          row[x] = (line[x] + (prev ? prev[x] : 0)) & 0xff;
        }
        break;
      case 3: // Average
        for (let x = 0; x < stride; x++) {
          const left = x >= bpp ? row[x - bpp] : 0;
          const up = prev ? prev[x] : 0;
          row[x] = (line[x] + ((left + up) >> 1)) & 0xff;
        }
        break;
      case 4: // Paeth
        for (let x = 0; x < stride; x++) {
          const left = x >= bpp ? row[x - bpp] : 0;
          const up = prev ? prev[x] : 0;
          const upLeft = prev && x >= bpp ? prev[x - bpp] : 0;
          row[x] = (line[x] + paeth(left, up, upLeft)) & 0xff;
        }
        break;
      default:
        throw new Error(`unknown PNG filter ${filter}`);
    }
  }
  return { width, height, channels, data: out };
}

function paeth(a: number, b: number, c: number): number {
  const p = a + b - c;
  const pa = Math.abs(p - a);
  const pb = Math.abs(p - b);
  const pc = Math.abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

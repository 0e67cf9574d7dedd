/**
 * Binding fidelity: draw sequences through the binding must match the core
 * CLI's training streams byte for byte, for 3 seeds x 100 draws per table,
 * and every returned annotation record must validate.
 */

import { readFileSync, readdirSync } from "node:fs";
import { join } from "node:path";

import { beforeAll, describe, expect, it } from "vitest";

import { decodePng } from "../src/png";
import { serializeAnnotationRecord, validateRecord } from "../src/model";
import { categorize, categoryLabel } from "../src/pipeline";
import { BoundSampler, openDataset, nextSample, close, safeStem } from "../src/sampler";

const FIXTURES = join(__dirname, "..", ".fixtures");
const MANIFEST = join(FIXTURES, "data", "manifest.json");
const CACHES = join(FIXTURES, "caches");

interface Meta {
  seeds: number[];
  draws: number;
  sigma: number;
  pAugment: number;
}

let meta: Meta;

beforeAll(() => {
  meta = JSON.parse(readFileSync(join(FIXTURES, "meta.json"), "utf-8")) as Meta;
});

describe("PNG decoding", () => {
  it("decodes the reference rasters exactly", () => {
    const expected = JSON.parse(readFileSync(join(FIXTURES, "png", "expected.json"), "utf-8"));
    for (const name of ["gray", "rgb"] as const) {
      const image = decodePng(readFileSync(join(FIXTURES, "png", `${name}.png`)));
      expect(image.width).toBe(expected[name].width);
      expect(image.height).toBe(expected[name].height);
      expect(image.channels).toBe(expected[name].channels);
      expect(Array.from(image.data)).toEqual(expected[name].data);
    }
  });
});

describe("openDataset", () => {
  it("creates one sampler per training table", () => {
    const samplers = openDataset(MANIFEST, CACHES, { seed: 1 });
    expect(samplers.map((s) => s.tableId)).toEqual(["p0_t0", "p1_t0", "p2_t0"]);
    samplers.forEach(close);
  });

  it("raises a table-named error for a missing cache", () => {
    expect(() => openDataset(MANIFEST, join(FIXTURES, "no-such-dir"))).toThrowError(/p0_t0/);
  });

  it("refuses draws after close", () => {
    const samplers = openDataset(MANIFEST, CACHES, { seed: 1 });
    const sampler = samplers[0];
    close(sampler);
    expect(() => nextSample(sampler)).toThrowError(/closed/);
    samplers.slice(1).forEach(close);
  });
});

describe("draw-sequence fidelity against the core CLI", () => {
  it("matches every sampled annotation and raster for 3 seeds x 100 draws", () => {
    for (const seed of meta.seeds) {
      const sampleDir = join(FIXTURES, "samples", `s${seed}`);
      const samplers = openDataset(MANIFEST, CACHES, {
        seed,
        sigma: meta.sigma,
        pAugment: meta.pAugment,
      });
      for (const sampler of samplers) {
        const stem = safeStem(sampler.tableId);
        for (let i = 0; i < meta.draws; i++) {
          const draw = nextSample(sampler);
          const index = String(i).padStart(3, "0");

          const expectedJson = readFileSync(join(sampleDir, `${stem}-${index}.json`), "utf-8");
          expect(serializeAnnotationRecord(draw.annotation)).toBe(expectedJson);

          const expectedImage = decodePng(readFileSync(join(sampleDir, `${stem}-${index}.png`)));
          expect(draw.image.width).toBe(expectedImage.width);
          expect(draw.image.height).toBe(expectedImage.height);
          expect(draw.image.channels).toBe(expectedImage.channels);
          expect(Buffer.from(draw.image.data).equals(Buffer.from(expectedImage.data))).toBe(true);
        }
      }
      samplers.forEach(close);
    }
  });

  it("produces augmented (non-original) draws somewhere in the run", () => {
    const samplers = openDataset(MANIFEST, CACHES, { seed: meta.seeds[0] });
    let augmented = 0;
    for (const sampler of samplers) {
      const original = readFileSync(
        join(FIXTURES, "data", `${sampler.tableId}.json`),
        "utf-8",
      );
      for (let i = 0; i < 50; i++) {
        if (serializeAnnotationRecord(nextSample(sampler).annotation) !== original) augmented++;
      }
    }
    expect(augmented).toBeGreaterThan(0);
    samplers.forEach(close);
  });
});

describe("returned records", () => {
  it("pass validation on a 1000+ draw sweep", () => {
    // 3 seeds x 112 draws x 3 tables; the streams run past the fixture
    // horizon, which needs no reference files.
    const perSampler = 112;
    let sweep = 0;
    for (const seed of meta.seeds) {
      const samplers = openDataset(MANIFEST, CACHES, { seed });
      for (const sampler of samplers) {
        for (let i = 0; i < perSampler; i++) {
          const draw = nextSample(sampler);
          expect(validateRecord(draw.annotation, draw.image)).toEqual([]);
          expect(draw.image.width).toBe(
            draw.annotation.columns[draw.annotation.columns.length - 1].x2,
          );
          sweep++;
        }
      }
      samplers.forEach(close);
    }
    expect(sweep).toBeGreaterThanOrEqual(1000);
  });

  it("yields the original pair under pAugment = 0", () => {
    const samplers = openDataset(MANIFEST, CACHES, { seed: 5, pAugment: 0 });
    for (const sampler of samplers) {
      const originalJson = readFileSync(
        join(FIXTURES, "data", `${sampler.tableId}.json`),
        "utf-8",
      );
      const originalImage = decodePng(
        readFileSync(join(FIXTURES, "data", `${sampler.tableId}.png`)),
      );
      for (let i = 0; i < 10; i++) {
        const draw = nextSample(sampler);
        expect(serializeAnnotationRecord(draw.annotation)).toBe(originalJson);
        expect(Buffer.from(draw.image.data).equals(Buffer.from(originalImage.data))).toBe(true);
      }
    }
    samplers.forEach(close);
  });

  it("is identical across two independently opened datasets (restart determinism)", () => {
    const first = openDataset(MANIFEST, CACHES, { seed: 77 });
    const second = openDataset(MANIFEST, CACHES, { seed: 77 });
    for (let s = 0; s < first.length; s++) {
      for (let i = 0; i < 10; i++) {
        const a = nextSample(first[s]);
        const b = nextSample(second[s]);
        expect(serializeAnnotationRecord(a.annotation)).toBe(
          serializeAnnotationRecord(b.annotation),
        );
        expect(Buffer.from(a.image.data).equals(Buffer.from(b.image.data))).toBe(true);
      }
    }
    [...first, ...second].forEach(close);
  });
});

describe("category grid", () => {
  it("matches the published anchors", () => {
    expect(categoryLabel(categorize(4, 5))).toBe("B2");
    expect(categoryLabel(categorize(20, 12))).toBe("E4");
    expect(categoryLabel(categorize(1, 1))).toBe("A1");
  });
});

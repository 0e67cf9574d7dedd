/**
 * Deterministic training-draw sampler over a structaug dataset.
 *
 * Consumes only the published file formats - manifest, canonical annotation
 * JSON, PNG rasters and node-cache files - and reproduces the core
 * toolkit's training streams bit for bit: same SplitMix64 streams, same
 * draw order, same replay arithmetic (docs/formats.md §8).
 */

import { readFileSync } from "node:fs";
import { dirname, join, resolve } from "node:path";

import { AnnotationRecord, TableDoc, parseAnnotationRecord, validateRecord } from "./model";
import { OpRecord, replayPath } from "./ops";
import {
  buildDistribution,
  categorize,
  categoryFromLabel,
  drawCategory,
  frequencyGrid,
  gaussianGrid,
} from "./pipeline";
import { RawImage, decodePng } from "./png";
import { DOMAIN_STREAM, Rng, deriveSeed, fnv1a64 } from "./rng";

export interface ManifestEntry {
  id: string;
  image: string;
  annotation: string;
  split?: "train" | "test" | "val";
}

export interface Sample {
  image: RawImage;
  annotation: AnnotationRecord;
}

export interface OpenOptions {
  sigma?: number;
  pAugment?: number;
  seed?: bigint | number;
}

/** Table-id to path-safe file stem, as the CLI writes it. */
export function safeStem(tableId: string): string {
  const safe = tableId.replace(/[^A-Za-z0-9._-]/g, "_");
  if (safe === tableId) return safe;
  const hash = fnv1a64(new TextEncoder().encode(tableId)).toString(16).padStart(16, "0");
  return `${safe}-${hash}`;
}

export function cacheFilename(tableId: string): string {
  return `${safeStem(tableId)}.nodes.json`;
}

export function loadManifest(manifestPath: string): ManifestEntry[] {
  const entries = JSON.parse(readFileSync(manifestPath, "utf-8")) as ManifestEntry[];
  const ids = new Set<string>();
  for (const entry of entries) {
    if (ids.has(entry.id)) throw new Error(`duplicate table id in manifest: ${entry.id}`);
    ids.add(entry.id);
  }
  return entries;
}

function trainEntries(entries: ManifestEntry[]): ManifestEntry[] {
  const anySplit = entries.some((e) => e.split !== undefined && e.split !== null);
  return anySplit ? entries.filter((e) => e.split === "train") : entries;
}

function loadDoc(baseDir: string, entry: ManifestEntry): TableDoc {
  const record = parseAnnotationRecord(
    readFileSync(resolve(baseDir, entry.annotation), "utf-8"),
  );
  const image = decodePng(readFileSync(resolve(baseDir, entry.image)));
  if (image.width !== record.imageWidth || image.height !== record.imageHeight) {
    throw new Error(`image and annotation dimensions disagree for ${entry.id}`);
  }
  return { record, image };
}

interface CachedNode {
  path: OpRecord[];
  depth: number;
  category: string;
}

interface CacheFile {
  rootId: string;
  seed: number;
  empty: boolean;
  nodes: CachedNode[];
}

/**
 * One per-table draw stream. Thread-confined: a sampler has exactly one
 * consumer, and `next()` advances its private RNG.
 */
export class BoundSampler {
  readonly tableId: string;
  private readonly original: TableDoc;
  private readonly nodeDocs: (TableDoc | null)[];
  private readonly nodePaths: OpRecord[][];
  private readonly groups: Map<number, number[]>;
  private readonly p: Float64Array | null;
  private readonly pAugment: number;
  private readonly rng: Rng;
  private open = true;

  constructor(
    doc: TableDoc,
    nodes: CachedNode[],
    fg: Float64Array,
    sigma: number,
    pAugment: number,
    streamSeed: bigint,
  ) {
    this.tableId = doc.record.id;
    this.original = doc;
    this.nodePaths = nodes.map((n) => n.path);
    this.nodeDocs = nodes.map(() => null);
    this.groups = new Map();
    nodes.forEach((node, i) => {
      const cat = categoryFromLabel(node.category);
      const group = this.groups.get(cat);
      if (group) group.push(i);
      else this.groups.set(cat, [i]);
    });
    const fi = frequencyGrid(nodes.map((n) => categoryFromLabel(n.category)));
    const center = categorize(doc.record.rows.length, doc.record.columns.length);
    this.p = nodes.length > 0 ? buildDistribution(gaussianGrid(center, sigma), fg, fi) : null;
    this.pAugment = pAugment;
    this.rng = new Rng(streamSeed);
  }

  /** Materialize node i, replaying its path on first use. */
  private node(i: number): TableDoc {
    let doc = this.nodeDocs[i];
    if (doc === null) {
      doc = replayPath(this.original, this.nodePaths[i]);
      this.nodeDocs[i] = doc;
    }
    return doc;
  }

  next(): Sample {
    if (!this.open) throw new Error(`sampler for ${this.tableId} is closed`);
    const u = this.rng.random();
    let doc = this.original;
    if (this.p !== null && u < this.pAugment) {
      const category = drawCategory(this.p, this.rng.random());
      const group = this.groups.get(category);
      if (!group || group.length === 0) {
        throw new Error(`distribution put mass on empty category ${category}`);
      }
      doc = this.node(group[this.rng.below(group.length)]);
    }
    // Copy at the boundary: callers may scribble on the buffers.
    return {
      image: { ...doc.image, data: doc.image.data.slice() },
      annotation: JSON.parse(JSON.stringify(doc.record)) as AnnotationRecord,
    };
  }

  close(): void {
    this.open = false;
  }

  get isOpen(): boolean {
    return this.open;
  }
}

/**
 * Open one sampler per training table. `cacheDir` must hold a node cache
 * for every training table (run `structaug explore` first).
 */
export function openDataset(
  manifestPath: string,
  cacheDir: string,
  options: OpenOptions = {},
): BoundSampler[] {
  const sigma = options.sigma ?? 1.0;
  const pAugment = options.pAugment ?? 0.5;
  const seed = options.seed ?? 0;
  const baseDir = dirname(resolve(manifestPath));
  const entries = trainEntries(loadManifest(manifestPath));

  const docs = entries.map((entry) => loadDoc(baseDir, entry));
  const fg = frequencyGrid(
    docs.map((doc) => categorize(doc.record.rows.length, doc.record.columns.length)),
  );

  return entries.map((entry, i) => {
    const cachePath = join(cacheDir, cacheFilename(entry.id));
    let cache: CacheFile;
    try {
      cache = JSON.parse(readFileSync(cachePath, "utf-8")) as CacheFile;
    } catch (err) {
      throw new Error(`missing or unreadable node cache for table ${entry.id}: ${err}`);
    }
    if (cache.rootId !== entry.id) {
      throw new Error(`cache ${cachePath} belongs to ${cache.rootId}, not ${entry.id}`);
    }
    return new BoundSampler(
      docs[i],
      cache.nodes,
      fg,
      sigma,
      pAugment,
      deriveSeed(seed, DOMAIN_STREAM, entry.id),
    );
  });
}

export function nextSample(sampler: BoundSampler): Sample {
  return sampler.next();
}

export function close(sampler: BoundSampler): void {
  sampler.close();
}

export { validateRecord };

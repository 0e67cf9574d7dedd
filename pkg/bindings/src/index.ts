export { Rng, deriveSeed, fnv1a64, mix64, DOMAIN_STREAM, DOMAIN_EXPLORE, DOMAIN_SPLIT } from "./rng";
export { RawImage, decodePng } from "./png";
export {
  AnnotationRecord,
  CellRecord,
  ColumnBox,
  RowBox,
  TableDoc,
  parseAnnotationRecord,
  serializeAnnotationRecord,
  validateRecord,
} from "./model";
export { OpKind, OpRecord, replayPath, replayRecord, transposeDoc } from "./ops";
export {
  buildDistribution,
  categorize,
  categoryFromLabel,
  categoryLabel,
  drawCategory,
  frequencyGrid,
  gaussianGrid,
  pinnedExp,
} from "./pipeline";
export {
  BoundSampler,
  ManifestEntry,
  OpenOptions,
  Sample,
  cacheFilename,
  close,
  loadManifest,
  nextSample,
  openDataset,
  safeStem,
} from "./sampler";

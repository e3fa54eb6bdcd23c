import { existsSync, writeFileSync } from "node:fs";
import { basename, dirname, join } from "node:path";

import { Backbone, getBackbone } from "./backbone.js";
import { writeBlob } from "./blob.js";
import { ExtractError } from "./errors.js";
import { decodeImage } from "./image.js";
import { LayoutName, RawObject, walkLayout } from "./layout.js";

export interface ExtractionConfig {
  root: string;
  out: string;
  layout?: LayoutName;
  /** Keep every Nth frame of each object, lexicographic order, default 10. */
  stride?: number;
  backbone?: string;
  /** Sessions forming the test split under the core50 layout. */
  testSessions?: number[];
  name?: string;
  blobName?: string;
  force?: boolean;
  log?: (message: string) => void;
}

export interface ExtractionSummary {
  manifestPath: string;
  blobPath: string;
  digest: string;
  featureDim: number;
  trainObjects: number;
  testObjects: number;
  views: number;
  skippedImages: number;
}

interface ManifestObject {
  id: string;
  label: string;
  split: string;
  offset: number;
  count: number;
}

function strideFrames(frames: string[], stride: number): string[] {
  const kept: string[] = [];
  for (let i = 0; i < frames.length; i += stride) kept.push(frames[i]);
  return kept;
}

function embedObject(
  backbone: Backbone,
  obj: RawObject,
  stride: number,
  log: (m: string) => void,
): { rows: Float32Array[]; skipped: number } {
  const rows: Float32Array[] = [];
  let skipped = 0;
  for (const frame of strideFrames(obj.frames, stride)) {
    try {
      rows.push(backbone.embed(decodeImage(frame)));
    } catch (err) {
      if (err instanceof ExtractError) throw err;
      skipped += 1;
      log(`warning: skipping unreadable image ${frame}: ${(err as Error).message}`);
    }
  }
  if (rows.length === 0) {
    throw new ExtractError("data", `${obj.id}: no readable frames`);
  }
  return { rows, skipped };
}

/**
 * Walk an image tree, embed every kept frame with a fixed backbone, and
 * write the manifest + feature blob pair. Objects appear in walk order and
 * embeddings are written in manifest order, so identical inputs always
 * produce identical files; the blob digest is logged for that check.
 */
export function extract(cfg: ExtractionConfig): ExtractionSummary {
  const log = cfg.log ?? ((m) => console.error(m));
  const stride = cfg.stride ?? 10;
  if (!Number.isInteger(stride) || stride < 1) {
    throw new ExtractError("usage", `stride must be a positive integer, got ${cfg.stride}`);
  }
  const backbone = getBackbone(cfg.backbone ?? "conv512");
  const layout = cfg.layout ?? "core50";
  const testSessions = new Set(cfg.testSessions ?? [3, 7, 10]);
  const blobName = cfg.blobName ?? "features.bin";
  const blobPath = join(dirname(cfg.out), blobName);
  if (!cfg.force) {
    for (const path of [cfg.out, blobPath]) {
      if (existsSync(path)) {
        throw new ExtractError("usage", `${path} exists; pass force to overwrite`);
      }
    }
  }

  const objects = walkLayout(layout, cfg.root, testSessions);
  const manifestObjects: ManifestObject[] = [];
  const rows: Float32Array[] = [];
  let skippedImages = 0;
  for (const obj of objects) {
    const { rows: objRows, skipped } = embedObject(backbone, obj, stride, log);
    skippedImages += skipped;
    manifestObjects.push({
      id: obj.id,
      label: obj.label,
      split: obj.split,
      offset: rows.length,
      count: objRows.length,
    });
    rows.push(...objRows);
  }

  const digest = writeBlob(blobPath, backbone.dim, rows);
  const manifest = {
    name: cfg.name ?? basename(cfg.root),
    feature_dim: backbone.dim,
    blob: blobName,
    objects: manifestObjects,
  };
  writeFileSync(cfg.out, JSON.stringify(manifest, null, 1) + "\n", "utf8");

  const summary: ExtractionSummary = {
    manifestPath: cfg.out,
    blobPath,
    digest,
    featureDim: backbone.dim,
    trainObjects: manifestObjects.filter((o) => o.split === "train").length,
    testObjects: manifestObjects.filter((o) => o.split === "test").length,
    views: rows.length,
    skippedImages,
  };
  if (skippedImages > 0) log(`skipped ${skippedImages} unreadable image(s)`);
  log(`wrote ${summary.manifestPath} and ${summary.blobPath}`);
  log(`blob sha256: ${digest}`);
  return summary;
}

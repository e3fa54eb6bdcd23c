import { spawnSync } from "node:child_process";
import { mkdirSync, mkdtempSync, readFileSync, statSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { beforeAll, describe, expect, it } from "vitest";

import { getBackbone } from "../src/backbone.js";
import { HEADER_BYTES } from "../src/blob.js";
import { ExtractError } from "../src/errors.js";
import { extract, ExtractionSummary } from "../src/extract.js";
import { decodeImage } from "../src/image.js";
import { buildFlatTree, buildSessionTree, writePng } from "./helpers.js";

function tmp(): string {
  return mkdtempSync(join(tmpdir(), "extract-"));
}

const quiet = () => {};

function validateWithEngine(manifestPath: string) {
  const proc = spawnSync("focal", ["validate", manifestPath], { encoding: "utf8" });
  if (proc.error) throw proc.error;
  expect(proc.status, proc.stderr).toBe(0);
}

describe("session-tree export", () => {
  let root: string;
  let outDir: string;
  let summary: ExtractionSummary;

  beforeAll(() => {
    root = tmp();
    buildSessionTree(root); // 11 sessions x 50 objects x 2 frames
    outDir = tmp();
    summary = extract({
      root,
      out: join(outDir, "core.json"),
      layout: "core50",
      log: quiet,
    });
  });

  it("exports 400 train and 150 test object instances at dim 512", () => {
    expect(summary.trainObjects).toBe(400);
    expect(summary.testObjects).toBe(150);
    expect(summary.featureDim).toBe(512);
    expect(summary.views).toBe(550); // stride 10 keeps frame 0 of 2
    expect(summary.skippedImages).toBe(0);
  });

  it("assigns exactly sessions 3/7/10 to the test split", () => {
    const manifest = JSON.parse(readFileSync(summary.manifestPath, "utf8"));
    expect(manifest.feature_dim).toBe(512);
    expect(manifest.objects).toHaveLength(550);
    for (const obj of manifest.objects) {
      const session = Number(obj.id.slice(1, 3));
      expect(obj.split).toBe([3, 7, 10].includes(session) ? "test" : "train");
    }
  });

  it("writes contiguous row ranges and a correctly sized blob", () => {
    const manifest = JSON.parse(readFileSync(summary.manifestPath, "utf8"));
    let expectedOffset = 0;
    for (const obj of manifest.objects) {
      expect(obj.offset).toBe(expectedOffset);
      expect(obj.count).toBeGreaterThan(0);
      expectedOffset += obj.count;
    }
    expect(expectedOffset).toBe(550);
    expect(statSync(summary.blobPath).size).toBe(HEADER_BYTES + 550 * 512 * 4);
  });

  it("passes the engine's validate command", () => {
    validateWithEngine(summary.manifestPath);
  });

  it("reproduces the same digest on a second run", () => {
    const again = extract({
      root,
      out: join(tmp(), "core.json"),
      layout: "core50",
      log: quiet,
    });
    expect(again.digest).toBe(summary.digest);
  });
});

describe("stride and view order", () => {
  it("keeps every Nth frame in lexicographic order", () => {
    const root = tmp();
    buildSessionTree(root, { sessions: 1, objects: 1, frames: 25 });
    const out = join(tmp(), "one.json");
    const summary = extract({ root, out, layout: "core50", stride: 10, log: quiet });
    expect(summary.views).toBe(3); // frames 0, 10, 20

    const manifest = JSON.parse(readFileSync(out, "utf8"));
    expect(manifest.objects).toEqual([
      { id: "s01_o01", label: "category01", split: "train", offset: 0, count: 3 },
    ]);

    // blob rows must be the embeddings of exactly those frames
    const backbone = getBackbone("conv512");
    const blob = readFileSync(summary.blobPath);
    const frameName = (f: number) => `C_01_01_${String(f).padStart(3, "0")}.png`;
    [0, 10, 20].forEach((frame, row) => {
      const expected = backbone.embed(decodeImage(join(root, "s1", "o1", frameName(frame))));
      for (let j = 0; j < 512; j++) {
        expect(blob.readFloatLE(HEADER_BYTES + (row * 512 + j) * 4)).toBe(expected[j]);
      }
    });
  });
});

describe("flat-folders export", () => {
  it("exports and validates a split/label/object tree", () => {
    const root = tmp();
    buildFlatTree(root);
    const out = join(tmp(), "flat.json");
    const summary = extract({ root, out, layout: "flat-folders", stride: 1, log: quiet });
    expect(summary.trainObjects).toBe(4);
    expect(summary.testObjects).toBe(2);
    expect(summary.views).toBe(4 * 3 + 2 * 2);
    validateWithEngine(out);
  });
});

describe("failure handling", () => {
  it("skips unreadable images but keeps the object", () => {
    const root = tmp();
    const dir = join(root, "train", "mug", "a");
    mkdirSync(dir, { recursive: true });
    writePng(join(dir, "f0.png"), 8, 8, () => [1, 2, 3]);
    writeFileSync(join(dir, "f1.png"), "not a png at all");
    writePng(join(dir, "f2.png"), 8, 8, () => [9, 9, 9]);

    const warnings: string[] = [];
    const summary = extract({
      root,
      out: join(tmp(), "d.json"),
      layout: "flat-folders",
      stride: 1,
      log: (m) => warnings.push(m),
    });
    expect(summary.skippedImages).toBe(1);
    expect(summary.views).toBe(2);
    expect(warnings.some((w) => w.includes("f1.png"))).toBe(true);
  });

  it("fails loudly when an object has no readable frames", () => {
    const root = tmp();
    const dir = join(root, "train", "mug", "a");
    mkdirSync(dir, { recursive: true });
    writeFileSync(join(dir, "f0.png"), "garbage");
    expect(() =>
      extract({ root, out: join(tmp(), "d.json"), layout: "flat-folders", log: quiet }),
    ).toThrow(/no readable frames/);
  });

  it("refuses to overwrite outputs without force", () => {
    const root = tmp();
    buildFlatTree(root);
    const out = join(tmp(), "d.json");
    extract({ root, out, layout: "flat-folders", log: quiet });
    expect(() => extract({ root, out, layout: "flat-folders", log: quiet })).toThrow(/force/);
    const again = extract({ root, out, layout: "flat-folders", force: true, log: quiet });
    expect(again.trainObjects).toBe(4);
  });

  it("types stride and layout errors as usage", () => {
    const root = tmp();
    buildFlatTree(root);
    try {
      extract({ root, out: join(tmp(), "d.json"), layout: "flat-folders", stride: 0, log: quiet });
      expect.unreachable();
    } catch (err) {
      expect((err as ExtractError).kind).toBe("usage");
    }
  });
});

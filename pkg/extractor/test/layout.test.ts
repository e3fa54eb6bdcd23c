import { mkdirSync, mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { ExtractError } from "../src/errors.js";
import { walkCore50, walkFlatFolders } from "../src/layout.js";
import { buildFlatTree, buildSessionTree } from "./helpers.js";

const TEST_SESSIONS = new Set([3, 7, 10]);

function tmp(): string {
  return mkdtempSync(join(tmpdir(), "extractor-"));
}

describe("session layout", () => {
  it("splits instances by session with five objects per category", () => {
    const root = tmp();
    buildSessionTree(root, { sessions: 11, objects: 50, frames: 1 });
    const objects = walkCore50(root, TEST_SESSIONS);
    expect(objects).toHaveLength(550);
    expect(objects.filter((o) => o.split === "train")).toHaveLength(400);
    expect(objects.filter((o) => o.split === "test")).toHaveLength(150);
    for (const obj of objects.filter((o) => o.split === "test")) {
      expect(["s03", "s07", "s10"]).toContain(obj.id.slice(0, 3));
    }
    const labels = new Set(objects.map((o) => o.label));
    expect([...labels].sort()).toEqual(
      Array.from({ length: 10 }, (_, i) => `category${String(i + 1).padStart(2, "0")}`),
    );
    const o23 = objects.find((o) => o.id === "s01_o23");
    expect(o23?.label).toBe("category05"); // objects 21..25 form category 5
  });

  it("orders frames lexicographically", () => {
    const root = tmp();
    buildSessionTree(root, { sessions: 1, objects: 1, frames: 12 });
    const [obj] = walkCore50(root, TEST_SESSIONS);
    const names = obj.frames.map((f) => f.split("/").pop());
    expect(names).toEqual([...names].sort());
    expect(names).toHaveLength(12);
  });

  it("walks partial trees, rejects non-session roots", () => {
    const root = tmp();
    buildSessionTree(root, { sessions: 2, objects: 3, frames: 1 });
    const objects = walkCore50(root, TEST_SESSIONS);
    expect(objects).toHaveLength(6);
    expect(objects.every((o) => o.split === "train")).toBe(true);

    const empty = tmp();
    expect(() => walkCore50(empty, TEST_SESSIONS)).toThrow(ExtractError);
    expect(() => walkCore50(empty, TEST_SESSIONS)).toThrow(/not a core50 tree/);
  });

  it("rejects an object directory without frames", () => {
    const root = tmp();
    buildSessionTree(root, { sessions: 1, objects: 2, frames: 1 });
    mkdirSync(join(root, "s1", "o3"));
    expect(() => walkCore50(root, TEST_SESSIONS)).toThrow(/no image frames/);
  });
});

describe("flat-folders layout", () => {
  it("walks split/label/object trees", () => {
    const root = tmp();
    buildFlatTree(root);
    const objects = walkFlatFolders(root);
    expect(objects).toHaveLength(6);
    expect(objects.filter((o) => o.split === "train")).toHaveLength(4);
    expect(objects.map((o) => o.id)).toContain("mug-a");
    expect(new Set(objects.map((o) => o.label))).toEqual(new Set(["mug", "cup"]));
  });

  it("rejects roots without train/ or test/", () => {
    const root = tmp();
    mkdirSync(join(root, "misc"));
    expect(() => walkFlatFolders(root)).toThrow(/not a flat-folders tree/);
  });
});

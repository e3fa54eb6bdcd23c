import { readdirSync, statSync } from "node:fs";
import { join } from "node:path";

import { ExtractError } from "./errors.js";
import { isImageFile } from "./image.js";

export interface RawObject {
  id: string;
  label: string;
  split: "train" | "test";
  /** Absolute frame paths in lexicographic filename order. */
  frames: string[];
}

function listDirs(root: string): string[] {
  return readdirSync(root).filter((name) => {
    try {
      return statSync(join(root, name)).isDirectory();
    } catch {
      return false;
    }
  });
}

function listFrames(dir: string): string[] {
  const names = readdirSync(dir).filter(isImageFile).sort();
  return names.map((name) => join(dir, name));
}

const pad2 = (n: number) => String(n).padStart(2, "0");

/**
 * Session-based layout: `root/s<N>/o<M>/<frames>`. Each (session, object)
 * pair is one object instance; objects group into categories of five, and
 * the instances recorded in the given test sessions form the test split.
 */
export function walkCore50(root: string, testSessions: Set<number>): RawObject[] {
  const sessions: Array<[number, string]> = [];
  for (const name of listDirs(root)) {
    const m = /^s(\d+)$/.exec(name);
    if (m) sessions.push([Number(m[1]), name]);
  }
  if (sessions.length === 0) {
    throw new ExtractError("data", `${root}: no s<N> session directories; not a core50 tree`);
  }
  sessions.sort((a, b) => a[0] - b[0]);
  const objects: RawObject[] = [];
  for (const [session, sessionName] of sessions) {
    const sessionDir = join(root, sessionName);
    const entries: Array<[number, string]> = [];
    for (const name of listDirs(sessionDir)) {
      const m = /^o(\d+)$/.exec(name);
      if (m) entries.push([Number(m[1]), name]);
    }
    entries.sort((a, b) => a[0] - b[0]);
    for (const [objectNum, objectName] of entries) {
      const dir = join(sessionDir, objectName);
      const frames = listFrames(dir);
      if (frames.length === 0) {
        throw new ExtractError("data", `${dir}: object directory has no image frames`);
      }
      objects.push({
        id: `s${pad2(session)}_o${pad2(objectNum)}`,
        label: `category${pad2(Math.floor((objectNum - 1) / 5) + 1)}`,
        split: testSessions.has(session) ? "test" : "train",
        frames,
      });
    }
  }
  return objects;
}

/**
 * Generic layout: `root/<train|test>/<label>/<object>/<frames>`. Object ids
 * are `<label>-<object>` and must be unique across the whole tree.
 */
export function walkFlatFolders(root: string): RawObject[] {
  const splits = listDirs(root).filter((d) => d === "train" || d === "test");
  if (splits.length === 0) {
    throw new ExtractError("data", `${root}: no train/ or test/ directory; not a flat-folders tree`);
  }
  const objects: RawObject[] = [];
  const seen = new Set<string>();
  for (const split of ["train", "test"] as const) {
    if (!splits.includes(split)) continue;
    const splitDir = join(root, split);
    for (const label of listDirs(splitDir).sort()) {
      const labelDir = join(splitDir, label);
      for (const objectName of listDirs(labelDir).sort()) {
        const dir = join(labelDir, objectName);
        const frames = listFrames(dir);
        if (frames.length === 0) {
          throw new ExtractError("data", `${dir}: object directory has no image frames`);
        }
        const id = `${label}-${objectName}`;
        if (seen.has(id)) {
          throw new ExtractError("data", `duplicate object id '${id}' across splits`);
        }
        seen.add(id);
        objects.push({ id, label, split, frames });
      }
    }
  }
  return objects;
}

export const LAYOUTS = ["core50", "flat-folders"] as const;
export type LayoutName = (typeof LAYOUTS)[number];

export function walkLayout(layout: LayoutName, root: string, testSessions: Set<number>): RawObject[] {
  if (layout === "core50") return walkCore50(root, testSessions);
  if (layout === "flat-folders") return walkFlatFolders(root);
  throw new ExtractError("usage", `unknown layout '${layout}'`);
}

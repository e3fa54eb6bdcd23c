import { mkdirSync, writeFileSync } from "node:fs";
import { join } from "node:path";
import { PNG } from "pngjs";

import { DecodedImage } from "../src/image.js";

export function writePng(
  path: string,
  width: number,
  height: number,
  pixel: (x: number, y: number) => [number, number, number],
): void {
  const png = new PNG({ width, height });
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const idx = (y * width + x) * 4;
      const [r, g, b] = pixel(x, y);
      png.data[idx] = r;
      png.data[idx + 1] = g;
      png.data[idx + 2] = b;
      png.data[idx + 3] = 255;
    }
  }
  writeFileSync(path, PNG.sync.write(png));
}

export function syntheticImage(seed: number, side = 16): DecodedImage {
  const data = new Uint8Array(side * side * 4);
  for (let i = 0; i < side * side; i++) {
    data[i * 4] = (seed * 37 + i * 7) % 256;
    data[i * 4 + 1] = (seed * 101 + i * 13) % 256;
    data[i * 4 + 2] = (seed * 5 + i * 29) % 256;
    data[i * 4 + 3] = 255;
  }
  return { width: side, height: side, data };
}

const pad2 = (n: number) => String(n).padStart(2, "0");

export interface TreeOptions {
  sessions?: number;
  objects?: number;
  frames?: number;
}

/** Session-layout tree: root/s<N>/o<M>/C_<N>_<M>_<F>.png */
export function buildSessionTree(root: string, opts: TreeOptions = {}): void {
  const { sessions = 11, objects = 50, frames = 2 } = opts;
  for (let s = 1; s <= sessions; s++) {
    for (let o = 1; o <= objects; o++) {
      const dir = join(root, `s${s}`, `o${o}`);
      mkdirSync(dir, { recursive: true });
      for (let f = 0; f < frames; f++) {
        const name = `C_${pad2(s)}_${pad2(o)}_${String(f).padStart(3, "0")}.png`;
        writePng(join(dir, name), 16, 16, (x, y) => [
          (s * 17 + x * 3) % 256,
          (o * 11 + y * 5) % 256,
          (f * 29 + x + y) % 256,
        ]);
      }
    }
  }
}

/** Flat layout: root/<split>/<label>/<object>/<frames> */
export function buildFlatTree(root: string): void {
  const entries: Array<[string, string, string, number]> = [
    ["train", "mug", "a", 3],
    ["train", "mug", "b", 3],
    ["train", "cup", "a", 3],
    ["train", "cup", "b", 3],
    ["test", "mug", "c", 2],
    ["test", "cup", "c", 2],
  ];
  let salt = 0;
  for (const [split, label, object, frames] of entries) {
    const dir = join(root, split, label, object);
    mkdirSync(dir, { recursive: true });
    salt += 1;
    for (let f = 0; f < frames; f++) {
      writePng(join(dir, `frame${String(f).padStart(2, "0")}.png`), 12, 12, (x, y) => [
        (salt * 43 + f * 19 + x) % 256,
        (salt * 7 + y * 3) % 256,
        (f * 61 + x * y) % 256,
      ]);
    }
  }
}

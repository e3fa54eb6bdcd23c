import { readFileSync } from "node:fs";
import { extname } from "node:path";
import { PNG } from "pngjs";
import jpeg from "jpeg-js";

import { ExtractError } from "./errors.js";

export interface DecodedImage {
  width: number;
  height: number;
  /** RGBA, row-major, 8-bit. */
  data: Uint8Array;
}

const IMAGE_EXTENSIONS = new Set([".png", ".jpg", ".jpeg"]);

export function isImageFile(name: string): boolean {
  return IMAGE_EXTENSIONS.has(extname(name).toLowerCase());
}

/** Decode one PNG/JPEG file. Throws on anything unreadable. */
export function decodeImage(path: string): DecodedImage {
  const raw = readFileSync(path);
  const ext = extname(path).toLowerCase();
  if (ext === ".png") {
    const png = PNG.sync.read(raw);
    return { width: png.width, height: png.height, data: png.data };
  }
  if (ext === ".jpg" || ext === ".jpeg") {
    const img = jpeg.decode(raw, { useTArray: true, maxMemoryUsageInMB: 64 });
    return { width: img.width, height: img.height, data: img.data };
  }
  throw new ExtractError("data", `${path}: unsupported image type`);
}

// Standard channel statistics used by pretrained-backbone pipelines; applied
// identically to every image so the extractor stays a fixed function.
const CHANNEL_MEAN = [0.485, 0.456, 0.406];
const CHANNEL_STD = [0.229, 0.224, 0.225];

/**
 * Center-crop to a square, bilinear-resize to `side` x `side`, scale to
 * [0, 1] and normalize per channel. Returns row-major [y][x][c] float64.
 */
export function preprocess(img: DecodedImage, side: number): Float64Array {
  const cropSide = Math.min(img.width, img.height);
  const x0 = Math.floor((img.width - cropSide) / 2);
  const y0 = Math.floor((img.height - cropSide) / 2);
  const out = new Float64Array(side * side * 3);
  const scale = cropSide / side;
  for (let oy = 0; oy < side; oy++) {
    // half-pixel alignment keeps the sampling grid centered
    const sy = Math.min(Math.max((oy + 0.5) * scale - 0.5, 0), cropSide - 1);
    const yLo = Math.floor(sy);
    const yHi = Math.min(yLo + 1, cropSide - 1);
    const fy = sy - yLo;
    for (let ox = 0; ox < side; ox++) {
      const sx = Math.min(Math.max((ox + 0.5) * scale - 0.5, 0), cropSide - 1);
      const xLo = Math.floor(sx);
      const xHi = Math.min(xLo + 1, cropSide - 1);
      const fx = sx - xLo;
      for (let c = 0; c < 3; c++) {
        const p00 = img.data[((y0 + yLo) * img.width + x0 + xLo) * 4 + c];
        const p01 = img.data[((y0 + yLo) * img.width + x0 + xHi) * 4 + c];
        const p10 = img.data[((y0 + yHi) * img.width + x0 + xLo) * 4 + c];
        const p11 = img.data[((y0 + yHi) * img.width + x0 + xHi) * 4 + c];
        const top = p00 + (p01 - p00) * fx;
        const bottom = p10 + (p11 - p10) * fx;
        const value = (top + (bottom - top) * fy) / 255;
        out[(oy * side + ox) * 3 + c] = (value - CHANNEL_MEAN[c]) / CHANNEL_STD[c];
      }
    }
  }
  return out;
}

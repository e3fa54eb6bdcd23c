import { describe, expect, it } from "vitest";

import { getBackbone } from "../src/backbone.js";
import { ExtractError } from "../src/errors.js";
import { syntheticImage } from "./helpers.js";

describe("conv512 backbone", () => {
  const backbone = getBackbone("conv512");

  it("emits 512-dim float32 embeddings", () => {
    const emb = backbone.embed(syntheticImage(1));
    expect(emb).toBeInstanceOf(Float32Array);
    expect(emb).toHaveLength(512);
    expect(backbone.dim).toBe(512);
  });

  it("is a pure function of the pixels", () => {
    const a = backbone.embed(syntheticImage(7));
    const b = backbone.embed(syntheticImage(7));
    expect(Array.from(a)).toEqual(Array.from(b));
  });

  it("separates different images", () => {
    const a = backbone.embed(syntheticImage(1));
    const b = backbone.embed(syntheticImage(2));
    expect(Array.from(a)).not.toEqual(Array.from(b));
  });

  it("bounds every output in (-1, 1)", () => {
    for (const seed of [0, 3, 9]) {
      const emb = backbone.embed(syntheticImage(seed, 48));
      for (const v of emb) {
        expect(Math.abs(v)).toBeLessThan(1);
        expect(Number.isFinite(v)).toBe(true);
      }
    }
  });

  it("handles non-square inputs via center crop", () => {
    const img = syntheticImage(4, 16);
    const wide = { width: 32, height: 8, data: new Uint8Array(32 * 8 * 4).fill(128) };
    expect(backbone.embed(img)).toHaveLength(512);
    expect(backbone.embed(wide)).toHaveLength(512);
  });

  it("rejects unknown backbone ids", () => {
    expect(() => getBackbone("resnet18-pretrained")).toThrow(ExtractError);
    expect(() => getBackbone("resnet18-pretrained")).toThrow(/unknown backbone/);
  });
});

import { ExtractError } from "./errors.js";
import { DecodedImage, preprocess } from "./image.js";
import { sfc32, uniformArray } from "./rng.js";

/**
 * A fixed feature extractor: decoded image in, embedding out. Implementations
 * must be pure functions of the pixels so repeated runs produce identical
 * blobs.
 */
export interface Backbone {
  readonly id: string;
  readonly dim: number;
  readonly inputSide: number;
  embed(img: DecodedImage): Float32Array;
}

interface ConvLayer {
  cin: number;
  cout: number;
  stride: number;
  weights: Float64Array; // [cout][cin][ky][kx]
  biases: Float64Array;
}

function makeConv(next: () => number, cin: number, cout: number, stride: number): ConvLayer {
  const fanIn = cin * 9;
  const limit = Math.sqrt(6 / fanIn);
  return {
    cin,
    cout,
    stride,
    weights: uniformArray(next, cout * fanIn, limit),
    biases: new Float64Array(cout),
  };
}

/** 3x3 convolution, pad 1, optional ReLU. Input/output are [y][x][c]. */
function conv2d(
  input: Float64Array,
  side: number,
  layer: ConvLayer,
  relu: boolean,
): { out: Float64Array; side: number } {
  const { cin, cout, stride, weights, biases } = layer;
  const oside = Math.floor((side - 1) / stride) + 1;
  const out = new Float64Array(oside * oside * cout);
  for (let oy = 0; oy < oside; oy++) {
    const cy = oy * stride;
    for (let ox = 0; ox < oside; ox++) {
      const cx = ox * stride;
      for (let co = 0; co < cout; co++) {
        let acc = biases[co];
        for (let ky = -1; ky <= 1; ky++) {
          const iy = cy + ky;
          if (iy < 0 || iy >= side) continue;
          for (let kx = -1; kx <= 1; kx++) {
            const ix = cx + kx;
            if (ix < 0 || ix >= side) continue;
            const pixel = (iy * side + ix) * cin;
            const wBase = (co * cin * 3 + (ky + 1)) * 3 + (kx + 1);
            for (let ci = 0; ci < cin; ci++) {
              acc += input[pixel + ci] * weights[wBase + ci * 9];
            }
          }
        }
        out[(oy * oside + ox) * cout + co] = relu && acc < 0 ? 0 : acc;
      }
    }
  }
  return { out, side: oside };
}

/**
 * `conv512`: a small residual-style convolutional stack with fixed seeded
 * weights, 32x32 input, 512-dim output.
 *
 * A deterministic stand-in with the same interface and embedding width as a
 * pretrained 18-layer residual network's penultimate layer, for pipeline
 * runs and tests in environments without pretrained weights; any real
 * backbone drops in by implementing `Backbone`. The output nonlinearity is
 * softsign rather than tanh so every operation is plain IEEE arithmetic and
 * digests never depend on a platform's transcendental-function tables.
 */
function buildConv512(): Backbone {
  const next = sfc32(0x9e3779b9, 0x243f6a88, 0xb7e15162, 0x8aed2a6b);
  const conv1 = makeConv(next, 3, 8, 2); // 32 -> 16
  const conv2 = makeConv(next, 8, 16, 2); // 16 -> 8
  const resA = makeConv(next, 16, 16, 1); // 8 -> 8
  const resB = makeConv(next, 16, 16, 1);
  const conv3 = makeConv(next, 16, 32, 2); // 8 -> 4
  const flat = 4 * 4 * 32;
  const projection = uniformArray(next, 512 * flat, Math.sqrt(6 / flat));

  const embed = (img: DecodedImage): Float32Array => {
    let x = preprocess(img, 32);
    let side = 32;
    ({ out: x, side } = conv2d(x, side, conv1, true));
    ({ out: x, side } = conv2d(x, side, conv2, true));
    const skip = x;
    let r = conv2d(x, side, resA, true).out;
    r = conv2d(r, side, resB, false).out;
    for (let i = 0; i < r.length; i++) {
      const v = r[i] + skip[i];
      r[i] = v < 0 ? 0 : v;
    }
    ({ out: x, side } = conv2d(r, side, conv3, true));
    const emb = new Float32Array(512);
    for (let j = 0; j < 512; j++) {
      let acc = 0;
      const base = j * flat;
      for (let i = 0; i < flat; i++) acc += projection[base + i] * x[i];
      emb[j] = acc / (1 + Math.abs(acc));
    }
    return emb;
  };

  return { id: "conv512", dim: 512, inputSide: 32, embed };
}

let conv512Cache: Backbone | undefined;

export function getBackbone(id: string): Backbone {
  if (id === "conv512") {
    conv512Cache ??= buildConv512();
    return conv512Cache;
  }
  throw new ExtractError("usage", `unknown backbone '${id}' (available: conv512)`);
}

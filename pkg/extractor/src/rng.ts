/** Seeded PRNG for backbone weight material.
 *
 * sfc32 uses only integer ops and one float division, so sequences are
 * bit-identical on every platform. That is what makes blob digests stable.
 */
export function sfc32(a: number, b: number, c: number, d: number): () => number {
  return () => {
    a |= 0;
    b |= 0;
    c |= 0;
    d |= 0;
    const t = (((a + b) | 0) + d) | 0;
    d = (d + 1) | 0;
    a = b ^ (b >>> 9);
    b = (c + (c << 3)) | 0;
    c = (c << 21) | (c >>> 11);
    c = (c + t) | 0;
    return (t >>> 0) / 4294967296;
  };
}

/** Uniform values in [-limit, limit). */
export function uniformArray(next: () => number, n: number, limit: number): Float64Array {
  const out = new Float64Array(n);
  for (let i = 0; i < n; i++) out[i] = (next() * 2 - 1) * limit;
  return out;
}

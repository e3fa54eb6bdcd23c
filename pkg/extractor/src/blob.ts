import { createHash } from "node:crypto";
import { writeFileSync } from "node:fs";

/**
 * Feature blob format: magic "FOCALFT1", u32 LE dimension, u64 LE row count,
 * then count x dim float32 LE values in row-major order.
 */
export const BLOB_MAGIC = "FOCALFT1";
export const HEADER_BYTES = 20;

export function encodeBlob(dim: number, rows: Float32Array[]): Buffer {
  const count = rows.length;
  const buf = Buffer.alloc(HEADER_BYTES + count * dim * 4);
  buf.write(BLOB_MAGIC, 0, "ascii");
  buf.writeUInt32LE(dim, 8);
  buf.writeBigUInt64LE(BigInt(count), 12);
  let offset = HEADER_BYTES;
  for (const row of rows) {
    if (row.length !== dim) {
      throw new Error(`row has ${row.length} values, expected ${dim}`);
    }
    for (let i = 0; i < dim; i++, offset += 4) buf.writeFloatLE(row[i], offset);
  }
  return buf;
}

export function writeBlob(path: string, dim: number, rows: Float32Array[]): string {
  const buf = encodeBlob(dim, rows);
  writeFileSync(path, buf);
  return sha256Hex(buf);
}

export function sha256Hex(buf: Buffer): string {
  return createHash("sha256").update(buf).digest("hex");
}

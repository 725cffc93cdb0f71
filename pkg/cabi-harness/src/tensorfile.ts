/**
 * Binary tensor interchange files.
 *
 * Layout: magic "MDGT", version byte (1), rank byte, rank little-endian u32
 * dims, then product(dims) little-endian IEEE doubles. The byte order is
 * fixed on disk; this reader assumes a little-endian host (big-endian hosts
 * would need to byte-swap the payload).
 */

import { readFileSync, writeFileSync } from "fs";

import { FormatError } from "./errors";

const MAGIC = Buffer.from("MDGT", "ascii");
const VERSION = 1;
const MAX_RANK = 4;

export interface Tensor {
  dims: number[];
  data: Float64Array;
}

export function elementCount(dims: number[]): number {
  return dims.reduce((a, b) => a * b, 1);
}

export function readTensor(path: string): Tensor {
  const buf = readFileSync(path);
  if (buf.length < 4 || !buf.subarray(0, 4).equals(MAGIC)) {
    throw new FormatError(`${path}: bad magic at offset 0`);
  }
  if (buf.length < 6) {
    throw new FormatError(`${path}: truncated header`);
  }
  const version = buf[4];
  if (version !== VERSION) {
    throw new FormatError(`${path}: unknown tensor-file version ${version}`);
  }
  const rank = buf[5];
  if (rank > MAX_RANK) {
    throw new FormatError(`${path}: rank ${rank} exceeds ${MAX_RANK}`);
  }
  const header = 6 + 4 * rank;
  if (buf.length < header) {
    throw new FormatError(`${path}: truncated dims`);
  }
  const dims: number[] = [];
  for (let i = 0; i < rank; i++) {
    dims.push(buf.readUInt32LE(6 + 4 * i));
  }
  const count = elementCount(dims);
  if (buf.length !== header + 8 * count) {
    const held = Math.floor((buf.length - header) / 8);
    throw new FormatError(`${path}: payload holds ${held} of ${count} values`);
  }
  // copy into a fresh aligned buffer; the fs Buffer may sit at any offset
  const data = new Float64Array(count);
  new Uint8Array(data.buffer).set(buf.subarray(header));
  return { dims, data };
}

export function writeTensor(path: string, t: Tensor): void {
  if (t.dims.length > MAX_RANK) {
    throw new FormatError(`rank ${t.dims.length} exceeds the format limit of ${MAX_RANK}`);
  }
  const count = elementCount(t.dims);
  if (count !== t.data.length) {
    throw new FormatError(`dims imply ${count} values, data holds ${t.data.length}`);
  }
  const header = Buffer.alloc(6 + 4 * t.dims.length);
  MAGIC.copy(header, 0);
  header[4] = VERSION;
  header[5] = t.dims.length;
  t.dims.forEach((d, i) => header.writeUInt32LE(d, 6 + 4 * i));
  const payload = Buffer.from(t.data.buffer, t.data.byteOffset, 8 * count);
  writeFileSync(path, Buffer.concat([header, payload]));
}

export interface Sizes {
  nelv: number;
  lx: number;
}

export function readSizes(path: string): Sizes {
  const fields = readFileSync(path, "ascii").trim().split(/\s+/).filter(Boolean);
  if (fields.length !== 2) {
    throw new FormatError(`${path}: expected two integers, got ${fields.length} fields`);
  }
  const [nelv, lx] = fields.map(Number);
  if (!Number.isInteger(nelv) || !Number.isInteger(lx)) {
    throw new FormatError(`${path}: non-integer sizes '${fields.join(" ")}'`);
  }
  return { nelv, lx };
}

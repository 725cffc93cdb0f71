import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "fs";
import { tmpdir } from "os";
import { join } from "path";

import { afterAll, describe, expect, it } from "vitest";

import { FormatError } from "../src/errors";
import { elementCount, readSizes, readTensor, writeTensor } from "../src/tensorfile";

// 2x2 tensor [[1, 2], [3, -0.5]], byte-for-byte. Shared with the generator's
// own test suite so both sides agree on the wire format.
const GOLDEN_2X2 = Buffer.from(
  "4d44475401020200000002000000" +
    "000000000000f03f" +
    "0000000000000040" +
    "0000000000000840" +
    "000000000000e0bf",
  "hex",
);

const dir = mkdtempSync(join(tmpdir(), "tensorfile-"));
afterAll(() => rmSync(dir, { recursive: true, force: true }));

function path(name: string): string {
  return join(dir, name);
}

describe("golden bytes", () => {
  it("writes the frozen encoding", () => {
    const p = path("golden-w.t");
    writeTensor(p, { dims: [2, 2], data: Float64Array.from([1, 2, 3, -0.5]) });
    expect(readFileSync(p).equals(GOLDEN_2X2)).toBe(true);
  });

  it("reads the frozen encoding", () => {
    const p = path("golden-r.t");
    writeFileSync(p, GOLDEN_2X2);
    const t = readTensor(p);
    expect(t.dims).toEqual([2, 2]);
    expect(Array.from(t.data)).toEqual([1, 2, 3, -0.5]);
  });
});

describe("round trips", () => {
  const shapes = [[7], [3, 5], [2, 3, 4], [2, 3, 4, 5]];
  for (const dims of shapes) {
    it(`rank ${dims.length}`, () => {
      const data = new Float64Array(elementCount(dims));
      for (let i = 0; i < data.length; i++) {
        data[i] = Math.sin(i + dims.length);
      }
      const p = path(`rt-${dims.join("x")}.t`);
      writeTensor(p, { dims, data });
      const back = readTensor(p);
      expect(back.dims).toEqual(dims);
      expect(back.data).toEqual(data);
    });
  }

  it("empty tensor", () => {
    const p = path("empty.t");
    writeTensor(p, { dims: [0], data: new Float64Array(0) });
    const back = readTensor(p);
    expect(back.dims).toEqual([0]);
    expect(back.data.length).toBe(0);
  });

  it("preserves negative zero and subnormals", () => {
    const p = path("edge.t");
    const data = Float64Array.from([-0, 5e-324, Number.MAX_VALUE]);
    writeTensor(p, { dims: [3], data });
    const back = readTensor(p);
    expect(Object.is(back.data[0], -0)).toBe(true);
    expect(back.data[1]).toBe(5e-324);
    expect(back.data[2]).toBe(Number.MAX_VALUE);
  });
});

describe("writer validation", () => {
  it("refuses rank 5", () => {
    expect(() =>
      writeTensor(path("r5.t"), { dims: [1, 1, 1, 1, 1], data: new Float64Array(1) }),
    ).toThrow(/rank 5/);
  });

  it("refuses dims/data disagreement", () => {
    expect(() => writeTensor(path("bad.t"), { dims: [4], data: new Float64Array(3) })).toThrow(
      /4 values, data holds 3/,
    );
  });
});

describe("reader rejection", () => {
  function corrupt(name: string, mutate: (b: Buffer) => Buffer): string {
    const p = path(name);
    writeFileSync(p, mutate(Buffer.from(GOLDEN_2X2)));
    return p;
  }

  it("bad magic", () => {
    const p = corrupt("magic.t", (b) => {
      b[0] = 0x58;
      return b;
    });
    expect(() => readTensor(p)).toThrow(/bad magic/);
  });

  it("unknown version", () => {
    const p = corrupt("version.t", (b) => {
      b[4] = 9;
      return b;
    });
    expect(() => readTensor(p)).toThrow(/version 9/);
  });

  it("rank above 4", () => {
    const p = corrupt("rank.t", (b) => {
      b[5] = 5;
      return b;
    });
    expect(() => readTensor(p)).toThrow(/rank 5 exceeds 4/);
  });

  it("truncated header", () => {
    const p = corrupt("hdr.t", (b) => b.subarray(0, 5));
    expect(() => readTensor(p)).toThrow(/truncated header/);
  });

  it("truncated dims", () => {
    const p = corrupt("dims.t", (b) => b.subarray(0, 9));
    expect(() => readTensor(p)).toThrow(/truncated dims/);
  });

  it("short payload", () => {
    const p = corrupt("short.t", (b) => b.subarray(0, b.length - 8));
    expect(() => readTensor(p)).toThrow(/holds 3 of 4 values/);
  });

  it("trailing bytes", () => {
    const p = corrupt("long.t", (b) => Buffer.concat([b, Buffer.alloc(8)]));
    expect(() => readTensor(p)).toThrow(FormatError);
  });

  it("empty file", () => {
    const p = path("nil.t");
    writeFileSync(p, Buffer.alloc(0));
    expect(() => readTensor(p)).toThrow(/bad magic/);
  });
});

describe("sizes file", () => {
  it("parses nelv then lx", () => {
    const p = path("sizes.txt");
    writeFileSync(p, "64 8\n");
    expect(readSizes(p)).toEqual({ nelv: 64, lx: 8 });
  });

  it("tolerates extra whitespace", () => {
    const p = path("sizes-ws.txt");
    writeFileSync(p, "  12\t 4 \n");
    expect(readSizes(p)).toEqual({ nelv: 12, lx: 4 });
  });

  it("rejects a third field", () => {
    const p = path("sizes-3.txt");
    writeFileSync(p, "1 2 3");
    expect(() => readSizes(p)).toThrow(/two integers/);
  });

  it("rejects non-integer text", () => {
    const p = path("sizes-x.txt");
    writeFileSync(p, "8 banana");
    expect(() => readSizes(p)).toThrow(FormatError);
  });
});

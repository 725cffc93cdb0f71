import { existsSync, mkdirSync, mkdtempSync, rmSync, writeFileSync } from "fs";
import { tmpdir } from "os";
import { join } from "path";

import { afterAll, afterEach, beforeAll, describe, expect, it, vi } from "vitest";

import { harnessCompile } from "../src/compile";
import {
  EXIT_FORMAT_ERROR,
  EXIT_MISSING_SYMBOL,
  EXIT_OK,
  EXIT_SHAPE_MISMATCH,
} from "../src/errors";
import { harnessRun } from "../src/run";
import { readTensor, writeTensor } from "../src/tensorfile";
import { PROBE_KERNEL, probeExpected, writeInputSet } from "./helpers";

const NELV = 2;
const LX = 3;

const dir = mkdtempSync(join(tmpdir(), "run-"));
const lib = join(dir, "libprobe.so");
const inputs = join(dir, "inputs");

beforeAll(() => {
  const src = join(dir, "probe.c");
  writeFileSync(src, PROBE_KERNEL);
  expect(harnessCompile(src, lib)).toBe(EXIT_OK);
  mkdirSync(inputs);
  writeInputSet(inputs, NELV, LX);
});

afterAll(() => rmSync(dir, { recursive: true, force: true }));
afterEach(() => vi.restoreAllMocks());

function quietStderr(): string[] {
  const chunks: string[] = [];
  vi.spyOn(process.stderr, "write").mockImplementation((chunk) => {
    chunks.push(String(chunk));
    return true;
  });
  return chunks;
}

describe("harnessRun", () => {
  it("loads, invokes, and writes the kernel output back", () => {
    const out = join(dir, "out.t");
    expect(harnessRun(lib, "__dace_ax_helm", inputs, out)).toBe(EXIT_OK);
    const got = readTensor(out);
    expect(got.dims).toEqual([NELV, LX, LX, LX]);
    expect(got.data).toEqual(probeExpected(NELV, LX));
  });

  it("exits 3 for a wrong entry name", () => {
    const chunks = quietStderr();
    const code = harnessRun(lib, "no_such_kernel", inputs, join(dir, "e3.t"));
    expect(code).toBe(EXIT_MISSING_SYMBOL);
    expect(chunks.join("")).toContain("no_such_kernel");
  });

  it("exits 3 for an unloadable library", () => {
    quietStderr();
    const code = harnessRun(join(dir, "absent.so"), "__dace_ax_helm", inputs, join(dir, "e3b.t"));
    expect(code).toBe(EXIT_MISSING_SYMBOL);
  });

  it("exits 4 when ud.t has rank 3", () => {
    const broken = join(dir, "rank3");
    mkdirSync(broken);
    writeInputSet(broken, NELV, LX);
    writeTensor(join(broken, "ud.t"), {
      dims: [NELV, LX, LX],
      data: new Float64Array(NELV * LX * LX),
    });
    const chunks = quietStderr();
    const code = harnessRun(lib, "__dace_ax_helm", broken, join(dir, "e4.t"));
    expect(code).toBe(EXIT_SHAPE_MISMATCH);
    expect(chunks.join("")).toContain("ud.t");
  });

  it("exits 4 when sizes.txt disagrees with the tensors", () => {
    const skewed = join(dir, "skewed");
    mkdirSync(skewed);
    writeInputSet(skewed, NELV, LX);
    writeFileSync(join(skewed, "sizes.txt"), `${NELV + 1} ${LX}\n`);
    const chunks = quietStderr();
    const code = harnessRun(lib, "__dace_ax_helm", skewed, join(dir, "e4b.t"));
    expect(code).toBe(EXIT_SHAPE_MISMATCH);
    expect(chunks.join("")).toContain("sizes.txt");
  });

  it("exits 5 on a corrupt tensor file", () => {
    const corrupt = join(dir, "corrupt");
    mkdirSync(corrupt);
    writeInputSet(corrupt, NELV, LX);
    writeFileSync(join(corrupt, "g23d.t"), Buffer.from("XXXX not a tensor"));
    quietStderr();
    const code = harnessRun(lib, "__dace_ax_helm", corrupt, join(dir, "e5.t"));
    expect(code).toBe(EXIT_FORMAT_ERROR);
  });

  it("exits 5 when an input tensor is missing", () => {
    const sparse = join(dir, "sparse");
    mkdirSync(sparse);
    writeInputSet(sparse, NELV, LX);
    rmSync(join(sparse, "h1d.t"));
    quietStderr();
    const out = join(dir, "e5b.t");
    expect(harnessRun(lib, "__dace_ax_helm", sparse, out)).toBe(EXIT_FORMAT_ERROR);
    expect(existsSync(out)).toBe(false);
  });
});

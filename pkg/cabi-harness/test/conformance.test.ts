import { mkdirSync, mkdtempSync, rmSync } from "fs";
import { tmpdir } from "os";
import { join } from "path";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { compareTensors } from "../src/compare";
import { harnessCompile } from "../src/compile";
import { EXIT_OK } from "../src/errors";
import { harnessRun } from "../src/run";
import { readTensor } from "../src/tensorfile";
import { mdg } from "./helpers";

// Round trip: generator dumps seeded inputs plus the interpreter's output,
// the harness compiles and runs the emitted kernel on those inputs, and the
// results must agree bit-for-bit under strict-fp for every
// lx in [3,8] x nel in {1,8,64}.

const LX_VALUES = [3, 4, 5, 6, 7, 8];
const NEL_VALUES = [1, 8, 64];

const dir = mkdtempSync(join(tmpdir(), "conformance-"));
afterAll(() => rmSync(dir, { recursive: true, force: true }));

interface Cell {
  graph: string;
  naiveLib: string;
  optLib: string;
}

const cells = new Map<number, Cell>();

function dumpDir(lx: number, nel: number): string {
  return join(dir, `dump-${lx}-${nel}`);
}

beforeAll(() => {
  for (const lx of LX_VALUES) {
    const graph = join(dir, `ax_${lx}.mdg`);
    const opt = join(dir, `ax_${lx}_opt.mdg`);
    mdg(["build", "--lx", String(lx), "-o", graph]);
    mdg(["transform", "-i", graph, "--ax-opt", String(lx), "-o", opt]);

    const naiveSrc = join(dir, `naive-${lx}`);
    const optSrc = join(dir, `opt-${lx}`);
    mdg(["codegen", "-i", graph, "-o", naiveSrc]);
    mdg(["codegen", "-i", opt, "-o", optSrc]);

    const naiveLib = join(dir, `libnaive${lx}.so`);
    const optLib = join(dir, `libopt${lx}.so`);
    expect(harnessCompile(join(naiveSrc, "kernel.c"), naiveLib)).toBe(EXIT_OK);
    expect(harnessCompile(join(optSrc, "kernel.c"), optLib)).toBe(EXIT_OK);
    cells.set(lx, { graph, naiveLib, optLib });

    for (const nel of NEL_VALUES) {
      mdg([
        "run", "-i", graph, "--nel", String(nel), "--seed", "1", "--dump", dumpDir(lx, nel),
      ]);
    }
  }
});

describe("strict-fp conformance vs the interpreter dump", () => {
  for (const lx of LX_VALUES) {
    it(`lx=${lx}`, () => {
      const cell = cells.get(lx)!;
      for (const nel of NEL_VALUES) {
        const inputs = dumpDir(lx, nel);
        const expected = readTensor(join(inputs, "expected_wd.t"));
        for (const [tag, lib] of [
          ["naive", cell.naiveLib],
          ["opt", cell.optLib],
        ] as const) {
          const out = join(dir, `wd-${tag}-${lx}-${nel}.t`);
          expect(harnessRun(lib, "__dace_ax_helm", inputs, out)).toBe(EXIT_OK);
          const cmp = compareTensors(readTensor(out), expected);
          expect(cmp.maxAbsDiff, `${tag} lx=${lx} nel=${nel}`).toBe(0);
        }
      }
    });
  }
});

describe("fast-fp build", () => {
  it("stays within 1e-12 relative of the interpreter", () => {
    const lx = 5;
    const nel = 8;
    const src = join(dir, "fast-src");
    const lib = join(dir, "libfast.so");
    mkdirSync(src, { recursive: true });
    mdg(["codegen", "-i", cells.get(lx)!.graph, "-o", src, "--fast-fp"]);
    expect(harnessCompile(join(src, "kernel.c"), lib, { strictFp: false })).toBe(EXIT_OK);

    const inputs = dumpDir(lx, nel);
    const out = join(dir, "wd-fast.t");
    expect(harnessRun(lib, "__dace_ax_helm", inputs, out)).toBe(EXIT_OK);
    const cmp = compareTensors(readTensor(out), readTensor(join(inputs, "expected_wd.t")));
    expect(cmp.maxRelDiff).toBeLessThanOrEqual(1e-12);
  });
});

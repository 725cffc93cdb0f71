import { existsSync, mkdtempSync, rmSync, writeFileSync } from "fs";
import { tmpdir } from "os";
import { join } from "path";

import { afterAll, afterEach, describe, expect, it, vi } from "vitest";

import { compileCommand, findCompiler, harnessCompile } from "../src/compile";
import { EXIT_COMPILER_FAILURE, EXIT_OK } from "../src/errors";

const dir = mkdtempSync(join(tmpdir(), "compile-"));
afterAll(() => rmSync(dir, { recursive: true, force: true }));
afterEach(() => vi.restoreAllMocks());

function captureStderr(): string[] {
  const chunks: string[] = [];
  vi.spyOn(process.stderr, "write").mockImplementation((chunk) => {
    chunks.push(String(chunk));
    return true;
  });
  return chunks;
}

describe("compileCommand", () => {
  const opts = { compiler: "cc", env: {} as NodeJS.ProcessEnv };

  it("builds a shared library with contraction disabled by default", () => {
    const cmd = compileCommand("k.c", "libk.so", opts);
    expect(cmd[0]).toBe("cc");
    expect(cmd).toContain("-shared");
    expect(cmd).toContain("-fPIC");
    expect(cmd).toContain("-ffp-contract=off");
    expect(cmd.slice(-3)).toEqual(["-o", "libk.so", "k.c"]);
  });

  it("drops the contraction flag under fast-fp", () => {
    const cmd = compileCommand("k.c", "libk.so", { ...opts, strictFp: false });
    expect(cmd).not.toContain("-ffp-contract=off");
  });

  it("omits openmp on request", () => {
    expect(compileCommand("k.c", "libk.so", opts)).toContain("-fopenmp");
    expect(compileCommand("k.c", "libk.so", { ...opts, openmp: false })).not.toContain(
      "-fopenmp",
    );
  });

  it("passes MDG_CFLAGS through before the output flag", () => {
    const env = { MDG_CFLAGS: "-DTRACE=1  -g" } as NodeJS.ProcessEnv;
    const cmd = compileCommand("k.c", "libk.so", { compiler: "cc", env });
    expect(cmd).toContain("-DTRACE=1");
    expect(cmd).toContain("-g");
    expect(cmd.indexOf("-g")).toBeLessThan(cmd.indexOf("-o"));
  });

  it("prefers MDG_CC over probed compilers", () => {
    const probe = findCompiler({ MDG_CC: "definitely-not-a-compiler" } as NodeJS.ProcessEnv);
    expect(probe).toBeNull();
  });
});

describe("harnessCompile", () => {
  it("produces a loadable library from valid source", () => {
    const src = join(dir, "ok.c");
    const lib = join(dir, "libok.so");
    writeFileSync(src, "double twice(double x) { return 2.0 * x; }\n");
    expect(harnessCompile(src, lib)).toBe(EXIT_OK);
    expect(existsSync(lib)).toBe(true);
  });

  it("passes compiler diagnostics through on bad source", () => {
    const src = join(dir, "bad.c");
    const lib = join(dir, "libbad.so");
    writeFileSync(src, "void broken( {\n");
    const chunks = captureStderr();
    expect(harnessCompile(src, lib)).toBe(EXIT_COMPILER_FAILURE);
    expect(chunks.join("")).toMatch(/error/i);
    expect(chunks.join("")).toContain("bad.c");
  });

  it("fails cleanly when the configured compiler does not exist", () => {
    const src = join(dir, "any.c");
    writeFileSync(src, "int x;\n");
    const chunks = captureStderr();
    const env = { MDG_CC: "no-such-cc-1234" } as NodeJS.ProcessEnv;
    expect(harnessCompile(src, join(dir, "libany.so"), { env })).toBe(EXIT_COMPILER_FAILURE);
    expect(chunks.join("")).toContain("no C compiler found");
  });
});

/**
 * Shared-library builds of emitted kernel source.
 *
 * Compiler selection follows MDG_CC, then the first of cc/gcc/clang found;
 * MDG_CFLAGS is appended verbatim. Strict-FP builds add -ffp-contract=off
 * so results stay bit-comparable with the reference interpreter. OpenMP is
 * attempted first and dropped if the toolchain rejects it.
 */

import { spawnSync } from "child_process";
import { existsSync } from "fs";

import { EXIT_COMPILER_FAILURE, EXIT_OK } from "./errors";

export interface CompileOptions {
  strictFp?: boolean;
  compiler?: string;
  openmp?: boolean;
  env?: NodeJS.ProcessEnv;
}

export function findCompiler(env: NodeJS.ProcessEnv = process.env): string | null {
  const candidates = env.MDG_CC ? [env.MDG_CC] : ["cc", "gcc", "clang"];
  for (const cand of candidates) {
    const probe = spawnSync(cand, ["--version"], { stdio: "ignore" });
    if (probe.status === 0) {
      return cand;
    }
  }
  return null;
}

export function compileCommand(
  sourcePath: string,
  libPath: string,
  opts: CompileOptions = {},
): string[] {
  const env = opts.env ?? process.env;
  const cc = opts.compiler ?? findCompiler(env);
  if (!cc) {
    throw new Error("no C compiler found; set MDG_CC or install cc/gcc/clang");
  }
  const cmd = [cc, "-O2", "-std=c99", "-shared", "-fPIC"];
  if (opts.openmp ?? true) {
    cmd.push("-fopenmp");
  }
  if (opts.strictFp ?? true) {
    cmd.push("-ffp-contract=off");
  }
  const extra = (env.MDG_CFLAGS ?? "").split(/\s+/).filter(Boolean);
  cmd.push(...extra, "-o", libPath, sourcePath);
  return cmd;
}

export function harnessCompile(
  sourcePath: string,
  libPath: string,
  opts: CompileOptions = {},
): number {
  const env = opts.env ?? process.env;
  const cc = opts.compiler ?? findCompiler(env);
  if (!cc) {
    process.stderr.write("no C compiler found; set MDG_CC or install cc/gcc/clang\n");
    return EXIT_COMPILER_FAILURE;
  }
  let lastDiagnostics = "";
  for (const openmp of [true, false]) {
    const cmd = compileCommand(sourcePath, libPath, { ...opts, compiler: cc, openmp });
    const res = spawnSync(cmd[0], cmd.slice(1), { encoding: "utf8" });
    if (res.status === 0 && existsSync(libPath)) {
      return EXIT_OK;
    }
    lastDiagnostics = res.stderr || res.error?.message || `exit ${res.status}`;
  }
  process.stderr.write(lastDiagnostics);
  return EXIT_COMPILER_FAILURE;
}

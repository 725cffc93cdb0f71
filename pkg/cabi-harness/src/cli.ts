#!/usr/bin/env node
/**
 * Subcommands:
 *   compile -i kernel.c -o libkernel.so [--fast-fp] [--cc CC] [--print-command]
 *   run     -i libkernel.so --inputs DIR -o out.t [--entry SYMBOL]
 *   compare -a got.t -b want.t [--rtol X]
 *
 * Exit codes: 0 success, 1 comparison mismatch, 2 usage error,
 * 3 missing symbol, 4 shape mismatch, 5 file format error,
 * 6 compiler failure.
 */

import { DEFAULT_ENTRY } from "./abi";
import { compareTensors } from "./compare";
import { compileCommand, harnessCompile } from "./compile";
import {
  EXIT_FORMAT_ERROR,
  EXIT_MISMATCH,
  EXIT_OK,
  EXIT_SHAPE_MISMATCH,
  EXIT_USAGE,
  FormatError,
  ShapeError,
} from "./errors";
import { harnessRun } from "./run";
import { readTensor } from "./tensorfile";

const USAGE = `usage: cabi-harness <command> [options]

commands:
  compile -i kernel.c -o libkernel.so [--fast-fp] [--cc CC] [--print-command]
  run     -i libkernel.so --inputs DIR -o out.t [--entry SYMBOL]
  compare -a got.t -b want.t [--rtol X]
`;

function usageError(message: string): number {
  process.stderr.write(`error: ${message}\n${USAGE}`);
  return EXIT_USAGE;
}

type Flags = Map<string, string | true>;

function parseFlags(argv: string[], taking: Set<string>, bare: Set<string>): Flags | string {
  const flags: Flags = new Map();
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (bare.has(arg)) {
      flags.set(arg, true);
    } else if (taking.has(arg)) {
      const value = argv[++i];
      if (value === undefined) {
        return `${arg} needs a value`;
      }
      flags.set(arg, value);
    } else {
      return `unknown flag '${arg}'`;
    }
  }
  return flags;
}

function need(flags: Flags, name: string): string | null {
  const v = flags.get(name);
  return typeof v === "string" ? v : null;
}

function cmdCompile(argv: string[]): number {
  const flags = parseFlags(
    argv,
    new Set(["-i", "-o", "--cc"]),
    new Set(["--fast-fp", "--print-command"]),
  );
  if (typeof flags === "string") {
    return usageError(flags);
  }
  const source = need(flags, "-i");
  const lib = need(flags, "-o");
  if (!source || !lib) {
    return usageError("compile needs -i and -o");
  }
  const opts = {
    strictFp: !flags.has("--fast-fp"),
    compiler: need(flags, "--cc") ?? undefined,
  };
  if (flags.has("--print-command")) {
    process.stdout.write(compileCommand(source, lib, opts).join(" ") + "\n");
    return EXIT_OK;
  }
  return harnessCompile(source, lib, opts);
}

function cmdRun(argv: string[]): number {
  const flags = parseFlags(argv, new Set(["-i", "-o", "--inputs", "--entry"]), new Set());
  if (typeof flags === "string") {
    return usageError(flags);
  }
  const lib = need(flags, "-i");
  const inputs = need(flags, "--inputs");
  const output = need(flags, "-o");
  if (!lib || !inputs || !output) {
    return usageError("run needs -i, --inputs, and -o");
  }
  return harnessRun(lib, need(flags, "--entry") ?? DEFAULT_ENTRY, inputs, output);
}

function cmdCompare(argv: string[]): number {
  const flags = parseFlags(argv, new Set(["-a", "-b", "--rtol"]), new Set());
  if (typeof flags === "string") {
    return usageError(flags);
  }
  const aPath = need(flags, "-a");
  const bPath = need(flags, "-b");
  if (!aPath || !bPath) {
    return usageError("compare needs -a and -b");
  }
  const rtolText = need(flags, "--rtol");
  const rtol = rtolText === null ? null : Number(rtolText);
  if (rtol !== null && !(rtol >= 0)) {
    return usageError(`bad --rtol '${rtolText}'`);
  }
  try {
    const cmp = compareTensors(readTensor(aPath), readTensor(bPath));
    process.stdout.write(`max abs diff ${cmp.maxAbsDiff}\n`);
    process.stdout.write(`max rel diff ${cmp.maxRelDiff}\n`);
    const ok = rtol === null ? cmp.maxAbsDiff === 0 : cmp.maxRelDiff <= rtol;
    return ok ? EXIT_OK : EXIT_MISMATCH;
  } catch (err) {
    if (err instanceof ShapeError) {
      process.stderr.write(`shape mismatch: ${err.message}\n`);
      return EXIT_SHAPE_MISMATCH;
    }
    if (err instanceof FormatError || (err as NodeJS.ErrnoException).code === "ENOENT") {
      process.stderr.write(String(err instanceof Error ? err.message : err) + "\n");
      return EXIT_FORMAT_ERROR;
    }
    throw err;
  }
}

export function main(argv: string[]): number {
  const [command, ...rest] = argv;
  switch (command) {
    case "compile":
      return cmdCompile(rest);
    case "run":
      return cmdRun(rest);
    case "compare":
      return cmdCompare(rest);
    case undefined:
      return usageError("missing command");
    default:
      return usageError(`unknown command '${command}'`);
  }
}

if (require.main === module) {
  process.exitCode = main(process.argv.slice(2));
}

/**
 * Dynamic execution of a compiled kernel over a tensor-file input set.
 *
 * The input directory must hold one TensorFile per kernel parameter
 * (wd.t ... g23d.t) plus sizes.txt; the kernel is invoked with pointers
 * into the loaded buffers in calling-convention order and the resulting
 * wd is written back out as a TensorFile.
 */

import { join, resolve } from "path";

import koffi from "koffi";

import { ABI_ORDER, AbiName, dimsEqual, expectedDims } from "./abi";
import {
  EXIT_FORMAT_ERROR,
  EXIT_MISSING_SYMBOL,
  EXIT_OK,
  EXIT_SHAPE_MISMATCH,
  FormatError,
} from "./errors";
import { readSizes, readTensor, Tensor, writeTensor } from "./tensorfile";

const SIGNATURE_ARGS = [...ABI_ORDER.map(() => "double *"), "int", "int"];

function fail(code: number, message: string): number {
  process.stderr.write(message + "\n");
  return code;
}

export function harnessRun(
  libPath: string,
  entrySymbol: string,
  inputDir: string,
  outputPath: string,
): number {
  let nelv: number;
  let lx: number;
  const tensors = new Map<AbiName, Tensor>();
  try {
    ({ nelv, lx } = readSizes(join(inputDir, "sizes.txt")));
    for (const name of ABI_ORDER) {
      tensors.set(name, readTensor(join(inputDir, `${name}.t`)));
    }
  } catch (err) {
    if (err instanceof FormatError || (err as NodeJS.ErrnoException).code === "ENOENT") {
      return fail(EXIT_FORMAT_ERROR, String(err instanceof Error ? err.message : err));
    }
    throw err;
  }

  for (const name of ABI_ORDER) {
    const want = expectedDims(name, nelv, lx);
    const got = tensors.get(name)!.dims;
    if (!dimsEqual(got, want)) {
      return fail(
        EXIT_SHAPE_MISMATCH,
        `${name}.t: dims [${got}] do not match sizes.txt (nelv=${nelv}, lx=${lx}), expected [${want}]`,
      );
    }
  }

  let fn: (...args: unknown[]) => void;
  try {
    // dlopen treats a bare relative name as a search-path lookup; anchor it
    const lib = koffi.load(resolve(libPath));
    fn = lib.func(entrySymbol, "void", SIGNATURE_ARGS);
  } catch (err) {
    return fail(EXIT_MISSING_SYMBOL, String(err instanceof Error ? err.message : err));
  }

  const args: unknown[] = ABI_ORDER.map((name) => tensors.get(name)!.data);
  args.push(nelv, lx);
  fn(...args);

  writeTensor(outputPath, tensors.get("wd")!);
  return EXIT_OK;
}

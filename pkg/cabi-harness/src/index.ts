export { ABI_ORDER, DEFAULT_ENTRY, dimsEqual, expectedDims } from "./abi";
export type { AbiName } from "./abi";
export { compareTensors } from "./compare";
export type { Comparison } from "./compare";
export { compileCommand, findCompiler, harnessCompile } from "./compile";
export type { CompileOptions } from "./compile";
export {
  EXIT_COMPILER_FAILURE,
  EXIT_FORMAT_ERROR,
  EXIT_MISMATCH,
  EXIT_MISSING_SYMBOL,
  EXIT_OK,
  EXIT_SHAPE_MISMATCH,
  EXIT_USAGE,
  FormatError,
  ShapeError,
} from "./errors";
export { harnessRun } from "./run";
export { elementCount, readSizes, readTensor, writeTensor } from "./tensorfile";
export type { Sizes, Tensor } from "./tensorfile";

/** Kernel calling convention: 15 double pointers in fixed order, then nelv, lx. */

export const DEFAULT_ENTRY = "__dace_ax_helm";

export const ABI_ORDER = [
  "wd",
  "ud",
  "dxd",
  "dyd",
  "dzd",
  "dxtd",
  "dytd",
  "dztd",
  "h1d",
  "g11d",
  "g22d",
  "g33d",
  "g12d",
  "g13d",
  "g23d",
] as const;

export type AbiName = (typeof ABI_ORDER)[number];

const MATRICES = new Set<AbiName>(["dxd", "dyd", "dzd", "dxtd", "dytd", "dztd"]);

export function expectedDims(name: AbiName, nelv: number, lx: number): number[] {
  return MATRICES.has(name) ? [lx, lx] : [nelv, lx, lx, lx];
}

export function dimsEqual(a: number[], b: number[]): boolean {
  return a.length === b.length && a.every((d, i) => d === b[i]);
}

import { spawnSync, SpawnSyncOptions } from "child_process";
import { writeFileSync } from "fs";
import { join } from "path";

import { ABI_ORDER, expectedDims } from "../src/abi";
import { elementCount, writeTensor } from "../src/tensorfile";

/** Kernel with the harness calling convention that leaves an inspectable
 * trace: wd[i] = 2*ud[i] + h1d[i] + dxd[0]. */
export const PROBE_KERNEL = `
void __dace_ax_helm(double* wd, const double* ud, const double* dxd,
                    const double* dyd, const double* dzd, const double* dxtd,
                    const double* dytd, const double* dztd, const double* h1d,
                    const double* g11d, const double* g22d, const double* g33d,
                    const double* g12d, const double* g13d, const double* g23d,
                    int nelv, int lx)
{
    int n = nelv * lx * lx * lx;
    for (int i = 0; i < n; i++)
        wd[i] = 2.0 * ud[i] + h1d[i] + dxd[0];
}
`;

/** Writes a full 15-tensor input set plus sizes.txt into dir. */
export function writeInputSet(dir: string, nelv: number, lx: number): void {
  for (const name of ABI_ORDER) {
    const dims = expectedDims(name, nelv, lx);
    const data = new Float64Array(elementCount(dims));
    for (let i = 0; i < data.length; i++) {
      data[i] = name === "ud" ? i + 1 : name === "h1d" ? 0.25 * i : 7.5;
    }
    writeTensor(join(dir, `${name}.t`), { dims, data });
  }
  writeFileSync(join(dir, "sizes.txt"), `${nelv} ${lx}\n`);
}

/** What PROBE_KERNEL computes for the writeInputSet data. */
export function probeExpected(nelv: number, lx: number): Float64Array {
  const n = nelv * lx * lx * lx;
  const out = new Float64Array(n);
  for (let i = 0; i < n; i++) {
    out[i] = 2 * (i + 1) + 0.25 * i + 7.5;
  }
  return out;
}

export interface Spawned {
  status: number | null;
  stdout: string;
  stderr: string;
}

export function run(cmd: string, args: string[], opts: SpawnSyncOptions = {}): Spawned {
  const res = spawnSync(cmd, args, { encoding: "utf8", ...opts });
  if (res.error) {
    throw res.error;
  }
  return { status: res.status, stdout: String(res.stdout), stderr: String(res.stderr) };
}

/** Invokes the generator CLI; fails loudly when a pipeline step breaks. */
export function mdg(args: string[], opts: SpawnSyncOptions = {}): Spawned {
  const res = run("python3", ["-m", "mdg", ...args], opts);
  if (res.status !== 0) {
    throw new Error(`mdg ${args.join(" ")} exited ${res.status}:\n${res.stderr}`);
  }
  return res;
}

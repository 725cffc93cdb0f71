import { ShapeError } from "./errors";
import { Tensor } from "./tensorfile";

export interface Comparison {
  maxAbsDiff: number;
  /** maxAbsDiff scaled by the largest magnitude in the reference tensor. */
  maxRelDiff: number;
}

export function compareTensors(got: Tensor, want: Tensor): Comparison {
  if (got.dims.length !== want.dims.length || got.dims.some((d, i) => d !== want.dims[i])) {
    throw new ShapeError(`dims [${got.dims}] vs [${want.dims}]`);
  }
  let maxAbsDiff = 0;
  let scale = 0;
  for (let i = 0; i < want.data.length; i++) {
    const diff = Math.abs(got.data[i] - want.data[i]);
    if (diff > maxAbsDiff) {
      maxAbsDiff = diff;
    }
    const mag = Math.abs(want.data[i]);
    if (mag > scale) {
      scale = mag;
    }
  }
  return { maxAbsDiff, maxRelDiff: scale > 0 ? maxAbsDiff / scale : maxAbsDiff };
}

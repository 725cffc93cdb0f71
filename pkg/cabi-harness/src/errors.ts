export const EXIT_OK = 0;
export const EXIT_MISMATCH = 1;
export const EXIT_USAGE = 2;
export const EXIT_MISSING_SYMBOL = 3;
export const EXIT_SHAPE_MISMATCH = 4;
export const EXIT_FORMAT_ERROR = 5;
export const EXIT_COMPILER_FAILURE = 6;

/** Malformed tensor file, sizes file, or CSV. */
export class FormatError extends Error {}

/** Tensor dims disagree with what sizes.txt implies. */
export class ShapeError extends Error {}

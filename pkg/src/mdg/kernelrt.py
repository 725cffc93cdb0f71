"""In-process compilation and invocation of generated kernels.

Thin wrapper over an external C compiler plus ctypes: good enough for the
benchmark driver and for conformance checks against the interpreter.  The
compiler is chosen from ``MDG_CC`` or the first of cc/gcc/clang on PATH;
``MDG_CFLAGS`` appends extra flags.
"""

from __future__ import annotations

import ctypes
import os
import shlex
import shutil
import subprocess
import tempfile
from pathlib import Path
from typing import Callable

import numpy as np

from .axprogram import ABI_CONTAINER_ORDER
from .errors import BindingError, CodegenError

KernelFn = Callable[[dict[str, np.ndarray], int, int], None]

_FALLBACK_COMPILERS = ("cc", "gcc", "clang")


def find_compiler() -> str | None:
    """Resolve the external C compiler command, or None if unavailable."""
    override = os.environ.get("MDG_CC")
    if override:
        return override if shutil.which(override) else None
    for cand in _FALLBACK_COMPILERS:
        if shutil.which(cand):
            return cand
    return None


def compile_shared(
    source: str,
    out_dir: str | Path | None = None,
    strict_fp: bool = True,
    compiler: str | None = None,
) -> Path:
    """Compile kernel source into a shared library, returning its path.

    Tries with -fopenmp first and falls back to a serial build when the
    toolchain lacks OpenMP; the pragma is ignored in that case.
    """
    cc = compiler or find_compiler()
    if cc is None:
        raise CodegenError("no C compiler found; set MDG_CC or install cc")
    work = Path(out_dir) if out_dir is not None else Path(tempfile.mkdtemp(prefix="mdg-kernel-"))
    work.mkdir(parents=True, exist_ok=True)
    c_path = work / "kernel.c"
    so_path = work / "libkernel.so"
    c_path.write_text(source, encoding="utf-8")

    flags = ["-O2", "-std=c99", "-shared", "-fPIC"]
    if strict_fp:
        flags.append("-ffp-contract=off")
    flags += shlex.split(os.environ.get("MDG_CFLAGS", ""))

    last = None
    for omp in (["-fopenmp"], []):
        cmd = [cc, *flags, *omp, str(c_path), "-o", str(so_path)]
        last = subprocess.run(cmd, capture_output=True, text=True)
        if last.returncode == 0:
            return so_path
    raise CodegenError(
        f"compiler failed ({' '.join(cmd)}):\n{last.stderr.strip()}"
    )


def load_kernel(libpath: str | Path, entry: str = "__dace_ax_helm") -> KernelFn:
    """Bind the entry symbol and wrap it for dict-of-array invocation.

    The returned callable takes (arrays, nelv, lx) where ``arrays`` maps
    every ABI container name to a C-contiguous float64 ndarray; ``wd`` is
    written in place.
    """
    lib = ctypes.CDLL(str(libpath))
    try:
        fn = getattr(lib, entry)
    except AttributeError as exc:
        raise CodegenError(f"symbol {entry!r} not found in {libpath}") from exc
    fn.restype = None
    fn.argtypes = [ctypes.POINTER(ctypes.c_double)] * len(ABI_CONTAINER_ORDER) + [
        ctypes.c_int,
        ctypes.c_int,
    ]

    def invoke(arrays: dict[str, np.ndarray], nelv: int, lx: int) -> None:
        ptrs = []
        for name in ABI_CONTAINER_ORDER:
            if name not in arrays:
                raise BindingError(f"missing kernel argument array {name!r}")
            a = arrays[name]
            if a.dtype != np.float64 or not a.flags.c_contiguous:
                raise BindingError(
                    f"array {name!r} must be C-contiguous float64"
                )
            ptrs.append(a.ctypes.data_as(ctypes.POINTER(ctypes.c_double)))
        fn(*ptrs, nelv, lx)

    return invoke

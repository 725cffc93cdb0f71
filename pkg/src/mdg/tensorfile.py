"""Binary tensor interchange files.

Layout: magic ``MDGT``, version byte (1), rank byte, ``rank`` little-endian
u32 dims, then ``prod(dims)`` little-endian IEEE doubles.  The byte order
is fixed on disk regardless of host endianness.  A companion ``sizes.txt``
carries the two kernel integers as ASCII: ``nelv lx``.
"""

from __future__ import annotations

import math
import struct
from pathlib import Path

import numpy as np

from .errors import ParseError, VersionError

MAGIC = b"MDGT"
VERSION = 1
MAX_RANK = 4


def write_tensor(path: str | Path, data: np.ndarray) -> None:
    a = np.ascontiguousarray(np.asarray(data, dtype=np.float64))
    if a.ndim > MAX_RANK:
        raise ValueError(f"rank {a.ndim} exceeds the format limit of {MAX_RANK}")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<BB", VERSION, a.ndim))
        f.write(struct.pack(f"<{a.ndim}I", *a.shape))
        f.write(a.astype("<f8", copy=False).tobytes())


def read_tensor(path: str | Path) -> np.ndarray:
    blob = Path(path).read_bytes()
    if blob[:4] != MAGIC:
        raise ParseError(f"{path}: bad magic", offset=0)
    if len(blob) < 6:
        raise ParseError(f"{path}: truncated header", offset=len(blob))
    version, rank = blob[4], blob[5]
    if version != VERSION:
        raise VersionError(f"{path}: unknown tensor-file version {version}")
    if rank > MAX_RANK:
        raise ParseError(f"{path}: rank {rank} exceeds {MAX_RANK}", offset=5)
    header = 6 + 4 * rank
    if len(blob) < header:
        raise ParseError(f"{path}: truncated dims", offset=len(blob))
    dims = struct.unpack_from(f"<{rank}I", blob, 6)
    count = math.prod(dims)
    if len(blob) != header + 8 * count:
        raise ParseError(
            f"{path}: payload holds {(len(blob) - header) // 8} of {count} values",
            offset=header,
        )
    data = np.frombuffer(blob, dtype="<f8", offset=header, count=count)
    return data.astype(np.float64).reshape(dims)


def write_sizes(path: str | Path, nelv: int, lx: int) -> None:
    Path(path).write_text(f"{nelv} {lx}\n", encoding="ascii")


def read_sizes(path: str | Path) -> tuple[int, int]:
    fields = Path(path).read_text(encoding="ascii").split()
    if len(fields) != 2:
        raise ParseError(f"{path}: expected two integers, got {len(fields)} fields")
    try:
        nelv, lx = int(fields[0]), int(fields[1])
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return nelv, lx

"""Binary tensor container: the on-disk format for all embedding payloads.

Layout (little-endian throughout):

    offset 0   magic           4 bytes, b"ZSAE"
    offset 4   format version  u32 (currently 1)
    offset 8   dtype code      u32 (1 = float32)
    offset 12  rank            u32
    offset 16  shape           rank x u64
    ...        payload         row-major float32

Writers always emit exactly this layout, so saving the same array twice
produces byte-identical files.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import ValidationError

MAGIC = b"ZSAE"
FORMAT_VERSION = 1
DTYPE_F32 = 1

_HEADER = struct.Struct("<4sIII")


def write_tensor(path: str | Path, array: np.ndarray) -> None:
    """Write *array* as a float32 tensor file at *path*.

    Raises ValidationError if the array contains NaN/Inf or is zero-size.
    """
    arr = np.ascontiguousarray(array, dtype=np.float32)
    if arr.size == 0:
        raise ValidationError(f"refusing to write empty tensor to {path}")
    if not np.isfinite(arr).all():
        raise ValidationError(f"refusing to write non-finite tensor to {path}")
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, DTYPE_F32, arr.ndim)
    shape = struct.pack(f"<{arr.ndim}Q", *arr.shape)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(shape)
        fh.write(arr.tobytes(order="C"))


def read_tensor(path: str | Path) -> np.ndarray:
    """Read a tensor file written by :func:`write_tensor`.

    Returns a read-only float32 array. Raises ValidationError on any
    header or payload inconsistency, and rejects NaN/Inf payloads.
    """
    with open(path, "rb") as fh:
        raw = fh.read()

    if len(raw) < _HEADER.size:
        raise ValidationError(f"{path}: truncated header ({len(raw)} bytes)")
    magic, version, dtype, rank = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise ValidationError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != FORMAT_VERSION:
        raise ValidationError(f"{path}: unsupported format version {version}")
    if dtype != DTYPE_F32:
        raise ValidationError(f"{path}: unsupported dtype code {dtype}")
    if rank == 0:
        raise ValidationError(f"{path}: rank 0 tensors are not supported")

    shape_end = _HEADER.size + 8 * rank
    if len(raw) < shape_end:
        raise ValidationError(f"{path}: truncated shape block")
    shape = struct.unpack_from(f"<{rank}Q", raw, _HEADER.size)

    count = 1
    for extent in shape:
        count *= extent
    if count == 0:
        raise ValidationError(f"{path}: zero-size tensor (shape {shape})")
    expected = shape_end + 4 * count
    if len(raw) != expected:
        raise ValidationError(
            f"{path}: payload size mismatch (file {len(raw)} bytes, "
            f"header implies {expected})"
        )

    arr = np.frombuffer(raw, dtype="<f4", count=count, offset=shape_end)
    arr = arr.reshape(shape)
    if not np.isfinite(arr).all():
        raise ValidationError(f"{path}: payload contains NaN/Inf")
    arr.flags.writeable = False
    return arr

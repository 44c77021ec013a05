"""Binary weight checkpoints.

Layout (all integers little-endian):

    magic   4 bytes  b"MSCW"
    version 1 byte   0x01
    count   u32      number of entries
    entry*  u16 name length, UTF-8 name,
            u8 ndim, u32 per dimension,
            float32 data in C order
    crc     u32      CRC-32 of every preceding byte (magic included)

Arrays are stored as float32 regardless of in-memory dtype; loading returns
float32 arrays and callers widen as needed.
"""

from __future__ import annotations

import os
import struct
import zlib
from pathlib import Path

import numpy as np

MAGIC = b"MSCW"
VERSION = 1


class CheckpointError(ValueError):
    pass


def save_checkpoint(path: str | Path, arrays: dict[str, np.ndarray]) -> None:
    buf = bytearray(MAGIC)
    buf.append(VERSION)
    buf += struct.pack("<I", len(arrays))
    for name, arr in arrays.items():
        nb = name.encode("utf-8")
        buf += struct.pack("<H", len(nb))
        buf += nb
        buf.append(arr.ndim)
        for dim in arr.shape:
            buf += struct.pack("<I", dim)
        buf += np.ascontiguousarray(arr, dtype="<f4").tobytes()
    buf += struct.pack("<I", zlib.crc32(buf))
    tmp = Path(str(path) + ".partial")
    tmp.write_bytes(buf)
    os.replace(tmp, path)


def load_checkpoint(path: str | Path) -> dict[str, np.ndarray]:
    raw = Path(path).read_bytes()
    if len(raw) < 13 or raw[:4] != MAGIC:
        raise CheckpointError(f"{path}: not a weight checkpoint")
    if raw[4] != VERSION:
        raise CheckpointError(f"{path}: unsupported version {raw[4]}")
    body, crc_bytes = raw[:-4], raw[-4:]
    (stored_crc,) = struct.unpack("<I", crc_bytes)
    if zlib.crc32(body) != stored_crc:
        raise CheckpointError(f"{path}: checksum mismatch")
    (count,) = struct.unpack_from("<I", body, 5)
    off = 9
    arrays: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", body, off)
        off += 2
        name = body[off:off + name_len].decode("utf-8")
        off += name_len
        ndim = body[off]
        off += 1
        shape = struct.unpack_from(f"<{ndim}I", body, off)
        off += 4 * ndim
        n = int(np.prod(shape)) if ndim else 1
        arr = np.frombuffer(body, dtype="<f4", count=n, offset=off).reshape(shape)
        off += 4 * n
        arrays[name] = arr.copy()
    if off != len(body):
        raise CheckpointError(f"{path}: trailing bytes after last entry")
    return arrays

"""Binary parameter container.

Layout (little endian):
    magic     8 bytes  b"RDPCKPT1"
    version   u32      (currently 1)
    n_entries u32
    entry table, one per tensor, sorted by name:
        name_len u16, name utf-8 bytes, ndim u8, dims u32 * ndim, offset u64
    payload: concatenated raw float64 data, offsets relative to payload start
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..exceptions import DataError

MAGIC = b"RDPCKPT1"
VERSION = 1


def save_params(path, tensors: dict[str, np.ndarray]) -> None:
    names = sorted(tensors)
    table = bytearray()
    payload = bytearray()
    for name in names:
        arr = np.ascontiguousarray(tensors[name], dtype="<f8")
        raw = name.encode("utf-8")
        table += struct.pack("<H", len(raw)) + raw
        table += struct.pack("<B", arr.ndim)
        table += struct.pack(f"<{arr.ndim}I", *arr.shape) if arr.ndim else b""
        table += struct.pack("<Q", len(payload))
        payload += arr.tobytes()
    header = MAGIC + struct.pack("<II", VERSION, len(names))
    Path(path).write_bytes(header + bytes(table) + bytes(payload))


def load_params(path) -> dict[str, np.ndarray]:
    blob = Path(path).read_bytes()
    if blob[:8] != MAGIC:
        raise DataError(f"{path}: not a parameter container (bad magic)")
    version, n = struct.unpack_from("<II", blob, 8)
    if version != VERSION:
        raise DataError(f"{path}: unsupported container version {version}")
    pos = 16
    entries = []
    for _ in range(n):
        (name_len,) = struct.unpack_from("<H", blob, pos)
        pos += 2
        name = blob[pos:pos + name_len].decode("utf-8")
        pos += name_len
        (ndim,) = struct.unpack_from("<B", blob, pos)
        pos += 1
        shape = struct.unpack_from(f"<{ndim}I", blob, pos) if ndim else ()
        pos += 4 * ndim
        (offset,) = struct.unpack_from("<Q", blob, pos)
        pos += 8
        entries.append((name, shape, offset))
    payload_start = pos
    out = {}
    for name, shape, offset in entries:
        count = int(np.prod(shape)) if shape else 1
        start = payload_start + offset
        arr = np.frombuffer(blob, dtype="<f8", count=count, offset=start).reshape(shape)
        out[name] = arr.copy()
    return out

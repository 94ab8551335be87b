"""Binary weight checkpoints.

Layout (all integers little-endian unsigned 32-bit unless noted):

    magic   8 bytes  b"SALCKPT1"
    version u32      currently 1
    count   u32      number of entries
    entry   repeated count times:
        name_len u32
        name     name_len bytes, UTF-8
        ndim     u32
        dims     ndim * u32
        values   prod(dims) * float64, little-endian, C order

Round-trips are bitwise lossless. Trainable flags are not part of the format;
loaded entries come back trainable.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .params import Param, ParameterSet

MAGIC = b"SALCKPT1"
VERSION = 1


def save_checkpoint(params: ParameterSet, path) -> None:
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(params)))
        for p in params:
            name = p.name.encode("utf-8")
            fh.write(struct.pack("<I", len(name)))
            fh.write(name)
            fh.write(struct.pack("<I", p.values.ndim))
            for dim in p.values.shape:
                fh.write(struct.pack("<I", dim))
            fh.write(np.ascontiguousarray(p.values, dtype="<f8").tobytes())


def load_checkpoint(path) -> ParameterSet:
    path = Path(path)
    data = path.read_bytes()
    if data[: len(MAGIC)] != MAGIC:
        raise ValueError(f"{path}: not a checkpoint (bad magic)")
    offset = len(MAGIC)

    def take(fmt: str):
        nonlocal offset
        size = struct.calcsize(fmt)
        if offset + size > len(data):
            raise ValueError(f"{path}: truncated checkpoint")
        values = struct.unpack_from(fmt, data, offset)
        offset += size
        return values

    (version, count) = take("<II")
    if version != VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    entries = []
    for _ in range(count):
        (name_len,) = take("<I")
        if offset + name_len > len(data):
            raise ValueError(f"{path}: truncated checkpoint")
        name = data[offset:offset + name_len].decode("utf-8")
        offset += name_len
        (ndim,) = take("<I")
        shape = take(f"<{ndim}I") if ndim else ()
        n_values = int(np.prod(shape, dtype=np.int64)) if shape else 1
        byte_len = n_values * 8
        if offset + byte_len > len(data):
            raise ValueError(f"{path}: truncated checkpoint")
        values = np.frombuffer(data, dtype="<f8", count=n_values, offset=offset).reshape(shape)
        offset += byte_len
        entries.append(Param(name, values.astype(np.float64)))
    if offset != len(data):
        raise ValueError(f"{path}: trailing bytes after last entry")
    return ParameterSet(entries)

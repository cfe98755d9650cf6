"""Binary checkpoint container for trained model parameters.

Layout (all integers little-endian, documented in README):

    magic        4 bytes  b"VSNN"
    version      uint32   currently 1
    kind length  uint16   followed by that many UTF-8 bytes (model kind tag)
    tensor count uint32
    per tensor:
        name length  uint16, then UTF-8 name
        rows         uint32  (0 marks a rank-1 tensor)
        cols         uint32
        data         rows*cols (or cols, when rows == 0) float64 little-endian

Round-trips are bit-exact; `checkpoint_hash` is the SHA-256 of the file
bytes and ties derived artifacts (embedding stores) to their model.
"""

from __future__ import annotations

import hashlib
import struct
from pathlib import Path

import numpy as np

from vsearch.errors import FormatError

MAGIC = b"VSNN"
VERSION = 1


def encode_checkpoint(kind: str, tensors: dict[str, np.ndarray]) -> bytes:
    out = bytearray()
    out += MAGIC
    out += struct.pack("<I", VERSION)
    kb = kind.encode("utf-8")
    out += struct.pack("<H", len(kb)) + kb
    out += struct.pack("<I", len(tensors))
    for name in sorted(tensors):
        arr = np.ascontiguousarray(tensors[name], dtype=np.float64)
        if arr.ndim == 1:
            rows, cols = 0, arr.shape[0]
        elif arr.ndim == 2:
            rows, cols = arr.shape
        else:
            raise FormatError(f"tensor {name!r} has rank {arr.ndim}; only 1 and 2 supported")
        nb = name.encode("utf-8")
        out += struct.pack("<H", len(nb)) + nb
        out += struct.pack("<II", rows, cols)
        out += arr.astype("<f8").tobytes()
    return bytes(out)


def params_hash(kind: str, tensors: dict[str, np.ndarray]) -> str:
    """Stable identity of a parameter set: SHA-256 of its checkpoint bytes."""
    return hashlib.sha256(encode_checkpoint(kind, tensors)).hexdigest()


def save_checkpoint(path: str | Path, kind: str, tensors: dict[str, np.ndarray]) -> None:
    Path(path).write_bytes(encode_checkpoint(kind, tensors))


def load_checkpoint(path: str | Path) -> tuple[str, dict[str, np.ndarray]]:
    buf = Path(path).read_bytes()
    view = memoryview(buf)
    if bytes(view[:4]) != MAGIC:
        raise FormatError(f"{path}: bad magic")
    (version,) = struct.unpack_from("<I", view, 4)
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    off = 8
    (klen,) = struct.unpack_from("<H", view, off); off += 2
    kind = bytes(view[off:off + klen]).decode("utf-8"); off += klen
    (count,) = struct.unpack_from("<I", view, off); off += 4
    tensors: dict[str, np.ndarray] = {}
    for _ in range(count):
        (nlen,) = struct.unpack_from("<H", view, off); off += 2
        name = bytes(view[off:off + nlen]).decode("utf-8"); off += nlen
        rows, cols = struct.unpack_from("<II", view, off); off += 8
        n = cols if rows == 0 else rows * cols
        arr = np.frombuffer(view, dtype="<f8", count=n, offset=off).copy()
        off += 8 * n
        tensors[name] = arr if rows == 0 else arr.reshape(rows, cols)
    if off != len(buf):
        raise FormatError(f"{path}: {len(buf) - off} trailing bytes")
    return kind, tensors


def checkpoint_hash(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()

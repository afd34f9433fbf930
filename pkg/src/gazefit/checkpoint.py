"""Binary model checkpoints: named float32 tensors with a CRC32 trailer.

Layout (all integers little-endian u32, all tensor data little-endian f32):

    magic   b"NPFC"
    version u32 (currently 1)
    kind    u32 length + utf-8 bytes  (e.g. "encoder")
    count   u32 number of tensors
    tensor* u32 name length + utf-8 name,
            u32 rank, u32 dims[rank],
            f32 values in C order
    crc     u32 CRC32 of every preceding byte

The format is fixed little-endian so files move between platforms unchanged.
"""

from __future__ import annotations

import io
import struct
import zlib
from pathlib import Path

import numpy as np

__all__ = ["CheckpointError", "save_checkpoint", "load_checkpoint",
           "write_checkpoint", "read_checkpoint", "MAGIC", "VERSION"]

MAGIC = b"NPFC"
VERSION = 1


class CheckpointError(ValueError):
    """Raised for bad magic, unsupported version, truncation, or CRC mismatch."""


def _pack_str(s: str) -> bytes:
    raw = s.encode("utf-8")
    return struct.pack("<I", len(raw)) + raw


def save_checkpoint(kind: str, tensors: dict[str, np.ndarray]) -> bytes:
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<I", VERSION))
    buf.write(_pack_str(kind))
    buf.write(struct.pack("<I", len(tensors)))
    for name in sorted(tensors):
        arr = np.asarray(tensors[name], dtype=np.float32)
        shape = arr.shape  # before ascontiguousarray, which promotes 0-d to 1-d
        buf.write(_pack_str(name))
        buf.write(struct.pack("<I", len(shape)))
        for d in shape:
            buf.write(struct.pack("<I", d))
        buf.write(np.ascontiguousarray(arr).astype("<f4", copy=False).tobytes())
    body = buf.getvalue()
    return body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise CheckpointError("checkpoint truncated")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def text(self) -> str:
        return self.take(self.u32()).decode("utf-8")


def load_checkpoint(data: bytes) -> tuple[str, dict[str, np.ndarray]]:
    if len(data) < 4 + 4 + 4:
        raise CheckpointError("checkpoint truncated")
    body, crc_bytes = data[:-4], data[-4:]
    if struct.unpack("<I", crc_bytes)[0] != (zlib.crc32(body) & 0xFFFFFFFF):
        raise CheckpointError("checkpoint CRC mismatch")
    r = _Reader(body)
    if r.take(4) != MAGIC:
        raise CheckpointError("bad checkpoint magic")
    version = r.u32()
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    kind = r.text()
    count = r.u32()
    tensors: dict[str, np.ndarray] = {}
    for _ in range(count):
        name = r.text()
        rank = r.u32()
        dims = tuple(r.u32() for _ in range(rank))
        n = int(np.prod(dims)) if dims else 1
        raw = r.take(4 * n)
        tensors[name] = np.frombuffer(raw, dtype="<f4").astype(np.float32).reshape(dims)
    if r.pos != len(body):
        raise CheckpointError("trailing bytes after last tensor")
    return kind, tensors


def write_checkpoint(path: str | Path, kind: str, tensors: dict[str, np.ndarray]) -> None:
    Path(path).write_bytes(save_checkpoint(kind, tensors))


def read_checkpoint(path: str | Path) -> tuple[str, dict[str, np.ndarray]]:
    return load_checkpoint(Path(path).read_bytes())

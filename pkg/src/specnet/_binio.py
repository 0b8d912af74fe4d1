"""Shared binary layout for checkpoint files.

Layout: 8-byte magic, body, then CRC32 (unsigned, little-endian) of the
body. All integers are little-endian uint32 unless noted; strings are
uint32 length + UTF-8 bytes; float/int arrays are raw little-endian values.
A file must parse to exactly its end: truncation, appended bytes, and bit
flips are all rejected.
"""
from __future__ import annotations

import struct
import zlib

import numpy as np

from .errors import CheckpointError

MAGIC_NETWORK = b"SPECNETC"
MAGIC_FOREST = b"SPECNETF"
FORMAT_VERSION = 1


class BodyWriter:
    def __init__(self):
        self._chunks: list[bytes] = []

    def u32(self, value: int) -> None:
        if not 0 <= value < 2 ** 32:
            raise CheckpointError(f"u32 out of range: {value}")
        self._chunks.append(struct.pack("<I", value))

    def text(self, value: str) -> None:
        raw = value.encode("utf-8")
        self.u32(len(raw))
        self._chunks.append(raw)

    def f64_array(self, arr) -> None:
        self._chunks.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())

    def i32_array(self, arr) -> None:
        self._chunks.append(np.ascontiguousarray(arr, dtype="<i4").tobytes())

    def i64_array(self, arr) -> None:
        self._chunks.append(np.ascontiguousarray(arr, dtype="<i8").tobytes())

    def body(self) -> bytes:
        return b"".join(self._chunks)


class BodyReader:
    def __init__(self, body: bytes, where: str):
        self._body = body
        self._pos = 0
        self._where = where

    def _take(self, n: int) -> bytes:
        if self._pos + n > len(self._body):
            raise CheckpointError(f"{self._where}: truncated (needed {n} more bytes)")
        chunk = self._body[self._pos:self._pos + n]
        self._pos += n
        return chunk

    def u32(self) -> int:
        return struct.unpack("<I", self._take(4))[0]

    def text(self) -> str:
        n = self.u32()
        try:
            return self._take(n).decode("utf-8")
        except UnicodeDecodeError:
            raise CheckpointError(f"{self._where}: invalid UTF-8 string") from None

    def f64_array(self, count: int) -> np.ndarray:
        return np.frombuffer(self._take(8 * count), dtype="<f8").astype(np.float64)

    def i32_array(self, count: int) -> np.ndarray:
        return np.frombuffer(self._take(4 * count), dtype="<i4").astype(np.int64)

    def i64_array(self, count: int) -> np.ndarray:
        return np.frombuffer(self._take(8 * count), dtype="<i8").astype(np.int64)

    def finish(self) -> None:
        if self._pos != len(self._body):
            raise CheckpointError(
                f"{self._where}: {len(self._body) - self._pos} unread bytes at end of body"
            )


def write_blob(path, magic: bytes, writer: BodyWriter) -> None:
    body = writer.body()
    crc = zlib.crc32(body) & 0xFFFFFFFF
    with open(path, "wb") as handle:
        handle.write(magic)
        handle.write(body)
        handle.write(struct.pack("<I", crc))


def read_blob(path, magic: bytes) -> BodyReader:
    with open(path, "rb") as handle:
        blob = handle.read()
    where = str(path)
    if len(blob) < len(magic) + 4:
        raise CheckpointError(f"{where}: file too short to be a checkpoint")
    if blob[:len(magic)] != magic:
        raise CheckpointError(f"{where}: bad magic {blob[:len(magic)]!r}, expected {magic!r}")
    body = blob[len(magic):-4]
    (crc_stored,) = struct.unpack("<I", blob[-4:])
    crc = zlib.crc32(body) & 0xFFFFFFFF
    if crc != crc_stored:
        raise CheckpointError(f"{where}: CRC mismatch (corrupted or trailing bytes)")
    return BodyReader(body, where)

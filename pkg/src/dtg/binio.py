"""Little-endian binary records with an FNV-1a trailer checksum.

The corpus and checkpoint file formats share these conventions: an ASCII
header line, fixed-width little-endian fields, row-major float64 arrays,
and a trailing u64 FNV-1a checksum over every preceding byte.
"""

from __future__ import annotations

import struct

import numpy as np

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


class FormatError(ValueError):
    """File does not parse as the expected binary format."""


class VersionMismatchError(FormatError):
    """Recognized format family but unsupported version header."""


class ChecksumMismatchError(FormatError):
    """Stored checksum does not match the file contents."""


def fnv1a64(data: bytes, state: int = _FNV_OFFSET) -> int:
    """64-bit FNV-1a hash of ``data``; pass a previous result to resume."""
    h = state
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & _MASK64
    return h


class RecordWriter:
    """Accumulates fields in order; ``finish`` appends the checksum."""

    def __init__(self, header: str):
        self._parts: list[bytes] = [header.encode("ascii") + b"\n"]

    def raw(self, data: bytes) -> None:
        self._parts.append(data)

    def u8(self, value: int) -> None:
        self.raw(struct.pack("<B", value))

    def u32(self, value: int) -> None:
        self.raw(struct.pack("<I", value))

    def u64(self, value: int) -> None:
        self.raw(struct.pack("<Q", value))

    def f64(self, value: float) -> None:
        self.raw(struct.pack("<d", float(value)))

    def array(self, a: np.ndarray) -> None:
        self.raw(np.ascontiguousarray(a).astype("<f8", copy=False).tobytes())

    def finish(self) -> bytes:
        body = b"".join(self._parts)
        return body + struct.pack("<Q", fnv1a64(body))


class RecordReader:
    """Validates header and checksum up front, then reads fields in order."""

    def __init__(self, data: bytes, header: str):
        expected = header.encode("ascii")
        newline = data.find(b"\n")
        if newline < 0 or len(data) < newline + 1 + 8:
            raise FormatError("file truncated before record body")
        found = data[:newline]
        if found != expected:
            family = expected.split(b" ")[0]
            if found.startswith(family + b" "):
                raise VersionMismatchError(
                    f"unsupported version {found.decode('ascii', 'replace')!r}, "
                    f"expected {header!r}"
                )
            raise FormatError(f"unrecognized header {found[:32]!r}, expected {header!r}")
        body, trailer = data[:-8], data[-8:]
        stored = struct.unpack("<Q", trailer)[0]
        computed = fnv1a64(body)
        if stored != computed:
            raise ChecksumMismatchError(
                f"checksum mismatch: stored {stored:#018x}, computed {computed:#018x}"
            )
        self._buf = body
        self._pos = newline + 1

    def _take(self, n: int) -> bytes:
        end = self._pos + n
        if end > len(self._buf):
            raise FormatError("record truncated")
        out = self._buf[self._pos:end]
        self._pos = end
        return out

    def u8(self) -> int:
        return struct.unpack("<B", self._take(1))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self._take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self._take(8))[0]

    def f64(self) -> float:
        return struct.unpack("<d", self._take(8))[0]

    def array(self, shape: tuple[int, ...]) -> np.ndarray:
        count = int(np.prod(shape, dtype=np.int64))
        raw = self._take(count * 8)
        return np.frombuffer(raw, dtype="<f8").reshape(shape).astype(np.float64)

    def expect_end(self) -> None:
        if self._pos != len(self._buf):
            raise FormatError(f"{len(self._buf) - self._pos} unexpected trailing bytes")

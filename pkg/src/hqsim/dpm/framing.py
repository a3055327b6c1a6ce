"""Binary frame encoding for the rendezvous/early-release protocol.

Frame layout (all integers big-endian)::

    [2 bytes  magic "HQ" (0x48 0x51)]
    [1 byte   version, 0x01]
    [1 byte   frame type]
    [3 bytes  payload length]
    [N bytes  payload]
    [4 bytes  CRC32 over type + length + payload]

The 3-byte length field caps payloads at 2**24 - 1 bytes.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from enum import IntEnum

MAGIC = b"HQ"
VERSION = 0x01
MAX_PAYLOAD = (1 << 24) - 1
_HEADER_LEN = 7  # magic + version + type + length
_CRC_LEN = 4


class FramingError(ValueError):
    """Raised on malformed bytes: bad magic/version/type, CRC mismatch."""


class FrameType(IntEnum):
    PUBLISH = 0x01
    LOOKUP = 0x02
    LOOKUP_REPLY = 0x03
    CONNECT = 0x04
    ACCEPT = 0x05
    WORK_ITEM = 0x06
    RESULT = 0x07
    SHUTDOWN = 0x08
    DISCONNECT = 0x09


@dataclass(frozen=True)
class Frame:
    type: FrameType
    payload: bytes = b""


def encode_frame(frame: Frame) -> bytes:
    if len(frame.payload) > MAX_PAYLOAD:
        raise FramingError(
            f"payload of {len(frame.payload)} bytes exceeds {MAX_PAYLOAD}"
        )
    length = len(frame.payload)
    body = (
        struct.pack(">B", frame.type)
        + struct.pack(">I", length)[1:]  # 3-byte big-endian length
        + frame.payload
    )
    crc = zlib.crc32(body) & 0xFFFFFFFF
    return MAGIC + struct.pack(">B", VERSION) + body + struct.pack(">I", crc)


def decode_frame(data: bytes) -> Frame:
    """Decode exactly one frame occupying the whole buffer."""
    frame, consumed = _decode_prefix(data)
    if frame is None:
        raise FramingError("truncated frame")
    if consumed != len(data):
        raise FramingError(f"{len(data) - consumed} trailing bytes after frame")
    return frame


def _decode_prefix(data: bytes) -> tuple[Frame | None, int]:
    """Decode one frame from the head of ``data``; (None, 0) if incomplete."""
    if len(data) < _HEADER_LEN:
        return None, 0
    if data[:2] != MAGIC:
        raise FramingError(f"bad magic {data[:2]!r}")
    if data[2] != VERSION:
        raise FramingError(f"unsupported version {data[2]}")
    try:
        frame_type = FrameType(data[3])
    except ValueError:
        raise FramingError(f"unknown frame type 0x{data[3]:02x}") from None
    length = int.from_bytes(data[4:7], "big")
    total = _HEADER_LEN + length + _CRC_LEN
    if len(data) < total:
        return None, 0
    body = data[3 : _HEADER_LEN + length]
    payload = data[_HEADER_LEN : _HEADER_LEN + length]
    expected = int.from_bytes(data[_HEADER_LEN + length : total], "big")
    actual = zlib.crc32(body) & 0xFFFFFFFF
    if actual != expected:
        raise FramingError(
            f"CRC mismatch: expected 0x{expected:08x}, got 0x{actual:08x}"
        )
    return Frame(type=frame_type, payload=bytes(payload)), total


class StreamDecoder:
    """Incremental decoder for a byte stream carrying consecutive frames."""

    def __init__(self) -> None:
        self._buffer = bytearray()

    def feed(self, data: bytes) -> list[Frame]:
        """Absorb bytes and return every frame completed by them."""
        self._buffer.extend(data)
        frames: list[Frame] = []
        while True:
            frame, consumed = _decode_prefix(bytes(self._buffer))
            if frame is None:
                return frames
            del self._buffer[:consumed]
            frames.append(frame)

    @property
    def pending_bytes(self) -> int:
        return len(self._buffer)

"""Single-file section container.

Layout, all little-endian:

    magic (8 bytes) | version u32 | section count u32 | sections...

Each section is::

    name length u16 | name utf-8 | kind u8 | payload length u64 | payload | crc32 u32

Text sections hold utf-8; tensor sections hold a u8 rank, u64 dims and raw
row-major values. The crc covers kind byte plus payload, so truncation and
bit flips surface as errors instead of silently wrong arrays.
"""

from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

FORMAT_VERSION = 1

KIND_TEXT = 0
KIND_BYTES = 1
_TENSOR_KINDS = {
    np.dtype(np.float32): 2,
    np.dtype(np.float64): 3,
    np.dtype(np.int32): 4,
    np.dtype(np.int64): 5,
    np.dtype(np.uint8): 6,
}
_KIND_DTYPES = {v: k for k, v in _TENSOR_KINDS.items()}


class ContainerError(ValueError):
    """Malformed, truncated or corrupted container file."""


def _encode_payload(value):
    if isinstance(value, str):
        return KIND_TEXT, value.encode("utf-8")
    if isinstance(value, (bytes, bytearray)):
        return KIND_BYTES, bytes(value)
    arr = np.ascontiguousarray(value)
    if arr.dtype not in _TENSOR_KINDS:
        raise TypeError(f"unsupported tensor dtype {arr.dtype}")
    header = struct.pack("<B", arr.ndim) + struct.pack(f"<{arr.ndim}Q", *arr.shape)
    if arr.dtype.byteorder == ">":
        arr = arr.astype(arr.dtype.newbyteorder("<"))
    return _TENSOR_KINDS[arr.dtype], header + arr.tobytes()


def _decode_payload(kind, payload):
    if kind == KIND_TEXT:
        return payload.decode("utf-8")
    if kind == KIND_BYTES:
        return payload
    if kind not in _KIND_DTYPES:
        raise ContainerError(f"unknown section kind {kind}")
    ndim = struct.unpack_from("<B", payload, 0)[0]
    shape = struct.unpack_from(f"<{ndim}Q", payload, 1)
    offset = 1 + 8 * ndim
    dtype = _KIND_DTYPES[kind].newbyteorder("<")
    arr = np.frombuffer(payload, dtype=dtype, offset=offset).reshape(shape)
    return arr.astype(_KIND_DTYPES[kind], copy=True)


def write_container(path, magic: bytes, sections):
    """Write named sections; ``sections`` is an iterable of (name, value)."""
    if len(magic) != 8:
        raise ValueError("magic must be exactly 8 bytes")
    sections = list(sections)
    blob = bytearray()
    blob += magic
    blob += struct.pack("<II", FORMAT_VERSION, len(sections))
    for name, value in sections:
        encoded_name = name.encode("utf-8")
        kind, payload = _encode_payload(value)
        blob += struct.pack("<H", len(encoded_name))
        blob += encoded_name
        blob += struct.pack("<BQ", kind, len(payload))
        blob += payload
        blob += struct.pack("<I", zlib.crc32(bytes([kind]) + payload))
    Path(path).write_bytes(bytes(blob))


def read_container(path, magic: bytes) -> dict:
    """Read all sections back as an insertion-ordered name -> value dict."""
    data = Path(path).read_bytes()
    if len(data) < 16:
        raise ContainerError(f"{path}: file too short to be a container")
    if data[:8] != magic:
        raise ContainerError(
            f"{path}: bad magic {data[:8]!r}, expected {magic!r}"
        )
    version, count = struct.unpack_from("<II", data, 8)
    if version != FORMAT_VERSION:
        raise ContainerError(f"{path}: unsupported format version {version}")
    sections: dict = {}
    offset = 16
    for _ in range(count):
        try:
            (name_len,) = struct.unpack_from("<H", data, offset)
            offset += 2
            name = data[offset : offset + name_len].decode("utf-8")
            offset += name_len
            kind, payload_len = struct.unpack_from("<BQ", data, offset)
            offset += 9
            payload = data[offset : offset + payload_len]
            if len(payload) != payload_len:
                raise ContainerError(f"{path}: truncated section {name!r}")
            offset += payload_len
            (crc,) = struct.unpack_from("<I", data, offset)
            offset += 4
        except struct.error as exc:
            raise ContainerError(f"{path}: truncated container") from exc
        if zlib.crc32(bytes([kind]) + payload) != crc:
            raise ContainerError(f"{path}: checksum mismatch in section {name!r}")
        sections[name] = _decode_payload(kind, payload)
    return sections

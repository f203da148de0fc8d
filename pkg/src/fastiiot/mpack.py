"""Minimal MessagePack encoder/decoder backing the binary wire format.

The encoder emits the canonical smallest representation for the types the
data model needs (maps, strings, 64-bit ints, float64, bool, nil).  The
decoder accepts the full MessagePack type spectrum so that payloads from
newer producers (extra keys with arbitrary values) still parse; unknown
structures surface as plain Python objects for the schema layer to ignore
or reject.

No external dependency: no msgpack implementation is available in the
target environments, and the wire format is small enough to pin exactly.
"""

from __future__ import annotations

import struct
from typing import Any

_MAX_DEPTH = 32
_UINT64_MAX = 2**64 - 1
_INT64_MIN = -(2**63)


class Ext:
    """Opaque carrier for MessagePack extension values (decoded, never emitted)."""

    __slots__ = ("code", "data")

    def __init__(self, code: int, data: bytes):
        self.code = code
        self.data = data

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Ext) and (self.code, self.data) == (other.code, other.data)

    def __repr__(self) -> str:
        return f"Ext(code={self.code}, data={self.data!r})"


def packb(obj: Any) -> bytes:
    """Serialize ``obj`` to MessagePack bytes (smallest canonical form)."""
    out = bytearray()
    _pack(obj, out, 0)
    return bytes(out)


def _pack(obj: Any, out: bytearray, depth: int) -> None:
    if depth > _MAX_DEPTH:
        raise ValueError("nesting too deep to pack")
    if obj is None:
        out.append(0xC0)
    elif obj is True:
        out.append(0xC3)
    elif obj is False:
        out.append(0xC2)
    elif isinstance(obj, int):
        _pack_int(obj, out)
    elif isinstance(obj, float):
        out.append(0xCB)
        out += struct.pack(">d", obj)
    elif isinstance(obj, str):
        _pack_str(obj, out)
    elif isinstance(obj, (bytes, bytearray)):
        _pack_bin(bytes(obj), out)
    elif isinstance(obj, dict):
        n = len(obj)
        if n <= 15:
            out.append(0x80 | n)
        elif n <= 0xFFFF:
            out += struct.pack(">BH", 0xDE, n)
        else:
            out += struct.pack(">BI", 0xDF, n)
        for key, value in obj.items():
            _pack(key, out, depth + 1)
            _pack(value, out, depth + 1)
    elif isinstance(obj, (list, tuple)):
        n = len(obj)
        if n <= 15:
            out.append(0x90 | n)
        elif n <= 0xFFFF:
            out += struct.pack(">BH", 0xDC, n)
        else:
            out += struct.pack(">BI", 0xDD, n)
        for item in obj:
            _pack(item, out, depth + 1)
    else:
        raise TypeError(f"cannot pack object of type {type(obj).__name__}")


def _pack_int(v: int, out: bytearray) -> None:
    if v >= 0:
        if v <= 0x7F:
            out.append(v)
        elif v <= 0xFF:
            out += struct.pack(">BB", 0xCC, v)
        elif v <= 0xFFFF:
            out += struct.pack(">BH", 0xCD, v)
        elif v <= 0xFFFFFFFF:
            out += struct.pack(">BI", 0xCE, v)
        elif v <= _UINT64_MAX:
            out += struct.pack(">BQ", 0xCF, v)
        else:
            raise OverflowError("integer too large for MessagePack")
    else:
        if v >= -32:
            out.append(v & 0xFF)
        elif v >= -(2**7):
            out += struct.pack(">Bb", 0xD0, v)
        elif v >= -(2**15):
            out += struct.pack(">Bh", 0xD1, v)
        elif v >= -(2**31):
            out += struct.pack(">Bi", 0xD2, v)
        elif v >= _INT64_MIN:
            out += struct.pack(">Bq", 0xD3, v)
        else:
            raise OverflowError("integer too small for MessagePack")


def _pack_str(v: str, out: bytearray) -> None:
    data = v.encode("utf-8")
    n = len(data)
    if n <= 31:
        out.append(0xA0 | n)
    elif n <= 0xFF:
        out += struct.pack(">BB", 0xD9, n)
    elif n <= 0xFFFF:
        out += struct.pack(">BH", 0xDA, n)
    else:
        out += struct.pack(">BI", 0xDB, n)
    out += data


def _pack_bin(v: bytes, out: bytearray) -> None:
    n = len(v)
    if n <= 0xFF:
        out += struct.pack(">BB", 0xC4, n)
    elif n <= 0xFFFF:
        out += struct.pack(">BH", 0xC5, n)
    else:
        out += struct.pack(">BI", 0xC6, n)
    out += v


def unpackb(data: bytes) -> Any:
    """Deserialize one MessagePack object; trailing bytes are an error."""
    if not isinstance(data, (bytes, bytearray, memoryview)):
        raise TypeError("unpackb expects bytes")
    view = memoryview(bytes(data))
    obj, pos = _unpack(view, 0, 0)
    if pos != len(view):
        raise ValueError(f"{len(view) - pos} trailing bytes after MessagePack object")
    return obj


def _take(view: memoryview, pos: int, n: int) -> tuple[bytes, int]:
    end = pos + n
    if end > len(view):
        raise ValueError("truncated MessagePack data")
    return bytes(view[pos:end]), end


def _unpack(view: memoryview, pos: int, depth: int) -> tuple[Any, int]:
    if depth > _MAX_DEPTH:
        raise ValueError("MessagePack nesting too deep")
    if pos >= len(view):
        raise ValueError("truncated MessagePack data")
    tag = view[pos]
    pos += 1

    if tag <= 0x7F:  # positive fixint
        return tag, pos
    if tag >= 0xE0:  # negative fixint
        return tag - 0x100, pos
    if 0x80 <= tag <= 0x8F:
        return _unpack_map(view, pos, tag & 0x0F, depth)
    if 0x90 <= tag <= 0x9F:
        return _unpack_array(view, pos, tag & 0x0F, depth)
    if 0xA0 <= tag <= 0xBF:
        return _unpack_str(view, pos, tag & 0x1F)

    if tag == 0xC0:
        return None, pos
    if tag == 0xC2:
        return False, pos
    if tag == 0xC3:
        return True, pos
    if tag in (0xC4, 0xC5, 0xC6):
        n, pos = _unpack_len(view, pos, 1 << (tag - 0xC4))
        return _take(view, pos, n)
    if tag in (0xC7, 0xC8, 0xC9):
        n, pos = _unpack_len(view, pos, 1 << (tag - 0xC7))
        code_raw, pos = _take(view, pos, 1)
        payload, pos = _take(view, pos, n)
        return Ext(struct.unpack(">b", code_raw)[0], payload), pos
    if tag == 0xCA:
        raw, pos = _take(view, pos, 4)
        return struct.unpack(">f", raw)[0], pos
    if tag == 0xCB:
        raw, pos = _take(view, pos, 8)
        return struct.unpack(">d", raw)[0], pos
    if 0xCC <= tag <= 0xCF:
        n = 1 << (tag - 0xCC)
        raw, pos = _take(view, pos, n)
        return int.from_bytes(raw, "big", signed=False), pos
    if 0xD0 <= tag <= 0xD3:
        n = 1 << (tag - 0xD0)
        raw, pos = _take(view, pos, n)
        return int.from_bytes(raw, "big", signed=True), pos
    if 0xD4 <= tag <= 0xD8:
        n = 1 << (tag - 0xD4)
        code_raw, pos = _take(view, pos, 1)
        payload, pos = _take(view, pos, n)
        return Ext(struct.unpack(">b", code_raw)[0], payload), pos
    if tag in (0xD9, 0xDA, 0xDB):
        n, pos = _unpack_len(view, pos, 1 << (tag - 0xD9))
        return _unpack_str(view, pos, n)
    if tag == 0xDC:
        n, pos = _unpack_len(view, pos, 2)
        return _unpack_array(view, pos, n, depth)
    if tag == 0xDD:
        n, pos = _unpack_len(view, pos, 4)
        return _unpack_array(view, pos, n, depth)
    if tag == 0xDE:
        n, pos = _unpack_len(view, pos, 2)
        return _unpack_map(view, pos, n, depth)
    if tag == 0xDF:
        n, pos = _unpack_len(view, pos, 4)
        return _unpack_map(view, pos, n, depth)

    raise ValueError(f"invalid MessagePack type byte 0x{tag:02x}")


def _unpack_len(view: memoryview, pos: int, width: int) -> tuple[int, int]:
    raw, pos = _take(view, pos, width)
    return int.from_bytes(raw, "big", signed=False), pos


def _unpack_str(view: memoryview, pos: int, n: int) -> tuple[str, int]:
    raw, pos = _take(view, pos, n)
    try:
        return raw.decode("utf-8"), pos
    except UnicodeDecodeError as exc:
        raise ValueError(f"invalid UTF-8 in MessagePack string: {exc}") from exc


def _unpack_array(view: memoryview, pos: int, n: int, depth: int) -> tuple[list, int]:
    items = []
    for _ in range(n):
        item, pos = _unpack(view, pos, depth + 1)
        items.append(item)
    return items, pos


def _unpack_map(view: memoryview, pos: int, n: int, depth: int) -> tuple[dict, int]:
    result: dict[Any, Any] = {}
    for _ in range(n):
        key, pos = _unpack(view, pos, depth + 1)
        if isinstance(key, (dict, list)):
            raise ValueError("MessagePack map keys must be scalar")
        value, pos = _unpack(view, pos, depth + 1)
        result[key] = value
    return result, pos

"""LEB128 variable-length integer coding as used by the Wasm binary format."""

from __future__ import annotations

from .errors import MalformedVarint


def decode_leb128(data: bytes, signed: bool = False, max_bits: int = 32, pos: int = 0) -> tuple[int, int]:
    """Decode one LEB128 integer starting at ``pos``.

    Returns ``(value, consumed)``. Encodings longer than ``ceil(max_bits/7)``
    bytes, or whose final byte carries bits outside the target width, raise
    :class:`MalformedVarint`.
    """
    max_len = -(-max_bits // 7)
    result = 0
    shift = 0
    for i in range(max_len):
        if pos + i >= len(data):
            raise MalformedVarint("varint runs past end of input")
        byte = data[pos + i]
        result |= (byte & 0x7F) << shift
        shift += 7
        if not byte & 0x80:
            break
    else:
        raise MalformedVarint(f"varint longer than {max_len} bytes")

    consumed = i + 1
    if consumed == max_len:
        # bits of the last byte beyond max_bits must be zero (unsigned) or a
        # sign extension of the top payload bit (signed)
        used = max_bits - 7 * (max_len - 1)
        extra = byte & 0x7F
        if signed:
            top = extra >> (used - 1)
            expected = (0x7F >> (used - 1)) if top & 1 else 0
            if top != expected:
                raise MalformedVarint("unused bits of signed varint are not a sign extension")
        elif extra >> used:
            raise MalformedVarint("unused bits of unsigned varint are nonzero")

    if signed and byte & 0x40:
        result -= 1 << shift
    if signed:
        # fold into range (only matters for the last-byte case handled above)
        bound = 1 << (max_bits - 1)
        if not -bound <= result < bound:
            raise MalformedVarint("signed varint out of range")
    return result, consumed


def encode_uleb128(value: int) -> bytes:
    if value < 0:
        raise ValueError("unsigned LEB128 needs a non-negative value")
    out = bytearray()
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return bytes(out)


def encode_sleb128(value: int) -> bytes:
    out = bytearray()
    while True:
        byte = value & 0x7F
        value >>= 7
        done = (value == 0 and not byte & 0x40) or (value == -1 and byte & 0x40)
        out.append(byte if done else byte | 0x80)
        if done:
            return bytes(out)

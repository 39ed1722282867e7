"""EOSIO account-name encoding (base32 packed into a uint64)."""

from __future__ import annotations

from ..errors import InvalidNameChar, NameTooLong

_CHARS = ".12345abcdefghijklmnopqrstuvwxyz"


def _symbol(c: str) -> int:
    if "a" <= c <= "z":
        return ord(c) - ord("a") + 6
    if "1" <= c <= "5":
        return ord(c) - ord("1") + 1
    if c == ".":
        return 0
    raise InvalidNameChar(f"invalid character {c!r} in account name")


def encode_name(text: str) -> int:
    """Encode an account name as an unsigned 64-bit integer.

    The first twelve characters take five bits each, packed from the most
    significant end; a thirteenth character fills the low four bits.
    """
    if len(text) > 13:
        raise NameTooLong(f"account name {text!r} is longer than 13 characters")
    value = 0
    for i, c in enumerate(text):
        sym = _symbol(c)
        if i < 12:
            value |= sym << (64 - 5 * (i + 1))
        else:
            if sym > 0x0F:
                raise InvalidNameChar(f"13th character {c!r} must be one of .1-5a-j")
            value |= sym
    return value


def decode_name(value: int) -> str:
    value &= (1 << 64) - 1
    chars = []
    for i in range(13):
        if i < 12:
            sym = (value >> (64 - 5 * (i + 1))) & 0x1F
        else:
            sym = value & 0x0F
        chars.append(_CHARS[sym])
    return "".join(chars).rstrip(".")


def signed64(value: int) -> int:
    return value - (1 << 64) if value >= 1 << 63 else value

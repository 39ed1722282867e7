"""Concrete Wasm numeric semantics on unsigned bit patterns.

Integer helpers follow SMT-LIB conventions for division by zero so that the
concrete evaluator agrees with the solver; the engine traps before a real
division by zero reaches them. Float helpers take and return raw bit
patterns; NaN results are canonicalised.
"""

from __future__ import annotations

import math
import struct

import numpy as np

F32_NAN = 0x7FC00000
F64_NAN = 0x7FF8000000000000


def mask(width: int) -> int:
    return (1 << width) - 1


def to_signed(value: int, width: int) -> int:
    value &= mask(width)
    return value - (1 << width) if value >> (width - 1) else value


def to_unsigned(value: int, width: int) -> int:
    return value & mask(width)


def _sdiv(a: int, b: int, w: int) -> int:
    sa, sb = to_signed(a, w), to_signed(b, w)
    if sb == 0:
        return mask(w) if sa >= 0 else 1
    q = abs(sa) // abs(sb)
    return to_unsigned(q if (sa < 0) == (sb < 0) else -q, w)


def _srem(a: int, b: int, w: int) -> int:
    sa, sb = to_signed(a, w), to_signed(b, w)
    if sb == 0:
        return a
    r = abs(sa) % abs(sb)
    return to_unsigned(-r if sa < 0 else r, w)


def _rotl(a: int, b: int, w: int) -> int:
    k = b % w
    return ((a << k) | (a >> (w - k))) & mask(w)


def int_binary(op: str, a: int, b: int, w: int) -> int:
    m = mask(w)
    if op == "add":
        return (a + b) & m
    if op == "sub":
        return (a - b) & m
    if op == "mul":
        return (a * b) & m
    if op == "div_u":
        return m if b == 0 else a // b
    if op == "div_s":
        return _sdiv(a, b, w)
    if op == "rem_u":
        return a if b == 0 else a % b
    if op == "rem_s":
        return _srem(a, b, w)
    if op == "and":
        return a & b
    if op == "or":
        return a | b
    if op == "xor":
        return a ^ b
    if op == "shl":
        return (a << (b % w)) & m
    if op == "shr_u":
        return a >> (b % w)
    if op == "shr_s":
        return to_unsigned(to_signed(a, w) >> (b % w), w)
    if op == "rotl":
        return _rotl(a, b, w)
    if op == "rotr":
        return _rotl(a, w - (b % w), w)
    raise ValueError(f"unknown integer operator {op}")


def int_unary(op: str, a: int, w: int) -> int:
    if op == "clz":
        return w - a.bit_length()
    if op == "ctz":
        return w if a == 0 else (a & -a).bit_length() - 1
    if op == "popcnt":
        return bin(a).count("1")
    if op == "not":
        return ~a & mask(w)
    if op == "neg":
        return -a & mask(w)
    raise ValueError(f"unknown integer operator {op}")


def int_compare(rel: str, a: int, b: int, w: int) -> bool:
    if rel == "eq":
        return a == b
    if rel == "ne":
        return a != b
    if rel.endswith("_s"):
        a, b = to_signed(a, w), to_signed(b, w)
    base = rel[:2]
    if base == "lt":
        return a < b
    if base == "gt":
        return a > b
    if base == "le":
        return a <= b
    if base == "ge":
        return a >= b
    raise ValueError(f"unknown relation {rel}")


# ---------------------------------------------------------------- floats

def bits_to_float(bits: int, w: int) -> float:
    if w == 32:
        return struct.unpack("<f", struct.pack("<I", bits))[0]
    return struct.unpack("<d", struct.pack("<Q", bits))[0]


def float_to_bits(value, w: int) -> int:
    if w == 32:
        with np.errstate(all="ignore"):
            v = np.float32(value)
        if np.isnan(v):
            return F32_NAN
        return int(v.view(np.uint32))
    v = float(value)
    if math.isnan(v):
        return F64_NAN
    return struct.unpack("<Q", struct.pack("<d", v))[0]


def _np(bits: int, w: int):
    return np.float32(bits_to_float(bits, 32)) if w == 32 else np.float64(bits_to_float(bits, 64))


def _is_nan_bits(bits: int, w: int) -> bool:
    if w == 32:
        return (bits & 0x7F800000) == 0x7F800000 and bits & 0x007FFFFF != 0
    return (bits & 0x7FF0000000000000) == 0x7FF0000000000000 and bits & 0x000FFFFFFFFFFFFF != 0


def float_binary(op: str, a: int, b: int, w: int) -> int:
    sign = 1 << (w - 1)
    if op == "copysign":
        return (a & ~sign & mask(w)) | (b & sign)
    if op in ("min", "max"):
        if _is_nan_bits(a, w) or _is_nan_bits(b, w):
            return F32_NAN if w == 32 else F64_NAN
        fa, fb = bits_to_float(a, w), bits_to_float(b, w)
        if fa == fb == 0.0:
            # -0 < +0 for min/max purposes
            neg = (a & sign) or (b & sign) if op == "min" else (a & sign) and (b & sign)
            return sign if neg else 0
        pick = a if (fa < fb) == (op == "min") else b
        return pick
    x, y = _np(a, w), _np(b, w)
    with np.errstate(all="ignore"):
        if op == "add":
            r = x + y
        elif op == "sub":
            r = x - y
        elif op == "mul":
            r = x * y
        elif op == "div":
            r = x / y
        else:
            raise ValueError(f"unknown float operator {op}")
    return float_to_bits(r, w)


def float_unary(op: str, a: int, w: int) -> int:
    sign = 1 << (w - 1)
    if op == "abs":
        return a & ~sign & mask(w)
    if op == "neg":
        return a ^ sign
    x = _np(a, w)
    with np.errstate(all="ignore"):
        if op == "ceil":
            r = np.ceil(x)
        elif op == "floor":
            r = np.floor(x)
        elif op == "trunc":
            r = np.trunc(x)
        elif op == "nearest":
            r = np.rint(x)
        elif op == "sqrt":
            r = np.sqrt(x)
        else:
            raise ValueError(f"unknown float operator {op}")
    return float_to_bits(r, w)


def float_compare(rel: str, a: int, b: int, w: int) -> bool:
    fa, fb = bits_to_float(a, w), bits_to_float(b, w)
    return {
        "eq": fa == fb,
        "ne": fa != fb,
        "lt": fa < fb,
        "gt": fa > fb,
        "le": fa <= fb,
        "ge": fa >= fb,
    }[rel]


def int_to_float_bits(value: int, w: int) -> int:
    """Correctly rounded (nearest-even) integer to float conversion."""
    if w == 64:
        return float_to_bits(float(value), 64)
    if value == 0:
        return 0
    neg = value < 0
    mag = -value if neg else value
    excess = mag.bit_length() - 24
    if excess > 0:
        q, r = mag >> excess, mag & mask(excess)
        half = 1 << (excess - 1)
        if r > half or (r == half and q & 1):
            q += 1
        mag = q << excess
    bits = float_to_bits(float(mag), 32)
    return bits | 0x80000000 if neg else bits


def trunc_float(bits: int, fw: int, iw: int, signed: bool, saturating: bool) -> int | None:
    """Float to integer truncation; ``None`` means the operation traps."""
    if _is_nan_bits(bits, fw):
        return 0 if saturating else None
    f = bits_to_float(bits, fw)
    lo, hi = (-(1 << (iw - 1)), (1 << (iw - 1)) - 1) if signed else (0, mask(iw))
    if math.isinf(f):
        if not saturating:
            return None
        return to_unsigned(lo if f < 0 else hi, iw)
    t = math.trunc(f)
    if t < lo or t > hi:
        if not saturating:
            return None
        t = lo if t < lo else hi
    return to_unsigned(t, iw)


def demote(bits: int) -> int:
    if _is_nan_bits(bits, 64):
        return F32_NAN
    with np.errstate(all="ignore"):
        return float_to_bits(np.float32(bits_to_float(bits, 64)), 32)


def promote(bits: int) -> int:
    if _is_nan_bits(bits, 32):
        return F64_NAN
    return float_to_bits(float(bits_to_float(bits, 32)), 64)

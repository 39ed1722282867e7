"""Instruction re-encoder, a debug aid for checking the decoder."""

from __future__ import annotations

import struct

from . import opcodes as op
from .leb128 import encode_sleb128, encode_uleb128
from .module import VALTYPE_CODES, Instruction


def _blocktype(bt) -> bytes:
    return b"\x40" if bt is None else bytes([VALTYPE_CODES[bt]])


def encode_instructions(seq, terminate: bool = True) -> bytes:
    """Encode an instruction tree back to binary (with trailing ``end``)."""
    out = bytearray()
    for ins in seq:
        _encode_one(ins, out)
    if terminate:
        out.append(0x0B)
    return bytes(out)


def _encode_one(ins: Instruction, out: bytearray) -> None:
    code, kind = op.BY_NAME[ins.name]
    if isinstance(code, tuple):
        out.append(code[0])
        out += encode_uleb128(code[1])
        return
    out.append(code)
    imm = ins.imm
    if kind == op.BLOCK:
        out += _blocktype(imm)
        out += encode_instructions(ins.body, terminate=False)
        if ins.else_body is not None:
            out.append(0x05)
            out += encode_instructions(ins.else_body, terminate=False)
        out.append(0x0B)
    elif kind in (op.LABEL, op.FUNC, op.LOCAL, op.GLOBAL):
        out += encode_uleb128(imm)
    elif kind == op.BR_TABLE:
        labels, default = imm
        out += encode_uleb128(len(labels))
        for lbl in labels:
            out += encode_uleb128(lbl)
        out += encode_uleb128(default)
    elif kind == op.CALL_INDIRECT:
        out += encode_uleb128(imm) + b"\x00"
    elif kind == op.MEMARG:
        out += encode_uleb128(imm[0]) + encode_uleb128(imm[1])
    elif kind == op.MEMIDX:
        out.append(0)
    elif kind in (op.I32, op.I64):
        out += encode_sleb128(imm)
    elif kind == op.F32:
        out += struct.pack("<I", imm)
    elif kind == op.F64:
        out += struct.pack("<Q", imm)

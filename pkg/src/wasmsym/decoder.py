"""Wasm 1.0 binary decoder."""

from __future__ import annotations

import struct

from . import opcodes as op
from .errors import BadMagic, BadVersion, DecodeError, MalformedSection
from .leb128 import decode_leb128
from .module import (
    EXTERNAL_KINDS,
    FUNC,
    GLOBAL,
    MEMORY,
    TABLE,
    VALTYPES,
    DataSegment,
    ElementSegment,
    Export,
    Function,
    FuncType,
    Global,
    Import,
    Instruction,
    Limits,
    Module,
    Table,
)

MAGIC = b"\x00asm"
VERSION = b"\x01\x00\x00\x00"
MAX_LOCALS = 50_000


class _Reader:
    __slots__ = ("data", "pos", "end")

    def __init__(self, data: bytes, pos: int = 0, end: int | None = None):
        self.data = data
        self.pos = pos
        self.end = len(data) if end is None else end

    def at_end(self) -> bool:
        return self.pos >= self.end

    def byte(self) -> int:
        if self.pos >= self.end:
            raise MalformedSection("unexpected end of section")
        b = self.data[self.pos]
        self.pos += 1
        return b

    def raw(self, n: int) -> bytes:
        if self.pos + n > self.end:
            raise MalformedSection("unexpected end of section")
        chunk = bytes(self.data[self.pos:self.pos + n])
        self.pos += n
        return chunk

    def _leb(self, signed: bool, bits: int) -> int:
        value, used = decode_leb128(self.data[:self.end], signed=signed, max_bits=bits, pos=self.pos)
        self.pos += used
        return value

    def u32(self) -> int:
        return self._leb(False, 32)

    def s32(self) -> int:
        return self._leb(True, 32)

    def s33(self) -> int:
        return self._leb(True, 33)

    def s64(self) -> int:
        return self._leb(True, 64)

    def name(self) -> str:
        raw = self.raw(self.u32())
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedSection(f"invalid UTF-8 name: {exc}") from None

    def vec(self, item):
        return [item() for _ in range(self.u32())]

    def valtype(self) -> str:
        code = self.byte()
        if code not in VALTYPES:
            raise MalformedSection(f"bad value type 0x{code:02x}")
        return VALTYPES[code]

    def limits(self) -> Limits:
        flag = self.byte()
        if flag == 0:
            return Limits(self.u32())
        if flag == 1:
            return Limits(self.u32(), self.u32())
        raise MalformedSection(f"bad limits flag {flag}")


def _decode_blocktype(r: _Reader):
    b = r.data[r.pos] if r.pos < r.end else None
    if b == 0x40:
        r.pos += 1
        return None
    if b in VALTYPES:
        r.pos += 1
        return VALTYPES[b]
    raise MalformedSection("multi-value block types are not Wasm 1.0")


def _decode_seq(r: _Reader, depth: int, terminators: tuple[str, ...]) -> tuple[list[Instruction], str]:
    """Decode until one of ``terminators`` (``end`` / ``else``); returns (seq, terminator)."""
    out: list[Instruction] = []
    while True:
        code = r.byte()
        if code == op.PREFIX_FC:
            sub = r.u32()
            if sub not in op.FC_OPCODES:
                raise MalformedSection(f"unknown opcode 0xfc {sub}")
            out.append(Instruction(op.FC_OPCODES[sub]))
            continue
        entry = op.OPCODES.get(code)
        if entry is None:
            raise MalformedSection(f"unknown opcode 0x{code:02x}")
        name, kind = entry
        if name in ("end", "else"):
            if name not in terminators:
                raise MalformedSection(f"unexpected '{name}'")
            return out, name
        if kind == op.BLOCK:
            bt = _decode_blocktype(r)
            if name == "if":
                body, term = _decode_seq(r, depth + 1, ("end", "else"))
                else_body = None
                if term == "else":
                    else_body, _ = _decode_seq(r, depth + 1, ("end",))
                out.append(Instruction(name, bt, tuple(body), tuple(else_body) if else_body is not None else None))
            else:
                body, _ = _decode_seq(r, depth + 1, ("end",))
                out.append(Instruction(name, bt, tuple(body)))
            continue
        if kind == op.NONE:
            imm = None
        elif kind == op.LABEL:
            imm = r.u32()
            if imm > depth:
                raise MalformedSection(f"label depth {imm} exceeds nesting {depth}")
        elif kind == op.BR_TABLE:
            labels = tuple(r.vec(r.u32))
            default = r.u32()
            if any(lbl > depth for lbl in labels) or default > depth:
                raise MalformedSection("br_table label out of range")
            imm = (labels, default)
        elif kind in (op.FUNC, op.LOCAL, op.GLOBAL):
            imm = r.u32()
        elif kind == op.CALL_INDIRECT:
            imm = r.u32()
            if r.byte() != 0:
                raise MalformedSection("call_indirect reserved byte must be zero")
        elif kind == op.MEMARG:
            imm = (r.u32(), r.u32())
        elif kind == op.MEMIDX:
            if r.byte() != 0:
                raise MalformedSection("memory index must be zero")
            imm = None
        elif kind == op.I32:
            imm = r.s32()
        elif kind == op.I64:
            imm = r.s64()
        elif kind == op.F32:
            imm = struct.unpack("<I", r.raw(4))[0]
        elif kind == op.F64:
            imm = struct.unpack("<Q", r.raw(8))[0]
        else:  # pragma: no cover
            raise AssertionError(kind)
        out.append(Instruction(name, imm))


def decode_expr(r: _Reader) -> tuple[Instruction, ...]:
    seq, _ = _decode_seq(r, 0, ("end",))
    return tuple(seq)


def decode_instructions(data: bytes) -> tuple[Instruction, ...]:
    """Decode a bare instruction sequence terminated by ``end``."""
    r = _Reader(data)
    seq = decode_expr(r)
    if not r.at_end():
        raise MalformedSection("trailing bytes after expression")
    return seq


def _read_import(r: _Reader) -> Import:
    mod = r.name()
    name = r.name()
    kind_code = r.byte()
    kind = EXTERNAL_KINDS.get(kind_code)
    if kind == FUNC:
        desc = r.u32()
    elif kind == TABLE:
        elem = r.byte()
        if elem != 0x70:
            raise MalformedSection("table element type must be funcref")
        desc = ("funcref", r.limits())
    elif kind == MEMORY:
        desc = r.limits()
    elif kind == GLOBAL:
        vt = r.valtype()
        desc = (vt, _mutability(r))
    else:
        raise MalformedSection(f"bad import kind {kind_code}")
    return Import(mod, name, kind, desc)


def _mutability(r: _Reader) -> bool:
    m = r.byte()
    if m not in (0, 1):
        raise MalformedSection("bad global mutability")
    return bool(m)


def _read_code(r: _Reader) -> tuple[tuple[str, ...], tuple[Instruction, ...]]:
    size = r.u32()
    end = r.pos + size
    if end > r.end:
        raise MalformedSection("code body exceeds section")
    body = _Reader(r.data, r.pos, end)
    locals_: list[str] = []
    for _ in range(body.u32()):
        n = body.u32()
        vt = body.valtype()
        if len(locals_) + n > MAX_LOCALS:
            raise MalformedSection("too many locals")
        locals_.extend([vt] * n)
    instrs = decode_expr(body)
    if body.pos != end:
        raise MalformedSection("code body size mismatch")
    r.pos = end
    return tuple(locals_), instrs


def decode_module(data: bytes) -> Module:
    """Decode a complete ``.wasm`` binary into a :class:`Module`."""
    data = bytes(data)
    if data[:4] != MAGIC:
        raise BadMagic(f"bad magic {data[:4]!r}")
    if data[4:8] != VERSION:
        raise BadVersion(f"unsupported version {data[4:8]!r}")

    m = Module()
    r = _Reader(data, 8)
    func_type_indices: list[int] = []
    codes: list[tuple[tuple[str, ...], tuple[Instruction, ...]]] | None = None
    last_id = 0
    while not r.at_end():
        sid = r.byte()
        size = r.u32()
        end = r.pos + size
        if end > len(data):
            raise MalformedSection(f"section {sid} length exceeds input")
        s = _Reader(data, r.pos, end)
        if sid != 0:
            if sid > 11:
                raise MalformedSection(f"unknown section id {sid}")
            if sid <= last_id:
                raise MalformedSection(f"section {sid} out of order")
            last_id = sid
        if sid == 0:
            name = s.name()
            m.customs.append((name, s.raw(end - s.pos)))
        elif sid == 1:
            def functype():
                if s.byte() != 0x60:
                    raise MalformedSection("function type must start with 0x60")
                params = tuple(s.vec(s.valtype))
                results = tuple(s.vec(s.valtype))
                if len(results) > 1:
                    raise MalformedSection("multi-value results are not Wasm 1.0")
                return FuncType(params, results)
            m.types = s.vec(functype)
        elif sid == 2:
            m.imports = s.vec(lambda: _read_import(s))
        elif sid == 3:
            func_type_indices = s.vec(s.u32)
        elif sid == 4:
            def table():
                if s.byte() != 0x70:
                    raise MalformedSection("table element type must be funcref")
                return Table("funcref", s.limits())
            m.tables = s.vec(table)
        elif sid == 5:
            m.memories = s.vec(s.limits)
        elif sid == 6:
            def glob():
                vt = s.valtype()
                mut = _mutability(s)
                return Global(vt, mut, decode_expr(s))
            m.globals = s.vec(glob)
        elif sid == 7:
            def export():
                name = s.name()
                kind = EXTERNAL_KINDS.get(s.byte())
                if kind is None:
                    raise MalformedSection("bad export kind")
                return Export(name, kind, s.u32())
            m.exports = s.vec(export)
        elif sid == 8:
            m.start = s.u32()
        elif sid == 9:
            def element():
                return ElementSegment(s.u32(), decode_expr(s), tuple(s.vec(s.u32)))
            m.elements = s.vec(element)
        elif sid == 10:
            codes = s.vec(lambda: _read_code(s))
        elif sid == 11:
            def data_seg():
                idx = s.u32()
                offset = decode_expr(s)
                return DataSegment(idx, offset, s.raw(s.u32()))
            m.data = s.vec(data_seg)
        if s.pos != end:
            raise MalformedSection(f"section {sid} length mismatch")
        r.pos = end

    codes = codes or []
    if len(codes) != len(func_type_indices):
        raise MalformedSection(
            f"function section declares {len(func_type_indices)} bodies, code section has {len(codes)}"
        )
    m.functions = [Function(ti, loc, body) for ti, (loc, body) in zip(func_type_indices, codes)]
    _check_module(m)
    return m


def _check_module(m: Module) -> None:
    ntypes = len(m.types)
    for imp in m.imports:
        if imp.kind == FUNC and imp.desc >= ntypes:
            raise MalformedSection(f"import {imp.module}.{imp.name} has bad type index")
    for f in m.functions:
        if f.type_index >= ntypes:
            raise MalformedSection("function has bad type index")

    n_tables = len(m.tables) + sum(1 for i in m.imports if i.kind == TABLE)
    n_mems = len(m.memories) + sum(1 for i in m.imports if i.kind == MEMORY)
    n_globals = len(m.globals) + sum(1 for i in m.imports if i.kind == GLOBAL)
    if n_tables > 1 or n_mems > 1:
        raise MalformedSection("Wasm 1.0 allows at most one table and one memory")

    nfuncs = m.num_functions
    bounds = {FUNC: nfuncs, TABLE: n_tables, MEMORY: n_mems, GLOBAL: n_globals}
    for exp in m.exports:
        if exp.index >= bounds[exp.kind]:
            raise MalformedSection(f"export {exp.name!r} index out of range")
    for seg in m.elements:
        if seg.table_index >= n_tables:
            raise MalformedSection("element segment refers to missing table")
        if any(fi >= nfuncs for fi in seg.func_indices):
            raise MalformedSection("element segment has bad function index")
    for dseg in m.data:
        if dseg.memory_index >= n_mems:
            raise MalformedSection("data segment refers to missing memory")
    if m.start is not None and m.start >= nfuncs:
        raise MalformedSection("start function index out of range")


__all__ = ["decode_module", "decode_instructions", "DecodeError", "MAGIC", "VERSION"]

"""Wasm 1.0 opcode table.

Covers the 172 MVP opcodes plus the sign-extension (0xC0-0xC4) and
non-trapping float-to-int (0xFC 0-7) families, 185 in total.
"""

from __future__ import annotations

# immediate kinds
NONE = "none"
BLOCK = "block"
LABEL = "label"
BR_TABLE = "br_table"
FUNC = "func"
CALL_INDIRECT = "call_indirect"
LOCAL = "local"
GLOBAL = "global"
MEMARG = "memarg"
MEMIDX = "memidx"
I32 = "i32"
I64 = "i64"
F32 = "f32"
F64 = "f64"

PREFIX_FC = 0xFC

_TABLE: list[tuple[int, str, str]] = [
    (0x00, "unreachable", NONE),
    (0x01, "nop", NONE),
    (0x02, "block", BLOCK),
    (0x03, "loop", BLOCK),
    (0x04, "if", BLOCK),
    (0x05, "else", NONE),
    (0x0B, "end", NONE),
    (0x0C, "br", LABEL),
    (0x0D, "br_if", LABEL),
    (0x0E, "br_table", BR_TABLE),
    (0x0F, "return", NONE),
    (0x10, "call", FUNC),
    (0x11, "call_indirect", CALL_INDIRECT),
    (0x1A, "drop", NONE),
    (0x1B, "select", NONE),
    (0x20, "local.get", LOCAL),
    (0x21, "local.set", LOCAL),
    (0x22, "local.tee", LOCAL),
    (0x23, "global.get", GLOBAL),
    (0x24, "global.set", GLOBAL),
    (0x28, "i32.load", MEMARG),
    (0x29, "i64.load", MEMARG),
    (0x2A, "f32.load", MEMARG),
    (0x2B, "f64.load", MEMARG),
    (0x2C, "i32.load8_s", MEMARG),
    (0x2D, "i32.load8_u", MEMARG),
    (0x2E, "i32.load16_s", MEMARG),
    (0x2F, "i32.load16_u", MEMARG),
    (0x30, "i64.load8_s", MEMARG),
    (0x31, "i64.load8_u", MEMARG),
    (0x32, "i64.load16_s", MEMARG),
    (0x33, "i64.load16_u", MEMARG),
    (0x34, "i64.load32_s", MEMARG),
    (0x35, "i64.load32_u", MEMARG),
    (0x36, "i32.store", MEMARG),
    (0x37, "i64.store", MEMARG),
    (0x38, "f32.store", MEMARG),
    (0x39, "f64.store", MEMARG),
    (0x3A, "i32.store8", MEMARG),
    (0x3B, "i32.store16", MEMARG),
    (0x3C, "i64.store8", MEMARG),
    (0x3D, "i64.store16", MEMARG),
    (0x3E, "i64.store32", MEMARG),
    (0x3F, "memory.size", MEMIDX),
    (0x40, "memory.grow", MEMIDX),
    (0x41, "i32.const", I32),
    (0x42, "i64.const", I64),
    (0x43, "f32.const", F32),
    (0x44, "f64.const", F64),
]

_NUMERIC = """
i32.eqz i32.eq i32.ne i32.lt_s i32.lt_u i32.gt_s i32.gt_u i32.le_s i32.le_u i32.ge_s i32.ge_u
i64.eqz i64.eq i64.ne i64.lt_s i64.lt_u i64.gt_s i64.gt_u i64.le_s i64.le_u i64.ge_s i64.ge_u
f32.eq f32.ne f32.lt f32.gt f32.le f32.ge
f64.eq f64.ne f64.lt f64.gt f64.le f64.ge
i32.clz i32.ctz i32.popcnt i32.add i32.sub i32.mul i32.div_s i32.div_u i32.rem_s i32.rem_u
i32.and i32.or i32.xor i32.shl i32.shr_s i32.shr_u i32.rotl i32.rotr
i64.clz i64.ctz i64.popcnt i64.add i64.sub i64.mul i64.div_s i64.div_u i64.rem_s i64.rem_u
i64.and i64.or i64.xor i64.shl i64.shr_s i64.shr_u i64.rotl i64.rotr
f32.abs f32.neg f32.ceil f32.floor f32.trunc f32.nearest f32.sqrt f32.add f32.sub f32.mul f32.div
f32.min f32.max f32.copysign
f64.abs f64.neg f64.ceil f64.floor f64.trunc f64.nearest f64.sqrt f64.add f64.sub f64.mul f64.div
f64.min f64.max f64.copysign
i32.wrap_i64 i32.trunc_f32_s i32.trunc_f32_u i32.trunc_f64_s i32.trunc_f64_u
i64.extend_i32_s i64.extend_i32_u i64.trunc_f32_s i64.trunc_f32_u i64.trunc_f64_s i64.trunc_f64_u
f32.convert_i32_s f32.convert_i32_u f32.convert_i64_s f32.convert_i64_u f32.demote_f64
f64.convert_i32_s f64.convert_i32_u f64.convert_i64_s f64.convert_i64_u f64.promote_f32
i32.reinterpret_f32 i64.reinterpret_f64 f32.reinterpret_i32 f64.reinterpret_i64
i32.extend8_s i32.extend16_s i64.extend8_s i64.extend16_s i64.extend32_s
""".split()

for _i, _name in enumerate(_NUMERIC):
    _TABLE.append((0x45 + _i, _name, NONE))

_SAT_TRUNC = [
    "i32.trunc_sat_f32_s", "i32.trunc_sat_f32_u", "i32.trunc_sat_f64_s", "i32.trunc_sat_f64_u",
    "i64.trunc_sat_f32_s", "i64.trunc_sat_f32_u", "i64.trunc_sat_f64_s", "i64.trunc_sat_f64_u",
]

#: single-byte opcode -> (name, immediate kind)
OPCODES: dict[int, tuple[str, str]] = {code: (name, imm) for code, name, imm in _TABLE}
#: 0xFC sub-opcode -> name
FC_OPCODES: dict[int, str] = dict(enumerate(_SAT_TRUNC))

#: name -> (encoded opcode key, immediate kind); 0xFC ops are keyed as (0xFC, sub)
BY_NAME: dict[str, tuple[int | tuple[int, int], str]] = {name: (code, imm) for code, (name, imm) in OPCODES.items()}
BY_NAME.update({name: ((PREFIX_FC, sub), NONE) for sub, name in FC_OPCODES.items()})

assert OPCODES[0xC4][0] == "i64.extend32_s"
assert len(BY_NAME) == 185

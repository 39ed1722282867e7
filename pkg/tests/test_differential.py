"""Concrete runs of the engine against wasmtime on generated programs."""

import random

import pytest
import wasmtime

from wasmsym.decoder import decode_module
from wasmsym.engine import ExploreConfig, explore
from wasmsym.engine.state import FINISHED, TRAPPED
from wasmsym.expr import Const
from wasmsym.module import export_lookup

PROGRAMS = 120
N_GLOBALS = 3

I_BIN = "add sub mul div_s div_u rem_s rem_u and or xor shl shr_s shr_u rotl rotr".split()
I_REL = "eq ne lt_s lt_u gt_s gt_u le_s le_u ge_s ge_u".split()
I_UN = ["clz", "ctz", "popcnt"]


class Gen:
    def __init__(self, seed: int):
        self.r = random.Random(seed)
        self.counters = 0

    def const(self, ty):
        r = self.r
        bits = 32 if ty == "i32" else 64
        v = r.choice([0, 1, -1, 2, 7, 255, 1 << (bits - 1), r.getrandbits(bits), r.getrandbits(8)])
        v &= (1 << bits) - 1
        if v >> (bits - 1):
            v -= 1 << bits
        return f"({ty}.const {v})"

    def addr(self, depth):
        if self.r.random() < 0.04:
            return "(i32.const 65533)"  # out of bounds for wider accesses
        return f"(i32.and {self.expr('i32', depth)} (i32.const 1020))"

    def expr(self, ty, depth):
        r = self.r
        other = "i64" if ty == "i32" else "i32"
        if depth <= 0 or r.random() < 0.25:
            choice = r.randrange(3)
            if choice == 0:
                return self.const(ty)
            if choice == 1:
                return f"(local.get {0 if ty == 'i32' else 1})"
            return f"(global.get {0 if ty == 'i32' else 1})"
        d = depth - 1
        k = r.randrange(11)
        if k <= 3:
            op = r.choice(I_BIN)
            return f"({ty}.{op} {self.expr(ty, d)} {self.expr(ty, d)})"
        if k == 4:
            if ty == "i32":
                return f"({other}.{r.choice(I_REL)} {self.expr(other, d)} {self.expr(other, d)})"
            return f"({ty}.{r.choice(I_UN)} {self.expr(ty, d)})"
        if k == 5:
            if ty == "i32":
                return r.choice([f"(i32.wrap_i64 {self.expr('i64', d)})", f"(i64.eqz {self.expr('i64', d)})"])
            return f"(i64.extend_i32_{r.choice('su')} {self.expr('i32', d)})"
        if k == 6:
            if ty == "i32":
                load = r.choice(["i32.load", "i32.load8_s", "i32.load8_u", "i32.load16_s", "i32.load16_u"])
            else:
                load = r.choice(["i64.load", "i64.load8_u", "i64.load16_s", "i64.load32_u", "i64.load32_s"])
            return f"({load} offset={r.choice([0, 1, 3, 8])} {self.addr(d)})"
        if k == 7:
            return f"(select {self.expr(ty, d)} {self.expr(ty, d)} {self.expr('i32', d)})"
        if k == 8:
            return (f"(if (result {ty}) {self.expr('i32', d)} (then {self.expr(ty, d)}) "
                    f"(else {self.expr(ty, d)}))")
        if k == 9:
            # float round trip with saturating truncation (no NaN leaks out)
            fop = r.choice(["add", "mul", "sub", "div", "min", "max"])
            src = r.choice(["i32", "i64"])
            return (f"({ty}.trunc_sat_f64_{r.choice('su')} (f64.{fop} (f64.convert_{src}_s {self.expr(src, d)}) "
                    f"(f64.convert_{src}_u {self.expr(src, d)})))")
        return f"(block (result {ty}) (br_if 0 {self.expr(ty, d)} {self.expr('i32', d)}) (drop) {self.expr(ty, d)})"

    def stmt(self, depth):
        r = self.r
        k = r.randrange(8)
        d = max(depth - 1, 0)
        if k == 0:
            return f"(local.set 0 {self.expr('i32', 2)})"
        if k == 1:
            return f"(local.set 1 {self.expr('i64', 2)})"
        if k == 2:
            g = r.randrange(N_GLOBALS)
            ty = "i32" if g != 1 else "i64"
            return f"(global.set {g} {self.expr(ty, 2)})"
        if k == 3:
            ty = r.choice(["i32", "i64"])
            op = r.choice({"i32": ["i32.store", "i32.store8", "i32.store16"],
                           "i64": ["i64.store", "i64.store8", "i64.store32"]}[ty])
            return f"({op} offset={r.choice([0, 2, 4])} {self.addr(1)} {self.expr(ty, 2)})"
        if k == 4 and depth > 0:
            return f"(if {self.expr('i32', 2)} (then {self.stmts(d)}) (else {self.stmts(d)}))"
        if k == 5 and depth > 0:
            c = 2 + self.counters
            self.counters += 1
            n = r.randint(1, 5)
            return (f"(local.set {c} (i32.const 0)) (loop $l{c} {self.stmts(d)} "
                    f"(br_if $l{c} (i32.lt_u (local.tee {c} (i32.add (local.get {c}) (i32.const 1))) "
                    f"(i32.const {n}))))")
        if k == 6 and depth > 0:
            return f"(block $b{depth} {self.stmts(d)} (br_if $b{depth} {self.expr('i32', 1)}) {self.stmts(d)})"
        if r.random() < 0.03:
            return "(unreachable)"
        return f"(local.set 0 {self.expr('i32', 3)})"

    def stmts(self, depth):
        return " ".join(self.stmt(depth) for _ in range(self.r.randint(1, 3)))

    def program(self) -> str:
        body = self.stmts(2)
        result = self.expr("i64", 3)
        extra_locals = " ".join("i32" for _ in range(self.counters))
        return f"""
        (module
          (memory (export "mem") 1)
          (global (export "g0") (mut i32) (i32.const 5))
          (global (export "g1") (mut i64) (i64.const -9))
          (global (export "g2") (mut i32) (i32.const 0))
          (data (i32.const 32) "\\de\\ad\\be\\ef")
          (func (export "main") (param i32 i64) (result i64) (local {extra_locals} i32)
            {body}
            {result}))
        """


def reference_run(wasm: bytes, args):
    engine = wasmtime.Engine()
    store = wasmtime.Store(engine)
    inst = wasmtime.Instance(store, wasmtime.Module(engine, wasm), [])
    ex = inst.exports(store)
    try:
        result = ex["main"](store, *args)
        status = FINISHED
    except wasmtime.Trap:
        result, status = None, TRAPPED
    mem = bytes(ex["mem"].read(store, 0, ex["mem"].data_len(store)))
    globals_ = [ex[f"g{i}"].value(store) for i in range(N_GLOBALS)]
    return status, result, mem, globals_


def engine_memory(p) -> bytes:
    out = bytearray(p.memory.size)
    for ci, chunk in p.memory.chunks.items():
        base = ci * len(chunk)
        for i, cell in enumerate(chunk):
            assert isinstance(cell, int), "concrete run left a symbolic byte"
            out[base + i] = cell
    return bytes(out)


@pytest.mark.parametrize("seed", range(PROGRAMS))
def test_engine_matches_reference(seed, solver):
    text = Gen(seed).program()
    wasm = wasmtime.wat2wasm(text)
    r = random.Random(seed)
    a0 = r.choice([0, 1, -1, r.getrandbits(31)])
    a1 = r.choice([0, 3, -(1 << 63), r.getrandbits(63)])
    status, result, mem, globals_ = reference_run(wasm, (a0, a1))

    m = decode_module(wasm)
    paths = explore(m, export_lookup(m, "main"), ExploreConfig(loop_bound=10), args=[a0 & 0xFFFFFFFF, a1 % 2**64],
                    solver=solver)
    assert len(paths) == 1, "concrete inputs must give a single path"
    p = paths[0]
    assert p.status == status
    if status == FINISHED:
        assert p.stack == [Const(64, result % 2**64)]
    widths = [32, 64, 32]
    assert p.globals == [Const(w, g % 2**w) for w, g in zip(widths, globals_)]
    assert engine_memory(p) == mem

import random

import pytest
from hypothesis import given, strategies as st

from conftest import wat
from wasmsym.detectors.eosio import apply_inputs
from wasmsym.engine import Engine, ExploreConfig
from wasmsym.engine.state import (
    ASSERT_FORK,
    BLOCK_INFO_READ,
    DELEGATE_CALL,
    FINISHED,
    SEND,
    TRAPPED,
)
from wasmsym.errors import InvalidNameChar, NameTooLong, PlatformError
from wasmsym.expr import Const, Origin, Var, compare
from wasmsym.hosts import EOSIO, ETHEREUM, EthContext, detect_platform, unrecognized_imports
from wasmsym.hosts.names import decode_name, encode_name, signed64
from wasmsym.smt import UNSAT

ALPHABET = ".12345abcdefghijklmnopqrstuvwxyz"


def my_decode(v: int) -> str:
    # separate from the package decoder: read 5-bit groups as a bit string
    bits = format(v, "064b")
    out = "".join(ALPHABET[int(bits[5 * i:5 * i + 5], 2)] for i in range(12))
    out += ALPHABET[int(bits[60:], 2)]
    return out.rstrip(".")


def test_known_names():
    assert encode_name("eosio.token") == 6138663591592764928
    assert encode_name("transfer") == 0xCDCD3C2D57000000
    assert signed64(encode_name("transfer")) == -3617168760277827584
    assert encode_name("") == 0


def test_invalid_names():
    with pytest.raises(InvalidNameChar):
        encode_name("Upper")
    with pytest.raises(InvalidNameChar):
        encode_name("abc6")
    with pytest.raises(NameTooLong):
        encode_name("a" * 14)
    with pytest.raises(InvalidNameChar):
        encode_name("a" * 12 + "z")
    assert encode_name("a" * 12 + "j") & 0xF == 0xF


def test_round_trip_1000():
    rng = random.Random(2024)
    for _ in range(1000):
        n = rng.randint(1, 12)
        name = "".join(rng.choice(ALPHABET) for _ in range(n - 1)) + rng.choice(ALPHABET[1:])
        v = encode_name(name)
        assert my_decode(v) == name
        assert decode_name(v) == name


@given(st.text(alphabet=ALPHABET, min_size=0, max_size=12))
def test_round_trip_property(name):
    assert my_decode(encode_name(name)) == name.rstrip(".")


# -- EOSIO intrinsics -------------------------------------------------------

ENV = """
(module
  (import "env" "eosio_assert" (func $assert (param i32 i32)))
  (import "env" "tapos_block_prefix" (func $prefix (result i32)))
  (import "env" "tapos_block_num" (func $num (result i32)))
  (import "env" "send_inline" (func $send (param i32 i32)))
  (import "env" "read_action_data" (func $read (param i32 i32) (result i32)))
  (import "env" "action_data_size" (func $size (result i32)))
  (import "env" "current_receiver" (func $recv (result i64)))
  (import "env" "memcpy" (func $memcpy (param i32 i32 i32) (result i32)))
  (import "env" "db_find_i64" (func $db (param i64 i64 i64 i64) (result i32)))
  (memory 1)
  (func (export "assert0") (call $assert (i32.const 0) (i32.const 0)))
  (func (export "assert_sym") (param i32)
    (call $assert (i32.eq (local.get 0) (i32.const 3)) (i32.const 0))
    (call $assert (i32.ne (local.get 0) (i32.const 3)) (i32.const 0)))
  (func (export "tapos") (result i32) (i32.mul (call $prefix) (call $num)))
  (func (export "send") (call $send (i32.const 0) (i32.const 8)))
  (func (export "read") (result i64)
    (drop (call $read (i32.const 100) (call $size)))
    (drop (call $memcpy (i32.const 300) (i32.const 108) (i32.const 8)))
    (i64.load (i32.const 300)))
  (func (export "recv") (result i64) (call $recv))
  (func (export "db") (result i32) (call $db (i64.const 0) (i64.const 0) (i64.const 0) (i64.const 0))))
"""


def run_env(solver, name, args=None, seed=0):
    from wasmsym.module import export_lookup

    m = wat(ENV)
    eng = Engine(m, ExploreConfig(seed=seed), solver)
    _, env = apply_inputs(eng.config)
    return eng.explore(export_lookup(m, name), args, env), env["eosio"]


def test_assert_zero_traps(solver):
    (p,), _ = run_env(solver, "assert0")
    assert p.status == TRAPPED


def test_assert_prunes_contradiction(solver):
    paths, _ = run_env(solver, "assert_sym")
    # second assert contradicts the first: no path survives to the end
    assert not [p for p in paths if p.status == FINISHED]


def test_tapos_fresh_block_info(solver):
    (p,), _ = run_env(solver, "tapos")
    reads = p.events(BLOCK_INFO_READ)
    assert [e.detail["which"] for e in reads] == ["tapos_block_prefix", "tapos_block_num"]
    v = reads[0].exprs[0]
    assert isinstance(v, Var) and v.width == 32 and Origin.BLOCK_INFO in v.tags
    assert reads[0].exprs[0] != reads[1].exprs[0]


def test_send_inline_event(solver):
    (p,), _ = run_env(solver, "send")
    (ev,) = p.events(SEND)
    assert ev.detail["mechanism"] == "inline"


def test_read_action_data_and_memcpy(solver):
    (p,), ctx = run_env(solver, "read")
    # bytes 8..15 of the action data, copied twice, reassemble to chunk 1
    assert p.stack == [ctx.data[1]]


def test_current_receiver(solver):
    (p,), ctx = run_env(solver, "recv")
    assert p.stack == [ctx.receiver] and Origin.APPLY_RECEIVER in p.stack[0].tags


def test_db_fallback_is_seeded(solver):
    a, _ = run_env(solver, "db", seed=3)
    b, _ = run_env(solver, "db", seed=3)
    assert isinstance(a[0].stack[0], Const) and a[0].stack == b[0].stack


# -- Ethereum interface -------------------------------------------------------

ETH = """
(module
  (import "ethereum" "finish" (func $finish (param i32 i32)))
  (import "ethereum" "revert" (func $revert (param i32 i32)))
  (import "ethereum" "callDataCopy" (func $cdc (param i32 i32 i32)))
  (import "ethereum" "callDelegate" (func $dc (param i64 i32 i32 i32) (result i32)))
  (import "ethereum" "getBlockNumber" (func $bn (result i64)))
  (import "ethereum" "storageStore" (func $sstore (param i32 i32)))
  (import "ethereum" "storageLoad" (func $sload (param i32 i32)))
  (import "ethereum" "getCallValue" (func $value (param i32)))
  (memory 1)
  (data (i32.const 512) "constant-target-address-and-data-bytes")
  (func (export "fin") (call $finish (i32.const 0) (i32.const 0)) (unreachable))
  (func (export "rev") (call $revert (i32.const 0) (i32.const 0)))
  (func (export "forward")
    (call $cdc (i32.const 0) (i32.const 0) (i32.const 64))
    (drop (call $dc (i64.const 100000) (i32.const 0) (i32.const 20) (i32.const 44))))
  (func (export "constant")
    (drop (call $dc (i64.const 100000) (i32.const 512) (i32.const 532) (i32.const 8))))
  (func (export "block") (result i64)
    (i64.sub (call $bn) (call $bn)))
  (func (export "block_fork") (param i32) (result i64)
    (if (local.get 0) (then (return (call $bn))))
    (call $bn))
  (func (export "storage") (result i64)
    (call $cdc (i32.const 64) (i32.const 0) (i32.const 32))
    (call $sstore (i32.const 0) (i32.const 64))
    (call $sload (i32.const 0) (i32.const 128))
    (i64.load (i32.const 128)))
  (func (export "value") (result i64)
    (call $value (i32.const 0)) (i64.load (i32.const 0))))
"""


def run_eth(solver, name, args=None):
    from wasmsym.module import export_lookup

    m = wat(ETH)
    eng = Engine(m, ExploreConfig(), solver)
    env = {"ethereum": EthContext.symbolic(128)}
    return eng.explore(export_lookup(m, name), args, env), env["ethereum"]


def test_finish_and_revert(solver):
    (p,), _ = run_eth(solver, "fin")
    assert p.status == FINISHED
    (q,), _ = run_eth(solver, "rev")
    assert q.status == TRAPPED


def test_delegate_call_data_is_non_constant(solver):
    (p,), _ = run_eth(solver, "forward")
    (ev,) = p.events(DELEGATE_CALL)
    assert ev.detail["classification"] == "NonConstant"
    assert Origin.CALL_DATA.value in ev.detail["tags"]


def test_delegate_constant_segment(solver):
    (p,), _ = run_eth(solver, "constant")
    (ev,) = p.events(DELEGATE_CALL)
    assert ev.detail["classification"] == "Constant" and ev.detail["tags"] == []


def test_block_number_stable_on_path(solver):
    (p,), _ = run_eth(solver, "block")
    first, second = (e.exprs[0] for e in p.events(BLOCK_INFO_READ))
    assert first is second
    assert solver.check(p.conditions + (compare("ne", p.stack[0], Const(64, 0)),)).status == UNSAT


def test_block_number_per_path(solver):
    paths, _ = run_eth(solver, "block_fork")
    assert len(paths) == 2
    for p in paths:
        assert Origin.BLOCK_INFO in p.stack[0].tags


def test_storage_store_then_load(solver):
    (p,), ctx = run_eth(solver, "storage")
    # low 8 bytes of the stored 32-byte value are call data bytes 0..7
    assert p.stack == [ctx.call_data[0]]


def test_call_value_written(solver):
    (p,), ctx = run_eth(solver, "value")
    want = ctx.call_value
    pinned = (compare("eq", want, Const(128, 0x1234)),)
    assert solver.check(pinned + (compare("ne", p.stack[0], Const(64, 0x1234)),)).status == UNSAT


# -- platform routing ---------------------------------------------------------

def test_platform_detection():
    assert detect_platform(wat('(module (import "env" "f" (func)))')) == EOSIO
    assert detect_platform(wat('(module (import "ethereum" "finish" (func (param i32 i32))))')) == ETHEREUM
    with pytest.raises(PlatformError):
        detect_platform(wat("(module)"))
    with pytest.raises(PlatformError):
        detect_platform(wat('(module (import "env" "f" (func)) (import "ethereum" "g" (func)))'))


def test_unrecognised_imports():
    m = wat('(module (import "ethereum" "finish" (func (param i32 i32))) (import "ethereum" "frobnicate" (func)))')
    assert unrecognized_imports(m) == ["ethereum.frobnicate"]


def test_assert_fork_recorded(solver):
    paths, _ = run_env(solver, "assert_sym")
    assert all(p.events(ASSERT_FORK) for p in paths)

import pytest

from conftest import EOSIO_DIR, ETH_DIR, FIXTURES, fixture_files, load, wat
from wasmsym.decoder import decode_instructions, decode_module
from wasmsym.encoder import encode_instructions
from wasmsym.errors import BadMagic, BadVersion, MalformedSection
from wasmsym.module import export_lookup
from wasmsym.opcodes import BY_NAME

HEADER = b"\x00asm\x01\x00\x00\x00"
ALL_FIXTURES = sorted(FIXTURES.rglob("*.wasm"))


def test_empty_module():
    m = decode_module(HEADER)
    assert m.types == [] and m.imports == [] and m.functions == [] and m.exports == []
    assert m.memories == [] and m.data == [] and m.start is None


def test_bad_magic():
    with pytest.raises(BadMagic):
        decode_module(b"\x00\x61\x73\x6e\x01\x00\x00\x00")


def test_bad_version():
    with pytest.raises(BadVersion):
        decode_module(b"\x00asm\x02\x00\x00\x00")


def test_section_order_enforced():
    # memory section (5) followed by type section (1)
    body = HEADER + b"\x05\x03\x01\x00\x01" + b"\x01\x01\x00"
    with pytest.raises(MalformedSection):
        decode_module(body)


def test_section_length_mismatch():
    with pytest.raises(MalformedSection):
        decode_module(HEADER + b"\x01\x05\x00")


def test_custom_section_kept():
    custom = b"\x00\x06\x04note" + b"\x01"
    m = decode_module(HEADER + custom)
    assert m.customs == [("note", b"\x01")]


def test_two_memories_rejected():
    with pytest.raises(MalformedSection):
        decode_module(HEADER + b"\x05\x05\x02\x00\x01\x00\x01")


def test_all_opcodes_known():
    assert len(BY_NAME) == 185


def test_apply_signature_and_lookup():
    m = load(EOSIO_DIR / "fake_transfer_dispatch.wasm")
    idx = export_lookup(m, "apply")
    assert idx is not None
    assert m.func_type(idx).params == ("i64", "i64", "i64")
    assert export_lookup(m, "nonexistent") is None


def test_main_lookup():
    m = load(ETH_DIR / "greedy_deposit.wasm")
    idx = export_lookup(m, "main")
    assert idx is not None and m.imported_function(idx) is None


@pytest.mark.parametrize("path", ALL_FIXTURES, ids=lambda p: p.stem)
def test_fixture_decodes(path):
    m = load(path)
    n_imports = m.num_imported_functions
    for exp in m.exports:
        if exp.kind == "func":
            assert exp.index < n_imports + len(m.functions)
    for seg in m.elements:
        assert all(i < m.num_functions for i in seg.func_indices)


@pytest.mark.parametrize("path", ALL_FIXTURES, ids=lambda p: p.stem)
def test_reencode_idempotent(path):
    m = load(path)
    for f in m.functions:
        assert decode_instructions(encode_instructions(f.body)) == f.body


def test_code_count_matches_function_section():
    # function section declares two bodies but code section has one
    m = wat('(module (func) (func))')
    assert len(m.functions) == 2
    raw = bytearray(HEADER)
    raw += b"\x01\x04\x01\x60\x00\x00"  # one type () -> ()
    raw += b"\x03\x03\x02\x00\x00"  # two functions
    raw += b"\x0a\x04\x01\x02\x00\x0b"  # one body
    with pytest.raises(MalformedSection):
        decode_module(bytes(raw))


def test_nested_structure_and_immediates():
    m = wat("""
    (module (memory 1)
      (func (param i32) (result i32)
        (block (result i32)
          (loop
            (br_if 1 (i32.const 7) (local.get 0))
            (br 0))
          (i32.const 0))
        (drop)
        (if (result i32) (local.get 0)
          (then (i32.load offset=4 (i32.const 0)))
          (else (f32.const 1.5) (i32.trunc_f32_s)))))
    """)
    body = m.functions[0].body
    assert body[0].name == "block" and body[0].imm == "i32"
    loop = body[0].body[0]
    assert loop.name == "loop" and loop.body[-1].name == "br" and loop.body[-1].imm == 0
    iff = body[3]
    assert iff.name == "if" and iff.body[1].imm[1] == 4
    assert iff.else_body[0].name == "f32.const" and iff.else_body[1].name == "i32.trunc_f32_s"


def test_float_literal_kept_as_bits():
    m = wat('(module (func (result f64) (f64.const -0.0)))')
    assert m.functions[0].body[0].imm == 1 << 63


def test_all_fixture_dirs_nonempty():
    assert fixture_files(EOSIO_DIR) and fixture_files(ETH_DIR)

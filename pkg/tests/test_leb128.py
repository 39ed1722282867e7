import pytest
from hypothesis import given, strategies as st

from wasmsym.errors import MalformedVarint
from wasmsym.leb128 import decode_leb128, encode_sleb128, encode_uleb128


def ref_encode(value: int, signed: bool) -> bytes:
    # written separately from the package encoder on purpose
    out = []
    while True:
        low = value & 0x7F
        value >>= 7
        if signed:
            done = (value == 0 and not low & 0x40) or (value == -1 and low & 0x40)
        else:
            done = value == 0
        out.append(low if done else low | 0x80)
        if done:
            return bytes(out)


@pytest.mark.parametrize(
    "data, signed, expected",
    [
        (b"\x00", False, (0, 1)),
        (b"\xe5\x8e\x26", False, (624485, 3)),
        (b"\x7f", True, (-1, 1)),
    ],
)
def test_examples(data, signed, expected):
    assert decode_leb128(data, signed=signed) == expected


def test_reference_encoder_agrees_on_examples():
    assert ref_encode(624485, False) == b"\xe5\x8e\x26"
    assert ref_encode(-1, True) == b"\x7f"


@pytest.mark.parametrize("bits", [32, 64])
def test_rejects_overlong(bits):
    n = -(-bits // 7)
    with pytest.raises(MalformedVarint):
        decode_leb128(b"\x80" * n + b"\x00", max_bits=bits)


def test_rejects_unused_high_bits():
    # 5th byte of a u32 may only carry 4 payload bits
    with pytest.raises(MalformedVarint):
        decode_leb128(b"\xff\xff\xff\xff\x1f", max_bits=32)
    with pytest.raises(MalformedVarint):
        decode_leb128(b"\xff\xff\xff\xff\x4f", signed=True, max_bits=32)
    assert decode_leb128(b"\xff\xff\xff\xff\x7f", signed=True, max_bits=32) == (-1, 5)


def test_truncated_input():
    with pytest.raises(MalformedVarint):
        decode_leb128(b"\x80")


@given(st.data(), st.sampled_from([32, 64]))
def test_unsigned_round_trip(data, bits):
    v = data.draw(st.integers(0, (1 << bits) - 1))
    enc = ref_encode(v, False)
    assert decode_leb128(enc, max_bits=bits) == (v, len(enc))
    assert encode_uleb128(v) == enc


@given(st.data(), st.sampled_from([32, 64]))
def test_signed_round_trip(data, bits):
    v = data.draw(st.integers(-(1 << (bits - 1)), (1 << (bits - 1)) - 1))
    enc = ref_encode(v, True)
    assert decode_leb128(enc, signed=True, max_bits=bits) == (v, len(enc))
    assert encode_sleb128(v) == enc


@given(st.integers(0, 2**32 - 1), st.binary(max_size=4))
def test_decode_at_offset(v, prefix):
    enc = ref_encode(v, False)
    assert decode_leb128(prefix + enc + b"\xff", pos=len(prefix)) == (v, len(enc))

import struct

import numpy as np
import pytest
from hypothesis import given, strategies as st

from meshfab.isa import (AsmError, EncodeError, InvalidInstruction, MessageWord, Op,
                         apply_instruction, assemble, decode, disassemble, encode,
                         f32_bits, format_hex, parse_hex)

# frozen from tests/oracles/bitstring_packer.py
GOLDEN_PROG_5 = 0x00323F8CCCCD0050

ops = st.sampled_from(list(Op))
addrs = st.integers(0, 4095)
words = st.builds(
    lambda op, d, bits, nop, nd: MessageWord(op, d, np.uint32(bits).view(np.float32), nop, nd),
    ops, addrs, st.integers(0, 2**32 - 1), ops, addrs,
)


def test_ten_instructions_with_codes_0_to_9():
    assert [op.value for op in Op] == list(range(10))
    assert [op.name for op in Op] == [
        "PROG", "UPDATE", "A_ADD", "A_SUB", "A_MUL", "A_DIV",
        "A_ADDS", "A_SUBS", "A_MULS", "A_DIVS"]


def test_zero_case():
    w = encode(MessageWord(Op.PROG, 0, 0.0, Op.UPDATE, 0))
    assert w & 0xF == Op.PROG
    assert (w >> 48) & 0xF == Op.UPDATE
    assert w & ~((0xF) | (0xF << 48)) == 0


def test_golden_word():
    m = MessageWord(Op.PROG, 5, 1.1, Op.A_ADD, 3)
    assert encode(m) == GOLDEN_PROG_5
    assert decode(GOLDEN_PROG_5) == m


def test_payload_is_binary32_in_bits_16_to_47():
    w = encode(MessageWord(Op.A_MULS, 0, 2.5, Op.PROG, 0))
    (expected,) = struct.unpack("<I", struct.pack("<f", 2.5))
    assert (w >> 16) & 0xFFFFFFFF == expected


def test_decode_all_zero():
    m = decode(0)
    assert (m.opcode, m.destination, m.next_opcode, m.next_destination) == (Op.PROG, 0, Op.PROG, 0)
    assert f32_bits(m.value) == 0


@pytest.mark.parametrize("code", range(10, 16))
def test_invalid_opcodes_rejected(code):
    with pytest.raises(InvalidInstruction) as exc:
        decode(code)
    assert exc.value.field == "opcode"
    with pytest.raises(InvalidInstruction) as exc:
        decode(code << 48)
    assert exc.value.field == "next_opcode"


@pytest.mark.parametrize("field", ["destination", "next_destination"])
def test_address_overflow(field):
    kwargs = dict(opcode=Op.PROG, destination=0, value=0.0, next_opcode=Op.PROG, next_destination=0)
    kwargs[field] = 4096
    with pytest.raises(EncodeError):
        encode(MessageWord(**kwargs))


@given(words)
def test_round_trip(m):
    w = encode(m)
    assert 0 <= w < 2**64
    assert decode(w) == m
    assert encode(decode(w)) == w


@given(st.integers(0, 2**64 - 1))
def test_word_round_trip_when_opcodes_valid(w):
    if w & 0xF > 9 or (w >> 48) & 0xF > 9:
        with pytest.raises(InvalidInstruction):
            decode(w)
    else:
        assert encode(decode(w)) == w


# -- instruction semantics ---------------------------------------------------

def test_muls_streams_product():
    r = apply_instruction(Op.A_MULS, 3, 1.3)
    assert r.stored == np.float32(1.3)
    assert r.emitted == np.float32(1.3) * np.float32(3)
    assert float(r.emitted) == pytest.approx(3.9, abs=1e-6)


def test_update_overwrites():
    r = apply_instruction(Op.UPDATE, 3.9, 123.0)
    assert r.stored == np.float32(3.9) and r.emitted is None


def test_add_identity():
    r = apply_instruction(Op.A_ADD, 0.0, 4.25)
    assert r.stored == np.float32(4.25) and r.emitted is None


def test_divs_by_zero_flagged():
    r = apply_instruction(Op.A_DIVS, 0.0, 1.0)
    assert not np.isfinite(r.emitted)
    assert r.nonfinite


@pytest.mark.parametrize("kind, expected", [
    (Op.A_SUB, 7.0 - 2.0), (Op.A_SUBS, 7.0 - 2.0),
    (Op.A_DIV, 7.0 / 2.0), (Op.A_DIVS, 7.0 / 2.0),
])
def test_stored_is_left_operand(kind, expected):
    r = apply_instruction(kind, 2.0, 7.0)
    got = r.emitted if kind.is_streaming else r.stored
    assert got == np.float32(expected)


def test_prog_rejected_by_alu():
    with pytest.raises(ValueError):
        apply_instruction(Op.PROG, 1.0, 1.0)


PAIRS = [(Op.A_ADD, Op.A_ADDS), (Op.A_SUB, Op.A_SUBS), (Op.A_MUL, Op.A_MULS), (Op.A_DIV, Op.A_DIVS)]
finite = st.floats(-1e6, 1e6, width=32)


@given(st.sampled_from(PAIRS), finite, finite)
def test_terminal_matches_streaming(pair, incoming, stored):
    terminal, streaming = pair
    a = apply_instruction(terminal, incoming, stored)
    b = apply_instruction(streaming, incoming, stored)
    assert f32_bits(a.stored) == f32_bits(b.emitted)
    assert b.stored == np.float32(stored)


@given(st.sampled_from([Op.A_ADD, Op.A_MUL, Op.A_ADDS, Op.A_MULS]), finite, finite)
def test_commutative_ops(kind, x, y):
    a = apply_instruction(kind, x, y)
    b = apply_instruction(kind, y, x)
    va = a.emitted if kind.is_streaming else a.stored
    vb = b.emitted if kind.is_streaming else b.stored
    assert f32_bits(va) == f32_bits(vb)


# -- text formats ------------------------------------------------------------

WALKTHROUGH_ASM = """\
# six messages of the two-cycle walkthrough
PROG dest=0 val=1.10000002 next=A_ADD ndest=3
PROG dest=1 val=1.20000005 next=A_ADD ndest=3
PROG dest=2 val=1.29999995 next=UPDATE ndest=3
A_MULS dest=0 val=1 next=PROG ndest=0
A_MULS dest=1 val=2 next=PROG ndest=0
a_muls dest=2 val=3 next=prog ndest=0
"""


def test_asm_round_trip():
    words = assemble(WALKTHROUGH_ASM)
    assert len(words) == 6
    text = disassemble(words)
    source = [l for l in WALKTHROUGH_ASM.splitlines() if not l.startswith("#")]
    assert [l.lower().split() for l in text.splitlines()] == [l.lower().split() for l in source]
    assert assemble(text) == words


def test_hex_round_trip():
    words = assemble(WALKTHROUGH_ASM)
    text = format_hex(words)
    assert all(len(line) == 16 and line == line.lower() for line in text.splitlines())
    assert parse_hex(text) == words


def test_empty_asm():
    assert assemble("") == []
    assert disassemble([]) == ""


@pytest.mark.parametrize("line", [
    "FOO dest=0 val=1 next=PROG ndest=0",
    "PROG dest=0 val=1 next=BAR ndest=0",
    "PROG dest=5000 val=1 next=PROG ndest=0",
    "PROG dest=0 val=abc next=PROG ndest=0",
])
def test_asm_errors_carry_line_numbers(line):
    with pytest.raises(AsmError) as exc:
        assemble("# header\n" + line)
    assert exc.value.lineno == 2

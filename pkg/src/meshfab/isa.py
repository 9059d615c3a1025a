"""Message words and the ten-instruction set.

A message is one 64-bit word, bit 0 being the least significant:

    bits  0-3   opcode
    bits  4-15  destination site address
    bits 16-47  IEEE-754 binary32 payload
    bits 48-51  next opcode      (latched by PROG)
    bits 52-63  next destination (latched by PROG)
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

ADDRESS_BITS = 12
MAX_ADDRESS = (1 << ADDRESS_BITS) - 1
WORD_MASK = (1 << 64) - 1


class IsaError(ValueError):
    """Base class for codec and assembler errors."""


class InvalidInstruction(IsaError):
    def __init__(self, field: str, code: int):
        super().__init__(f"invalid instruction code {code} in field {field!r}")
        self.field = field
        self.code = code


class EncodeError(IsaError):
    pass


class AsmError(IsaError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


class Op(enum.IntEnum):
    PROG = 0
    UPDATE = 1
    A_ADD = 2
    A_SUB = 3
    A_MUL = 4
    A_DIV = 5
    A_ADDS = 6
    A_SUBS = 7
    A_MULS = 8
    A_DIVS = 9

    @property
    def is_streaming(self) -> bool:
        return self in _STREAMING

    @property
    def is_terminal(self) -> bool:
        return self is Op.UPDATE or self in _TERMINAL

    @classmethod
    def from_code(cls, code: int, field: str = "opcode") -> "Op":
        try:
            return cls(code)
        except ValueError:
            raise InvalidInstruction(field, code) from None

    @classmethod
    def from_name(cls, name: str) -> "Op":
        try:
            return cls[name.upper()]
        except KeyError:
            raise IsaError(f"unknown opcode name {name!r}") from None


_TERMINAL = {Op.A_ADD, Op.A_SUB, Op.A_MUL, Op.A_DIV}
_STREAMING = {Op.A_ADDS, Op.A_SUBS, Op.A_MULS, Op.A_DIVS}

# stored on the left for the noncommutative ops
_ARITH = {
    Op.A_ADD: np.add, Op.A_ADDS: np.add,
    Op.A_SUB: np.subtract, Op.A_SUBS: np.subtract,
    Op.A_MUL: np.multiply, Op.A_MULS: np.multiply,
    Op.A_DIV: np.divide, Op.A_DIVS: np.divide,
}


def f32(x) -> np.float32:
    return np.float32(x)


def f32_bits(x) -> int:
    return int(np.float32(x).view(np.uint32))


def bits_f32(bits: int) -> np.float32:
    return np.uint32(bits).view(np.float32)


@dataclass(frozen=True, eq=False)
class MessageWord:
    opcode: Op
    destination: int
    value: np.float32
    next_opcode: Op = Op.PROG
    next_destination: int = 0

    def __post_init__(self):
        object.__setattr__(self, "opcode", Op(self.opcode))
        object.__setattr__(self, "next_opcode", Op(self.next_opcode))
        if not isinstance(self.value, np.float32):
            object.__setattr__(self, "value", np.float32(self.value))

    def _key(self):
        return (self.opcode, self.destination, f32_bits(self.value),
                self.next_opcode, self.next_destination)

    # bitwise equality so NaN payloads compare equal to themselves
    def __eq__(self, other):
        if not isinstance(other, MessageWord):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def encode(self) -> int:
        return encode(self)

    def with_value(self, value) -> "MessageWord":
        return MessageWord(self.opcode, self.destination, value,
                           self.next_opcode, self.next_destination)


def encode(m: MessageWord) -> int:
    for name in ("destination", "next_destination"):
        addr = getattr(m, name)
        if not 0 <= addr <= MAX_ADDRESS:
            raise EncodeError(f"{name}={addr} does not fit in {ADDRESS_BITS} bits")
    return (
        int(m.opcode)
        | m.destination << 4
        | f32_bits(m.value) << 16
        | int(m.next_opcode) << 48
        | m.next_destination << 52
    )


def decode(w: int) -> MessageWord:
    if not 0 <= w <= WORD_MASK:
        raise IsaError(f"word {w:#x} is wider than 64 bits")
    opcode = Op.from_code(w & 0xF, "opcode")
    next_opcode = Op.from_code((w >> 48) & 0xF, "next_opcode")
    return MessageWord(
        opcode,
        (w >> 4) & MAX_ADDRESS,
        bits_f32((w >> 16) & 0xFFFFFFFF),
        next_opcode,
        (w >> 52) & MAX_ADDRESS,
    )


class InstructionResult(NamedTuple):
    stored: np.float32
    emitted: Optional[np.float32]
    nonfinite: bool


def apply_instruction(kind: Op, incoming, stored) -> InstructionResult:
    """Execute one operational instruction against a site's stored value.

    Terminal forms write the result into the site; streaming forms leave the
    site untouched and return the result for forwarding. PROG is not an
    arithmetic instruction and is rejected here.
    """
    incoming = np.float32(incoming)
    stored = np.float32(stored)
    if kind is Op.UPDATE:
        return InstructionResult(incoming, None, not np.isfinite(incoming))
    if kind is Op.PROG:
        raise IsaError("PROG is handled by the site, not the ALU")
    with np.errstate(all="ignore"):
        result = _ARITH[kind](stored, incoming)
    nonfinite = not np.isfinite(result)
    if kind in _STREAMING:
        return InstructionResult(stored, result, nonfinite)
    return InstructionResult(result, None, nonfinite)


# -- text formats -----------------------------------------------------------

_ASM_RE = re.compile(
    r"^\s*(?P<op>[A-Za-z_]+)\s+dest=(?P<dest>\d+)\s+val=(?P<val>\S+)"
    r"\s+next=(?P<next>[A-Za-z_]+)\s+ndest=(?P<ndest>\d+)\s*$"
)


def format_value(v) -> str:
    # 9 significant digits round-trip any binary32
    return format(float(np.float32(v)), ".9g")


def format_asm(m: MessageWord) -> str:
    return (f"{m.opcode.name} dest={m.destination} val={format_value(m.value)} "
            f"next={m.next_opcode.name} ndest={m.next_destination}")


def parse_asm_line(text: str, lineno: int = 1) -> MessageWord:
    match = _ASM_RE.match(text)
    if not match:
        raise AsmError(lineno, f"cannot parse {text.strip()!r}")
    try:
        op = Op.from_name(match["op"])
        nxt = Op.from_name(match["next"])
        val = np.float32(float(match["val"]))
    except (IsaError, ValueError) as exc:
        raise AsmError(lineno, str(exc)) from None
    m = MessageWord(op, int(match["dest"]), val, nxt, int(match["ndest"]))
    try:
        encode(m)
    except EncodeError as exc:
        raise AsmError(lineno, str(exc)) from None
    return m


def _strip_comment(line: str) -> str:
    return line.split("#", 1)[0].strip()


def assemble(text: str) -> list[int]:
    words = []
    for lineno, line in enumerate(text.splitlines(), 1):
        body = _strip_comment(line)
        if body:
            words.append(encode(parse_asm_line(body, lineno)))
    return words


def disassemble(words) -> str:
    return "".join(format_asm(decode(w)) + "\n" for w in words)


def format_hex(words) -> str:
    return "".join(f"{w:016x}\n" for w in words)


def parse_hex(text: str) -> list[int]:
    words = []
    for lineno, line in enumerate(text.splitlines(), 1):
        body = _strip_comment(line)
        if not body:
            continue
        if not re.fullmatch(r"[0-9a-fA-F]{16}", body):
            raise AsmError(lineno, f"expected 16 hex digits, got {body!r}")
        words.append(int(body, 16))
    return words

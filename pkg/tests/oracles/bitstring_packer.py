"""Standalone message packer used to freeze golden words.

Builds the word as a list of bit characters indexed from bit 0 (LSB),
independent of the shift/mask code in the package.
"""
import struct

CODES = ["PROG", "UPDATE", "A_ADD", "A_SUB", "A_MUL", "A_DIV",
         "A_ADDS", "A_SUBS", "A_MULS", "A_DIVS"]


def _bits(value, width):
    s = format(value, "0{}b".format(width))
    return list(reversed(s))  # index 0 = least significant


def pack(opcode, dest, value, next_opcode, next_dest):
    word = ["0"] * 64
    (raw,) = struct.unpack("<I", struct.pack("<f", value))
    word[0:4] = _bits(CODES.index(opcode), 4)
    word[4:16] = _bits(dest, 12)
    word[16:48] = _bits(raw, 32)
    word[48:52] = _bits(CODES.index(next_opcode), 4)
    word[52:64] = _bits(next_dest, 12)
    return int("".join(reversed(word)), 2)


if __name__ == "__main__":
    for args in [("PROG", 0, 0.0, "UPDATE", 0),
                 ("PROG", 5, 1.1, "A_ADD", 3),
                 ("PROG", 0, 1.1, "A_ADD", 3),
                 ("PROG", 1, 1.2, "A_ADD", 3),
                 ("PROG", 2, 1.3, "UPDATE", 3),
                 ("A_MULS", 0, 1.0, "PROG", 0),
                 ("A_MULS", 1, 2.0, "PROG", 0),
                 ("A_MULS", 2, 3.0, "PROG", 0)]:
        print(args, format(pack(*args), "016x"))

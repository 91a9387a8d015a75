"""SIMD functional unit: elementwise lane arithmetic and the scalar helper ALU.

Integer semantics are two's-complement wrap for every arithmetic mode;
saturation only happens through the explicit ``clip`` mode.

The accumulate modes compute ``op(a, b)`` and add the result into ``acc``
(wrapping), so ``multacc(a, b, acc) == add(mult(a, b), acc)`` lane-wise.

The non-linear modes read and write fixed point with ``frac_bits`` fractional
bits (5 by default, i.e. Q2.5 for 8-bit lanes): the result is
``round_half_even(f(x / 2**frac) * 2**frac)`` clipped to the lane range.
"""

from __future__ import annotations

import enum
import math

from provet.datapath import LaneVector, wrap
from provet.errors import LaneCountMismatch

NONLINEAR_FRAC_BITS = 5
SCALAR_BITS = 32


class VfuMode(str, enum.Enum):
    MULT = "mult"
    ADD = "add"
    MAX = "max"
    MULTACC = "multacc"
    ADDACC = "addacc"
    MAXACC = "maxacc"
    CLIP = "clip"
    SHIFT = "shift"
    RELU = "relu"
    SIGMOID = "sigmoid"
    TANH = "tanh"

    def __str__(self):
        return self.value


BINARY_MODES = frozenset({VfuMode.MULT, VfuMode.ADD, VfuMode.MAX})
ACC_MODES = frozenset({VfuMode.MULTACC, VfuMode.ADDACC, VfuMode.MAXACC})
UNARY_MODES = frozenset({VfuMode.CLIP, VfuMode.SHIFT, VfuMode.RELU, VfuMode.SIGMOID, VfuMode.TANH})
IMM_ARITY = {VfuMode.CLIP: 2, VfuMode.SHIFT: 1}

_BASE_OP = {
    VfuMode.MULT: lambda x, y: x * y,
    VfuMode.ADD: lambda x, y: x + y,
    VfuMode.MAX: max,
    VfuMode.MULTACC: lambda x, y: x * y,
    VfuMode.ADDACC: lambda x, y: x + y,
    VfuMode.MAXACC: max,
}


def needs_second_operand(mode: VfuMode) -> bool:
    return mode in BINARY_MODES or mode in ACC_MODES


def _fixed_point(f, x: int, bits: int, frac: int) -> int:
    scale = 1 << frac
    y = round(f(x / scale) * scale)  # round() is half-to-even
    lo, hi = -(1 << (bits - 1)), (1 << (bits - 1)) - 1
    return min(max(y, lo), hi)


def _sigmoid(t: float) -> float:
    if t >= 0:
        return 1.0 / (1.0 + math.exp(-t))
    e = math.exp(t)
    return e / (1.0 + e)


def vfu_execute(
    mode: VfuMode | str,
    a: LaneVector,
    b: LaneVector | None = None,
    acc: LaneVector | None = None,
    imm: tuple = (),
    operand_bits: int = 8,
    frac_bits: int = NONLINEAR_FRAC_BITS,
) -> LaneVector:
    mode = VfuMode(mode)
    n = len(a)
    if needs_second_operand(mode):
        if b is None or len(b) != n:
            raise LaneCountMismatch(f"{mode}: operand b must have {n} lanes")
    if mode in ACC_MODES and (acc is None or len(acc) != n):
        raise LaneCountMismatch(f"{mode}: accumulator must have {n} lanes")
    if len(imm) != IMM_ARITY.get(mode, 0):
        raise ValueError(f"{mode} takes {IMM_ARITY.get(mode, 0)} immediates, got {len(imm)}")

    w = operand_bits
    if mode in BINARY_MODES:
        op = _BASE_OP[mode]
        return tuple(wrap(op(x, y), w) for x, y in zip(a, b))
    if mode in ACC_MODES:
        op = _BASE_OP[mode]
        return tuple(wrap(wrap(op(x, y), w) + c, w) for x, y, c in zip(a, b, acc))
    if mode is VfuMode.CLIP:
        lo, hi = imm
        if lo > hi:
            raise ValueError(f"clip bounds reversed: {lo} > {hi}")
        lo = max(lo, -(1 << (w - 1)))
        hi = min(hi, (1 << (w - 1)) - 1)
        return tuple(min(max(x, lo), hi) for x in a)
    if mode is VfuMode.SHIFT:
        (amount,) = imm
        # positive: arithmetic right shift; negative: left shift with wrap
        if amount >= 0:
            return tuple(x >> amount for x in a)
        return tuple(wrap(x << -amount, w) for x in a)
    if mode is VfuMode.RELU:
        return tuple(x if x > 0 else 0 for x in a)
    if mode is VfuMode.SIGMOID:
        return tuple(_fixed_point(_sigmoid, x, w, frac_bits) for x in a)
    if mode is VfuMode.TANH:
        return tuple(_fixed_point(math.tanh, x, w, frac_bits) for x in a)
    raise AssertionError(mode)  # pragma: no cover


SCALAR_OPS = ("add", "sub", "mul", "div", "mod", "mov", "lt", "le", "eq", "ne", "min", "max")
UNARY_SCALAR_OPS = frozenset({"mov"})


def vfu_scalar_calc(op: str, a: int, b: int = 0) -> int:
    """Scalar ALU for loop and index bookkeeping; 32-bit two's-complement results.

    Comparisons return 1 or 0. ``div``/``mod`` use floor semantics.
    """
    if op == "add":
        r = a + b
    elif op == "sub":
        r = a - b
    elif op == "mul":
        r = a * b
    elif op == "div":
        r = a // b
    elif op == "mod":
        r = a % b
    elif op == "mov":
        r = a
    elif op == "lt":
        r = int(a < b)
    elif op == "le":
        r = int(a <= b)
    elif op == "eq":
        r = int(a == b)
    elif op == "ne":
        r = int(a != b)
    elif op == "min":
        r = min(a, b)
    elif op == "max":
        r = max(a, b)
    else:
        raise ValueError(f"unknown scalar op {op!r}")
    return wrap(r, SCALAR_BITS)

"""Storage elements of one tile and their access metering.

Bit order convention: a :class:`WideWord` is ``N`` slices of ``L`` operands.
Slice 0 occupies the least-significant ``vfu_width_bits`` of the word and
operand 0 is the least-significant operand of its slice, so the flat operand
index ``k = slice * L + lane`` sits at bits ``[k*w, (k+1)*w)``.

Lane values are plain Python ints in two's-complement range; a lane vector is
a tuple of ``L`` such ints.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from provet.config import ArchConfig, energy_per_word_access
from provet.errors import (
    AddressOutOfRange,
    LaneCountMismatch,
    LaneValueOutOfRange,
    SliceOutOfRange,
    WidthMismatch,
)

LaneVector = tuple  # tuple[int, ...] of length L

REG_NAMES = ("R1", "R2", "R3", "R4")


def wrap(value: int, bits: int) -> int:
    """Reduce an integer to ``bits``-wide two's complement."""
    mask = (1 << bits) - 1
    value &= mask
    if value >> (bits - 1):
        value -= 1 << bits
    return value


def check_lanes(v, lanes: int, bits: int) -> LaneVector:
    v = tuple(v)
    if len(v) != lanes:
        raise LaneCountMismatch(f"expected {lanes} lanes, got {len(v)}")
    lo, hi = -(1 << (bits - 1)), (1 << (bits - 1)) - 1
    for x in v:
        if not lo <= x <= hi:
            raise LaneValueOutOfRange(f"lane value {x} outside [{lo}, {hi}]")
    return v


def zero_lanes(cfg: ArchConfig) -> LaneVector:
    return (0,) * cfg.lanes


@dataclass(frozen=True)
class WideWord:
    ops: tuple
    lanes: int
    operand_bits: int

    @property
    def slices(self) -> int:
        return len(self.ops) // self.lanes

    @property
    def width_bits(self) -> int:
        return len(self.ops) * self.operand_bits

    @classmethod
    def zeros(cls, cfg: ArchConfig) -> "WideWord":
        return cls((0,) * cfg.operands_per_word, cfg.lanes, cfg.operand_width_bits)

    @classmethod
    def from_operands(cls, ops, cfg: ArchConfig) -> "WideWord":
        ops = tuple(int(x) for x in ops)
        if len(ops) != cfg.operands_per_word:
            raise WidthMismatch(
                f"word needs {cfg.operands_per_word} operands, got {len(ops)}"
            )
        check_lanes(ops, len(ops), cfg.operand_width_bits)
        return cls(ops, cfg.lanes, cfg.operand_width_bits)

    @classmethod
    def from_slices(cls, slices, cfg: ArchConfig) -> "WideWord":
        flat = []
        for s in slices:
            flat.extend(check_lanes(s, cfg.lanes, cfg.operand_width_bits))
        return cls.from_operands(flat, cfg)

    @classmethod
    def from_int(cls, value: int, cfg: ArchConfig) -> "WideWord":
        if value < 0 or value >> cfg.sram_width_bits:
            raise WidthMismatch(f"value does not fit in {cfg.sram_width_bits} bits")
        w = cfg.operand_width_bits
        mask = (1 << w) - 1
        ops = tuple(wrap((value >> (k * w)) & mask, w) for k in range(cfg.operands_per_word))
        return cls(ops, cfg.lanes, w)

    @classmethod
    def from_bytes(cls, data: bytes, cfg: ArchConfig) -> "WideWord":
        return cls.from_int(int.from_bytes(data, "little"), cfg)

    def to_int(self) -> int:
        w = self.operand_bits
        mask = (1 << w) - 1
        out = 0
        for k, x in enumerate(self.ops):
            out |= (x & mask) << (k * w)
        return out

    def to_bytes(self) -> bytes:
        return self.to_int().to_bytes((self.width_bits + 7) // 8, "little")

    def slice(self, idx: int) -> LaneVector:
        if not 0 <= idx < self.slices:
            raise SliceOutOfRange(f"slice {idx} outside [0, {self.slices})")
        return self.ops[idx * self.lanes : (idx + 1) * self.lanes]

    def blocks(self) -> tuple:
        return tuple(self.slice(i) for i in range(self.slices))

    def with_slice(self, idx: int, v: LaneVector) -> "WideWord":
        if not 0 <= idx < self.slices:
            raise SliceOutOfRange(f"slice {idx} outside [0, {self.slices})")
        v = check_lanes(v, self.lanes, self.operand_bits)
        lo = idx * self.lanes
        return WideWord(self.ops[:lo] + v + self.ops[lo + self.lanes :], self.lanes, self.operand_bits)


@dataclass
class SramState:
    cfg: ArchConfig
    words: list = field(default=None)
    reads: int = 0
    writes: int = 0
    energy_accum: float = 0.0

    def __post_init__(self):
        if self.words is None:
            self.words = [WideWord.zeros(self.cfg)] * self.cfg.sram_depth_words
        self._access_energy = energy_per_word_access(self.cfg)

    @property
    def depth(self) -> int:
        return self.cfg.sram_depth_words

    def check_addr(self, addr: int) -> int:
        if not 0 <= addr < self.depth:
            raise AddressOutOfRange(f"SRAM address {addr} outside [0, {self.depth})")
        return addr

    def read(self, addr: int) -> WideWord:
        self.check_addr(addr)
        self.reads += 1
        self.energy_accum += self._access_energy
        return self.words[addr]

    def write(self, addr: int, word: WideWord) -> None:
        self.check_addr(addr)
        _check_word(word, self.cfg)
        self.words[addr] = word
        self.writes += 1
        self.energy_accum += self._access_energy

    # unmetered access, used to preload and inspect memory images
    def peek(self, addr: int) -> WideWord:
        return self.words[self.check_addr(addr)]

    def poke(self, addr: int, word: WideWord) -> None:
        self.check_addr(addr)
        self.words[addr] = _check_word(word, self.cfg)


def _check_word(word: WideWord, cfg: ArchConfig) -> WideWord:
    if not isinstance(word, WideWord) or word.width_bits != cfg.sram_width_bits:
        got = getattr(word, "width_bits", type(word).__name__)
        raise WidthMismatch(f"expected a {cfg.sram_width_bits}-bit word, got {got}")
    return word


@dataclass
class VwrState:
    """A very wide register: one word deep, wide port to SRAM, narrow port to the VFUs."""

    cfg: ArchConfig
    word: WideWord = None
    wide_loads: int = 0
    wide_stores: int = 0
    narrow_reads: int = 0
    narrow_writes: int = 0
    energy_accum: float = 0.0

    def __post_init__(self):
        if self.word is None:
            self.word = WideWord.zeros(self.cfg)
        cost = self.cfg.energy.vwr_access_cost_per_bit
        self._wide_energy = cost * self.cfg.sram_width_bits
        self._narrow_energy = cost * self.cfg.vfu_width_bits

    def load_wide(self, word: WideWord) -> None:
        self.word = _check_word(word, self.cfg)
        self.wide_loads += 1
        self.energy_accum += self._wide_energy

    def store_wide(self) -> WideWord:
        self.wide_stores += 1
        self.energy_accum += self._wide_energy
        return self.word

    def check_slice(self, idx: int) -> int:
        n = self.cfg.port_ratio
        if not 0 <= idx < n:
            raise SliceOutOfRange(f"VWR slice {idx} outside [0, {n})")
        return idx

    def read_slice(self, idx: int) -> LaneVector:
        self.check_slice(idx)
        self.narrow_reads += 1
        self.energy_accum += self._narrow_energy
        return self.word.slice(idx)

    def write_slice(self, idx: int, v: LaneVector) -> None:
        self.check_slice(idx)
        self.word = self.word.with_slice(idx, v)
        self.narrow_writes += 1
        self.energy_accum += self._narrow_energy


@dataclass
class LocalRegs:
    """R1..R4, each exactly one VFU wide."""

    r1: LaneVector
    r2: LaneVector
    r3: LaneVector
    r4: LaneVector

    @classmethod
    def zeros(cls, cfg: ArchConfig) -> "LocalRegs":
        z = zero_lanes(cfg)
        return cls(z, z, z, z)

    def get(self, name: str) -> LaneVector:
        return getattr(self, _reg_attr(name))

    def set(self, name: str, v: LaneVector) -> None:
        setattr(self, _reg_attr(name), tuple(v))


def _reg_attr(name: str) -> str:
    if name not in REG_NAMES:
        raise KeyError(f"unknown local register {name!r}")
    return name.lower()

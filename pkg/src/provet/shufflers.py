"""Coarse tile shuffler (block rotation between SRAM and VWR) and fine VFU shuffler.

Both shufflers have a maximum single-operation distance fixed at design
time. The functions here enforce that limit; longer moves are split by
:func:`decompose_steps` into several legal operations, each costing a cycle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from provet.config import ArchConfig
from provet.datapath import LaneVector, WideWord
from provet.errors import BlockSizeMismatch, DuplicateDestination, IndexOutOfRange, StepExceedsRange

FILL_MODES = ("rotate", "zero")


@dataclass(frozen=True)
class TileShuffleSpec:
    """Rotate blocks ``[start, start+count)`` of a word by ``steps`` positions.

    ``count=None`` means "to the end of the word". Block ``i`` moves to
    ``start + (i - start + steps) mod count``.
    """

    steps: int
    block_bits: int
    start: int = 0
    count: int | None = None

    def block_range(self, n_blocks: int) -> tuple[int, int]:
        count = n_blocks - self.start if self.count is None else self.count
        return self.start, count


@dataclass(frozen=True)
class VfuShuffleSpec:
    """Shift lanes by ``step`` (positive moves lane i to lane i+step)."""

    step: int
    fill: str = "rotate"


@dataclass(frozen=True)
class PermSpec:
    pairs: tuple = ()  # ((src, dst), ...)


def decompose_steps(distance: int, max_step: int) -> list[int]:
    """Split a move into the fewest legal single operations, same sign throughout."""
    if distance == 0:
        return []
    if max_step <= 0:
        raise StepExceedsRange(f"shuffle distance {distance} with a zero-range shuffler")
    sign = 1 if distance > 0 else -1
    full, rest = divmod(abs(distance), max_step)
    ops = [sign * max_step] * full
    if rest:
        ops.append(sign * rest)
    return ops


def shuffle_cycles(distance: int, max_step: int) -> int:
    """Cycles for a move of ``distance``: one per legal sub-operation, at least one."""
    if distance == 0:
        return 1
    if max_step <= 0:
        raise StepExceedsRange(f"shuffle distance {distance} with a zero-range shuffler")
    return math.ceil(abs(distance) / max_step)


# ----------------------------------------------------------------- tile


def rotate_blocks(word: WideWord, steps: int, start: int = 0, count: int | None = None) -> WideWord:
    """Unbounded block rotation; the reference the range-limited path must match."""
    blocks = list(word.blocks())
    n = len(blocks)
    if count is None:
        count = n - start
    if start < 0 or count < 0 or start + count > n:
        raise IndexOutOfRange(f"block range [{start}, {start + count}) outside [0, {n})")
    if count:
        seg = blocks[start : start + count]
        k = steps % count
        blocks[start : start + count] = seg[-k:] + seg[:-k] if k else seg
    flat = tuple(x for b in blocks for x in b)
    return WideWord(flat, word.lanes, word.operand_bits)


def check_tile_spec(spec: TileShuffleSpec, cfg: ArchConfig) -> None:
    if spec.block_bits != cfg.vfu_width_bits or cfg.sram_width_bits % spec.block_bits:
        raise BlockSizeMismatch(
            f"block size {spec.block_bits} bits; this tile moves {cfg.vfu_width_bits}-bit blocks"
        )
    if abs(spec.steps) > cfg.tile_shuffle_max_steps:
        raise StepExceedsRange(
            f"tile shuffle of {spec.steps} blocks exceeds the single-op range "
            f"{cfg.tile_shuffle_max_steps}"
        )
    start, count = spec.block_range(cfg.port_ratio)
    if start < 0 or count < 0 or start + count > cfg.port_ratio:
        raise IndexOutOfRange(f"block range [{start}, {start + count}) outside [0, {cfg.port_ratio})")


def tile_shuffle(word: WideWord, spec: TileShuffleSpec, cfg: ArchConfig) -> WideWord:
    check_tile_spec(spec, cfg)
    start, count = spec.block_range(cfg.port_ratio)
    return rotate_blocks(word, spec.steps, start, count)


def tile_shuffle_energy(spec: TileShuffleSpec, cfg: ArchConfig) -> float:
    _, count = spec.block_range(cfg.port_ratio)
    return abs(spec.steps) * count * cfg.energy.shuffle_cost_per_block_step


# ------------------------------------------------------------------ vfu


def shift_lanes(v: LaneVector, step: int, fill: str = "rotate") -> LaneVector:
    """Unbounded lane shift; rotate wraps around, zero injects zeros at the vacated edge."""
    if fill not in FILL_MODES:
        raise ValueError(f"fill must be one of {FILL_MODES}, got {fill!r}")
    v = tuple(v)
    n = len(v)
    if fill == "rotate":
        k = step % n if n else 0
        return v[-k:] + v[:-k] if k else v
    if abs(step) >= n:
        return (0,) * n
    if step > 0:
        return (0,) * step + v[: n - step]
    if step < 0:
        return v[-step:] + (0,) * (-step)
    return v


def vfu_shuffle(v: LaneVector, spec: VfuShuffleSpec, max_range: int) -> LaneVector:
    if abs(spec.step) > max_range:
        raise StepExceedsRange(f"VFU shuffle of {spec.step} lanes exceeds the range {max_range}")
    return shift_lanes(v, spec.step, spec.fill)


def check_perm(spec: PermSpec, lanes: int) -> None:
    seen = set()
    for src, dst in spec.pairs:
        for idx in (src, dst):
            if not 0 <= idx < lanes:
                raise IndexOutOfRange(f"permutation index {idx} outside [0, {lanes})")
        if dst in seen:
            raise DuplicateDestination(f"lane {dst} is the destination of more than one pair")
        seen.add(dst)


def vfu_permute(v: LaneVector, spec: PermSpec) -> LaneVector:
    """Destination lanes take the (original) source lanes; other lanes keep their value."""
    v = tuple(v)
    check_perm(spec, len(v))
    out = list(v)
    for src, dst in spec.pairs:
        out[dst] = v[src]
    return tuple(out)

"""Parametric description of one tile: widths, depths, lane counts, energy model.

Every other module consumes a validated :class:`ArchConfig`. The two derived
quantities used everywhere are

* ``port_ratio`` (N): SRAM word width over VFU width, i.e. how many VFU-wide
  slices one SRAM word / VWR holds;
* ``lanes`` (L): operands per VFU.

Energy coefficients are dimensionless model units. The bit-line / word-line
defaults (0.1 / 0.2 per cell) are arbitrary constants chosen only so that the
aspect-ratio trend is visible; they are not calibrated against any technology.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from provet.errors import (
    ConfigError,
    InvalidConfigValue,
    NonIntegerLaneCount,
    NonIntegerPortRatio,
    ShuffleRangeExceedsVfu,
    UnknownConfigKey,
    VfuGroupingError,
    ZeroDimension,
)


@dataclass(frozen=True)
class EnergyParams:
    bl_cost_per_cell: float = 0.1
    """Energy per bit-line segment (one cell of bit-line length)."""

    wl_cost_per_cell: float = 0.2
    """Energy per word-line segment (one cell of word-line length)."""

    vwr_access_cost_per_bit: float = 0.01
    """Energy per bit moved through either VWR port."""

    shuffle_cost_per_block_step: float = 0.05
    """Energy for moving one VFU-wide block by one block position."""


ENERGY_KEYS = tuple(f.name for f in dataclasses.fields(EnergyParams))


@dataclass(frozen=True)
class ArchConfig:
    sram_width_bits: int = 4096
    sram_depth_words: int = 8
    vfu_width_bits: int = 512
    operand_width_bits: int = 8
    vfu_count: int = 1
    vwr_count: int = 2
    tile_shuffle_max_steps: int = 2
    vfu_shuffle_max_range: int = 4
    energy: EnergyParams = field(default_factory=EnergyParams)

    @property
    def port_ratio(self) -> int:
        """N: number of VFU-wide slices in one SRAM word."""
        return self.sram_width_bits // self.vfu_width_bits

    @property
    def lanes(self) -> int:
        """L: operands per VFU."""
        return self.vfu_width_bits // self.operand_width_bits

    @property
    def operands_per_word(self) -> int:
        return self.port_ratio * self.lanes

    @property
    def slices_per_vfu(self) -> int:
        # pitch alignment: each VFU owns a contiguous group of slices
        return self.port_ratio // self.vfu_count

    @property
    def operand_min(self) -> int:
        return -(1 << (self.operand_width_bits - 1))

    @property
    def operand_max(self) -> int:
        return (1 << (self.operand_width_bits - 1)) - 1

    def to_dict(self) -> dict[str, Any]:
        """Flat key/value form used in JSON config files."""
        d = {f.name: getattr(self, f.name) for f in dataclasses.fields(self) if f.name != "energy"}
        d.update(dataclasses.asdict(self.energy))
        return d

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]

    def replace(self, **changes) -> "ArchConfig":
        energy_changes = {k: changes.pop(k) for k in list(changes) if k in ENERGY_KEYS}
        if energy_changes:
            changes["energy"] = dataclasses.replace(self.energy, **energy_changes)
        return validate(dataclasses.replace(self, **changes))


INT_KEYS = tuple(f.name for f in dataclasses.fields(ArchConfig) if f.name != "energy")

_POSITIVE = (
    "sram_width_bits",
    "sram_depth_words",
    "vfu_width_bits",
    "operand_width_bits",
    "vfu_count",
    "vwr_count",
)


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_real(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def validate(raw: ArchConfig | Mapping[str, Any]) -> ArchConfig:
    """Check every dimensional invariant and return a frozen config.

    ``raw`` is either an :class:`ArchConfig` or a flat mapping as found in a
    JSON config file (energy coefficients at top level). Missing keys take
    their defaults; unknown keys are rejected. All violations are collected
    before raising.
    """
    if isinstance(raw, ArchConfig):
        flat = raw.to_dict()
    else:
        flat = dict(raw)
        if isinstance(flat.get("energy"), Mapping):
            flat.update(flat.pop("energy"))

    problems: list[ConfigError] = []
    unknown = sorted(set(flat) - set(INT_KEYS) - set(ENERGY_KEYS))
    for key in unknown:
        problems.append(UnknownConfigKey(f"unknown config key {key!r}"))

    defaults = ArchConfig().to_dict()
    values = {k: flat.get(k, defaults[k]) for k in INT_KEYS + ENERGY_KEYS}

    for key in INT_KEYS:
        if not _is_int(values[key]):
            problems.append(InvalidConfigValue(f"{key} must be an integer, got {values[key]!r}"))
    for key in ENERGY_KEYS:
        v = values[key]
        if not _is_real(v) or v < 0:
            problems.append(InvalidConfigValue(f"{key} must be a non-negative real, got {v!r}"))
    if problems and any(isinstance(p, InvalidConfigValue) for p in problems):
        _raise(problems)

    for key in _POSITIVE:
        if values[key] < 1:
            problems.append(ZeroDimension(f"{key} must be >= 1, got {values[key]}"))
    for key in ("tile_shuffle_max_steps", "vfu_shuffle_max_range"):
        if values[key] < 0:
            problems.append(ZeroDimension(f"{key} must be >= 0, got {values[key]}"))

    sw, vw, ow = values["sram_width_bits"], values["vfu_width_bits"], values["operand_width_bits"]
    if sw >= 1 and vw >= 1 and sw % vw:
        problems.append(
            NonIntegerPortRatio(f"sram_width_bits={sw} is not a multiple of vfu_width_bits={vw}")
        )
    if vw >= 1 and ow >= 1 and vw % ow:
        problems.append(
            NonIntegerLaneCount(f"vfu_width_bits={vw} is not a multiple of operand_width_bits={ow}")
        )
    if vw >= 1 and ow >= 1 and not vw % ow:
        lanes = vw // ow
        if values["vfu_shuffle_max_range"] > lanes:
            problems.append(
                ShuffleRangeExceedsVfu(
                    f"vfu_shuffle_max_range={values['vfu_shuffle_max_range']} exceeds lane count {lanes}"
                )
            )
    if sw >= 1 and vw >= 1 and not sw % vw and values["vfu_count"] >= 1:
        n = sw // vw
        if values["vfu_count"] > n or n % values["vfu_count"]:
            problems.append(
                VfuGroupingError(
                    f"vfu_count={values['vfu_count']} must divide the port ratio {n}"
                )
            )

    if problems:
        _raise(problems)

    energy = EnergyParams(**{k: float(values[k]) for k in ENERGY_KEYS})
    return ArchConfig(**{k: values[k] for k in INT_KEYS}, energy=energy)


def _raise(problems: list[ConfigError]):
    first = problems[0]
    message = "; ".join(str(p) for p in problems)
    raise type(first)(message, violations=problems)


def energy_per_word_access(cfg: ArchConfig) -> float:
    """Energy of one full-width SRAM word access.

    All W bit lines of length D are energised plus one word line of length W:
    ``W*D*BL + W*WL``.
    """
    w, d = cfg.sram_width_bits, cfg.sram_depth_words
    e = cfg.energy
    return w * d * e.bl_cost_per_cell + 1 * w * e.wl_cost_per_cell


def energy_per_bit(cfg: ArchConfig) -> float:
    """Per-bit access energy ``D*BL + WL``; has no dependence on the width."""
    e = cfg.energy
    return cfg.sram_depth_words * e.bl_cost_per_cell + e.wl_cost_per_cell


PRESETS = ("default", "example16")


def load_config(path: str | Path | None) -> ArchConfig:
    """Load a config JSON file; a bare preset name selects a shipped preset."""
    if path is None:
        return default_config()
    if str(path) in PRESETS and not Path(path).exists():
        path = Path(__file__).parent / "presets" / f"{path}.json"
    with open(path) as f:
        raw = json.load(f)
    if not isinstance(raw, dict):
        raise InvalidConfigValue(f"{path}: config must be a JSON object")
    return validate(raw)


def save_config(cfg: ArchConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")


def default_config() -> ArchConfig:
    """4096-bit x 8 SRAM, one 512-bit VFU of 8-bit lanes, two VWRs."""
    return validate(ArchConfig())


def example16_config(depth: int = 32) -> ArchConfig:
    """A small worked-example tile: 16 lanes per VFU, 64-operand SRAM word, 1 VFU.

    The depth is a free choice; 32 words leaves room for the
    padded image, kernel and output rows of a 16x16 layer.
    """
    return validate(
        ArchConfig(
            sram_width_bits=64 * 8,
            sram_depth_words=depth,
            vfu_width_bits=16 * 8,
            operand_width_bits=8,
            vfu_count=1,
            vwr_count=2,
            tile_shuffle_max_steps=2,
            vfu_shuffle_max_range=4,
        )
    )

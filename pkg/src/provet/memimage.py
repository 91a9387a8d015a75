"""SRAM memory images and the layout descriptor naming the tensors inside them.

On disk an image is a flat binary file of ``depth`` words, each
``sram_width_bits / 8`` bytes, little-endian, in the bit order documented in
:mod:`provet.datapath`. The layout descriptor is JSON::

    {
      "format": "provet-layout/1",
      "config": "<config fingerprint>",
      "image": "memory.bin",
      "depth": 8,
      "tensors": {
        "img0": {"shape": [16, 16], "rows": [[0, 0], [0, 64], ...]}
      }
    }

Row ``r`` of a tensor with ``cols`` columns occupies operands
``[offset, offset + cols)`` of word ``addr``, where ``rows[r] == [addr, offset]``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from provet.config import ArchConfig
from provet.datapath import WideWord, check_lanes
from provet.errors import AddressOutOfRange, WidthMismatch

LAYOUT_FORMAT = "provet-layout/1"


@dataclass(frozen=True)
class TensorLayout:
    name: str
    shape: tuple
    rows: tuple

    def __post_init__(self):
        object.__setattr__(self, "shape", tuple(self.shape))
        object.__setattr__(self, "rows", tuple(tuple(r) for r in self.rows))
        if len(self.rows) != self.shape[0]:
            raise WidthMismatch(f"tensor {self.name}: {self.shape[0]} rows but {len(self.rows)} row placements")

    @property
    def cols(self) -> int:
        return self.shape[1]

    def spans(self):
        for addr, offset in self.rows:
            yield addr, offset, offset + self.cols


@dataclass(frozen=True)
class MemoryLayout:
    depth: int
    config: str = ""
    tensors: dict = field(default_factory=dict)

    def words_used(self) -> int:
        addrs = {a for t in self.tensors.values() for a, _ in t.rows}
        return max(addrs) + 1 if addrs else 0

    def check(self, cfg: ArchConfig) -> None:
        width = cfg.operands_per_word
        seen = {}
        for t in self.tensors.values():
            for addr, lo, hi in t.spans():
                if not 0 <= addr < self.depth or self.depth > cfg.sram_depth_words:
                    raise AddressOutOfRange(f"tensor {t.name}: word {addr} outside SRAM depth {cfg.sram_depth_words}")
                if lo < 0 or hi > width:
                    raise WidthMismatch(f"tensor {t.name}: operands [{lo}, {hi}) outside a {width}-operand word")
                for k in range(lo, hi):
                    other = seen.setdefault((addr, k), t.name)
                    if other != t.name:
                        raise WidthMismatch(f"tensors {other} and {t.name} overlap at word {addr} operand {k}")

    def to_dict(self, image: str = "memory.bin") -> dict:
        return {
            "format": LAYOUT_FORMAT,
            "config": self.config,
            "image": image,
            "depth": self.depth,
            "tensors": {
                name: {"shape": list(t.shape), "rows": [list(r) for r in t.rows]}
                for name, t in sorted(self.tensors.items())
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MemoryLayout":
        if d.get("format") != LAYOUT_FORMAT:
            raise ValueError(f"unsupported layout format {d.get('format')!r}")
        tensors = {
            name: TensorLayout(name, tuple(t["shape"]), tuple(tuple(r) for r in t["rows"]))
            for name, t in d["tensors"].items()
        }
        return cls(int(d["depth"]), d.get("config", ""), tensors)


def build_image(cfg: ArchConfig, layout: MemoryLayout, data: dict) -> list:
    """Place ``data[name]`` (a list of rows) for every tensor; untouched operands are zero."""
    flat = [[0] * cfg.operands_per_word for _ in range(cfg.sram_depth_words)]
    for name, t in layout.tensors.items():
        if name not in data:
            continue
        rows = [list(r) for r in data[name]]
        if len(rows) != t.shape[0] or any(len(r) != t.cols for r in rows):
            raise WidthMismatch(f"tensor {name}: data does not match shape {t.shape}")
        for (addr, offset), row in zip(t.rows, rows):
            if not 0 <= addr < cfg.sram_depth_words:
                raise AddressOutOfRange(f"tensor {name}: word {addr} outside SRAM depth")
            check_lanes(row, len(row), cfg.operand_width_bits)
            flat[addr][offset : offset + t.cols] = row
    return [WideWord.from_operands(ops, cfg) for ops in flat]


def read_tensor(words: list, t: TensorLayout) -> list:
    return [list(words[addr].ops[offset : offset + t.cols]) for addr, offset in t.rows]


def image_bytes(words: list) -> bytes:
    return b"".join(w.to_bytes() for w in words)


def image_from_bytes(data: bytes, cfg: ArchConfig) -> list:
    size = cfg.sram_width_bits // 8
    if cfg.sram_width_bits % 8 or len(data) != size * cfg.sram_depth_words:
        raise WidthMismatch(
            f"image is {len(data)} bytes; expected {cfg.sram_depth_words} words of {size} bytes"
        )
    return [WideWord.from_bytes(data[i * size : (i + 1) * size], cfg) for i in range(cfg.sram_depth_words)]


def save_memory(directory, words: list, layout: MemoryLayout, image_name: str = "memory.bin") -> Path:
    """Write image and layout; returns the layout path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    (directory / image_name).write_bytes(image_bytes(words))
    path = directory / "layout.json"
    path.write_text(json.dumps(layout.to_dict(image_name), indent=2) + "\n")
    return path


def load_memory(layout_path, cfg: ArchConfig) -> tuple:
    """Read a layout descriptor and the image it points to; returns ``(words, layout)``."""
    layout_path = Path(layout_path)
    d = json.loads(layout_path.read_text())
    layout = MemoryLayout.from_dict(d)
    words = image_from_bytes((layout_path.parent / d["image"]).read_bytes(), cfg)
    return words, layout

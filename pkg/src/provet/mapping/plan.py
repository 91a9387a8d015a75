"""Layer specifications and the plan objects every generator returns."""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from provet.config import ArchConfig
from provet.errors import ParamValidation
from provet.executor import MachineState, RunReport, run
from provet.isa import Program, assemble
from provet.memimage import MemoryLayout, build_image, read_tensor
from provet.oracle import Tensor2D


@dataclass(frozen=True)
class ConvLayerSpec:
    in_h: int
    in_w: int
    k_h: int
    k_w: int
    channels_in: int = 1
    channels_out: int = 1
    stride: int = 1
    depthwise: bool = False

    def __post_init__(self):
        for name in ("in_h", "in_w", "k_h", "k_w", "channels_in", "channels_out", "stride"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise ParamValidation(f"{name} must be a positive integer, got {v!r}")
        if self.k_h > self.in_h or self.k_w > self.in_w:
            raise ParamValidation(f"kernel {self.k_h}x{self.k_w} larger than input {self.in_h}x{self.in_w}")
        if self.depthwise and self.channels_out != self.channels_in:
            raise ParamValidation("depthwise convolution needs channels_out == channels_in")

    @property
    def out_h(self) -> int:
        return (self.in_h - self.k_h) // self.stride + 1

    @property
    def out_w(self) -> int:
        return (self.in_w - self.k_w) // self.stride + 1

    @property
    def row_passes(self) -> int:
        """One pass per output row position, including rows past the valid region."""
        return -(-self.in_h // self.stride)

    @property
    def sections(self) -> list:
        """(output channel, input channel) pairs, in accumulation order."""
        if self.depthwise:
            return [(c, c) for c in range(self.channels_in)]
        return [(o, i) for o in range(self.channels_out) for i in range(self.channels_in)]

    @property
    def total_macs(self) -> int:
        return len(self.sections) * self.out_h * self.out_w * self.k_h * self.k_w


@dataclass(frozen=True)
class OutputRegion:
    """Where the valid results sit inside the raw output tensors.

    ``rows`` and ``cols`` are ``(start, stop, step)`` ranges applied to each
    tensor in ``tensors``; ``flat_len`` truncates the row-major flattening
    (used when results are a vector split across rows).
    """

    tensors: tuple
    rows: tuple
    cols: tuple
    flat_len: int | None = None

    def __post_init__(self):
        if not self.tensors or not range(*self.rows) or not range(*self.cols):
            raise ParamValidation("output region is empty")

    def select(self, raw: list) -> list:
        return [[raw[r][c] for c in range(*self.cols)] for r in range(*self.rows)]


@dataclass(frozen=True, eq=False)
class MappingPlan:
    kind: str
    params: dict
    cfg: ArchConfig
    layout: MemoryLayout
    program: Program
    output: OutputRegion
    expected_counts: dict = field(default_factory=dict)

    @property
    def valid_output_region(self) -> OutputRegion:
        return self.output

    def memory_image(self, inputs: dict) -> list:
        return build_image(self.cfg, self.layout, KINDS[self.kind].pack(self, inputs))

    def extract(self, words: list):
        raw = [read_tensor(words, self.layout.tensors[name]) for name in self.output.tensors]
        return KINDS[self.kind].unpack(self, [self.output.select(r) for r in raw])

    def reference(self, inputs: dict):
        return KINDS[self.kind].reference(self, inputs)

    def random_inputs(self, rng: random.Random | int = 0, lo: int = -4, hi: int = 4) -> dict:
        if not isinstance(rng, random.Random):
            rng = random.Random(rng)
        return KINDS[self.kind].random_inputs(self, rng, lo, hi)

    def execute(self, inputs: dict, **run_kwargs) -> tuple:
        """Run the program on the packed inputs; returns ``(result, report, state)``."""
        state = MachineState(self.cfg, self.memory_image(inputs))
        report: RunReport = run(state, self.program, **run_kwargs)
        return self.extract(state.sram.words), report, state

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "params": self.params,
            "config": self.cfg.fingerprint(),
            "output": {
                "tensors": list(self.output.tensors),
                "rows": list(self.output.rows),
                "cols": list(self.output.cols),
                "flat_len": self.output.flat_len,
            },
            "expected_counts": self.expected_counts,
        }


@dataclass(frozen=True)
class PlanKind:
    pack: object
    unpack: object
    reference: object
    random_inputs: object


KINDS: dict = {}


def random_tensor(rng: random.Random, rows: int, cols: int, lo: int, hi: int) -> Tensor2D:
    return Tensor2D(rows, cols, [rng.randint(lo, hi) for _ in range(rows * cols)])


class ProgramBuilder:
    """Accumulates assembly lines; labels get a per-builder unique suffix on request."""

    def __init__(self, name: str, cfg: ArchConfig):
        self.name = name
        self.cfg = cfg
        self.lines = [f".program {name}", f".config {cfg.fingerprint()}"]
        self._n = 0

    def label(self, stem: str) -> str:
        self._n += 1
        return f"{stem}_{self._n}"

    def put(self, text: str) -> None:
        self.lines.append(f"    {text}")

    def mark(self, label: str) -> None:
        self.lines.append(f"{label}:")

    def text(self) -> str:
        return "\n".join(self.lines) + "\n"

    def assemble(self) -> Program:
        return assemble(self.text(), self.cfg)

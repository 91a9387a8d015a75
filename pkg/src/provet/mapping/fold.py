"""Adapting layers whose rows do not match the lane count.

Partition (image wider than the lanes): the input columns are split into
owner blocks of ``core`` columns, where ``core`` is the number of output
positions one ``L``-wide piece can produce. Each piece is its owner block
plus a halo of ``k_w - 1`` columns taken from the next block (clipped at the
image edge), so neighbouring pieces overlap by ``k_w - 1`` columns and every
piece is at most ``L`` wide. A final piece that only holds columns to the
right of the last valid output produces no valid outputs and is skipped when
executing.

Pack (several narrow images): images are placed side by side across the
lanes, ``floor(L / in_w)`` per VFU pass, and share one program.
"""

from __future__ import annotations

from dataclasses import dataclass

from provet.config import ArchConfig
from provet.errors import FoldNotRequired, ParamValidation, Unfoldable
from provet.executor import MachineState, run
from provet.mapping.conv import ceil_div, map_conv, normalize_conv_inputs
from provet.mapping.plan import ConvLayerSpec
from provet.memimage import read_tensor
from provet.oracle import Tensor2D

PARTITION = "partition_with_overlap"
PACK = "pack_multiple"


@dataclass(frozen=True)
class FoldPiece:
    index: int
    col_start: int
    """First input column (partition) or first lane (pack)."""
    width: int
    out_cols: tuple = ()
    """Global output columns this piece produces (partition)."""
    image: int = 0
    group: int = 0


@dataclass(frozen=True)
class FoldPlan:
    mode: str
    spec: ConvLayerSpec
    lanes: int
    pieces: tuple
    duplicated_fraction: float
    lane_utilization: float
    overlap: int

    @property
    def duplicated_pixels(self) -> int:
        """Pixels per image row that are held by more than one piece."""
        if self.mode != PARTITION:
            return 0
        return sum(p.width for p in self.pieces) - self.spec.in_w


def partition_core(lanes: int, k_w: int, stride: int) -> int:
    """Input columns owned by one piece: the span of outputs an L-wide piece yields."""
    return ((lanes - k_w) // stride + 1) * stride


def plan_fold(spec: ConvLayerSpec, cfg: ArchConfig, batch: int = 1) -> FoldPlan:
    lanes = cfg.lanes
    if spec.k_w > lanes:
        raise Unfoldable(f"kernel width {spec.k_w} exceeds the {lanes} lanes; no fold helps")
    if spec.in_w > lanes:
        core = partition_core(lanes, spec.k_w, spec.stride)
        pieces = []
        for i in range(ceil_div(spec.in_w, core)):
            start = i * core
            width = min(lanes, spec.in_w - start)
            outs = tuple(o for o in range(spec.out_w) if start <= o * spec.stride < start + core)
            pieces.append(FoldPiece(i, start, width, outs))
        total = sum(p.width for p in pieces)
        return FoldPlan(
            PARTITION,
            spec,
            lanes,
            tuple(pieces),
            (total - spec.in_w) / total,
            total / (len(pieces) * lanes),
            spec.k_w - 1,
        )
    count = spec.channels_in if spec.depthwise else batch
    if count >= 2 and spec.in_w <= lanes // 2:
        per_group = lanes // spec.in_w
        pieces = tuple(
            FoldPiece(b, (b % per_group) * spec.in_w, spec.in_w, image=b, group=b // per_group)
            for b in range(count)
        )
        groups = ceil_div(count, per_group)
        return FoldPlan(PACK, spec, lanes, pieces, 0.0, count * spec.in_w / (groups * lanes), 0)
    raise FoldNotRequired(
        f"a {spec.in_w}-wide image fits {lanes} lanes and there is nothing to pack (images={count})"
    )


def duplicated_fraction(in_w: int, k_w: int, lanes: int, stride: int = 1) -> float:
    """Closed form of the partition overhead: duplicated columns over columns held."""
    core = partition_core(lanes, k_w, stride)
    n = ceil_div(in_w, core)
    total = sum(min(lanes, in_w - i * core) for i in range(n))
    return (total - in_w) / total


def _crop(img: Tensor2D, start: int, width: int) -> Tensor2D:
    return Tensor2D.from_rows([row[start : start + width] for row in img.to_rows()])


def run_fold(fold: FoldPlan, cfg: ArchConfig, inputs: dict) -> tuple:
    """Execute every piece and stitch the results; returns ``(outputs, reports)``."""
    if fold.mode == PARTITION:
        return _run_partition(fold, cfg, inputs)
    return _run_pack(fold, cfg, inputs)


def _run_partition(fold, cfg, inputs):
    spec = fold.spec
    images, kernels = normalize_conv_inputs(spec, inputs)
    out = [[[None] * spec.out_w for _ in range(spec.out_h)] for _ in range(spec.channels_out)]
    reports = []
    for piece in fold.pieces:
        if not piece.out_cols:
            continue
        sub = ConvLayerSpec(
            spec.in_h, piece.width, spec.k_h, spec.k_w, spec.channels_in, spec.channels_out, spec.stride, spec.depthwise
        )
        plan = map_conv(sub, cfg, name=f"fold_piece{piece.index}")
        sub_inputs = {"image": [_crop(img, piece.col_start, piece.width) for img in images], "kernel": kernels}
        result, report, _ = plan.execute(sub_inputs)
        reports.append(report)
        for co, t in enumerate(result):
            for o in piece.out_cols:
                local = (o * spec.stride - piece.col_start) // spec.stride
                for r in range(spec.out_h):
                    out[co][r][o] = t.at(r, local)
    return [Tensor2D.from_rows(rows) for rows in out], reports


def _run_pack(fold, cfg, inputs):
    spec = fold.spec
    if spec.depthwise or spec.channels_in != 1 or spec.channels_out != 1:
        raise ParamValidation("packed execution supports single-channel images sharing one kernel")
    images = list(inputs["image"])
    kernel = inputs["kernel"]
    if len(images) != len(fold.pieces):
        raise ParamValidation(f"fold plan packs {len(fold.pieces)} images, got {len(images)}")
    results = [None] * len(images)
    reports = []
    for g in sorted({p.group for p in fold.pieces}):
        members = [p for p in fold.pieces if p.group == g]
        width = max(p.col_start + p.width for p in members)
        packed = [[0] * width for _ in range(spec.in_h)]
        for p in members:
            for r, row in enumerate(images[p.image].to_rows()):
                packed[r][p.col_start : p.col_start + p.width] = row
        sub = ConvLayerSpec(spec.in_h, width, spec.k_h, spec.k_w, 1, 1, spec.stride)
        plan = map_conv(sub, cfg, name=f"fold_group{g}")
        state = MachineState(cfg, plan.memory_image({"image": [Tensor2D.from_rows(packed)], "kernel": kernel}))
        reports.append(run(state, plan.program))
        raw = read_tensor(state.sram.words, plan.layout.tensors["out0"])
        for p in members:
            rows = [
                [raw[r][p.col_start + c * spec.stride] for c in range(spec.out_w)] for r in range(spec.out_h)
            ]
            results[p.image] = Tensor2D.from_rows(rows)
    return results, reports

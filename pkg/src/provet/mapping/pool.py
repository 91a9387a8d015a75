"""Max and average pooling on the convolution's sliding structure.

The image row is moved once into R1 and combined with the rotating R4
accumulator (``max`` or ``add``) once per window column. Average pooling ends
each pass with an arithmetic right shift, so the window size must be a power
of two and the result is the floor of the mean of the wrapped window sum.
"""

from __future__ import annotations

from provet.config import ArchConfig, default_config
from provet.errors import ParamValidation
from provet.mapping.conv import (
    Allocator,
    ceil_div,
    check_row_fits,
    check_single_vfu,
    emit_pass_begin,
    emit_row_load,
    emit_store_row,
    image_rows_layout,
    staged_rows_layout,
)
from provet.mapping.plan import KINDS, MappingPlan, OutputRegion, PlanKind, ProgramBuilder, random_tensor
from provet.memimage import MemoryLayout
from provet.oracle import Tensor2D, oracle_avgpool, oracle_maxpool


def _check(name, v):
    if not isinstance(v, int) or isinstance(v, bool) or v < 1:
        raise ParamValidation(f"{name} must be a positive integer, got {v!r}")


def map_pool(
    op: str,
    in_h: int,
    in_w: int,
    window: tuple = (2, 2),
    stride: int = 2,
    channels: int = 1,
    cfg: ArchConfig | None = None,
    name: str | None = None,
) -> MappingPlan:
    if op not in ("max", "avg"):
        raise ParamValidation(f"pooling op must be 'max' or 'avg', got {op!r}")
    k_h, k_w = window
    for label, v in (("in_h", in_h), ("in_w", in_w), ("k_h", k_h), ("k_w", k_w), ("stride", stride), ("channels", channels)):
        _check(label, v)
    if k_h > in_h or k_w > in_w:
        raise ParamValidation(f"window {k_h}x{k_w} larger than input {in_h}x{in_w}")
    n = k_h * k_w
    if op == "avg" and n & (n - 1):
        raise ParamValidation(f"average pooling needs a power-of-two window size, got {n}")
    cfg = cfg or default_config()
    check_single_vfu(cfg)
    check_row_fits(in_w, k_w, cfg)
    group = cfg.slices_per_vfu
    passes = ceil_div(in_h, stride)
    padded_rows = (passes - 1) * stride + k_h
    out_h, out_w = (in_h - k_h) // stride + 1, (in_w - k_w) // stride + 1

    alloc = Allocator(cfg)
    img_words = ceil_div(padded_rows, group)
    ibase = [alloc.take(img_words, "image") for _ in range(channels)]
    out_words = ceil_div(passes, group)
    obase = [alloc.take(out_words, "output rows") for _ in range(channels)]
    tensors = {}
    for c in range(channels):
        tensors[f"img{c}"] = image_rows_layout(f"img{c}", ibase[c], in_h, in_w, cfg)
        tensors[f"out{c}"] = staged_rows_layout(f"out{c}", obase[c], passes, 0, group, cfg)
    layout = MemoryLayout(cfg.sram_depth_words, cfg.fingerprint(), tensors)
    layout.check(cfg)

    mode = "max" if op == "max" else "add"
    init = cfg.operand_min if op == "max" else 0
    b = ProgramBuilder(name or f"{op}pool", cfg)
    b.put("CALC  mov, c5, -1")
    for c in range(channels):
        top = emit_pass_begin(b, passes)
        b.put(f"VFUX  clip, in1=R1, out=R4, imm={init}|{init}")
        b.put("CALC  mov, c6, c3")
        b.put(f"CALC  mov, c1, {k_h}")
        krow = b.label("wrow")
        b.mark(krow)
        emit_row_load(b, ibase[c], group)
        b.put("VMV   src=A[c7], dst=R1")
        if k_w > 1:
            kcol = b.label("wcol")
            b.put(f"CALC  mov, c2, {k_w - 1}")
            b.mark(kcol)
            b.put(f"VFUX  {mode}, in1=R1, in2=R4, out=R4")
            b.put("RMV   src=R4, dst=R4, step=1")
            b.put(f"BRAN  nz, c2, {kcol}")
        b.put(f"VFUX  {mode}, in1=R1, in2=R4, out=R4")
        if k_w > 1:
            b.put(f"RMV   src=R4, dst=R4, step={-(k_w - 1)}")
        b.put("CALC  add, c6, c6, 1")
        b.put(f"BRAN  nz, c1, {krow}")
        if op == "avg" and n > 1:
            b.put("RMV   src=R4, dst=R1, step=0")
            b.put(f"VFUX  shift, in1=R1, out=R4, imm={n.bit_length() - 1}")
        emit_store_row(b, stride=stride, slot0=0, per_word=group, out_base=obase[c], passes=passes, top=top)
    program = b.assemble()

    output = OutputRegion(
        tuple(f"out{c}" for c in range(channels)), (0, out_h, 1), (0, (out_w - 1) * stride + 1, stride)
    )
    counts = {
        "row_passes": passes,
        "inner_iterations": n,
        f"vfux_{mode}": passes * n * channels,
        "sram_reads_lower_bound": img_words * channels,
        "sram_writes": out_words * channels,
        "total_macs": out_h * out_w * n * channels,
    }
    params = {"kind": f"{op}pool", "op": op, "in_h": in_h, "in_w": in_w, "window": [k_h, k_w], "stride": stride, "channels": channels}
    return MappingPlan(f"{op}pool", params, cfg, layout, program, output, counts)


def map_maxpool(in_h, in_w, window=(2, 2), stride=2, channels=1, cfg=None) -> MappingPlan:
    return map_pool("max", in_h, in_w, window, stride, channels, cfg)


def map_avgpool(in_h, in_w, window=(2, 2), stride=2, channels=1, cfg=None) -> MappingPlan:
    return map_pool("avg", in_h, in_w, window, stride, channels, cfg)


def _images(plan, inputs):
    images = inputs["image"]
    if isinstance(images, Tensor2D):
        images = [images]
    p = plan.params
    if len(images) != p["channels"] or any((i.rows, i.cols) != (p["in_h"], p["in_w"]) for i in images):
        raise ParamValidation(f"expected {p['channels']} image(s) of {p['in_h']}x{p['in_w']}")
    return images


def _pack(plan, inputs):
    return {f"img{c}": img.to_rows() for c, img in enumerate(_images(plan, inputs))}


def _unpack(plan, selected):
    return [Tensor2D.from_rows(rows) for rows in selected]


def _reference(plan, inputs):
    p = plan.params
    window = tuple(p["window"])
    if p["op"] == "max":
        return [oracle_maxpool(img, window, p["stride"]) for img in _images(plan, inputs)]
    bits = plan.cfg.operand_width_bits
    return [oracle_avgpool(img, window, p["stride"], bits) for img in _images(plan, inputs)]


def _random_inputs(plan, rng, lo, hi):
    p = plan.params
    return {"image": [random_tensor(rng, p["in_h"], p["in_w"], lo, hi) for _ in range(p["channels"])]}


for _kind in ("maxpool", "avgpool"):
    KINDS[_kind] = PlanKind(_pack, _unpack, _reference, _random_inputs)

"""Sliding-window mappings: convolution (standard and depthwise) and the shared emitter.

Dataflow per output row pass: R4 holds the partial sums of one output row.
For each kernel pixel the pixel is broadcast from VWR B into R1, multiplied by
the matching image row held in a slice of VWR A, and added into R4; R4 is then
rotated one lane so that the next kernel column lines up with the next image
column. After a kernel row R4 is rotated back by ``k_w - 1``.

Scalar register use:

==== =========================================================
c0   remaining row passes
c1   remaining kernel rows
c2   remaining kernel columns, also a scratch flag
c3   first image row of the current pass
c4   flat index of the current kernel pixel within VWR B
c5   SRAM word currently held in VWR A (-1: none)
c6   current image row
c7   scratch: word address, slice index, output slot
==== =========================================================

Layout: image rows go one per VWR slice, ``N`` rows per SRAM word, with zero
rows appended so that every pass (also those past the valid output rows)
reads existing words. Each output channel has one kernel word: its kernels
fill the first slices of VWR B and the remaining slices stage output rows,
which are written back one word at a time.
"""

from __future__ import annotations

from provet.config import ArchConfig
from provet.datapath import wrap
from provet.errors import DoesNotFitWithoutFolding, KernelTooWide, ParamValidation, SramCapacityExceeded
from provet.mapping.plan import (
    KINDS,
    ConvLayerSpec,
    MappingPlan,
    OutputRegion,
    PlanKind,
    ProgramBuilder,
    random_tensor,
)
from provet.memimage import MemoryLayout, TensorLayout
from provet.oracle import Tensor2D, oracle_conv2d


def ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def check_single_vfu(cfg: ArchConfig) -> None:
    if cfg.vfu_count != 1:
        raise ParamValidation("the mapping generators target a single VFU per tile (vfu_count == 1)")


def check_row_fits(in_w: int, k_w: int, cfg: ArchConfig) -> None:
    if k_w > cfg.lanes:
        raise KernelTooWide(f"kernel width {k_w} exceeds the {cfg.lanes} VFU lanes")
    if in_w > cfg.lanes:
        raise DoesNotFitWithoutFolding(
            f"image rows of {in_w} pixels do not fit {cfg.lanes} lanes; use plan_fold"
        )
    if k_w > 1 and cfg.vfu_shuffle_max_range < 1:
        raise ParamValidation("sliding windows need a VFU shuffler range of at least 1")


class Allocator:
    def __init__(self, cfg: ArchConfig):
        self.cfg = cfg
        self.next = 0

    def take(self, n: int, what: str) -> int:
        base = self.next
        self.next += n
        if self.next > self.cfg.sram_depth_words:
            raise SramCapacityExceeded(
                f"{what} needs SRAM words up to {self.next}, depth is {self.cfg.sram_depth_words}"
            )
        return base


def image_rows_layout(name, base, rows, cols, cfg) -> TensorLayout:
    g, lanes = cfg.slices_per_vfu, cfg.lanes
    return TensorLayout(name, (rows, cols), tuple((base + y // g, (y % g) * lanes) for y in range(rows)))


def staged_rows_layout(name, base, rows, slot0, per_word, cfg) -> TensorLayout:
    lanes = cfg.lanes
    return TensorLayout(
        name,
        (rows, lanes),
        tuple((base + p // per_word, (slot0 + p % per_word) * lanes) for p in range(rows)),
    )


def emit_row_load(b: ProgramBuilder, base: int, group: int) -> None:
    """Make sure VWR A holds the word with image row c6 and leave its slice in c7."""
    cached = b.label("cached")
    b.put(f"CALC  div, c7, c6, {group}")
    b.put(f"CALC  add, c7, c7, {base}")
    b.put("CALC  ne, c2, c7, c5")
    b.put(f"BRAN  z, c2, {cached}")
    b.put("RLB   addr=c7, vwr=A")
    b.put("CALC  mov, c5, c7")
    b.mark(cached)
    b.put(f"CALC  mod, c7, c6, {group}")


def emit_pass_begin(b: ProgramBuilder, passes: int) -> str:
    b.put("CALC  mov, c3, 0")
    b.put(f"CALC  mov, c0, {passes}")
    top = b.label("pass")
    b.mark(top)
    return top


def emit_store_row(b, *, stride, slot0, per_word, out_base, passes, top) -> None:
    """Stage R4 into VWR B, write B back when its staging slots are full."""
    skip = b.label("staged")
    b.put(f"CALC  div, c7, c3, {stride}" if stride > 1 else "CALC  mov, c7, c3")
    b.put(f"CALC  mod, c7, c7, {per_word}")
    b.put(f"CALC  add, c7, c7, {slot0}")
    b.put("VMV   src=R4, dst=B[c7]")
    b.put(f"CALC  eq, c7, c7, {slot0 + per_word - 1}")
    b.put(f"BRAN  z, c7, {skip}")
    b.put(f"CALC  div, c7, c3, {stride * per_word}")
    b.put(f"CALC  add, c7, c7, {out_base}")
    b.put("WLB   vwr=B, addr=c7")
    b.mark(skip)
    b.put(f"CALC  add, c3, c3, {stride}")
    b.put(f"BRAN  nz, c0, {top}")
    if passes % per_word:
        b.put(f"WLB   vwr=B, addr={out_base + (passes - 1) // per_word}")


def emit_conv_section(b: ProgramBuilder, *, base, kofs, k_h, k_w, group) -> None:
    b.put(f"CALC  mov, c4, {kofs}")
    b.put("CALC  mov, c6, c3")
    b.put(f"CALC  mov, c1, {k_h}")
    krow = b.label("krow")
    b.mark(krow)
    emit_row_load(b, base, group)
    body = [
        "VMV   src=B, bcast=c4, dst=R1",
        "VFUX  mult, in1=R1, in2=A[c7], out=R2",
        "VFUX  add, in1=R2, in2=R4, out=R4",
    ]
    if k_w > 1:
        kcol = b.label("kcol")
        b.put(f"CALC  mov, c2, {k_w - 1}")
        b.mark(kcol)
        for line in body:
            b.put(line)
        b.put("RMV   src=R4, dst=R4, step=1")
        b.put("CALC  add, c4, c4, 1")
        b.put(f"BRAN  nz, c2, {kcol}")
    # last kernel column is peeled so that R4 is not rotated past the row
    for line in body:
        b.put(line)
    b.put("CALC  add, c4, c4, 1")
    if k_w > 1:
        b.put(f"RMV   src=R4, dst=R4, step={-(k_w - 1)}")
    b.put("CALC  add, c6, c6, 1")
    b.put(f"BRAN  nz, c1, {krow}")


def map_conv(spec: ConvLayerSpec, cfg: ArchConfig, name: str = "conv2d") -> MappingPlan:
    check_single_vfu(cfg)
    check_row_fits(spec.in_w, spec.k_w, cfg)
    group, lanes = cfg.slices_per_vfu, cfg.lanes
    ks = ceil_div(spec.k_h * spec.k_w, lanes)
    per_out = 1 if spec.depthwise else spec.channels_in
    kernel_slices = per_out * ks
    if kernel_slices >= group:
        raise KernelTooWide(
            f"{per_out} kernel(s) of {spec.k_h}x{spec.k_w} need {kernel_slices} VWR slices; "
            f"at most {group - 1} are available"
        )
    per_word = group - kernel_slices
    passes = spec.row_passes
    padded_rows = (passes - 1) * spec.stride + spec.k_h
    n_out = spec.channels_out

    alloc = Allocator(cfg)
    kaddr = [alloc.take(1, "kernels") for _ in range(n_out)]
    img_words = ceil_div(padded_rows, group)
    ibase = [alloc.take(img_words, "image") for _ in range(spec.channels_in)]
    out_words = ceil_div(passes, per_word)
    obase = [alloc.take(out_words, "output rows") for _ in range(n_out)]

    tensors = {}
    for ci in range(spec.channels_in):
        tensors[f"img{ci}"] = image_rows_layout(f"img{ci}", ibase[ci], spec.in_h, spec.in_w, cfg)
    for co in range(n_out):
        cis = [co] if spec.depthwise else range(spec.channels_in)
        for j, ci in enumerate(cis):
            kname = f"k{co}_{ci}"
            tensors[kname] = TensorLayout(
                kname,
                (spec.k_h, spec.k_w),
                tuple((kaddr[co], j * ks * lanes + i * spec.k_w) for i in range(spec.k_h)),
            )
        tensors[f"out{co}"] = staged_rows_layout(f"out{co}", obase[co], passes, kernel_slices, per_word, cfg)
    layout = MemoryLayout(cfg.sram_depth_words, cfg.fingerprint(), tensors)
    layout.check(cfg)

    b = ProgramBuilder(name, cfg)
    b.put("CALC  mov, c5, -1")
    for co in range(n_out):
        cis = [co] if spec.depthwise else list(range(spec.channels_in))
        b.put(f"RLB   addr={kaddr[co]}, vwr=B")
        top = emit_pass_begin(b, passes)
        b.put("VFUX  clip, in1=R1, out=R4, imm=0|0")
        for j, ci in enumerate(cis):
            emit_conv_section(b, base=ibase[ci], kofs=j * ks * lanes, k_h=spec.k_h, k_w=spec.k_w, group=group)
        emit_store_row(
            b, stride=spec.stride, slot0=kernel_slices, per_word=per_word, out_base=obase[co], passes=passes, top=top
        )
    program = b.assemble()

    n_sections = len(spec.sections)
    output = OutputRegion(
        tuple(f"out{co}" for co in range(n_out)),
        (0, spec.out_h, 1),
        (0, (spec.out_w - 1) * spec.stride + 1, spec.stride),
    )
    counts = {
        "row_passes": passes,
        "inner_iterations": spec.k_h * spec.k_w,
        "vfux_mult": passes * spec.k_h * spec.k_w * n_sections,
        "vfux_add": passes * spec.k_h * spec.k_w * n_sections,
        "sram_reads_lower_bound": n_out + img_words * spec.channels_in,
        "sram_writes": out_words * n_out,
        "total_macs": spec.total_macs,
    }
    params = {"kind": "conv2d", **spec.__dict__}
    return MappingPlan("conv2d", params, cfg, layout, program, output, counts)


# ------------------------------------------------------------ plan kind


def _spec(plan) -> ConvLayerSpec:
    p = dict(plan.params)
    p.pop("kind")
    return ConvLayerSpec(**p)


def normalize_conv_inputs(spec: ConvLayerSpec, inputs: dict) -> tuple:
    images = inputs["image"]
    if isinstance(images, Tensor2D):
        images = [images]
    kernels = inputs["kernel"]
    if isinstance(kernels, Tensor2D):
        kernels = [kernels] if spec.depthwise else [[kernels]]
    if not spec.depthwise:
        kernels = [[k] if isinstance(k, Tensor2D) else list(k) for k in kernels]
    if len(images) != spec.channels_in:
        raise ParamValidation(f"expected {spec.channels_in} input channel(s), got {len(images)}")
    for img in images:
        if (img.rows, img.cols) != (spec.in_h, spec.in_w):
            raise ParamValidation(f"image must be {spec.in_h}x{spec.in_w}, got {img.rows}x{img.cols}")
    if len(kernels) != spec.channels_out:
        raise ParamValidation(f"expected kernels for {spec.channels_out} output channel(s)")
    flat = kernels if spec.depthwise else [k for ks in kernels for k in ks]
    for k in flat:
        if (k.rows, k.cols) != (spec.k_h, spec.k_w):
            raise ParamValidation(f"kernel must be {spec.k_h}x{spec.k_w}, got {k.rows}x{k.cols}")
    if not spec.depthwise and any(len(ks) != spec.channels_in for ks in kernels):
        raise ParamValidation(f"each output channel needs {spec.channels_in} kernels")
    return images, kernels


def _pack(plan, inputs):
    spec = _spec(plan)
    images, kernels = normalize_conv_inputs(spec, inputs)
    data = {f"img{ci}": img.to_rows() for ci, img in enumerate(images)}
    for co in range(spec.channels_out):
        if spec.depthwise:
            data[f"k{co}_{co}"] = kernels[co].to_rows()
        else:
            for ci in range(spec.channels_in):
                data[f"k{co}_{ci}"] = kernels[co][ci].to_rows()
    return data


def _unpack(plan, selected):
    return [Tensor2D.from_rows(rows) for rows in selected]


def _reference(plan, inputs):
    spec = _spec(plan)
    bits = plan.cfg.operand_width_bits
    images, kernels = normalize_conv_inputs(spec, inputs)
    out = []
    for co in range(spec.channels_out):
        if spec.depthwise:
            out.append(oracle_conv2d(images[co], kernels[co], spec.stride, bits))
            continue
        acc = None
        for ci in range(spec.channels_in):
            part = oracle_conv2d(images[ci], kernels[co][ci], spec.stride, None)
            acc = part.data if acc is None else tuple(a + p for a, p in zip(acc, part.data))
        out.append(Tensor2D(spec.out_h, spec.out_w, [wrap(x, bits) for x in acc]))
    return out


def _random_inputs(plan, rng, lo, hi):
    spec = _spec(plan)
    images = [random_tensor(rng, spec.in_h, spec.in_w, lo, hi) for _ in range(spec.channels_in)]
    if spec.depthwise:
        kernels = [random_tensor(rng, spec.k_h, spec.k_w, lo, hi) for _ in range(spec.channels_out)]
    else:
        kernels = [
            [random_tensor(rng, spec.k_h, spec.k_w, lo, hi) for _ in range(spec.channels_in)]
            for _ in range(spec.channels_out)
        ]
    return {"image": images, "kernel": kernels}


KINDS["conv2d"] = PlanKind(_pack, _unpack, _reference, _random_inputs)

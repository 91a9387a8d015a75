"""Fully connected layer ``y = W x`` as broadcast-multiply-accumulate over lanes.

Lanes hold a chunk of ``L`` outputs. For every input feature ``j`` the value
``x[j]`` is broadcast into R1 and multiplied with column ``j`` of ``W``
restricted to the chunk, which is stored as one VWR slice; the products are
summed in R4. The input vector lives in the first slices of VWR B; the
remaining B slices stage finished output chunks before write-back.
"""

from __future__ import annotations

from provet.config import ArchConfig
from provet.errors import DoesNotFitWithoutFolding, ParamValidation
from provet.mapping.conv import Allocator, ceil_div, check_single_vfu
from provet.mapping.plan import KINDS, MappingPlan, OutputRegion, PlanKind, ProgramBuilder, random_tensor
from provet.memimage import MemoryLayout, TensorLayout
from provet.oracle import Tensor2D, oracle_matvec


def map_fc(in_features: int, out_features: int, cfg: ArchConfig, name: str = "fc") -> MappingPlan:
    for label, v in (("in_features", in_features), ("out_features", out_features)):
        if not isinstance(v, int) or isinstance(v, bool) or v < 1:
            raise ParamValidation(f"{label} must be a positive integer, got {v!r}")
    check_single_vfu(cfg)
    group, lanes = cfg.slices_per_vfu, cfg.lanes
    xs = ceil_div(in_features, lanes)
    if xs >= group:
        raise DoesNotFitWithoutFolding(
            f"an input vector of {in_features} features needs {xs} VWR slices; at most {group - 1} fit"
        )
    per_word = group - xs
    chunks = ceil_div(out_features, lanes)
    w_words = ceil_div(in_features, group)

    alloc = Allocator(cfg)
    xaddr = alloc.take(1, "input vector")
    wbase = [alloc.take(w_words, "weights") for _ in range(chunks)]
    obase = alloc.take(ceil_div(chunks, per_word), "outputs")

    tensors = {"x": TensorLayout("x", (1, in_features), ((xaddr, 0),))}
    for c in range(chunks):
        tensors[f"wT{c}"] = TensorLayout(
            f"wT{c}",
            (in_features, lanes),
            tuple((wbase[c] + j // group, (j % group) * lanes) for j in range(in_features)),
        )
    tensors["y"] = TensorLayout(
        "y", (chunks, lanes), tuple((obase + c // per_word, (xs + c % per_word) * lanes) for c in range(chunks))
    )
    layout = MemoryLayout(cfg.sram_depth_words, cfg.fingerprint(), tensors)
    layout.check(cfg)

    b = ProgramBuilder(name, cfg)
    b.put(f"RLB   addr={xaddr}, vwr=B")
    full, rem = divmod(in_features, group)

    def columns(n):
        b.put("RLB   addr=c6, vwr=A")
        b.put("CALC  mov, c7, 0")
        b.put(f"CALC  mov, c1, {n}")
        col = b.label("col")
        b.mark(col)
        b.put("VMV   src=B, bcast=c4, dst=R1")
        b.put("VFUX  mult, in1=R1, in2=A[c7], out=R2")
        b.put("VFUX  add, in1=R2, in2=R4, out=R4")
        b.put("CALC  add, c4, c4, 1")
        b.put("CALC  add, c7, c7, 1")
        b.put(f"BRAN  nz, c1, {col}")

    for c in range(chunks):
        b.put("VFUX  clip, in1=R1, out=R4, imm=0|0")
        b.put("CALC  mov, c4, 0")
        b.put(f"CALC  mov, c6, {wbase[c]}")
        if full:
            b.put(f"CALC  mov, c0, {full}")
            word = b.label("wword")
            b.mark(word)
            columns(group)
            b.put("CALC  add, c6, c6, 1")
            b.put(f"BRAN  nz, c0, {word}")
        if rem:
            columns(rem)
        b.put(f"VMV   src=R4, dst=B[{xs + c % per_word}]")
        if c % per_word == per_word - 1 or c == chunks - 1:
            b.put(f"WLB   vwr=B, addr={obase + c // per_word}")
    program = b.assemble()

    output = OutputRegion(("y",), (0, chunks, 1), (0, lanes, 1), flat_len=out_features)
    counts = {
        "inner_iterations": in_features,
        "vfux_mult": in_features * chunks,
        "vfux_add": in_features * chunks,
        "sram_reads_lower_bound": 1 + w_words * chunks,
        "sram_writes": ceil_div(chunks, per_word),
        "total_macs": in_features * out_features,
    }
    params = {"kind": "fc", "in_features": in_features, "out_features": out_features}
    return MappingPlan("fc", params, cfg, layout, program, output, counts)


def _normalize(plan, inputs):
    w, x = inputs["w"], list(inputs["x"])
    n_in, n_out = plan.params["in_features"], plan.params["out_features"]
    if not isinstance(w, Tensor2D):
        w = Tensor2D.from_rows(w)
    if (w.rows, w.cols) != (n_out, n_in) or len(x) != n_in:
        raise ParamValidation(f"expected a {n_out}x{n_in} weight matrix and {n_in} inputs")
    return w, x


def _pack(plan, inputs):
    w, x = _normalize(plan, inputs)
    lanes = plan.cfg.lanes
    data = {"x": [x]}
    for c in range(plan.layout.tensors["y"].shape[0]):
        rows = []
        for j in range(w.cols):
            col = [w.at(r, j) if r < w.rows else 0 for r in range(c * lanes, (c + 1) * lanes)]
            rows.append(col)
        data[f"wT{c}"] = rows
    return data


def _unpack(plan, selected):
    (rows,) = selected
    flat = [v for r in rows for v in r]
    return flat[: plan.output.flat_len]


def _reference(plan, inputs):
    w, x = _normalize(plan, inputs)
    return oracle_matvec(w, x, plan.cfg.operand_width_bits)


def _random_inputs(plan, rng, lo, hi):
    n_in, n_out = plan.params["in_features"], plan.params["out_features"]
    return {"w": random_tensor(rng, n_out, n_in, lo, hi), "x": [rng.randint(lo, hi) for _ in range(n_in)]}


KINDS["fc"] = PlanKind(_pack, _unpack, _reference, _random_inputs)

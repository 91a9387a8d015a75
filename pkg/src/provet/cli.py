"""Command line entry point: ``provet <command> ...``.

Exit status: 0 on success, 1 when ``verify`` finds a mismatch, 2 on usage or
input errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from provet.analysis import ScalingModel, compute_metrics, emit_report, format_rows, scaling_table
from provet.config import load_config
from provet.errors import ProvetError
from provet.executor import MachineState, RunReport, run, write_trace_csv
from provet.isa import assemble, disassemble, program_from_dict, program_to_dict
from provet.mapping import expand_template
from provet.memimage import MemoryLayout, load_memory, save_memory
from provet.oracle import Tensor2D

EXIT_OK, EXIT_MISMATCH, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _dims(text: str) -> tuple:
    try:
        h, w = (int(x) for x in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected HxW, got {text!r}") from None
    return h, w


def _int_list(text: str) -> list:
    try:
        return [int(x) for x in text.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def load_program(path, cfg=None):
    """Read a program from assembly text (``.pvt``) or its JSON form."""
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        return program_from_dict(json.loads(text))
    return assemble(text, cfg)


# ------------------------------------------------------- input (de)serialization


def _encode_inputs(value):
    if isinstance(value, Tensor2D):
        return {"tensor": value.to_rows()}
    if isinstance(value, dict):
        return {k: _encode_inputs(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_encode_inputs(v) for v in value]
    return value


def _decode_inputs(value):
    if isinstance(value, dict):
        if set(value) == {"tensor"}:
            return Tensor2D.from_rows(value["tensor"])
        return {k: _decode_inputs(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_decode_inputs(v) for v in value]
    return value


# ------------------------------------------------------------ commands


def cmd_asm(args, cfg):
    program = assemble(Path(args.input).read_text(), cfg)
    text = json.dumps(program_to_dict(program), indent=2) + "\n"
    _write_or_print(text, args.output)
    return EXIT_OK


def cmd_disasm(args, cfg):
    text = disassemble(load_program(args.input, cfg))
    _write_or_print(text, args.output)
    return EXIT_OK


def cmd_run(args, cfg):
    program = load_program(args.program, cfg)
    words = None
    if args.mem:
        words, _ = load_memory(args.mem, cfg)
    state = MachineState(cfg, words)
    rows = [] if args.trace else None
    report = run(state, program, max_cycles=args.max_cycles, vwr_bypass=args.bypass, trace_rows=rows)
    if args.trace:
        write_trace_csv(rows, args.trace)
    if args.report:
        Path(args.report).write_text(report.to_json() + "\n")
    if args.dump_mem:
        save_memory(args.dump_mem, state.sram.words, _load_layout_or_empty(args.mem, cfg))
    if args.json or not args.report:
        print(report.to_json())
    else:
        print(f"halted after {report.cycles} cycles, {report.instructions} instructions")
    return EXIT_OK


def _load_layout_or_empty(mem, cfg):
    if mem:
        return load_memory(mem, cfg)[1]
    return MemoryLayout(cfg.sram_depth_words, cfg.fingerprint(), {})


def _template_params(args) -> tuple:
    if args.layer == "conv":
        (in_h, in_w), (k_h, k_w) = args.input_dims, args.kernel
        params = {
            "in_h": in_h,
            "in_w": in_w,
            "k_h": k_h,
            "k_w": k_w,
            "channels_in": args.channels_in,
            "channels_out": args.channels_in if args.depthwise else args.channels_out,
            "stride": args.stride or 1,
            "depthwise": args.depthwise,
        }
        return "conv2d", params
    if args.layer == "fc":
        if args.in_features is None or args.out_features is None:
            raise UsageError("map fc needs --in-features and --out-features")
        return "fc", {"in_features": args.in_features, "out_features": args.out_features}
    in_h, in_w = args.input_dims
    return args.layer, {
        "in_h": in_h,
        "in_w": in_w,
        "window": list(args.window),
        "stride": args.stride or 2,
        "channels": args.channels_in,
    }


def cmd_map(args, cfg):
    if args.layer in ("conv", "maxpool", "avgpool") and args.input_dims is None:
        raise UsageError(f"map {args.layer} needs --in HxW")
    if args.layer == "conv" and args.kernel is None:
        raise UsageError("map conv needs --k HxW")
    template, params = _template_params(args)
    plan = expand_template(template, params, cfg)
    inputs = plan.random_inputs(args.seed, args.lo, args.hi)
    out = Path(args.output)
    save_memory(out, plan.memory_image(inputs), plan.layout)
    (out / "program.pvt").write_text(disassemble(plan.program))
    plan_doc = {"template": template, **plan.to_dict(), "seed": args.seed}
    (out / "plan.json").write_text(json.dumps(plan_doc, indent=2) + "\n")
    (out / "expected_counts.json").write_text(json.dumps(plan.expected_counts, indent=2) + "\n")
    (out / "inputs.json").write_text(json.dumps(_encode_inputs(inputs)) + "\n")
    print(f"wrote plan for {template} to {out} ({len(plan.program)} instructions, {plan.layout.words_used()} SRAM words)")
    return EXIT_OK


def cmd_verify(args, cfg):
    d = Path(args.plan)
    doc = json.loads((d / "plan.json").read_text())
    if doc["config"] != cfg.fingerprint():
        raise UsageError(f"plan was generated for config {doc['config']}, --config is {cfg.fingerprint()}")
    params = {k: v for k, v in doc["params"].items() if k not in ("kind", "op")}
    plan = expand_template(doc["template"], params, cfg)
    program = load_program(d / "program.pvt", cfg)
    words, _ = load_memory(d / "layout.json", cfg)
    inputs = _decode_inputs(json.loads((d / "inputs.json").read_text()))
    state = MachineState(cfg, words)
    report = run(state, program, max_cycles=args.max_cycles)
    got = plan.extract(state.sram.words)
    want = plan.reference(inputs)
    (d / "report.json").write_text(report.to_json() + "\n")

    problems = []
    if got != want:
        problems.append("output differs from the reference")
    for mode in ("mult", "add", "max"):
        key = f"vfux_{mode}"
        if key in plan.expected_counts and report.vfux_by_mode.get(mode, 0) != plan.expected_counts[key]:
            problems.append(
                f"{key}: expected {plan.expected_counts[key]}, executed {report.vfux_by_mode.get(mode, 0)}"
            )
    summary = {
        "plan": str(d),
        "match": not problems,
        "problems": problems,
        "cycles": report.cycles,
        "vfux_by_mode": report.vfux_by_mode,
        "sram_reads": report.sram_reads,
        "sram_writes": report.sram_writes,
    }
    if args.json:
        print(json.dumps(summary, indent=2))
    else:
        print("MATCH" if not problems else "MISMATCH: " + "; ".join(problems))
    return EXIT_OK if not problems else EXIT_MISMATCH


def cmd_scaling(args, cfg):
    model = ScalingModel(args.alpha, args.beta, args.sa_coeff)
    rows = scaling_table(args.n, model, args.kernel_dim)
    columns = tuple(rows[0]) if rows else ()
    _write_or_print(format_rows(rows, columns, args.format), args.output)
    return EXIT_OK


def cmd_report(args, cfg):
    metrics = []
    for path in args.reports:
        p = Path(path)
        if p.is_dir():
            plan = json.loads((p / "plan.json").read_text())
            run_report = RunReport.from_dict(json.loads((p / "report.json").read_text()))
            macs = plan["expected_counts"]["total_macs"]
            name = p.name
        else:
            if args.macs is None:
                raise UsageError(f"{p}: a bare run report needs --macs")
            run_report = RunReport.from_dict(json.loads(p.read_text()))
            macs = args.macs
            name = p.stem
        metrics.append(compute_metrics(run_report, macs, cfg, name))
    text = emit_report(metrics, args.format, args.output)
    if args.output is None:
        sys.stdout.write(text)
    return EXIT_OK


def _write_or_print(text: str, path):
    if path:
        Path(path).write_text(text, newline="")
    else:
        sys.stdout.write(text)


# -------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="architecture config JSON (default: built-in default tile)")

    parser = argparse.ArgumentParser(prog="provet", description="Ultra-wide vector tile simulator and analysis tools")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("asm", parents=[common], help="assemble .pvt text into program JSON")
    p.add_argument("input")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_asm)

    p = sub.add_parser("disasm", parents=[common], help="print canonical assembly for a program")
    p.add_argument("input")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_disasm)

    p = sub.add_parser("run", parents=[common], help="execute a program")
    p.add_argument("program")
    p.add_argument("--mem", help="layout JSON of the initial memory image")
    p.add_argument("--report", help="write the run report JSON here")
    p.add_argument("--trace", help="write a per-instruction CSV trace here")
    p.add_argument("--dump-mem", help="write the final memory image and layout into this directory")
    p.add_argument("--max-cycles", type=int, default=10_000_000)
    p.add_argument("--bypass", action="store_true", help="meter every VWR access as an SRAM access")
    p.add_argument("--json", action="store_true", help="print the report JSON")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("map", parents=[common], help="generate a layer mapping")
    p.add_argument("layer", choices=["conv", "fc", "maxpool", "avgpool"])
    p.add_argument("--in", dest="input_dims", type=_dims, help="input size HxW")
    p.add_argument("--k", dest="kernel", type=_dims, help="kernel size HxW (conv)")
    p.add_argument("--window", type=_dims, default=(2, 2), help="pooling window HxW")
    p.add_argument("--stride", type=int, help="default: 1 for conv, 2 for pooling")
    p.add_argument("--channels-in", type=int, default=1)
    p.add_argument("--channels-out", type=int, default=1)
    p.add_argument("--depthwise", action="store_true")
    p.add_argument("--in-features", type=int)
    p.add_argument("--out-features", type=int)
    p.add_argument("--seed", type=int, default=0, help="seed for the random input data")
    p.add_argument("--lo", type=int, default=-4)
    p.add_argument("--hi", type=int, default=4)
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("verify", parents=[common], help="run a mapped plan and compare with the reference")
    p.add_argument("plan", help="directory written by 'map'")
    p.add_argument("--max-cycles", type=int, default=10_000_000)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("scaling", parents=[common], help="bandwidth, fold-utilization and hop-count models")
    p.add_argument("--n", type=_int_list, default=[1, 4, 16, 64, 256, 1024])
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--sa-coeff", type=float, default=1.0)
    p.add_argument("--kernel-dim", type=int, default=11)
    p.add_argument("--format", choices=["csv", "json", "table"], default="table")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_scaling)

    p = sub.add_parser("report", parents=[common], help="utilization / CMR table from run reports")
    p.add_argument("reports", nargs="+", help="plan directories (after verify) or run report JSON files")
    p.add_argument("--macs", type=int, help="total MACs for bare run report files")
    p.add_argument("--format", choices=["csv", "json", "table"], default="table")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        return args.func(args, cfg)
    except (UsageError, ProvetError, OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"provet {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

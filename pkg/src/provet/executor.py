"""Instruction interpreter over one tile, with cycle, access, energy and control-action metering.

Timing: every instruction costs one cycle, except that a shuffle longer than
the shuffler's single-operation range is split into ``ceil(|d| / max)``
legal operations, one cycle each.

Instructions are atomic. Each handler first resolves and validates every
operand using unmetered reads, computes the results, and only then returns a
list of commit actions; the executor applies them after the handler returned
without error. A faulting instruction therefore leaves no trace in the state
or in any counter.

With several VFUs the default is lockstep: one instruction stream drives every
VFU, and VFU ``v`` sees VWR slices ``v*G .. v*G+G-1`` (``G = N / vfu_count``)
as its local slices ``0 .. G-1``. :func:`run_streams` instead gives each VFU
its own program, program counter and scalar counters.
"""

from __future__ import annotations

import csv
import json
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache

from provet.config import ArchConfig
from provet.datapath import LocalRegs, SramState, VwrState, WideWord, check_lanes
from provet.errors import (
    AddressOutOfRange,
    CycleLimitExceeded,
    ProvetError,
    SimulationFault,
    SliceOutOfRange,
)
from provet.isa import (
    NUM_COUNTERS,
    Bran,
    Calc,
    CReg,
    Glmv,
    Nop,
    Perm,
    Program,
    Reg,
    Rlb,
    Rmv,
    Vfux,
    Vmv,
    VwrRef,
    Wlb,
    check_instruction,
    format_instruction,
)
from provet.shufflers import (
    PermSpec,
    TileShuffleSpec,
    VfuShuffleSpec,
    decompose_steps,
    shuffle_cycles,
    tile_shuffle,
    tile_shuffle_energy,
    vfu_permute,
    vfu_shuffle,
)
from provet.vfu import ACC_MODES, vfu_execute, vfu_scalar_calc

DEFAULT_MAX_CYCLES = 10_000_000


@dataclass
class ControlActionTrace:
    """Per-component control actions and loop-buffer refills.

    Each static instruction is loaded into the distributed loop buffers once
    (one update event) and may then fire any number of times.
    """

    vfu_config_actions: int = 0
    vwr_enable_actions: int = 0
    reg_enable_actions: int = 0
    mux_select_actions: int = 0
    lb_update_events: int = 0
    issued: int = 0

    @property
    def component_actions(self) -> int:
        return (
            self.vfu_config_actions
            + self.vwr_enable_actions
            + self.reg_enable_actions
            + self.mux_select_actions
        )

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ThreadState:
    """One instruction stream: program counter, scalar counters, VFUs it drives."""

    vfus: tuple
    pc: int = 0
    counters: list = field(default_factory=lambda: [0] * NUM_COUNTERS)
    halted: bool = False


@dataclass
class Stats:
    vfux_by_mode: Counter = field(default_factory=Counter)
    shuffle_ops: Counter = field(default_factory=Counter)
    shuffle_energy: float = 0.0
    trace: ControlActionTrace = field(default_factory=ControlActionTrace)
    visited: set = field(default_factory=set)


class MachineState:
    """SRAM, VWRs, per-VFU local registers, scalar counters, pc and cycle count."""

    def __init__(self, cfg: ArchConfig, sram_words=None):
        self.cfg = cfg
        self.sram = SramState(cfg, list(sram_words) if sram_words is not None else None)
        if len(self.sram.words) != cfg.sram_depth_words:
            raise AddressOutOfRange(
                f"memory image has {len(self.sram.words)} words, SRAM depth is {cfg.sram_depth_words}"
            )
        self.vwrs = [VwrState(cfg) for _ in range(cfg.vwr_count)]
        self.regs = [LocalRegs.zeros(cfg) for _ in range(cfg.vfu_count)]
        self.threads = [ThreadState(vfus=tuple(range(cfg.vfu_count)))]
        self.cycle = 0
        self.stats = Stats()

    @property
    def pc(self) -> int:
        return self.threads[0].pc

    @pc.setter
    def pc(self, value: int):
        self.threads[0].pc = value

    @property
    def counters(self) -> list:
        return self.threads[0].counters

    @property
    def halted(self) -> bool:
        return all(t.halted for t in self.threads)

    def snapshot(self) -> dict:
        """Plain-data view of the architectural state, for comparisons."""
        return {
            "sram": [w.ops for w in self.sram.words],
            "vwrs": [v.word.ops for v in self.vwrs],
            "regs": [(r.r1, r.r2, r.r3, r.r4) for r in self.regs],
            "threads": [(t.pc, tuple(t.counters), t.halted) for t in self.threads],
            "cycle": self.cycle,
        }


@dataclass(frozen=True)
class StepResult:
    pc: int
    instruction: str
    cost: int
    next_pc: int
    halted: bool


@dataclass
class RunReport:
    cycles: int
    instructions: int
    sram_reads: int
    sram_writes: int
    vwr_wide_loads: int
    vwr_wide_stores: int
    vwr_narrow_reads: int
    vwr_narrow_writes: int
    vfux_by_mode: dict
    shuffle_ops: dict
    energy: dict
    trace: dict
    final_pc: int
    halted: bool
    vwr_bypass: bool = False
    config: str = ""
    program: str = ""

    @property
    def vfux_total(self) -> int:
        return sum(self.vfux_by_mode.values())

    @property
    def memory_accesses(self) -> int:
        return self.sram_reads + self.sram_writes

    @property
    def lb_ratio(self) -> float:
        return loop_buffer_summary(self.trace)["ratio"]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["vfux_total"] = self.vfux_total
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        d = dict(d)
        d.pop("vfux_total", None)
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


# ----------------------------------------------------------- operand I/O


class _Io:
    """Operand access for one VFU during one instruction.

    Reads are served from current state without metering; metering and writes
    are queued and applied at commit.
    """

    def __init__(self, state: MachineState, thread: ThreadState, vfu: int):
        self.s = state
        self.t = thread
        self.vfu = vfu
        self.cfg = state.cfg
        self.group = state.cfg.slices_per_vfu
        self.commits = []

    def index(self, x) -> int:
        return self.t.counters[x.idx] if isinstance(x, CReg) else x

    def vwr(self, idx: int) -> VwrState:
        if not 0 <= idx < len(self.s.vwrs):
            raise SliceOutOfRange(f"VWR {idx} does not exist (vwr_count={len(self.s.vwrs)})")
        return self.s.vwrs[idx]

    def phys_slice(self, ref: VwrRef) -> int:
        local = self.index(ref.slice)
        if not 0 <= local < self.group:
            raise SliceOutOfRange(f"slice {local} outside this VFU's slices [0, {self.group})")
        return self.vfu * self.group + local

    def read(self, loc):
        if isinstance(loc, Reg):
            return self.s.regs[self.vfu].get(loc.name)
        vwr = self.vwr(loc.vwr)
        phys = self.phys_slice(loc)
        self.commits.append(lambda: vwr.read_slice(phys))
        return vwr.word.slice(phys)

    def read_operand(self, vwr_idx: int, flat: int) -> int:
        """One operand of this VFU's slice group, by flat index within the group."""
        vwr = self.vwr(vwr_idx)
        local_slice, lane = divmod(flat, self.cfg.lanes)
        if not 0 <= local_slice < self.group:
            raise SliceOutOfRange(
                f"operand {flat} outside this VFU's {self.group * self.cfg.lanes} operands"
            )
        phys = self.vfu * self.group + local_slice
        self.commits.append(lambda: vwr.read_slice(phys))
        return vwr.word.slice(phys)[lane]

    def write(self, loc, value):
        value = check_lanes(value, self.cfg.lanes, self.cfg.operand_width_bits)
        if isinstance(loc, Reg):
            regs = self.s.regs[self.vfu]
            self.commits.append(lambda: regs.set(loc.name, value))
        else:
            vwr = self.vwr(loc.vwr)
            phys = self.phys_slice(loc)
            self.commits.append(lambda: vwr.write_slice(phys, value))


# ------------------------------------------------------ control actions


def _enables(locs) -> tuple[int, int]:
    vwr = sum(1 for x in locs if isinstance(x, VwrRef))
    return vwr, len(locs) - vwr


def _control_actions(ins) -> dict:
    """Control actions an instruction fires, per component class."""
    a = {"vfu_config": 0, "vwr_enable": 0, "reg_enable": 0, "mux_select": 0}
    if isinstance(ins, (Rlb, Wlb)):
        a["vwr_enable"] = 1
        a["mux_select"] = 1 if ins.tshuf else 0
    elif isinstance(ins, Glmv):
        a["vwr_enable"] = 1
        a["mux_select"] = 1
    elif isinstance(ins, Vmv):
        a["vwr_enable"], a["reg_enable"] = _enables([ins.src, ins.dst])
        a["mux_select"] = 1
    elif isinstance(ins, Rmv):
        a["vwr_enable"], a["reg_enable"] = _enables([ins.src, ins.dst])
        a["mux_select"] = 1
    elif isinstance(ins, Perm):
        a["vwr_enable"], a["reg_enable"] = _enables([ins.target])
        a["mux_select"] = 1
    elif isinstance(ins, Vfux):
        locs = [ins.in1] + ([ins.in2] if ins.in2 is not None else []) + list(ins.out)
        a["vwr_enable"], a["reg_enable"] = _enables(locs)
        a["vfu_config"] = 1
        a["mux_select"] = 2 if ins.shuf else 1
    elif isinstance(ins, Calc):
        a["vfu_config"] = 1
        a["reg_enable"] = 1
    elif isinstance(ins, Bran):
        a["mux_select"] = 1
    return a


def loop_buffer_summary(trace) -> dict:
    """Firings per loop-buffer update.

    ``ratio`` is issued instructions over LB update events; ``component_ratio``
    compares per-component control actions with the same update count.
    """
    t = trace.to_dict() if isinstance(trace, ControlActionTrace) else dict(trace)
    updates = t["lb_update_events"]
    component = (
        t["vfu_config_actions"] + t["vwr_enable_actions"] + t["reg_enable_actions"] + t["mux_select_actions"]
    )
    return {
        "issued": t["issued"],
        "lb_update_events": updates,
        "component_actions": component,
        "ratio": t["issued"] / updates if updates else 0.0,
        "component_ratio": component / updates if updates else 0.0,
    }


# ------------------------------------------------------------- handlers


def _cost(ins, cfg: ArchConfig) -> int:
    if isinstance(ins, (Rlb, Wlb)):
        return shuffle_cycles(ins.tshuf, cfg.tile_shuffle_max_steps)
    if isinstance(ins, Glmv):
        return shuffle_cycles(ins.steps, cfg.tile_shuffle_max_steps)
    if isinstance(ins, Rmv):
        return shuffle_cycles(ins.step, cfg.vfu_shuffle_max_range)
    if isinstance(ins, Vfux):
        return shuffle_cycles(ins.shuf, cfg.vfu_shuffle_max_range)
    return 1


def _tile_rotate(word: WideWord, steps: int, cfg: ArchConfig, start=0, count=None):
    """Apply a possibly long rotation as legal single operations; returns (word, ops, energy)."""
    ops = decompose_steps(steps, cfg.tile_shuffle_max_steps)
    energy = 0.0
    for s in ops:
        spec = TileShuffleSpec(s, cfg.vfu_width_bits, start, count)
        word = tile_shuffle(word, spec, cfg)
        energy += tile_shuffle_energy(spec, cfg)
    return word, len(ops), energy


def _lane_shift(v, step: int, fill: str, cfg: ArchConfig):
    ops = decompose_steps(step, cfg.vfu_shuffle_max_range)
    for s in ops:
        v = vfu_shuffle(v, VfuShuffleSpec(s, fill), cfg.vfu_shuffle_max_range)
    return v, len(ops)


def _execute(state: MachineState, thread: ThreadState, ins, program: Program):
    """Validate and compute one instruction; returns (commits, next_pc)."""
    cfg = state.cfg
    stats = state.stats
    commits = []
    next_pc = thread.pc + 1
    main = _Io(state, thread, thread.vfus[0])

    if isinstance(ins, Nop):
        pass
    elif isinstance(ins, Rlb):
        addr = main.index(ins.addr)
        vwr = main.vwr(ins.vwr)
        state.sram.check_addr(addr)
        word, n_ops, energy = _tile_rotate(state.sram.words[addr], ins.tshuf, cfg)

        def commit():
            state.sram.read(addr)
            vwr.load_wide(word)
            stats.shuffle_ops["tile"] += n_ops
            stats.shuffle_energy += energy

        commits.append(commit)
    elif isinstance(ins, Wlb):
        addr = main.index(ins.addr)
        vwr = main.vwr(ins.vwr)
        state.sram.check_addr(addr)
        word, n_ops, energy = _tile_rotate(vwr.word, ins.tshuf, cfg)

        def commit():
            vwr.store_wide()
            state.sram.write(addr, word)
            stats.shuffle_ops["tile"] += n_ops
            stats.shuffle_energy += energy

        commits.append(commit)
    elif isinstance(ins, Glmv):
        vwr = main.vwr(ins.vwr)
        word, n_ops, energy = _tile_rotate(vwr.word, ins.steps, cfg, ins.start, ins.count)

        def commit():
            vwr.store_wide()
            vwr.load_wide(word)
            stats.shuffle_ops["tile"] += n_ops
            stats.shuffle_energy += energy

        commits.append(commit)
    elif isinstance(ins, Calc):
        a = main.index(ins.a)
        b = main.index(ins.b) if ins.b is not None else 0
        value = vfu_scalar_calc(ins.op, a, b)
        counters = thread.counters
        commits.append(lambda: counters.__setitem__(ins.dst.idx, value))
    elif isinstance(ins, Bran):
        if ins.target not in program.labels:
            raise KeyError(f"undefined label {ins.target!r}")
        target = program.labels[ins.target]
        if ins.cond == "always":
            next_pc = target
        else:
            c = thread.counters[ins.counter.idx]
            if ins.cond == "z":
                if c == 0:
                    next_pc = target
            elif c != 0:
                counters, idx = thread.counters, ins.counter.idx
                commits.append(lambda: counters.__setitem__(idx, c - 1))
                if c - 1 != 0:
                    next_pc = target
    else:
        # per-VFU instructions: every VFU driven by this thread executes them
        ios = [_Io(state, thread, v) for v in thread.vfus]
        for io in ios:
            _execute_vector(io, ins, stats)
        for io in ios:
            commits.extend(io.commits)
    return commits, next_pc


def _execute_vector(io: _Io, ins, stats: Stats) -> None:
    cfg = io.cfg
    if isinstance(ins, Vmv):
        if ins.bcast is None:
            value = io.read(ins.src)
        else:
            if ins.src.slice is None:
                x = io.read_operand(ins.src.vwr, io.index(ins.bcast))
            else:
                lane = io.index(ins.bcast)
                if not 0 <= lane < cfg.lanes:
                    raise SliceOutOfRange(f"broadcast lane {lane} outside [0, {cfg.lanes})")
                x = io.read(ins.src)[lane]
            value = (x,) * cfg.lanes
        io.write(ins.dst, value)
    elif isinstance(ins, Rmv):
        value, n_ops = _lane_shift(io.read(ins.src), ins.step, ins.fill, cfg)
        io.write(ins.dst, value)
        io.commits.append(lambda: stats.shuffle_ops.__setitem__("vfu", stats.shuffle_ops["vfu"] + n_ops))
    elif isinstance(ins, Perm):
        value = vfu_permute(io.read(ins.target), PermSpec(ins.pairs))
        io.write(ins.target, value)
        io.commits.append(lambda: stats.shuffle_ops.__setitem__("perm", stats.shuffle_ops["perm"] + 1))
    elif isinstance(ins, Vfux):
        a = io.read(ins.in1)
        b = io.read(ins.in2) if ins.in2 is not None else None
        acc = io.read(ins.out[0]) if ins.mode in ACC_MODES else None
        result = vfu_execute(ins.mode, a, b, acc, ins.imm, cfg.operand_width_bits)
        result, n_ops = _lane_shift(result, ins.shuf, ins.fill, cfg)
        for dst in ins.out:
            io.write(dst, result)
        mode = str(ins.mode)

        def commit():
            stats.vfux_by_mode[mode] += 1
            if n_ops:
                stats.shuffle_ops["vfu"] += n_ops

        io.commits.append(commit)
    else:  # pragma: no cover
        raise TypeError(f"not a vector instruction: {ins!r}")


# --------------------------------------------------------------- driver


@lru_cache(maxsize=4096)
def _checked(ins, cfg: ArchConfig) -> bool:
    check_instruction(ins, cfg)
    return True


def _fault_context(state: MachineState, thread: ThreadState) -> dict:
    return {
        "cycle": state.cycle,
        "counters": list(thread.counters),
        "vfus": thread.vfus,
    }


def _step_thread(state: MachineState, thread: ThreadState, program: Program, tid: int = 0) -> StepResult:
    pc = thread.pc
    if thread.halted or not 0 <= pc < len(program.instructions):
        thread.halted = True
        return StepResult(pc, "", 0, pc, True)
    ins = program.instructions[pc]
    try:
        _checked(ins, state.cfg)
        cost = _cost(ins, state.cfg)
        commits, next_pc = _execute(state, thread, ins, program)
    except (ProvetError, KeyError, ValueError, IndexError, ZeroDivisionError) as exc:
        raise SimulationFault(pc, format_instruction(ins), exc, _fault_context(state, thread)) from exc
    for c in commits:
        c()
    stats = state.stats
    trace = stats.trace
    trace.issued += 1
    if (tid, pc) not in stats.visited:
        stats.visited.add((tid, pc))
        trace.lb_update_events += 1
    n_vfus = 1 if isinstance(ins, (Nop, Rlb, Wlb, Glmv, Calc, Bran)) else len(thread.vfus)
    for key, n in _control_actions(ins).items():
        setattr(trace, f"{key}_actions", getattr(trace, f"{key}_actions") + n * n_vfus)
    thread.pc = next_pc
    if not 0 <= next_pc < len(program.instructions):
        thread.halted = True
    return StepResult(pc, format_instruction(ins), cost, next_pc, thread.halted)


def step(state: MachineState, program: Program) -> StepResult:
    """Execute the instruction at ``state.pc`` (lockstep mode)."""
    result = _step_thread(state, state.threads[0], program)
    state.cycle += result.cost
    return result


def build_report(state: MachineState, program: Program | None = None, vwr_bypass: bool = False) -> RunReport:
    cfg = state.cfg
    vwrs = state.vwrs
    narrow_r = sum(v.narrow_reads for v in vwrs)
    narrow_w = sum(v.narrow_writes for v in vwrs)
    vwr_energy = sum(v.energy_accum for v in vwrs)
    if vwr_bypass:
        # every VFU operand is a fresh access to an SRAM that is one VFU wide
        e = cfg.energy
        depth = cfg.sram_depth_words * cfg.port_ratio
        per_access = cfg.vfu_width_bits * (depth * e.bl_cost_per_cell + e.wl_cost_per_cell)
        reads, writes = narrow_r, narrow_w
        sram_energy = (reads + writes) * per_access
        vwr_energy = 0.0
    else:
        reads, writes = state.sram.reads, state.sram.writes
        sram_energy = state.sram.energy_accum
    shuffle = state.stats.shuffle_energy
    return RunReport(
        cycles=state.cycle,
        instructions=state.stats.trace.issued,
        sram_reads=reads,
        sram_writes=writes,
        vwr_wide_loads=sum(v.wide_loads for v in vwrs),
        vwr_wide_stores=sum(v.wide_stores for v in vwrs),
        vwr_narrow_reads=narrow_r,
        vwr_narrow_writes=narrow_w,
        vfux_by_mode=dict(sorted(state.stats.vfux_by_mode.items())),
        shuffle_ops={k: state.stats.shuffle_ops.get(k, 0) for k in ("tile", "vfu", "perm")},
        energy={
            "sram": sram_energy,
            "vwr": vwr_energy,
            "shuffle": shuffle,
            "total": sram_energy + vwr_energy + shuffle,
        },
        trace=state.stats.trace.to_dict(),
        final_pc=state.pc,
        halted=state.halted,
        vwr_bypass=vwr_bypass,
        config=cfg.fingerprint(),
        program=program.name if program is not None else "",
    )


def run(
    state: MachineState,
    program: Program,
    max_cycles: int = DEFAULT_MAX_CYCLES,
    vwr_bypass: bool = False,
    trace_rows: list | None = None,
) -> RunReport:
    """Run to halt. ``trace_rows``, if given, receives one dict per executed instruction."""
    if not program.instructions:
        state.threads[0].halted = True
    while not state.halted:
        if state.cycle >= max_cycles:
            raise CycleLimitExceeded(max_cycles, build_report(state, program, vwr_bypass))
        result = step(state, program)
        if trace_rows is not None:
            trace_rows.append(
                {"cycle": state.cycle, "pc": result.pc, "cost": result.cost, "instruction": result.instruction}
            )
    return build_report(state, program, vwr_bypass)


def run_streams(
    state: MachineState,
    programs: list,
    max_cycles: int = DEFAULT_MAX_CYCLES,
    vwr_bypass: bool = False,
) -> RunReport:
    """One program per VFU. Each round issues one instruction from every live
    stream in VFU order; the round costs as many cycles as its slowest member."""
    if len(programs) != state.cfg.vfu_count:
        raise ValueError(f"need one program per VFU ({state.cfg.vfu_count}), got {len(programs)}")
    state.threads = [ThreadState(vfus=(v,)) for v in range(state.cfg.vfu_count)]
    for t, p in zip(state.threads, programs):
        t.halted = not p.instructions
    while not state.halted:
        if state.cycle >= max_cycles:
            raise CycleLimitExceeded(max_cycles, build_report(state, None, vwr_bypass))
        round_cost = 0
        for tid, (thread, program) in enumerate(zip(state.threads, programs)):
            if not thread.halted:
                round_cost = max(round_cost, _step_thread(state, thread, program, tid).cost)
        state.cycle += round_cost
    return build_report(state, None, vwr_bypass)


def write_trace_csv(rows: list, path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=["cycle", "pc", "cost", "instruction"])
        writer.writeheader()
        writer.writerows(rows)


def _run_job(job):
    cfg, program, words, max_cycles, bypass = job
    state = MachineState(cfg, words)
    return run(state, program, max_cycles, bypass)


def run_batch(jobs: list, workers: int | None = None) -> list:
    """Run independent ``(cfg, program, sram_words, max_cycles, bypass)`` jobs in parallel.

    Results come back in job order.
    """
    if workers == 1 or len(jobs) <= 1:
        return [_run_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_job, jobs))

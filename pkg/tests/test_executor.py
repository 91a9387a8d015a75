import json

import pytest
from conftest import small_config

from provet.config import example16_config
from provet.datapath import WideWord
from provet.errors import CycleLimitExceeded, SimulationFault
from provet.executor import (
    MachineState,
    RunReport,
    build_report,
    loop_buffer_summary,
    run,
    run_batch,
    run_streams,
    step,
    write_trace_csv,
)
from provet.isa import assemble

CFG = example16_config(depth=8)


def word(ops):
    return WideWord.from_operands(ops, CFG)


def machine(words=None):
    mem = [WideWord.zeros(CFG)] * CFG.sram_depth_words
    for addr, w in (words or {}).items():
        mem[addr] = w
    return MachineState(CFG, mem)


def exec_text(text, words=None, **kw):
    state = machine(words)
    program = assemble(text, CFG)
    return state, run(state, program, **kw)


RAMP = word([i % 64 - 32 for i in range(64)])


def test_rlb_wlb_with_tile_shuffle():
    state, rep = exec_text("RLB addr=0, vwr=A, tshuf=1\nWLB vwr=A, addr=1, tshuf=-1", {0: RAMP})
    assert state.vwrs[0].word.slice(1) == RAMP.slice(0)
    assert state.sram.words[1] == RAMP
    assert (rep.sram_reads, rep.sram_writes, rep.vwr_wide_loads, rep.vwr_wide_stores) == (1, 1, 1, 1)
    assert rep.shuffle_ops["tile"] == 2
    assert rep.energy["shuffle"] == pytest.approx(2 * 4 * CFG.energy.shuffle_cost_per_block_step)


def test_long_tile_shuffle_costs_extra_cycles():
    state, rep = exec_text("RLB addr=0, vwr=A, tshuf=3", {0: RAMP})
    assert rep.cycles == 2 and rep.instructions == 1
    assert state.vwrs[0].word.slice(3) == RAMP.slice(0)
    assert rep.shuffle_ops["tile"] == 2


def test_vmv_and_broadcast():
    text = """
        RLB addr=0, vwr=A
        VMV src=A[2], dst=R1
        VMV src=A[1], bcast=3, dst=R2
        VMV src=A, bcast=50, dst=R3
        VMV src=R1, dst=B[0]
    """
    state, rep = exec_text(text, {0: RAMP})
    regs = state.regs[0]
    assert regs.get("R1") == RAMP.slice(2)
    assert regs.get("R2") == (RAMP.ops[16 + 3],) * 16
    assert regs.get("R3") == (RAMP.ops[50],) * 16
    assert state.vwrs[1].word.slice(0) == RAMP.slice(2)
    assert rep.vwr_narrow_reads == 3 and rep.vwr_narrow_writes == 1


def test_glmv_rotates_in_place():
    state, rep = exec_text("RLB addr=0, vwr=A\nGLMV vwr=A, steps=-1, start=1, count=3", {0: RAMP})
    blocks = state.vwrs[0].word.blocks()
    assert blocks == (RAMP.slice(0), RAMP.slice(2), RAMP.slice(3), RAMP.slice(1))
    assert rep.sram_reads == 1


def test_rmv_rotate_and_zero_fill():
    text = """
        RLB addr=0, vwr=A
        VMV src=A[0], dst=R1
        RMV src=R1, dst=R2, step=1
        RMV src=R1, dst=R3, step=-6, fill=zero
    """
    state, rep = exec_text(text, {0: RAMP})
    r1 = RAMP.slice(0)
    assert state.regs[0].get("R2") == r1[-1:] + r1[:-1]
    assert state.regs[0].get("R3") == r1[6:] + (0,) * 6
    # -6 exceeds the range 4: two operations, two cycles
    assert rep.shuffle_ops["vfu"] == 3
    assert rep.cycles == 5


def test_perm():
    state, _ = exec_text("RLB addr=0, vwr=A\nVMV src=A[0], dst=R1\nPERM target=R1, pairs=0>1|1>0", {0: RAMP})
    r = state.regs[0].get("R1")
    assert r[:2] == (RAMP.ops[1], RAMP.ops[0]) and r[2:] == RAMP.ops[2:16]


def test_vfux_modes_and_routing():
    text = """
        RLB addr=0, vwr=A
        VMV src=A[0], dst=R1
        VMV src=A[1], dst=R4
        VFUX mult, in1=R1, in2=R4, out=R2|B[0]
        VFUX multacc, in1=R1, in2=A[1], out=R2
        VFUX add, in1=R2, in2=R4, out=R3, shuf=1
        VFUX clip, in1=R1, out=R4, imm=-3|3
    """
    state, rep = exec_text(text, {0: RAMP})
    a, b = RAMP.slice(0), RAMP.slice(1)
    w = lambda x: ((x + 128) % 256) - 128  # noqa: E731
    prod = tuple(w(x * y) for x, y in zip(a, b))
    acc = tuple(w(2 * p) for p in prod)
    s = tuple(w(x + y) for x, y in zip(acc, b))
    regs = state.regs[0]
    assert state.vwrs[1].word.slice(0) == prod
    assert regs.get("R2") == acc
    assert regs.get("R3") == s[-1:] + s[:-1]
    assert regs.get("R4") == tuple(min(max(x, -3), 3) for x in a)
    assert rep.vfux_by_mode == {"add": 1, "clip": 1, "mult": 1, "multacc": 1}
    assert rep.vfux_total == 4


def test_calc_and_hardware_loop():
    text = """
        CALC mov, c0, 5
        CALC mov, c1, 0
    top:
        CALC add, c1, c1, 2
        BRAN nz, c0, top
    """
    state, rep = exec_text(text)
    # the loop body runs 5 times; the counter ends at zero
    assert state.counters[:2] == [0, 10]
    assert rep.instructions == 2 + 5 * 2


def test_bran_nz_on_zero_falls_through_and_z_branches():
    text = """
        BRAN nz, c0, skip
        CALC mov, c1, 1
    skip:
        BRAN z, c0, end
        CALC mov, c2, 1
    end:
    """
    state, _ = exec_text(text)
    assert state.counters[:3] == [0, 1, 0]
    assert state.halted


def test_counter_indexed_operands():
    text = """
        CALC mov, c2, 3
        CALC mov, c3, 1
        RLB addr=c3, vwr=B
        VMV src=B[c2], dst=R1
    """
    state, _ = exec_text(text, {1: RAMP})
    assert state.regs[0].get("R1") == RAMP.slice(3)


def test_fault_reports_pc_and_leaves_state_untouched():
    text = "CALC mov, c2, 9\nRLB addr=c2, vwr=A"
    state = machine({0: RAMP})
    program = assemble(text, CFG)
    step(state, program)
    before = state.snapshot()
    with pytest.raises(SimulationFault) as info:
        step(state, program)
    assert info.value.pc == 1
    assert "RLB" in str(info.value)
    assert state.snapshot() == before


def test_cycle_limit_returns_partial_report():
    state = machine()
    program = assemble("top: BRAN always, top", CFG)
    with pytest.raises(CycleLimitExceeded) as info:
        run(state, program, max_cycles=50)
    assert info.value.report.cycles == 50
    assert not info.value.report.halted


def test_loop_buffer_counts_distinct_pcs():
    text = """
        CALC mov, c0, 10
    top:
        VFUX add, in1=R1, in2=R4, out=R4
        BRAN nz, c0, top
    """
    _, rep = exec_text(text)
    s = loop_buffer_summary(rep.trace)
    assert s["issued"] == 21 and s["lb_update_events"] == 3
    assert rep.lb_ratio == pytest.approx(7.0)
    assert s["component_ratio"] > 0


def test_bypass_mode_meters_narrow_accesses():
    text = "RLB addr=0, vwr=A\nVMV src=A[0], dst=R1\nVMV src=A[1], dst=R2\nVMV src=R1, dst=A[2]"
    _, normal = exec_text(text, {0: RAMP})
    _, bypass = exec_text(text, {0: RAMP}, vwr_bypass=True)
    assert (normal.sram_reads, normal.sram_writes) == (1, 0)
    assert (bypass.sram_reads, bypass.sram_writes) == (2, 1)
    e = CFG.energy
    per = CFG.vfu_width_bits * (CFG.sram_depth_words * CFG.port_ratio * e.bl_cost_per_cell + e.wl_cost_per_cell)
    assert bypass.energy["sram"] == pytest.approx(3 * per)
    assert bypass.energy["vwr"] == 0


def test_report_json_round_trip(tmp_path):
    _, rep = exec_text("RLB addr=0, vwr=A\nVMV src=A[0], dst=R1", {0: RAMP})
    again = RunReport.from_dict(json.loads(rep.to_json()))
    assert again == rep


def test_trace_csv(tmp_path):
    rows = []
    exec_text("NOP\nRLB addr=0, vwr=A, tshuf=3", trace_rows=rows)
    path = tmp_path / "t.csv"
    write_trace_csv(rows, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "cycle,pc,cost,instruction"
    assert lines[2].startswith("3,1,2,")


def test_lockstep_multi_vfu_uses_own_slices():
    cfg = small_config(vfu_count=2, sram_depth_words=4)
    ops = list(range(64))
    state = MachineState(cfg, [WideWord.from_operands(ops, cfg)] + [WideWord.zeros(cfg)] * 3)
    program = assemble("RLB addr=0, vwr=A\nVMV src=A[1], dst=R1\nVFUX add, in1=R1, in2=R4, out=A[0]\nWLB vwr=A, addr=1", cfg)
    rep = run(state, program)
    # VFU 0 owns slices 0..3, VFU 1 owns 4..7
    assert state.regs[0].get("R1") == tuple(ops[8:16])
    assert state.regs[1].get("R1") == tuple(ops[40:48])
    assert state.sram.words[1].slice(4) == tuple(ops[40:48])
    assert rep.vfux_by_mode == {"add": 2}


def test_streams_one_program_per_vfu():
    cfg = small_config(vfu_count=2, sram_depth_words=4)
    state = MachineState(cfg)
    p0 = assemble("CALC mov, c0, 1\nRMV src=R1, dst=R2, step=8", cfg)
    p1 = assemble("CALC mov, c0, 2", cfg)
    rep = run_streams(state, [p0, p1])
    assert [t.counters[0] for t in state.threads] == [1, 2]
    # round 1: both CALCs (1 cycle); round 2: the 2-cycle RMV alone
    assert rep.cycles == 3
    with pytest.raises(ValueError):
        run_streams(MachineState(cfg), [p0])


def test_run_batch_matches_serial():
    program = assemble("RLB addr=0, vwr=A\nVMV src=A[0], dst=R1\nVFUX mult, in1=R1, in2=A[0], out=A[1]\nWLB vwr=A, addr=0", CFG)
    mem = [RAMP] + [WideWord.zeros(CFG)] * 7
    jobs = [(CFG, program, list(mem), 1000, False)] * 3
    serial = run_batch(jobs, workers=1)
    parallel = run_batch(jobs, workers=2)
    assert serial == parallel
    assert build_report(MachineState(CFG)).cycles == 0

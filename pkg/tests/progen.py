"""Random valid programs for round-trip and execution tests."""

import random

from provet.config import ArchConfig
from provet.isa import (
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
)
from provet.vfu import IMM_ARITY, SCALAR_OPS, UNARY_SCALAR_OPS, VfuMode, needs_second_operand

REGS = ("R1", "R2", "R3", "R4")


def _index(rng, hi):
    return CReg(rng.randrange(8)) if rng.random() < 0.3 else rng.randrange(hi)


def _slice(rng, cfg):
    return VwrRef(rng.randrange(cfg.vwr_count), _index(rng, cfg.slices_per_vfu))


def _loc(rng, cfg):
    return Reg(rng.choice(REGS)) if rng.random() < 0.5 else _slice(rng, cfg)


def random_instruction(rng: random.Random, cfg: ArchConfig, labels):
    kind = rng.randrange(10)
    if kind == 0:
        return Nop()
    if kind == 1:
        return Rlb(_index(rng, cfg.sram_depth_words), rng.randrange(cfg.vwr_count), rng.randint(-5, 5))
    if kind == 2:
        return Wlb(rng.randrange(cfg.vwr_count), _index(rng, cfg.sram_depth_words), rng.randint(-5, 5))
    if kind == 3:
        r = rng.random()
        if r < 0.4:
            return Vmv(_slice(rng, cfg), Reg(rng.choice(REGS)))
        if r < 0.6:
            return Vmv(_slice(rng, cfg), Reg(rng.choice(REGS)), _index(rng, cfg.lanes))
        if r < 0.8:
            return Vmv(VwrRef(rng.randrange(cfg.vwr_count)), Reg(rng.choice(REGS)), _index(rng, cfg.slices_per_vfu * cfg.lanes))
        return Vmv(Reg(rng.choice(REGS)), _slice(rng, cfg))
    if kind == 4:
        start = rng.randrange(cfg.port_ratio)
        count = rng.choice([None, rng.randint(0, cfg.port_ratio - start)])
        return Glmv(rng.randrange(cfg.vwr_count), rng.randint(-6, 6), start, count)
    if kind == 5:
        return Rmv(_loc(rng, cfg), _loc(rng, cfg), rng.randint(-20, 20), rng.choice(["rotate", "zero"]))
    if kind == 6:
        dsts = rng.sample(range(cfg.lanes), rng.randint(0, min(4, cfg.lanes)))
        return Perm(_loc(rng, cfg), tuple((rng.randrange(cfg.lanes), d) for d in dsts))
    if kind == 7:
        mode = rng.choice(list(VfuMode))
        in2 = None
        if needs_second_operand(mode):
            in2 = Reg("R4") if rng.random() < 0.5 else _slice(rng, cfg)
        outs = []
        for _ in range(rng.randint(1, 3)):
            o = Reg(rng.choice(("R2", "R3", "R4"))) if rng.random() < 0.6 else _slice(rng, cfg)
            if o not in outs:
                outs.append(o)
        imm = ()
        if IMM_ARITY.get(mode) == 2:
            lo = rng.randint(-128, 127)
            imm = (lo, rng.randint(lo, 127))
        elif IMM_ARITY.get(mode) == 1:
            imm = (rng.randint(-7, 7),)
        return Vfux(mode, Reg(rng.choice(("R1", "R2", "R3"))), in2, tuple(outs), imm, rng.randint(-4, 4), rng.choice(["rotate", "zero"]))
    if kind == 8:
        op = rng.choice(SCALAR_OPS)
        a = _index(rng, 100) if rng.random() < 0.7 else -rng.randrange(100)
        b = None if op in UNARY_SCALAR_OPS else _index(rng, 100)
        return Calc(op, CReg(rng.randrange(8)), a, b)
    cond = rng.choice(["always", "nz", "z"])
    return Bran(cond, rng.choice(labels), None if cond == "always" else CReg(rng.randrange(8)))


def random_program(rng: random.Random, cfg: ArchConfig, max_len: int = 30) -> Program:
    n = rng.randint(1, max_len)
    label_names = [f"L{i}" for i in range(rng.randint(1, 4))]
    labels = {name: rng.randint(0, n) for name in label_names}
    instructions = tuple(random_instruction(rng, cfg, label_names) for _ in range(n))
    name = rng.choice(["", "prog", f"p{rng.randrange(1000)}"])
    return Program(instructions, labels, name, cfg.fingerprint() if rng.random() < 0.5 else "")

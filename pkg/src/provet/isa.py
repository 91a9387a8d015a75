"""Instruction set, assembly text format, assembler and disassembler.

Syntax, one instruction or label per line, ``#`` starts a comment::

    .program conv2d            # optional metadata directives
    .config  3f2a9c01b4de
    loop:
        RLB   addr=c6, vwr=A, tshuf=1
        WLB   vwr=B, addr=12
        VMV   src=B, bcast=c4, dst=R1      # broadcast operand c4 of VWR B
        VMV   src=A[2], dst=R3
        GLMV  vwr=A, steps=1, start=0, count=4
        RMV   src=R4, dst=R4, step=-4, fill=zero
        PERM  target=R2, pairs=0>3|1>2
        VFUX  mult, in1=R1, in2=A[c7], out=R2|B[3], shuf=1
        VFUX  clip, in1=R1, out=R4, imm=-8|7
        CALC  add, c4, c4, 1
        BRAN  nz, c0, loop                 # decrement c0, branch while non-zero
        BRAN  z, c7, loop                  # branch if c7 == 0 (no decrement)
        BRAN  always, loop

Operands that select a slice, an address or a broadcast lane accept either
an immediate or a scalar counter ``c0``..``c7``. VWRs are named ``A``, ``B``,
``C``... Keyword operands may appear in any order; the disassembler always
emits the canonical order shown above and omits defaults.

``GLV`` is accepted as an alias of ``GLMV``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, fields
from typing import ClassVar, Union

from provet.config import ArchConfig
from provet.errors import OperandRangeError, ParseError, UnknownMnemonic, UnresolvedLabel
from provet.shufflers import FILL_MODES
from provet.vfu import IMM_ARITY, SCALAR_OPS, UNARY_SCALAR_OPS, VfuMode, needs_second_operand

NUM_COUNTERS = 8
VWR_LETTERS = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
BRANCH_CONDS = ("always", "nz", "z")
VFUX_IN1 = ("R1", "R2", "R3")
VFUX_OUT_REGS = ("R2", "R3", "R4")


# ------------------------------------------------------------- operands


@dataclass(frozen=True)
class CReg:
    """Scalar counter register ``c<idx>``."""

    idx: int

    def __str__(self):
        return f"c{self.idx}"


Index = Union[int, CReg]


@dataclass(frozen=True)
class Reg:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class VwrRef:
    """A VWR slice, or the whole VWR word when ``slice`` is None."""

    vwr: int
    slice: Index | None = None

    def __str__(self):
        letter = VWR_LETTERS[self.vwr]
        return letter if self.slice is None else f"{letter}[{self.slice}]"


Loc = Union[Reg, VwrRef]

R1, R2, R3, R4 = Reg("R1"), Reg("R2"), Reg("R3"), Reg("R4")


def vwr_name(idx: int) -> str:
    return VWR_LETTERS[idx]


# --------------------------------------------------------- instructions


@dataclass(frozen=True)
class Instruction:
    mnemonic: ClassVar[str] = "?"

    def __str__(self):
        return format_instruction(self)


@dataclass(frozen=True)
class Nop(Instruction):
    mnemonic: ClassVar[str] = "NOP"


@dataclass(frozen=True)
class Rlb(Instruction):
    """SRAM word -> VWR, optionally rotated by the tile shuffler."""

    mnemonic: ClassVar[str] = "RLB"
    addr: Index
    vwr: int
    tshuf: int = 0


@dataclass(frozen=True)
class Wlb(Instruction):
    """VWR -> SRAM word, optionally rotated by the tile shuffler."""

    mnemonic: ClassVar[str] = "WLB"
    vwr: int
    addr: Index
    tshuf: int = 0


@dataclass(frozen=True)
class Vmv(Instruction):
    """Move one VFU-wide vector between a VWR slice and a local register.

    With ``bcast`` set, one operand of the source VWR is replicated into every
    lane of the destination register: the index is a lane of ``src`` when it
    names a slice, or an operand index within the VFU's slice group when
    ``src`` is a bare VWR.
    """

    mnemonic: ClassVar[str] = "VMV"
    src: Loc
    dst: Loc
    bcast: Index | None = None


@dataclass(frozen=True)
class Glmv(Instruction):
    """Rotate blocks of a VWR in place through the tile shuffler."""

    mnemonic: ClassVar[str] = "GLMV"
    vwr: int
    steps: int
    start: int = 0
    count: int | None = None


@dataclass(frozen=True)
class Rmv(Instruction):
    """Pass a vector through the VFU shuffler and store it to a register or VWR slice."""

    mnemonic: ClassVar[str] = "RMV"
    src: Loc
    dst: Loc
    step: int
    fill: str = "rotate"


@dataclass(frozen=True)
class Perm(Instruction):
    mnemonic: ClassVar[str] = "PERM"
    target: Loc
    pairs: tuple = ()


@dataclass(frozen=True)
class Vfux(Instruction):
    """Elementwise VFU operation.

    ``in1`` is a local register, ``in2`` is R4 or a VWR slice. Accumulating
    modes add into the current value of the first destination. Every
    destination receives the same (optionally shuffled) result.
    """

    mnemonic: ClassVar[str] = "VFUX"
    mode: VfuMode
    in1: Reg
    in2: Loc | None
    out: tuple
    imm: tuple = ()
    shuf: int = 0
    fill: str = "rotate"


@dataclass(frozen=True)
class Calc(Instruction):
    mnemonic: ClassVar[str] = "CALC"
    op: str
    dst: CReg
    a: Index
    b: Index | None = None


@dataclass(frozen=True)
class Bran(Instruction):
    """``always``; ``nz``: hardware loop, decrement counter then branch while non-zero
    (a counter already at zero falls through untouched); ``z``: branch if counter
    is zero, counter unchanged."""

    mnemonic: ClassVar[str] = "BRAN"
    cond: str
    target: str
    counter: CReg | None = None


INSTRUCTION_TYPES = (Nop, Rlb, Wlb, Vmv, Glmv, Rmv, Perm, Vfux, Calc, Bran)
MNEMONICS = {cls.mnemonic: cls for cls in INSTRUCTION_TYPES}
ALIASES = {"GLV": "GLMV"}


@dataclass(frozen=True)
class Program:
    instructions: tuple
    labels: dict = field(default_factory=dict)
    name: str = ""
    config: str = ""

    def __len__(self):
        return len(self.instructions)

    def labels_at(self, index: int) -> list[str]:
        return sorted(name for name, i in self.labels.items() if i == index)


# ------------------------------------------------------------ formatting


def _fmt_list(items, sep="|") -> str:
    return sep.join(str(x) for x in items)


def format_instruction(ins: Instruction) -> str:
    m = ins.mnemonic
    if isinstance(ins, Nop):
        return m
    if isinstance(ins, Rlb):
        parts = [f"addr={ins.addr}", f"vwr={vwr_name(ins.vwr)}"]
        if ins.tshuf:
            parts.append(f"tshuf={ins.tshuf}")
    elif isinstance(ins, Wlb):
        parts = [f"vwr={vwr_name(ins.vwr)}", f"addr={ins.addr}"]
        if ins.tshuf:
            parts.append(f"tshuf={ins.tshuf}")
    elif isinstance(ins, Vmv):
        parts = [f"src={ins.src}"]
        if ins.bcast is not None:
            parts.append(f"bcast={ins.bcast}")
        parts.append(f"dst={ins.dst}")
    elif isinstance(ins, Glmv):
        parts = [f"vwr={vwr_name(ins.vwr)}", f"steps={ins.steps}"]
        if ins.start:
            parts.append(f"start={ins.start}")
        if ins.count is not None:
            parts.append(f"count={ins.count}")
    elif isinstance(ins, Rmv):
        parts = [f"src={ins.src}", f"dst={ins.dst}", f"step={ins.step}"]
        if ins.fill != "rotate":
            parts.append(f"fill={ins.fill}")
    elif isinstance(ins, Perm):
        pairs = _fmt_list(f"{s}>{d}" for s, d in ins.pairs)
        parts = [f"target={ins.target}", f"pairs={pairs}"]
    elif isinstance(ins, Vfux):
        parts = [str(ins.mode), f"in1={ins.in1}"]
        if ins.in2 is not None:
            parts.append(f"in2={ins.in2}")
        parts.append(f"out={_fmt_list(ins.out)}")
        if ins.imm:
            parts.append(f"imm={_fmt_list(ins.imm)}")
        if ins.shuf:
            parts.append(f"shuf={ins.shuf}")
        if ins.fill != "rotate":
            parts.append(f"fill={ins.fill}")
    elif isinstance(ins, Calc):
        parts = [ins.op, str(ins.dst), str(ins.a)]
        if ins.b is not None:
            parts.append(str(ins.b))
    elif isinstance(ins, Bran):
        parts = [ins.cond]
        if ins.counter is not None:
            parts.append(str(ins.counter))
        parts.append(ins.target)
    else:  # pragma: no cover
        raise TypeError(type(ins))
    return f"{m:<5} " + ", ".join(parts)


def disassemble(program: Program) -> str:
    """Canonical text; ``assemble(disassemble(p)) == p``."""
    lines = []
    if program.name:
        lines.append(f".program {program.name}")
    if program.config:
        lines.append(f".config {program.config}")
    for i, ins in enumerate(program.instructions):
        for label in program.labels_at(i):
            lines.append(f"{label}:")
        lines.append(f"    {format_instruction(ins)}")
    for label in program.labels_at(len(program.instructions)):
        lines.append(f"{label}:")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------- parsing

_INT_RE = re.compile(r"^[+-]?(0x[0-9a-fA-F]+|\d+)$")
_CREG_RE = re.compile(r"^c(\d+)$")
_LOC_RE = re.compile(r"^([A-Z])(?:\[([^\]]+)\])?$")
_LABEL_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_.]*$")
_NAME_RE = re.compile(r"^[A-Za-z0-9_.\-]+$")


def _int(tok: str, line) -> int:
    tok = tok.strip()
    if not _INT_RE.match(tok):
        raise ParseError(f"expected an integer, got {tok!r}", line)
    return int(tok, 0) if "x" in tok.lower() else int(tok, 10)


def _creg(tok: str, line) -> CReg:
    m = _CREG_RE.match(tok.strip())
    if not m:
        raise ParseError(f"expected a counter register c0..c{NUM_COUNTERS - 1}, got {tok!r}", line)
    idx = int(m.group(1))
    if idx >= NUM_COUNTERS:
        raise OperandRangeError(f"counter register {tok} does not exist", line)
    return CReg(idx)


def _index(tok: str, line) -> Index:
    tok = tok.strip()
    if _CREG_RE.match(tok):
        return _creg(tok, line)
    return _int(tok, line)


def _loc(tok: str, line) -> Loc:
    tok = tok.strip()
    if tok in ("R1", "R2", "R3", "R4"):
        return Reg(tok)
    if re.match(r"^R\d+$", tok):
        raise OperandRangeError(f"there are only four local registers, got {tok}", line)
    m = _LOC_RE.match(tok)
    if not m:
        raise ParseError(f"expected a register or VWR operand, got {tok!r}", line)
    vwr = VWR_LETTERS.index(m.group(1))
    return VwrRef(vwr, None if m.group(2) is None else _index(m.group(2), line))


def _vwr(tok: str, line) -> int:
    tok = tok.strip()
    if len(tok) != 1 or tok not in VWR_LETTERS:
        raise ParseError(f"expected a VWR name A..Z, got {tok!r}", line)
    return VWR_LETTERS.index(tok)


def _split_operands(rest: str, line):
    positional, keywords = [], {}
    if not rest.strip():
        return positional, keywords
    for part in rest.split(","):
        part = part.strip()
        if not part:
            raise ParseError("empty operand", line)
        if "=" in part:
            key, _, value = part.partition("=")
            key = key.strip()
            if key in keywords:
                raise ParseError(f"operand {key!r} given twice", line)
            keywords[key] = value.strip()
        else:
            if keywords:
                raise ParseError("positional operand after keyword operands", line)
            positional.append(part)
    return positional, keywords


class _Operands:
    def __init__(self, mnemonic, positional, keywords, line):
        self.m, self.pos, self.kw, self.line = mnemonic, positional, keywords, line

    def positional(self, lo, hi=None):
        hi = lo if hi is None else hi
        if not lo <= len(self.pos) <= hi:
            want = str(lo) if lo == hi else f"{lo}-{hi}"
            raise ParseError(f"{self.m} takes {want} positional operands, got {len(self.pos)}", self.line)
        return self.pos

    def take(self, key, conv, default=...):
        if key not in self.kw:
            if default is ...:
                raise ParseError(f"{self.m} requires operand {key}=", self.line)
            return default
        return conv(self.kw.pop(key), self.line)

    def done(self):
        if self.kw:
            raise ParseError(f"{self.m}: unexpected operand(s) {', '.join(sorted(self.kw))}", self.line)


def _fill(tok, line):
    if tok not in FILL_MODES:
        raise OperandRangeError(f"fill must be one of {FILL_MODES}, got {tok!r}", line)
    return tok


def _nonneg(conv):
    def inner(tok, line):
        v = conv(tok, line)
        if isinstance(v, int) and v < 0:
            raise OperandRangeError(f"operand must be non-negative, got {v}", line)
        return v

    return inner


def _list(conv):
    def inner(tok, line):
        tok = tok.strip()
        return tuple(conv(t, line) for t in tok.split("|")) if tok else ()

    return inner


def _pair(tok, line):
    src, sep, dst = tok.partition(">")
    if not sep:
        raise ParseError(f"permutation pair must look like src>dst, got {tok!r}", line)
    return (_nonneg(_int)(src, line), _nonneg(_int)(dst, line))


def parse_instruction(text: str, line=None) -> Instruction:
    text = text.strip()
    head, _, rest = text.partition(" ")
    mnemonic = ALIASES.get(head.upper(), head.upper())
    cls = MNEMONICS.get(mnemonic)
    if cls is None:
        raise UnknownMnemonic(f"unknown mnemonic {head!r}", line)
    pos, kw = _split_operands(rest, line)
    ops = _Operands(mnemonic, pos, kw, line)

    if cls is Nop:
        ops.positional(0)
        ins = Nop()
    elif cls is Rlb:
        ops.positional(0)
        ins = Rlb(
            addr=ops.take("addr", _nonneg(_index)),
            vwr=ops.take("vwr", _vwr),
            tshuf=ops.take("tshuf", _int, 0),
        )
    elif cls is Wlb:
        ops.positional(0)
        ins = Wlb(
            vwr=ops.take("vwr", _vwr),
            addr=ops.take("addr", _nonneg(_index)),
            tshuf=ops.take("tshuf", _int, 0),
        )
    elif cls is Vmv:
        ops.positional(0)
        ins = Vmv(
            src=ops.take("src", _loc),
            dst=ops.take("dst", _loc),
            bcast=ops.take("bcast", _nonneg(_index), None),
        )
    elif cls is Glmv:
        ops.positional(0)
        ins = Glmv(
            vwr=ops.take("vwr", _vwr),
            steps=ops.take("steps", _int),
            start=ops.take("start", _nonneg(_int), 0),
            count=ops.take("count", _nonneg(_int), None),
        )
    elif cls is Rmv:
        ops.positional(0)
        ins = Rmv(
            src=ops.take("src", _loc),
            dst=ops.take("dst", _loc),
            step=ops.take("step", _int),
            fill=ops.take("fill", _fill, "rotate"),
        )
    elif cls is Perm:
        ops.positional(0)
        ins = Perm(target=ops.take("target", _loc), pairs=ops.take("pairs", _list(_pair)))
    elif cls is Vfux:
        (mode_tok,) = ops.positional(1)
        try:
            mode = VfuMode(mode_tok.lower())
        except ValueError:
            raise OperandRangeError(f"unknown VFU mode {mode_tok!r}", line) from None
        ins = Vfux(
            mode=mode,
            in1=ops.take("in1", _loc),
            in2=ops.take("in2", _loc, None),
            out=ops.take("out", _list(_loc)),
            imm=ops.take("imm", _list(_int), ()),
            shuf=ops.take("shuf", _int, 0),
            fill=ops.take("fill", _fill, "rotate"),
        )
    elif cls is Calc:
        pos = ops.positional(3, 4)
        op = pos[0].lower()
        if op not in SCALAR_OPS:
            raise OperandRangeError(f"unknown CALC op {pos[0]!r}", line)
        b = _index(pos[3], line) if len(pos) == 4 else None
        ins = Calc(op=op, dst=_creg(pos[1], line), a=_index(pos[2], line), b=b)
    elif cls is Bran:
        pos = ops.positional(2, 3)
        cond = pos[0].lower()
        if cond not in BRANCH_CONDS:
            raise OperandRangeError(f"unknown branch condition {pos[0]!r}", line)
        counter = _creg(pos[1], line) if len(pos) == 3 else None
        target = pos[-1]
        if not _LABEL_RE.match(target):
            raise ParseError(f"bad label name {target!r}", line)
        ins = Bran(cond=cond, target=target, counter=counter)
    else:  # pragma: no cover
        raise AssertionError(cls)
    ops.done()
    check_instruction(ins, line=line)
    return ins


# ------------------------------------------------------------ validation


def _check_vec_operand(loc, what, line, regs=None):
    if isinstance(loc, Reg):
        if regs is not None and loc.name not in regs:
            raise OperandRangeError(f"{what} cannot be {loc.name}", line)
    elif isinstance(loc, VwrRef):
        if loc.slice is None:
            raise OperandRangeError(f"{what} needs a VWR slice, e.g. A[0]", line)
    else:
        raise OperandRangeError(f"{what}: bad operand {loc!r}", line)


def check_instruction(ins: Instruction, cfg: ArchConfig | None = None, line=None) -> None:
    """Structural operand checks; with ``cfg`` also checks immediates against the tile."""
    if isinstance(ins, Vmv):
        src_vwr = isinstance(ins.src, VwrRef)
        dst_vwr = isinstance(ins.dst, VwrRef)
        if src_vwr == dst_vwr:
            raise OperandRangeError("VMV moves between a VWR slice and a local register", line)
        if dst_vwr:
            _check_vec_operand(ins.dst, "VMV dst", line)
            if ins.bcast is not None:
                raise OperandRangeError("VMV broadcast needs a VWR source", line)
        elif ins.src.slice is None and ins.bcast is None:
            raise OperandRangeError("VMV from a whole VWR needs bcast=", line)
    elif isinstance(ins, Rmv):
        _check_vec_operand(ins.src, "RMV src", line)
        _check_vec_operand(ins.dst, "RMV dst", line)
    elif isinstance(ins, Perm):
        _check_vec_operand(ins.target, "PERM target", line)
        dsts = [d for _, d in ins.pairs]
        if len(set(dsts)) != len(dsts):
            raise OperandRangeError("PERM destinations must be distinct", line)
    elif isinstance(ins, Vfux):
        _check_vec_operand(ins.in1, "VFUX in1", line, VFUX_IN1)
        if not isinstance(ins.in1, Reg):
            raise OperandRangeError("VFUX in1 must be a local register", line)
        if needs_second_operand(ins.mode):
            if ins.in2 is None:
                raise OperandRangeError(f"VFUX {ins.mode} needs in2=", line)
            _check_vec_operand(ins.in2, "VFUX in2", line, ("R4",))
        elif ins.in2 is not None:
            raise OperandRangeError(f"VFUX {ins.mode} takes no in2", line)
        if not ins.out:
            raise OperandRangeError("VFUX needs at least one destination", line)
        for o in ins.out:
            _check_vec_operand(o, "VFUX out", line, VFUX_OUT_REGS)
        if len(set(ins.out)) != len(ins.out):
            raise OperandRangeError("VFUX destinations must be distinct", line)
        want = IMM_ARITY.get(ins.mode, 0)
        if len(ins.imm) != want:
            raise OperandRangeError(f"VFUX {ins.mode} takes {want} immediate(s)", line)
        if ins.mode is VfuMode.CLIP and ins.imm[0] > ins.imm[1]:
            raise OperandRangeError("clip bounds must satisfy lo <= hi", line)
    elif isinstance(ins, Calc):
        if (ins.op in UNARY_SCALAR_OPS) != (ins.b is None):
            raise OperandRangeError(f"CALC {ins.op} has the wrong number of sources", line)
    elif isinstance(ins, Bran):
        if (ins.cond == "always") != (ins.counter is None):
            raise OperandRangeError("BRAN always takes no counter; nz/z need one", line)
    if cfg is not None:
        _check_against_config(ins, cfg, line)


def _imm_in(value, hi, what, line):
    if isinstance(value, int) and not 0 <= value < hi:
        raise OperandRangeError(f"{what} {value} outside [0, {hi})", line)


def _check_against_config(ins, cfg, line):
    group = cfg.slices_per_vfu

    def vwr_ok(v):
        _imm_in(v, cfg.vwr_count, "VWR", line)

    def loc_ok(loc):
        if isinstance(loc, VwrRef):
            vwr_ok(loc.vwr)
            if loc.slice is not None:
                _imm_in(loc.slice, group, "slice", line)

    if isinstance(ins, (Rlb, Wlb)):
        vwr_ok(ins.vwr)
        _imm_in(ins.addr, cfg.sram_depth_words, "address", line)
    elif isinstance(ins, Glmv):
        vwr_ok(ins.vwr)
        count = cfg.port_ratio - ins.start if ins.count is None else ins.count
        if ins.start + count > cfg.port_ratio:
            raise OperandRangeError("GLMV block range exceeds the word", line)
    elif isinstance(ins, Vmv):
        loc_ok(ins.src)
        loc_ok(ins.dst)
        if ins.bcast is not None:
            hi = cfg.lanes if ins.src.slice is not None else group * cfg.lanes
            _imm_in(ins.bcast, hi, "broadcast index", line)
    elif isinstance(ins, Rmv):
        loc_ok(ins.src)
        loc_ok(ins.dst)
    elif isinstance(ins, Perm):
        loc_ok(ins.target)
        for s, d in ins.pairs:
            _imm_in(s, cfg.lanes, "lane", line)
            _imm_in(d, cfg.lanes, "lane", line)
    elif isinstance(ins, Vfux):
        loc_ok(ins.in2)
        for o in ins.out:
            loc_ok(o)


def assemble(text: str, cfg: ArchConfig | None = None) -> Program:
    """Parse assembly text into a :class:`Program` with resolved labels."""
    instructions: list[Instruction] = []
    labels: dict[str, int] = {}
    pending: list[tuple[int, str]] = []
    name = config = ""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("."):
            key, _, value = line.partition(" ")
            value = value.strip()
            if key not in (".program", ".config") or not _NAME_RE.match(value):
                raise ParseError(f"bad directive {line!r}", lineno)
            if key == ".program":
                name = value
            else:
                config = value
            continue
        while True:
            m = re.match(r"^([A-Za-z_][A-Za-z0-9_.]*)\s*:(.*)$", line)
            if not m:
                break
            label = m.group(1)
            if label in labels:
                raise ParseError(f"label {label!r} defined twice", lineno)
            labels[label] = len(instructions)
            line = m.group(2).strip()
        if not line:
            continue
        ins = parse_instruction(line, lineno)
        if cfg is not None:
            check_instruction(ins, cfg, lineno)
        if isinstance(ins, Bran):
            pending.append((lineno, ins.target))
        instructions.append(ins)
    for lineno, target in pending:
        if target not in labels:
            raise UnresolvedLabel(f"branch target {target!r} is not defined", lineno)
    return Program(tuple(instructions), labels, name, config)


def check_program(program: Program, cfg: ArchConfig) -> None:
    for i, ins in enumerate(program.instructions):
        check_instruction(ins, cfg, line=None)
        if isinstance(ins, Bran) and ins.target not in program.labels:
            raise UnresolvedLabel(f"instruction {i}: branch target {ins.target!r} is not defined")


# ------------------------------------------------------------ JSON form


def _encode(value):
    if isinstance(value, (CReg, Reg, VwrRef, VfuMode)):
        return str(value)
    if isinstance(value, tuple):
        return [_encode(v) for v in value]
    return value


def program_to_dict(program: Program) -> dict:
    return {
        "format": "provet-program/1",
        "name": program.name,
        "config": program.config,
        "labels": dict(sorted(program.labels.items())),
        "instructions": [format_instruction(ins) for ins in program.instructions],
    }


def program_from_dict(d: dict) -> Program:
    if d.get("format") != "provet-program/1":
        raise ParseError(f"unsupported program format {d.get('format')!r}")
    instructions = tuple(
        parse_instruction(text, line=i + 1) for i, text in enumerate(d["instructions"])
    )
    labels = {str(k): int(v) for k, v in d.get("labels", {}).items()}
    for k, v in labels.items():
        if not 0 <= v <= len(instructions):
            raise ParseError(f"label {k!r} points outside the program")
    program = Program(instructions, labels, d.get("name", ""), d.get("config", ""))
    for i, ins in enumerate(instructions):
        if isinstance(ins, Bran) and ins.target not in labels:
            raise UnresolvedLabel(f"branch target {ins.target!r} is not defined", i + 1)
    return program


def instruction_fields(ins: Instruction) -> dict:
    return {f.name: _encode(getattr(ins, f.name)) for f in fields(ins)}

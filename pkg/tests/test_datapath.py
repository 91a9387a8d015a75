import pytest
from hypothesis import given
from hypothesis import strategies as st

from provet.config import energy_per_word_access
from provet.datapath import LocalRegs, SramState, VwrState, WideWord, check_lanes, wrap
from provet.errors import (
    AddressOutOfRange,
    LaneCountMismatch,
    LaneValueOutOfRange,
    SliceOutOfRange,
    WidthMismatch,
)


@given(st.integers(-(1 << 40), 1 << 40), st.sampled_from([4, 8, 16, 32]))
def test_wrap_matches_modular_arithmetic(x, bits):
    y = wrap(x, bits)
    assert -(1 << (bits - 1)) <= y < (1 << (bits - 1))
    assert (y - x) % (1 << bits) == 0


def test_word_bit_order(cfg16):
    ops = list(range(-32, 32))
    word = WideWord.from_operands(ops, cfg16)
    value = word.to_int()
    # operand k sits at bits [8k, 8k+8)
    for k, x in enumerate(ops):
        assert wrap((value >> (8 * k)) & 0xFF, 8) == x
    assert word.slice(1) == tuple(ops[16:32])


@given(st.lists(st.integers(-128, 127), min_size=64, max_size=64))
def test_word_int_and_bytes_round_trip(ops):
    from provet.config import example16_config

    cfg = example16_config()
    word = WideWord.from_operands(ops, cfg)
    assert WideWord.from_int(word.to_int(), cfg) == word
    assert WideWord.from_bytes(word.to_bytes(), cfg) == word
    assert len(word.to_bytes()) == 64


def test_word_validation(cfg16):
    with pytest.raises(WidthMismatch):
        WideWord.from_operands([0] * 63, cfg16)
    with pytest.raises(LaneValueOutOfRange):
        WideWord.from_operands([200] + [0] * 63, cfg16)
    with pytest.raises(SliceOutOfRange):
        WideWord.zeros(cfg16).slice(4)
    with pytest.raises(LaneCountMismatch):
        check_lanes((1, 2), 16, 8)


def test_sram_metering(cfg16):
    sram = SramState(cfg16)
    w = WideWord.from_operands(range(64), cfg16)
    sram.write(3, w)
    assert sram.read(3) == w
    assert (sram.reads, sram.writes) == (1, 1)
    assert sram.energy_accum == pytest.approx(2 * energy_per_word_access(cfg16))
    sram.peek(3)
    sram.poke(0, w)
    assert (sram.reads, sram.writes) == (1, 1)
    with pytest.raises(AddressOutOfRange):
        sram.read(cfg16.sram_depth_words)


def test_sram_rejects_wrong_width(cfg16, cfg):
    sram = SramState(cfg16)
    with pytest.raises(WidthMismatch):
        sram.write(0, WideWord.zeros(cfg))


def test_vwr_ports(cfg16):
    vwr = VwrState(cfg16)
    w = WideWord.from_operands([i % 100 for i in range(64)], cfg16)
    vwr.load_wide(w)
    assert vwr.read_slice(2) == w.slice(2)
    vwr.write_slice(0, (5,) * 16)
    assert vwr.store_wide().slice(0) == (5,) * 16
    assert (vwr.wide_loads, vwr.wide_stores, vwr.narrow_reads, vwr.narrow_writes) == (1, 1, 1, 1)
    c = cfg16.energy.vwr_access_cost_per_bit
    assert vwr.energy_accum == pytest.approx(2 * c * 512 + 2 * c * 128)
    with pytest.raises(SliceOutOfRange):
        vwr.read_slice(4)


def test_local_regs(cfg16):
    regs = LocalRegs.zeros(cfg16)
    regs.set("R3", range(16))
    assert regs.get("R3") == tuple(range(16))
    with pytest.raises(KeyError):
        regs.get("R5")

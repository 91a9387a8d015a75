import random

import pytest

from provet.config import default_config, example16_config, validate


@pytest.fixture
def cfg():
    return default_config()


@pytest.fixture
def cfg16():
    return example16_config()


def small_config(**overrides):
    """8 lanes of 8 bits, 8 slices per word: wide enough to exercise folding quickly."""
    base = dict(
        sram_width_bits=512,
        sram_depth_words=64,
        vfu_width_bits=64,
        operand_width_bits=8,
        vfu_count=1,
        vwr_count=2,
        tile_shuffle_max_steps=2,
        vfu_shuffle_max_range=4,
    )
    base.update(overrides)
    return validate(base)


@pytest.fixture
def cfg8():
    return small_config()


def wrap8(x):
    return ((x + 128) % 256) - 128


def naive_conv(img, ker, stride=1):
    """Direct nested-loop convolution (cross-correlation), 8-bit wrap, valid region."""
    h, w = len(img), len(img[0])
    kh, kw = len(ker), len(ker[0])
    oh, ow = (h - kh) // stride + 1, (w - kw) // stride + 1
    out = []
    for r in range(oh):
        row = []
        for c in range(ow):
            acc = 0
            for i in range(kh):
                for j in range(kw):
                    acc += img[r * stride + i][c * stride + j] * ker[i][j]
            row.append(wrap8(acc))
        out.append(row)
    return out


def rand_matrix(rng: random.Random, rows, cols, lo=-4, hi=4):
    return [[rng.randint(lo, hi) for _ in range(cols)] for _ in range(rows)]


ACCEPTANCE_RESULTS = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(ACCEPTANCE_RESULTS[n])

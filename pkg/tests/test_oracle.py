import hashlib
import json
import random

import pytest
from conftest import naive_conv, rand_matrix, wrap8
from hypothesis import given, settings
from hypothesis import strategies as st

from provet.errors import DimMismatch, KernelLargerThanImage
from provet.oracle import Tensor2D, oracle_avgpool, oracle_conv2d, oracle_matvec, oracle_maxpool

# Frozen from the nested-loop reference in conftest (seed 2024, values in [-4, 4]).
CONV_16x16_5x5_SHA256 = "2c8ac474fe6a2fa23b4543dc9e6bc307854cc7a04613200d67526fda51b074b0"
CONV_16x16_5x5_SUM = 18
CONV_16x16_5x5_ROW0 = [-20, 3, 2, -21, 10, 19]


def seeded_case():
    rng = random.Random(2024)
    img = [[rng.randint(-4, 4) for _ in range(16)] for _ in range(16)]
    ker = [[rng.randint(-4, 4) for _ in range(5)] for _ in range(5)]
    return img, ker


def test_conv_regression_table():
    img, ker = seeded_case()
    out = oracle_conv2d(Tensor2D.from_rows(img), Tensor2D.from_rows(ker)).to_rows()
    assert (len(out), len(out[0])) == (12, 12)
    assert hashlib.sha256(json.dumps(out).encode()).hexdigest() == CONV_16x16_5x5_SHA256
    assert sum(map(sum, out)) == CONV_16x16_5x5_SUM
    assert out[0][:6] == CONV_16x16_5x5_ROW0


@settings(max_examples=60, deadline=None)
@given(
    st.integers(1, 12),
    st.integers(1, 12),
    st.integers(1, 5),
    st.integers(1, 5),
    st.integers(1, 3),
    st.randoms(use_true_random=False),
)
def test_conv_matches_nested_loops(h, w, kh, kw, stride, rng):
    if kh > h or kw > w:
        return
    img, ker = rand_matrix(rng, h, w, -20, 20), rand_matrix(rng, kh, kw, -20, 20)
    got = oracle_conv2d(Tensor2D.from_rows(img), Tensor2D.from_rows(ker), stride).to_rows()
    assert got == naive_conv(img, ker, stride)


def test_conv_unwrapped_sums():
    img = Tensor2D.from_rows([[100, 100], [100, 100]])
    ker = Tensor2D.from_rows([[1, 1], [1, 1]])
    assert oracle_conv2d(img, ker, bits=None).to_rows() == [[400]]
    assert oracle_conv2d(img, ker).to_rows() == [[wrap8(400)]]


def test_conv_errors():
    with pytest.raises(KernelLargerThanImage):
        oracle_conv2d(Tensor2D.from_rows([[1]]), Tensor2D.from_rows([[1, 1]]))
    with pytest.raises(DimMismatch):
        Tensor2D(2, 2, (1, 2, 3))


def test_matvec_seeded():
    rng = random.Random(8)
    w = rand_matrix(rng, 8, 8)
    x = [rng.randint(-4, 4) for _ in range(8)]
    assert oracle_matvec(Tensor2D.from_rows(w), x) == [wrap8(sum(a * b for a, b in zip(row, x))) for row in w]
    with pytest.raises(DimMismatch):
        oracle_matvec(Tensor2D.from_rows(w), x[:-1])


def test_pooling():
    img = Tensor2D.from_rows([[1, 2, 3, 4], [5, 6, 7, 8], [-1, -2, -3, -4], [0, 0, 0, -9]])
    assert oracle_maxpool(img).to_rows() == [[6, 8], [0, 0]]
    assert oracle_avgpool(img).to_rows() == [[14 // 4, 22 // 4], [-3 // 4, -16 // 4]]
    assert oracle_maxpool(img, (3, 3), 1).to_rows() == [[7, 8], [7, 8]]

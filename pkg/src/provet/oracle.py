"""Deliberately naive reference kernels used as ground truth for every mapping.

Accumulation happens on unbounded Python integers; results are reduced to the
operand width with the same two's-complement wrap the VFU applies.
"""

from __future__ import annotations

from dataclasses import dataclass

from provet.datapath import wrap
from provet.errors import DimMismatch, KernelLargerThanImage


@dataclass(frozen=True)
class Tensor2D:
    rows: int
    cols: int
    data: tuple  # row-major

    def __post_init__(self):
        object.__setattr__(self, "data", tuple(int(x) for x in self.data))
        if self.rows < 0 or self.cols < 0 or len(self.data) != self.rows * self.cols:
            raise DimMismatch(f"{self.rows}x{self.cols} tensor needs {self.rows * self.cols} values, got {len(self.data)}")

    @classmethod
    def from_rows(cls, rows) -> "Tensor2D":
        rows = [list(r) for r in rows]
        cols = len(rows[0]) if rows else 0
        if any(len(r) != cols for r in rows):
            raise DimMismatch("ragged rows")
        return cls(len(rows), cols, tuple(x for r in rows for x in r))

    def at(self, r: int, c: int) -> int:
        return self.data[r * self.cols + c]

    def to_rows(self) -> list:
        return [list(self.data[r * self.cols : (r + 1) * self.cols]) for r in range(self.rows)]


def _out_dim(n: int, k: int, stride: int) -> int:
    return (n - k) // stride + 1


def oracle_conv2d(image: Tensor2D, kernel: Tensor2D, stride: int = 1, bits: int | None = 8) -> Tensor2D:
    """Valid-region cross-correlation (no kernel flip).

    ``bits=None`` returns the unreduced integer sums.
    """
    if kernel.rows > image.rows or kernel.cols > image.cols:
        raise KernelLargerThanImage(
            f"kernel {kernel.rows}x{kernel.cols} does not fit image {image.rows}x{image.cols}"
        )
    if stride < 1:
        raise ValueError("stride must be >= 1")
    oh = _out_dim(image.rows, kernel.rows, stride)
    ow = _out_dim(image.cols, kernel.cols, stride)
    out = []
    for y in range(oh):
        for x in range(ow):
            s = 0
            for i in range(kernel.rows):
                for j in range(kernel.cols):
                    s += image.at(y * stride + i, x * stride + j) * kernel.at(i, j)
            out.append(s if bits is None else wrap(s, bits))
    return Tensor2D(oh, ow, out)


def oracle_matvec(w: Tensor2D, x, bits: int | None = 8) -> list:
    x = list(x)
    if w.cols != len(x):
        raise DimMismatch(f"matrix has {w.cols} columns, vector has {len(x)} entries")
    out = []
    for r in range(w.rows):
        s = sum(w.at(r, c) * x[c] for c in range(w.cols))
        out.append(s if bits is None else wrap(s, bits))
    return out


def _pool(image: Tensor2D, window: tuple, stride: int, reduce):
    kh, kw = window
    if kh > image.rows or kw > image.cols:
        raise KernelLargerThanImage(f"window {kh}x{kw} does not fit image {image.rows}x{image.cols}")
    oh, ow = _out_dim(image.rows, kh, stride), _out_dim(image.cols, kw, stride)
    out = []
    for y in range(oh):
        for x in range(ow):
            vals = [image.at(y * stride + i, x * stride + j) for i in range(kh) for j in range(kw)]
            out.append(reduce(vals))
    return Tensor2D(oh, ow, out)


def oracle_maxpool(image: Tensor2D, window: tuple = (2, 2), stride: int = 2) -> Tensor2D:
    return _pool(image, window, stride, max)


def oracle_avgpool(image: Tensor2D, window: tuple = (2, 2), stride: int = 2, bits: int = 8) -> Tensor2D:
    """Floor of the window mean, computed from the wrapped window sum."""
    n = window[0] * window[1]
    return _pool(image, window, stride, lambda vals: wrap(sum(vals), bits) // n)

"""Evaluation metrics from run reports and analytical scaling baselines.

* Utilization ``U = L_min / L_real`` with ``L_min = ceil(total_macs / (vfu_count * L))``.
* Compute-to-memory ratio ``CMR = N_compute / N_memory``: VFU operations over
  SRAM reads plus writes.
* Bandwidth available to ``n`` PEs: ``alpha * n`` for the wide-SRAM tile,
  ``beta * n`` for a GPU-like machine, ``sa_coeff * sqrt(n)`` for a systolic
  array fed from its edges. Coefficients are model constants; only ratios and
  shapes are meaningful.
* Systolic-array fold utilization and average interconnect hop counts are
  simple stand-in models, not measured curves.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import asdict, dataclass
from pathlib import Path

from provet.config import ArchConfig
from provet.errors import ZeroMemoryAccesses
from provet.executor import RunReport

COLUMNS = ("name", "cycles", "U", "CMR", "sram_reads", "energy")


@dataclass(frozen=True)
class MetricsReport:
    name: str
    l_min: int
    l_real: int
    utilization: float
    n_compute: int
    n_memory: int
    cmr: float
    sram_energy: float
    sram_reads: int
    sram_writes: int
    vwr_wide_loads: int
    vwr_narrow_reads: int
    energy: float

    @property
    def cycles(self) -> int:
        return self.l_real

    def row(self) -> dict:
        return {
            "name": self.name,
            "cycles": self.l_real,
            "U": self.utilization,
            "CMR": self.cmr,
            "sram_reads": self.sram_reads,
            "energy": self.energy,
        }

    def to_dict(self) -> dict:
        d = asdict(self)
        if math.isinf(d["cmr"]):
            d["cmr"] = "inf"
        return d


def utilization(l_min: int, l_real: int) -> float:
    if l_real <= 0:
        raise ValueError("achieved latency must be positive")
    return l_min / l_real


def compute_to_memory_ratio(n_compute: int, n_memory: int) -> float:
    if n_memory == 0:
        warnings.warn("no SRAM accesses: compute-to-memory ratio is infinite", ZeroMemoryAccesses, stacklevel=2)
        return math.inf
    return n_compute / n_memory


def min_latency(total_macs: int, cfg: ArchConfig) -> int:
    if total_macs <= 0:
        raise ValueError("total_macs must be positive")
    return -(-total_macs // (cfg.vfu_count * cfg.lanes))


def compute_metrics(run: RunReport, total_macs: int, cfg: ArchConfig, name: str = "") -> MetricsReport:
    l_min = min_latency(total_macs, cfg)
    n_compute = run.vfux_total
    n_memory = run.sram_reads + run.sram_writes
    return MetricsReport(
        name=name or run.program,
        l_min=l_min,
        l_real=run.cycles,
        utilization=utilization(l_min, run.cycles),
        n_compute=n_compute,
        n_memory=n_memory,
        cmr=compute_to_memory_ratio(n_compute, n_memory),
        sram_energy=run.energy["sram"],
        sram_reads=run.sram_reads,
        sram_writes=run.sram_writes,
        vwr_wide_loads=run.vwr_wide_loads,
        vwr_narrow_reads=run.vwr_narrow_reads,
        energy=run.energy["total"],
    )


# ------------------------------------------------------------- scaling


@dataclass(frozen=True)
class ScalingModel:
    alpha: float = 1.0
    beta: float = 1.0
    sa_coeff: float = 1.0

    def __post_init__(self):
        if not self.beta > 0 or not self.sa_coeff > 0:
            raise ValueError("beta and sa_coeff must be positive")
        if self.alpha < self.beta:
            raise ValueError(f"alpha ({self.alpha}) must not be below beta ({self.beta})")


def bandwidth_scaling(n_pes: float, model: ScalingModel | None = None) -> dict:
    model = model or ScalingModel()
    if n_pes < 1:
        raise ValueError("n_pes must be >= 1")
    return {
        "provet": model.alpha * n_pes,
        "sa": model.sa_coeff * math.sqrt(n_pes),
        "gpu": model.beta * n_pes,
    }


def sa_fold_utilization(array_dim: int, kernel_dim: int) -> float:
    """Fraction of a square array covered by whole kernel folds along both axes."""
    if array_dim < 1 or kernel_dim < 1:
        raise ValueError("array_dim and kernel_dim must be >= 1")
    per_axis = (array_dim // kernel_dim) * kernel_dim / array_dim
    return per_axis * per_axis


def interconnect_hops(array_dim: int) -> dict:
    """Average hops a datum travels: half the array side for a systolic array, one for the tile."""
    if array_dim < 1:
        raise ValueError("array_dim must be >= 1")
    return {"sa": array_dim / 2, "provet": 1}


def scaling_table(n_values, model: ScalingModel | None = None, kernel_dim: int = 11) -> list:
    """One row per PE count: bandwidths, their ratio, SA fold utilization and hop counts.

    The systolic array is taken as square, ``floor(sqrt(n))`` on a side.
    """
    model = model or ScalingModel()
    rows = []
    for n in n_values:
        bw = bandwidth_scaling(n, model)
        side = max(1, math.isqrt(int(n)))
        rows.append(
            {
                "n_pes": n,
                "provet_bw": bw["provet"],
                "sa_bw": bw["sa"],
                "gpu_bw": bw["gpu"],
                "provet_over_sa": bw["provet"] / bw["sa"],
                "sa_side": side,
                "sa_fold_util": sa_fold_utilization(side, kernel_dim) if side >= 1 else 0.0,
                "sa_hops": interconnect_hops(side)["sa"],
                "provet_hops": 1,
            }
        )
    return rows


# ------------------------------------------------------------- output


def _fmt(v) -> str:
    if isinstance(v, float):
        return "inf" if math.isinf(v) else f"{v:.6f}"
    return str(v)


def format_rows(rows: list, columns, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(
            [{c: ("inf" if isinstance(r[c], float) and math.isinf(r[c]) else r[c]) for c in columns} for r in rows],
            indent=2,
        ) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(columns)
        for r in rows:
            writer.writerow([_fmt(r[c]) for c in columns])
        return buf.getvalue()
    if fmt == "table":
        cells = [list(columns)] + [[_fmt(r[c]) for c in columns] for r in rows]
        widths = [max(len(row[i]) for row in cells) for i in range(len(columns))]
        lines = []
        for k, row in enumerate(cells):
            lines.append("  ".join(s.ljust(w) if i == 0 else s.rjust(w) for i, (s, w) in enumerate(zip(row, widths))))
            if k == 0:
                lines.append("  ".join("-" * w for w in widths))
        return "\n".join(line.rstrip() for line in lines) + "\n"
    raise ValueError(f"unknown format {fmt!r}; use csv, json or table")


def emit_report(metrics: list, fmt: str = "table", path=None) -> str:
    """Render metrics as CSV (RFC 4180), JSON or an aligned table sorted by name.

    Writes to ``path`` when given and returns the text either way.
    """
    if not metrics:
        raise ValueError("no metrics to report")
    rows = [m.row() for m in metrics]
    if fmt == "table":
        rows.sort(key=lambda r: r["name"])
    text = format_rows(rows, COLUMNS, fmt)
    if path is not None:
        Path(path).write_text(text, newline="")
    return text

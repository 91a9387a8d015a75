import csv
import io
import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from provet.analysis import (
    COLUMNS,
    ScalingModel,
    bandwidth_scaling,
    compute_metrics,
    compute_to_memory_ratio,
    emit_report,
    interconnect_hops,
    min_latency,
    sa_fold_utilization,
    scaling_table,
    utilization,
)
from provet.errors import ZeroMemoryAccesses
from provet.mapping import ConvLayerSpec, map_conv


def test_utilization_and_min_latency(cfg16):
    assert min_latency(1600, cfg16) == 100
    assert min_latency(1601, cfg16) == 101
    assert utilization(50, 200) == 0.25
    with pytest.raises(ValueError):
        utilization(1, 0)
    with pytest.raises(ValueError):
        min_latency(0, cfg16)


def test_cmr_zero_memory_warns():
    assert compute_to_memory_ratio(10, 4) == 2.5
    with pytest.warns(ZeroMemoryAccesses):
        assert math.isinf(compute_to_memory_ratio(10, 0))


def test_metrics_from_conv_run(cfg16):
    plan = map_conv(ConvLayerSpec(16, 16, 5, 5), cfg16)
    _, rep, _ = plan.execute(plan.random_inputs(0))
    m = compute_metrics(rep, plan.expected_counts["total_macs"], cfg16, "conv")
    assert m.l_min == math.ceil(144 * 25 / 16)
    assert m.utilization == pytest.approx(m.l_min / rep.cycles)
    assert m.cmr == pytest.approx((400 + 400 + 16) / (rep.sram_reads + rep.sram_writes))
    assert m.row()["name"] == "conv"
    json.dumps(m.to_dict())


@given(st.integers(1, 10**6), st.floats(1, 10), st.floats(0.1, 1))
def test_bandwidth_shapes(n, alpha, beta_frac):
    model = ScalingModel(alpha, alpha * beta_frac, 0.7)
    bw, bw4 = bandwidth_scaling(n, model), bandwidth_scaling(4 * n, model)
    assert bw4["provet"] / bw["provet"] == pytest.approx(4, rel=1e-12)
    assert bw4["gpu"] / bw["gpu"] == pytest.approx(4, rel=1e-12)
    assert bw4["sa"] / bw["sa"] == pytest.approx(2, rel=1e-12)
    assert bw["provet"] >= bw["gpu"]


def test_scaling_model_validation():
    with pytest.raises(ValueError):
        ScalingModel(alpha=0.5, beta=1.0)
    with pytest.raises(ValueError):
        ScalingModel(beta=0)
    with pytest.raises(ValueError):
        bandwidth_scaling(0)


def test_fold_utilization_and_hops():
    assert sa_fold_utilization(22, 11) == 1.0
    assert sa_fold_utilization(16, 11) == pytest.approx((11 / 16) ** 2)
    assert sa_fold_utilization(8, 11) == 0.0
    assert interconnect_hops(32) == {"sa": 16, "provet": 1}
    rows = scaling_table([1, 4, 256])
    assert [r["sa_side"] for r in rows] == [1, 2, 16]
    assert rows[2]["provet_over_sa"] == pytest.approx(16)


def _metrics(cfg16):
    plan = map_conv(ConvLayerSpec(6, 6, 3, 3), cfg16)
    _, rep, _ = plan.execute(plan.random_inputs(0))
    a = compute_metrics(rep, plan.expected_counts["total_macs"], cfg16, "zeta")
    b = compute_metrics(rep, plan.expected_counts["total_macs"], cfg16, "alpha")
    return [a, b]


def test_emit_csv_is_rfc4180(cfg16, tmp_path):
    path = tmp_path / "r.csv"
    text = emit_report(_metrics(cfg16), "csv", path)
    assert text.endswith("\r\n") and path.read_bytes() == text.encode()
    rows = list(csv.reader(io.StringIO(text)))
    assert tuple(rows[0]) == COLUMNS
    assert [r[0] for r in rows[1:]] == ["zeta", "alpha"]


def test_emit_table_sorted(cfg16):
    lines = emit_report(_metrics(cfg16), "table").splitlines()
    assert lines[0].split() == list(COLUMNS)
    assert lines[2].startswith("alpha") and lines[3].startswith("zeta")


def test_emit_json(cfg16):
    data = json.loads(emit_report(_metrics(cfg16), "json"))
    assert set(data[0]) == set(COLUMNS)
    with pytest.raises(ValueError):
        emit_report(_metrics(cfg16), "xml")
    with pytest.raises(ValueError):
        emit_report([], "csv")

import random

import pytest
from conftest import naive_conv

from provet.config import default_config, example16_config
from provet.errors import (
    DoesNotFitWithoutFolding,
    KernelTooWide,
    ParamValidation,
    SramCapacityExceeded,
    UnknownTemplate,
)
from provet.executor import loop_buffer_summary
from provet.mapping import (
    SHIPPED,
    ConvLayerSpec,
    expand_template,
    map_avgpool,
    map_conv,
    map_fc,
    map_maxpool,
    shipped_plans,
)
from provet.oracle import Tensor2D

CFG16 = example16_config()


def run_and_check(plan, seed=0):
    inputs = plan.random_inputs(seed)
    result, report, _ = plan.execute(inputs)
    assert result == plan.reference(inputs)
    return result, report


def test_example_conv_counts():
    plan = map_conv(ConvLayerSpec(16, 16, 5, 5), CFG16)
    assert plan.expected_counts["inner_iterations"] == 25
    assert plan.expected_counts["row_passes"] == 16
    assert plan.expected_counts["vfux_mult"] == 400
    _, rep = run_and_check(plan, seed=1)
    assert rep.vfux_by_mode["mult"] == 400
    assert rep.vfux_by_mode["add"] == 400
    assert rep.sram_writes == plan.expected_counts["sram_writes"]
    assert rep.sram_reads >= plan.expected_counts["sram_reads_lower_bound"]


def test_conv_against_nested_loops():
    rng = random.Random(3)
    plan = map_conv(ConvLayerSpec(10, 12, 3, 3), CFG16)
    img = [[rng.randint(-4, 4) for _ in range(12)] for _ in range(10)]
    ker = [[rng.randint(-4, 4) for _ in range(3)] for _ in range(3)]
    inputs = {"image": [Tensor2D.from_rows(img)], "kernel": [[Tensor2D.from_rows(ker)]]}
    result, _, _ = plan.execute(inputs)
    assert result[0].to_rows() == naive_conv(img, ker)


@pytest.mark.parametrize(
    "spec",
    [
        ConvLayerSpec(8, 8, 3, 3, channels_in=2, channels_out=2),
        ConvLayerSpec(9, 11, 3, 3, stride=2),
        ConvLayerSpec(16, 16, 1, 1),
        ConvLayerSpec(6, 6, 3, 3, channels_in=3, channels_out=3, depthwise=True),
        ConvLayerSpec(7, 16, 5, 5, stride=3),
        ConvLayerSpec(5, 5, 5, 5),
        ConvLayerSpec(6, 9, 3, 1),
    ],
)
def test_conv_variants(spec):
    run_and_check(map_conv(spec, CFG16), seed=hash(spec) % 1000)


def test_conv_output_region():
    plan = map_conv(ConvLayerSpec(9, 11, 3, 3, stride=2), CFG16)
    region = plan.valid_output_region
    assert len(range(*region.rows)) == 4
    assert len(range(*region.cols)) == 5


def test_conv_wide_values_wrap_like_reference():
    plan = map_conv(ConvLayerSpec(6, 6, 3, 3), CFG16)
    inputs = plan.random_inputs(5, lo=-128, hi=127)
    result, _, _ = plan.execute(inputs)
    assert result == plan.reference(inputs)


@pytest.mark.parametrize("n_in, n_out", [(1, 1), (16, 16), (5, 13), (32, 64), (64, 3)])
def test_fc(n_in, n_out):
    cfg = default_config().replace(sram_depth_words=32) if max(n_in, n_out) > 16 else CFG16
    run_and_check(map_fc(n_in, n_out, cfg), seed=n_in * 100 + n_out)


@pytest.mark.parametrize("op", ["max", "avg"])
@pytest.mark.parametrize("shape, window, stride", [((8, 8), (2, 2), 2), ((9, 12), (2, 2), 1), ((8, 8), (2, 4), 2)])
def test_pooling(op, shape, window, stride):
    mapper = map_maxpool if op == "max" else map_avgpool
    plan = mapper(*shape, window, stride, channels=2, cfg=CFG16)
    result, rep = run_and_check(plan, seed=stride)
    mode = "max" if op == "max" else "add"
    assert rep.vfux_by_mode[mode] == plan.expected_counts[f"vfux_{mode}"]


def test_avgpool_needs_power_of_two_window():
    with pytest.raises(ParamValidation):
        map_avgpool(9, 9, (3, 3), 3, cfg=CFG16)


def test_mapping_errors():
    with pytest.raises(DoesNotFitWithoutFolding):
        map_conv(ConvLayerSpec(4, 17, 3, 3), CFG16)
    with pytest.raises(KernelTooWide):
        map_conv(ConvLayerSpec(20, 20, 17, 17), CFG16)
    with pytest.raises(SramCapacityExceeded):
        map_conv(ConvLayerSpec(16, 16, 3, 3, channels_in=2, channels_out=2), example16_config(depth=8))
    with pytest.raises(ParamValidation):
        map_fc(4, 4, CFG16.replace(vfu_count=2))
    with pytest.raises(SramCapacityExceeded):
        map_fc(64, 16, default_config())
    with pytest.raises(ParamValidation):
        ConvLayerSpec(4, 4, 5, 5)
    with pytest.raises(ParamValidation):
        ConvLayerSpec(4, 4, 3, 3, channels_in=2, channels_out=1, depthwise=True)


def test_wrong_input_shapes_rejected():
    plan = map_conv(ConvLayerSpec(6, 6, 3, 3), CFG16)
    with pytest.raises(ParamValidation):
        plan.memory_image({"image": [Tensor2D.from_rows([[0] * 5] * 6)], "kernel": [[Tensor2D.from_rows([[0] * 3] * 3)]]})


def test_layout_is_consistent():
    for plan in shipped_plans().values():
        plan.layout.check(plan.cfg)
        assert plan.layout.words_used() <= plan.cfg.sram_depth_words


def test_templates():
    plan = expand_template("conv2d", {"k_h": 3, "k_w": 3, "in_h": 6, "in_w": 6}, CFG16)
    assert plan.kind == "conv2d"
    assert expand_template("maxpool", {"in_h": 4, "in_w": 4}, CFG16).kind == "maxpool"
    with pytest.raises(UnknownTemplate):
        expand_template("lstm", {})
    with pytest.raises(ParamValidation):
        expand_template("fc", {"in_features": 3})
    with pytest.raises(ParamValidation):
        expand_template("fc", {"in_features": 3, "out_features": 3, "bias": True})


def test_shipped_plans_run_on_default_config():
    plans = shipped_plans()
    assert set(plans) == set(SHIPPED)
    for name, plan in plans.items():
        run_and_check(plan, seed=len(name))


# Frozen from the first run of the shipped 5x5 plan on the default tile
# (seed 0): VFU ops over SRAM accesses and issued instructions over
# loop-buffer updates.
SHIPPED_CONV_CMR = 816 / 19
SHIPPED_CONV_LB_RATIO = 3193 / 41


def test_shipped_conv_regression_constants():
    plan = shipped_plans()["conv5x5_16x16"]
    _, rep = run_and_check(plan)
    assert rep.vfux_total / rep.memory_accesses == pytest.approx(SHIPPED_CONV_CMR, abs=1e-12)
    assert loop_buffer_summary(rep.trace)["ratio"] == pytest.approx(SHIPPED_CONV_LB_RATIO, abs=1e-12)

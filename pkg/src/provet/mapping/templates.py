"""Named layer templates and the plans shipped for the default tile."""

from __future__ import annotations

from provet.config import ArchConfig, default_config
from provet.errors import ParamValidation, UnknownTemplate
from provet.mapping.conv import map_conv
from provet.mapping.fc import map_fc
from provet.mapping.plan import ConvLayerSpec, MappingPlan
from provet.mapping.pool import map_pool

TEMPLATES = ("conv2d", "fc", "maxpool", "avgpool")


def _take(params: dict, allowed: dict) -> dict:
    unknown = sorted(set(params) - set(allowed))
    if unknown:
        raise ParamValidation(f"unknown template parameter(s): {', '.join(unknown)}")
    out = dict(allowed)
    out.update(params)
    missing = [k for k, v in out.items() if v is ...]
    if missing:
        raise ParamValidation(f"missing template parameter(s): {', '.join(missing)}")
    return out


def expand_template(name: str, params: dict, cfg: ArchConfig | None = None) -> MappingPlan:
    """Expand a named template.

    ``conv2d``: k_h, k_w, in_h, in_w [, channels_in, channels_out, stride, depthwise]
    ``fc``: in_features, out_features
    ``maxpool`` / ``avgpool``: in_h, in_w [, window, stride, channels]
    """
    cfg = cfg or default_config()
    if name == "conv2d":
        p = _take(
            params,
            {"k_h": ..., "k_w": ..., "in_h": ..., "in_w": ..., "channels_in": 1, "channels_out": 1, "stride": 1, "depthwise": False},
        )
        try:
            spec = ConvLayerSpec(**p)
        except TypeError as exc:
            raise ParamValidation(str(exc)) from None
        return map_conv(spec, cfg)
    if name == "fc":
        p = _take(params, {"in_features": ..., "out_features": ...})
        return map_fc(p["in_features"], p["out_features"], cfg)
    if name in ("maxpool", "avgpool"):
        p = _take(params, {"in_h": ..., "in_w": ..., "window": (2, 2), "stride": 2, "channels": 1})
        window = tuple(p["window"])
        if len(window) != 2:
            raise ParamValidation("window must be (height, width)")
        return map_pool(name[:3], p["in_h"], p["in_w"], window, p["stride"], p["channels"], cfg)
    raise UnknownTemplate(f"unknown template {name!r}; available: {', '.join(TEMPLATES)}")


SHIPPED = {
    "conv5x5_16x16": ("conv2d", {"k_h": 5, "k_w": 5, "in_h": 16, "in_w": 16}),
    "conv3x3_2to1_8x8": ("conv2d", {"k_h": 3, "k_w": 3, "in_h": 8, "in_w": 8, "channels_in": 2}),
    "depthwise3x3_2x6x6": (
        "conv2d",
        {"k_h": 3, "k_w": 3, "in_h": 6, "in_w": 6, "channels_in": 2, "channels_out": 2, "depthwise": True},
    ),
    "fc32x64": ("fc", {"in_features": 32, "out_features": 64}),
    "fc16x16": ("fc", {"in_features": 16, "out_features": 16}),
}


def shipped_plans(cfg: ArchConfig | None = None) -> dict:
    """The CONV, depthwise and FC plans shipped for a tile (default: the default config)."""
    cfg = cfg or default_config()
    return {name: expand_template(t, params, cfg) for name, (t, params) in SHIPPED.items()}

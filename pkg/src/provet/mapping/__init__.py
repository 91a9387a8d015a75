"""Layer-to-program generators: data layout, instruction stream, expected results."""

from provet.mapping.conv import map_conv
from provet.mapping.fc import map_fc
from provet.mapping.fold import FoldPiece, FoldPlan, duplicated_fraction, plan_fold, run_fold
from provet.mapping.plan import ConvLayerSpec, MappingPlan, OutputRegion
from provet.mapping.pool import map_avgpool, map_maxpool, map_pool
from provet.mapping.templates import SHIPPED, TEMPLATES, expand_template, shipped_plans

__all__ = [
    "ConvLayerSpec",
    "FoldPiece",
    "FoldPlan",
    "MappingPlan",
    "OutputRegion",
    "SHIPPED",
    "TEMPLATES",
    "duplicated_fraction",
    "expand_template",
    "map_avgpool",
    "map_conv",
    "map_fc",
    "map_maxpool",
    "map_pool",
    "plan_fold",
    "run_fold",
    "shipped_plans",
]

"""Global-to-local visual token compression for dynamic-cropping vision-language models."""
from ._kernels import BACKEND
from .budget import (
    BudgetPlan, aggregate_richness, allocate_ratios, apportion, crop_richness,
    importance_weights, plan_budgets, plan_image_budgets, target_count,
)
from .diagnostics import (
    BiasReport, Fixture, SplitMix64, SynthSpec, probe_bias, render_mask, synthesize,
)
from .errors import (
    AllocationError, ConfigError, DataError, FormatError, G2LError, IoError, RangeError,
    ShapeError,
)
from .flops import ModelDims, decode_flops, prefill_flops, reduction_ratio
from .layout import CropLayout, Region, crop_region_of, select_grid
from .scoring import (
    cls_attention_scores, neg_global_mean_similarity_scores, neg_patch_attention_scores,
)
from .selector import (
    SelectionResult, ViewSelection, bilinear_upsample, compress_image, compress_thumbnail,
    holistic_scores, topk_select,
)
from .tensor_io import CompressionConfig, parse_config, read_tensor, write_tensor
from .video import (
    VideoSelection, compress_video, global_pool, video_global_scores, video_local_scores,
)

__version__ = "0.1.0"

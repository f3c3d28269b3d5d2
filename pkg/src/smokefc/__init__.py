"""Luminance detail-fusion enhancement for smoke/non-smoke frame classification."""

from .baselines import BaselineParams, EnhanceParams, Method, enhance_with
from .evaluation import EvalReport, PipelineConfig, evaluate, load_manifest
from .fc import FcParams, Fusion, decompose, fc_enhance, fuse_details
from .features import GmLogParams, gmlog_features
from .image import read_image, resize, rgb_to_gray, rgb_to_ycbcr, write_png, ycbcr_to_rgb
from .saturation import SatParams, san_classify, saturation_histogram, spa_classify
from .svm import LinearModel, decision_score, predict, train
from .wls import WlsParams, wls_filter

__all__ = [
    "BaselineParams",
    "EnhanceParams",
    "EvalReport",
    "FcParams",
    "Fusion",
    "GmLogParams",
    "LinearModel",
    "Method",
    "PipelineConfig",
    "SatParams",
    "WlsParams",
    "decision_score",
    "decompose",
    "enhance_with",
    "evaluate",
    "fc_enhance",
    "fuse_details",
    "gmlog_features",
    "load_manifest",
    "predict",
    "read_image",
    "resize",
    "rgb_to_gray",
    "rgb_to_ycbcr",
    "san_classify",
    "saturation_histogram",
    "spa_classify",
    "train",
    "wls_filter",
    "write_png",
    "ycbcr_to_rgb",
]
__version__ = "0.1.0"

"""Lung CT lesion extraction: firefly-optimised entropy thresholding + MRF-EM."""

from .entropy_threshold import (
    FireflyParams,
    ThresholdSet,
    apply_thresholds,
    exhaustive_optimal,
    fa_optimize,
    shannon_objective,
)
from .image_core import Histogram, compute_histogram, load_pgm, save_pgm
from .metrics import ConfusionMatrix, MetricsReport, compute_metrics, confusion
from .mrf_em import ClassParams, MrfConfig, estimate_class_params, icm_sweep, initialize_labels, segment, total_energy
from .phantom import PhantomSpec, generate_phantom, trimodal_histogram
from .pipeline import PipelineResult, aggregate_report, run_batch, run_pipeline, segment_lung
from .config import PipelineConfig
from .postprocess import extract_lesion_mask, morphological_smooth, remove_small_components
from .preprocess import StripConfig, otsu_bilevel, strip_artifacts

__version__ = "0.1.0"

__all__ = [
    "ClassParams",
    "ConfusionMatrix",
    "FireflyParams",
    "Histogram",
    "MetricsReport",
    "MrfConfig",
    "PhantomSpec",
    "PipelineConfig",
    "PipelineResult",
    "StripConfig",
    "ThresholdSet",
    "aggregate_report",
    "apply_thresholds",
    "compute_histogram",
    "compute_metrics",
    "confusion",
    "estimate_class_params",
    "exhaustive_optimal",
    "extract_lesion_mask",
    "fa_optimize",
    "generate_phantom",
    "icm_sweep",
    "initialize_labels",
    "load_pgm",
    "morphological_smooth",
    "otsu_bilevel",
    "remove_small_components",
    "run_batch",
    "run_pipeline",
    "save_pgm",
    "segment",
    "segment_lung",
    "shannon_objective",
    "strip_artifacts",
    "total_energy",
    "trimodal_histogram",
]

"""End-to-end lesion extraction and corpus reporting.

Stage order: artifact stripping -> roi histogram -> firefly/entropy cuts ->
threshold image -> initial labels -> MRF-EM -> brightest-class mask ->
smoothing -> small-component removal -> (optional) scoring against ground
truth.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .config import PipelineConfig
from .entropy_threshold import apply_thresholds, fa_optimize, write_trace_csv
from .errors import DimensionError, EmptyCorpusError, EmptyRegionError, EmptyScopeError, PipelineError
from .image_core import as_gray, as_mask, compute_histogram, read_mask, read_pgm, save_overlay_ppm, write_mask
from .metrics import METRIC_NAMES, ConfusionMatrix, MetricsReport, compute_metrics, confusion
from .mrf_em import initialize_labels, segment
from .postprocess import extract_lesion_mask, morphological_smooth, remove_small_components
from .preprocess import strip_artifacts

CSV_HEADER = ["image", *METRIC_NAMES, "elapsed_s"]


def derive_seed(global_seed: int, image_id: str) -> int:
    """64-bit per-image seed, independent of processing order."""
    digest = hashlib.blake2b(f"{global_seed}:{image_id}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


@dataclass
class PipelineResult:
    image_id: str
    status: str
    seed: int
    lesion_mask: np.ndarray
    lung_roi: np.ndarray
    thresholds: tuple[int, ...] | None = None
    fa_score: float | None = None
    fa_trace: list[float] = field(default_factory=list)
    energy_trace: list[float] = field(default_factory=list)
    class_means: list[float] | None = None
    elapsed_s: float | None = None
    confusion: ConfusionMatrix | None = None
    metrics: MetricsReport | None = None
    stages: dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    def to_json_dict(self) -> dict:
        return {
            "image": self.image_id,
            "status": self.status,
            "seed": self.seed,
            "thresholds": list(self.thresholds) if self.thresholds else None,
            "fa_score": self.fa_score,
            "fa_trace": self.fa_trace,
            "energy_trace": self.energy_trace,
            "class_means": self.class_means,
            "lesion_pixels": int(np.count_nonzero(self.lesion_mask)),
            "lung_pixels": int(np.count_nonzero(self.lung_roi)),
            "elapsed_s": self.elapsed_s,
            "confusion": vars(self.confusion) if self.confusion else None,
            "metrics": self.metrics.as_dict() if self.metrics else None,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2) + "\n"


def _call(name, fn, *args, **kw):
    return fn(*args, **kw)


def segment_lung(lung, roi, cfg: PipelineConfig, seed: int, stage=_call):
    """Entropy cuts, initial labels and MRF-EM labelling of a stripped slice.

    Returns ``(FireflyResult, initial labels, SegmentResult)``.  ``stage``
    wraps each call (``stage(name, fn, *args)``) so callers can attach
    error context.
    """
    hist = stage("compute_histogram", compute_histogram, lung, roi if cfg.histogram_scope == "roi" else None)
    fa = stage("fa_optimize", fa_optimize, hist, cfg.threshold_k, replace(cfg.fa, seed=seed))
    mrf_roi = np.ones_like(roi) if cfg.mrf_scope == "image" else roi
    init = stage("initialize_labels", initialize_labels, lung, fa.thresholds, mrf_roi)
    seg = stage("segment", segment, lung, init, cfg.mrf, mrf_roi, bands=fa.thresholds)
    return fa, init, seg


def run_pipeline(img, gt=None, cfg: PipelineConfig = PipelineConfig(), image_id: str = "image") -> PipelineResult:
    img = as_gray(img)
    if gt is not None:
        gt = np.asarray(gt)
        if gt.shape != img.shape:
            raise DimensionError(f"ground truth shape {gt.shape} != image shape {img.shape}")
        gt = as_mask(gt)
    seed = derive_seed(cfg.fa.seed, image_id)
    start = time.perf_counter()
    empty = np.zeros(img.shape, dtype=bool)

    def stage(name, fn, *args, **kw):
        try:
            return fn(*args, **kw)
        except PipelineError:
            raise
        except Exception as exc:
            raise PipelineError(name, exc) from exc

    result = PipelineResult(image_id=image_id, status="ok", seed=seed, lesion_mask=empty, lung_roi=empty)
    try:
        lung, roi = strip_artifacts(img, cfg.strip)
    except EmptyRegionError:
        result.status = "no-lung"
    except Exception as exc:
        raise PipelineError("strip_artifacts", exc) from exc

    if result.status == "ok":
        fa, init, seg = segment_lung(lung, roi, cfg, seed, stage)
        thresholded = stage("apply_thresholds", apply_thresholds, lung, fa.thresholds, roi)
        mask = stage("extract_lesion_mask", extract_lesion_mask, seg.labels, seg.params, roi)
        if cfg.smooth:
            mask = stage("morphological_smooth", morphological_smooth, mask)
        mask = stage("remove_small_components", remove_small_components, mask, cfg.min_component_area)
        result.lung_roi = roi
        result.lesion_mask = mask
        result.thresholds = fa.thresholds.cuts
        result.fa_score = fa.score
        result.fa_trace = list(fa.trace)
        result.energy_trace = list(seg.trace)
        result.class_means = [float(m) for m in seg.params.means]
        result.stages = {"lung": lung, "threshold": thresholded, "init_labels": init, "labels": seg.labels}

    if gt is not None:
        scope = result.lung_roi if cfg.metrics_scope == "roi" else None
        try:
            cm = confusion(result.lesion_mask, gt, scope)
            result.confusion = cm
            result.metrics = compute_metrics(cm)
        except EmptyScopeError:
            pass
    if cfg.timing:
        result.elapsed_s = time.perf_counter() - start
    return result


def _agg(values: list[float]) -> dict:
    if not values:
        return {"mean": None, "min": None, "max": None, "n": 0}
    return {"mean": math.fsum(values) / len(values), "min": min(values), "max": max(values), "n": len(values)}


def aggregate_report(results) -> dict:
    """Per-metric mean/min/max over images whose metric is defined.

    Accepts PipelineResult objects or their JSON dicts.  Images without
    ground truth count as ``skipped``; per-metric ``undefined`` counts scored
    images whose ratio was 0/0.
    """
    rows = [r.to_json_dict() if isinstance(r, PipelineResult) else r for r in results]
    if not rows:
        raise EmptyCorpusError("no results to aggregate")
    scored = [r for r in sorted(rows, key=lambda r: r["image"]) if r.get("metrics")]
    summary = {"images": len(rows), "scored": len(scored), "skipped": len(rows) - len(scored), "metrics": {}}
    for name in METRIC_NAMES:
        values = [r["metrics"][name] for r in scored if r["metrics"][name] is not None]
        entry = _agg(values)
        entry["undefined"] = len(scored) - len(values)
        summary["metrics"][name] = entry
    times = [r["elapsed_s"] for r in rows if r.get("elapsed_s") is not None]
    summary["elapsed_s"] = _agg(times)
    return summary


def corpus_csv(results) -> str:
    rows = [r.to_json_dict() if isinstance(r, PipelineResult) else r for r in results]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in sorted(rows, key=lambda r: r["image"]):
        m = r.get("metrics") or {}
        cells = [r["image"]]
        cells += ["" if m.get(name) is None else repr(m[name]) for name in METRIC_NAMES]
        cells.append("" if r.get("elapsed_s") is None else repr(r["elapsed_s"]))
        writer.writerow(cells)
    return buf.getvalue()


def write_outputs(result: PipelineResult, img, out_dir) -> None:
    """Mask PGM, overlay PPM, per-image JSON and the two trace CSVs."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = result.image_id
    write_mask(out / f"{stem}_mask.pgm", result.lesion_mask)
    (out / f"{stem}_overlay.ppm").write_bytes(save_overlay_ppm(img, result.lesion_mask))
    (out / f"{stem}.json").write_text(result.to_json(), encoding="utf-8")
    write_trace_csv(out / f"{stem}_fa_trace.csv", result.fa_trace, "best_score")
    write_trace_csv(out / f"{stem}_energy.csv", result.energy_trace, "energy")


def gt_path_for(image_path: Path, gt_dir) -> Path | None:
    if gt_dir is None:
        return None
    candidate = Path(gt_dir) / f"{image_path.stem}_gt.pgm"
    return candidate if candidate.exists() else None


def process_file(image_path, gt_dir, cfg: PipelineConfig, out_dir) -> dict:
    """Run one image end to end and write its outputs; returns the JSON dict."""
    image_path = Path(image_path)
    img = read_pgm(image_path)
    gt_file = gt_path_for(image_path, gt_dir)
    gt = read_mask(gt_file) if gt_file else None
    result = run_pipeline(img, gt, cfg, image_id=image_path.stem)
    write_outputs(result, img, out_dir)
    return result.to_json_dict()


def list_inputs(input_dir) -> list[Path]:
    """``*.pgm`` files of a directory, skipping ``*_gt.pgm`` masks, sorted by name."""
    paths = [p for p in Path(input_dir).glob("*.pgm") if not p.stem.endswith("_gt")]
    return sorted(paths, key=lambda p: p.stem)


def run_batch(input_dir, out_dir, cfg: PipelineConfig, gt_dir=None, jobs: int | None = None) -> dict:
    """Process a directory of slices with a worker pool; returns the corpus summary.

    Results are written per image and reduced in image-id order, so the
    reports do not depend on ``jobs`` or scheduling.
    """
    paths = list_inputs(input_dir)
    if not paths:
        raise EmptyCorpusError(f"no .pgm images in {input_dir}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    jobs = jobs or os.cpu_count() or 1
    if jobs == 1:
        rows = [process_file(p, gt_dir, cfg, out) for p in paths]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(process_file, p, gt_dir, cfg, out) for p in paths]
            rows = [f.result() for f in futures]
    summary = aggregate_report(rows)
    (out / "corpus.csv").write_text(corpus_csv(rows), encoding="utf-8")
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    (out / "config.txt").write_text(cfg.to_text(), encoding="utf-8")
    return summary

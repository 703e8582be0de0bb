"""Per-stage wall time of the pipeline on a phantom slice.

    python scripts/stage_timing.py --scale 2 --repeats 5
"""

import argparse
import time
from dataclasses import replace

from ctlesion import PhantomSpec, PipelineConfig, generate_phantom, strip_artifacts
from ctlesion.entropy_threshold import apply_thresholds, fa_optimize
from ctlesion.image_core import compute_histogram
from ctlesion.mrf_em import initialize_labels, segment
from ctlesion.postprocess import extract_lesion_mask, morphological_smooth, remove_small_components
from ctlesion.pipeline import run_pipeline


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scale", type=float, default=2.0)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    cfg = PipelineConfig()
    img, _, _ = generate_phantom(PhantomSpec().scaled(args.scale))
    run_pipeline(img)  # warm-up: JIT compilation and caches
    print(f"image {img.shape[1]}x{img.shape[0]}")
    totals: dict[str, float] = {}
    for rep in range(args.repeats):
        t = time.perf_counter()

        def lap(name):
            nonlocal t
            now = time.perf_counter()
            totals[name] = totals.get(name, 0.0) + now - t
            t = now

        lung, roi = strip_artifacts(img, cfg.strip); lap("strip_artifacts")
        hist = compute_histogram(lung, roi); lap("compute_histogram")
        fa = fa_optimize(hist, 2, replace(cfg.fa, seed=rep)); lap("fa_optimize")
        apply_thresholds(lung, fa.thresholds, roi); lap("apply_thresholds")
        everywhere = roi | ~roi
        init = initialize_labels(lung, fa.thresholds, everywhere); lap("initialize_labels")
        seg = segment(lung, init, cfg.mrf, everywhere, bands=fa.thresholds); lap("segment (MRF-EM)")
        mask = extract_lesion_mask(seg.labels, seg.params, roi)
        mask = remove_small_components(morphological_smooth(mask), cfg.min_component_area); lap("postprocess")
    for name, total in totals.items():
        print(f"{name:20s} {total / args.repeats * 1e3:8.1f} ms")
    print(f"{'total':20s} {sum(totals.values()) / args.repeats * 1e3:8.1f} ms")


if __name__ == "__main__":
    main()

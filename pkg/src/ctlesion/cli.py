"""Command-line entry point: ``ctlesion {segment,batch,score,phantom generate}``.

Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 processing error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .config import PipelineConfig, parse_kv_text, parse_overrides, phantom_spec_from_mapping
from .errors import ConfigError, CtLesionError, DepthError, FormatError, SizeError
from .image_core import read_mask, read_pgm, write_mask, write_pgm
from .metrics import confusion, compute_metrics
from .phantom import generate_phantom
from .pipeline import run_batch, run_pipeline, write_outputs

log = logging.getLogger("ctlesion")

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_PROCESSING = 0, 2, 3, 4


def _load_config(args) -> PipelineConfig:
    overrides = parse_overrides(args.set)
    if args.seed is not None:
        overrides["fa.seed"] = str(args.seed)
    return PipelineConfig.load(args.config, overrides)


def cmd_segment(args) -> int:
    cfg = _load_config(args)
    img = read_pgm(args.input)
    gt = read_mask(args.gt) if args.gt else None
    result = run_pipeline(img, gt, cfg, image_id=Path(args.input).stem)
    write_outputs(result, img, args.out_dir)
    print(result.to_json(), end="")
    return EXIT_OK


def cmd_batch(args) -> int:
    cfg = _load_config(args)
    summary = run_batch(args.input_dir, args.out_dir, cfg, gt_dir=args.gt_dir, jobs=args.jobs)
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def cmd_score(args) -> int:
    pred = read_mask(args.pred)
    gt = read_mask(args.gt)
    scope = read_mask(args.scope) if args.scope else None
    cm = confusion(pred, gt, scope)
    print(json.dumps({"confusion": vars(cm), "metrics": compute_metrics(cm).as_dict()}, indent=2))
    return EXIT_OK


def cmd_phantom_generate(args) -> int:
    mapping = parse_kv_text(Path(args.spec).read_text(encoding="utf-8")) if args.spec else {}
    spec = phantom_spec_from_mapping(mapping)
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    out = Path(args.out_dir)
    (out / "lung_truth").mkdir(parents=True, exist_ok=True)
    for i in range(args.count):
        name = args.name if args.count == 1 else f"{args.name}_{i:03d}"
        img, lung, lesion = generate_phantom(replace(spec, seed=spec.seed + i))
        write_pgm(out / f"{name}.pgm", img)
        write_mask(out / f"{name}_gt.pgm", lesion)
        write_mask(out / "lung_truth" / f"{name}_lung.pgm", lung)
        log.info("wrote %s", name)
    return EXIT_OK


def _add_config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="flat 'key = value' config file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key (repeatable)")
    p.add_argument("--seed", type=int, help="shorthand for --set fa.seed=N")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ctlesion", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("segment", help="extract the lesion mask of one slice")
    p.add_argument("--input", required=True, type=Path)
    p.add_argument("--gt", type=Path)
    p.add_argument("--out-dir", required=True, type=Path)
    _add_config_args(p)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("batch", help="process every .pgm slice in a directory")
    p.add_argument("--input-dir", required=True, type=Path)
    p.add_argument("--gt-dir", type=Path)
    p.add_argument("--out-dir", required=True, type=Path)
    p.add_argument("--jobs", type=int, default=None, help="worker processes (default: CPU count)")
    _add_config_args(p)
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("score", help="compare a predicted mask with ground truth")
    p.add_argument("--pred", required=True, type=Path)
    p.add_argument("--gt", required=True, type=Path)
    p.add_argument("--scope", type=Path, help="optional mask restricting the scored pixels")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("phantom", help="synthetic phantoms")
    psub = p.add_subparsers(dest="phantom_command", required=True)
    g = psub.add_parser("generate", help="write phantom slice(s) with lung and lesion truth")
    g.add_argument("--spec", type=Path, help="file with phantom.* keys (defaults otherwise)")
    g.add_argument("--out-dir", required=True, type=Path)
    g.add_argument("--name", default="phantom")
    g.add_argument("--count", type=int, default=1, help="number of slices, seeds seed..seed+count-1")
    g.add_argument("--seed", type=int)
    g.set_defaults(func=cmd_phantom_generate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, FormatError, DepthError, SizeError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except CtLesionError as exc:
        print(f"processing error: {exc}", file=sys.stderr)
        return EXIT_PROCESSING


if __name__ == "__main__":
    sys.exit(main())

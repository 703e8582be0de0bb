"""Firefly optimiser against the exhaustive oracle on random tri-modal histograms.

Prints the hit rate (score >= tolerance * optimum), the mean relative gap and
the number of distinct cut vectors evaluated, with and without the final
integer polish.

    python scripts/fa_vs_oracle.py --histograms 100 --seed 9
"""

import argparse
import time
from dataclasses import replace

import numpy as np

from ctlesion import FireflyParams, exhaustive_optimal, fa_optimize, trimodal_histogram


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--histograms", type=int, default=60)
    ap.add_argument("--seed", type=int, default=9, help="seed of the histogram generator")
    ap.add_argument("--tolerance", type=float, default=0.999)
    ap.add_argument("--set", action="append", default=[], metavar="FIELD=VALUE",
                    help="override a FireflyParams field, e.g. --set gamma=1.5e-5")
    args = ap.parse_args()

    base = FireflyParams()
    for item in args.set:
        name, value = item.split("=", 1)
        base = replace(base, **{name: type(getattr(base, name))(value)})

    rng = np.random.default_rng(args.seed)
    hists = [trimodal_histogram(rng) for _ in range(args.histograms)]
    optima = [exhaustive_optimal(h, 2)[1] for h in hists]

    for label, params in (("swarm only", replace(base, polish_starts=0)), ("swarm + polish", base)):
        start = time.perf_counter()
        scores = [fa_optimize(h, 2, replace(params, seed=i)).score for i, h in enumerate(hists)]
        elapsed = time.perf_counter() - start
        ratios = np.array(scores) / np.array(optima)
        hits = int(np.sum(ratios >= args.tolerance))
        print(f"{label:15s} hits {hits:4d}/{len(hists)}  mean gap {1 - ratios.mean():.2e}  "
              f"worst ratio {ratios.min():.5f}  {elapsed / len(hists) * 1e3:.0f} ms/histogram")


if __name__ == "__main__":
    main()

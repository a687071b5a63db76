#!/usr/bin/env python3
"""Run every named experiment preset and collect the CSV outputs.

Full fidelity takes a few minutes (Monte Carlo at 2e6 symbols per point);
--quick drops the symbol count for a fast smoke pass.
"""

import argparse
import dataclasses
import sys
import time

from vlcmimo.config import PRESET_NAMES, preset
from vlcmimo.runner import (run_ber_sweep, run_channel_map, run_mobility,
                            run_throughput_sweep)

RECIPES = {
    "fig3a": run_channel_map,
    "fig3b": run_channel_map,
    "fig3c": run_channel_map,
    "fig4": run_ber_sweep,
    "fig5": run_ber_sweep,
    "fig6": run_mobility,
    "fig7": run_ber_sweep,
    "fig8": run_throughput_sweep,
}


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--quick", action="store_true",
                        help="reduce Monte Carlo symbols to 100k per point")
    parser.add_argument("--threads", type=int, default=None)
    parser.add_argument("--only", nargs="*", choices=PRESET_NAMES,
                        help="subset of presets to run")
    args = parser.parse_args()

    names = args.only or list(RECIPES)
    for name in names:
        cfg = preset(name)
        if args.quick:
            mc = dataclasses.replace(cfg.montecarlo, n_symbols=100_000)
            cfg = dataclasses.replace(cfg, montecarlo=mc)
        recipe = RECIPES[name]
        start = time.monotonic()
        if recipe is run_channel_map:
            paths = recipe(cfg, args.out, progress=True)
        else:
            paths = recipe(cfg, args.out, threads=args.threads, progress=True)
        print(f"{name}: {time.monotonic() - start:.1f}s -> "
              + ", ".join(str(p) for p in paths))
    return 0


if __name__ == "__main__":
    sys.exit(main())

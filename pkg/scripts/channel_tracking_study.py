"""Blind channel-estimation error over a packet, static and fading cases.

Produces results/channel_mse_static.csv (stochastic tracker acquiring a
static channel) and results/channel_mse_fading.csv (periodic subspace
re-estimation following Rayleigh fading).
"""

import argparse
import os
import sys

from stcdma.cli import main

HERE = os.path.dirname(os.path.realpath(__file__))
CASES = (
    ("channel_mse_static.csv", os.path.join(HERE, "..", "configs", "channel_tracking.cfg")),
    ("channel_mse_fading.csv", os.path.join(HERE, "..", "configs", "channel_tracking_fading.cfg")),
)


def run(runs: int, workers: int | None, outdir: str) -> int:
    os.makedirs(outdir, exist_ok=True)
    worst = 0
    for name, config in CASES:
        out = os.path.join(outdir, name)
        argv = ["channel-mse", "--config", config, "--runs", str(runs), "--out", out]
        if workers:
            argv += ["--workers", str(workers)]
        code = main(argv)
        worst = max(worst, code)
        print(f"wrote {out}")
    return worst


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--runs", type=int, default=20)
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument("--outdir", default=os.path.join(HERE, "..", "results"))
    args = parser.parse_args()
    sys.exit(run(args.runs, args.workers, args.outdir))

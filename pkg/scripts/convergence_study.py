"""Smoothed error-rate convergence through a mid-packet load surge.

Produces results/convergence.csv with one smoothed BER curve per receiver;
the interferer count jumps at symbol 1500, so the curves show acquisition,
steady state, and re-convergence.
"""

import argparse
import os
import sys

from stcdma.cli import main

HERE = os.path.dirname(os.path.realpath(__file__))
CONFIG = os.path.join(HERE, "..", "configs", "load_surge.cfg")


def run(runs: int, workers: int | None, outdir: str) -> int:
    os.makedirs(outdir, exist_ok=True)
    out = os.path.join(outdir, "convergence.csv")
    argv = [
        "ber-vs-symbols",
        "--config",
        CONFIG,
        "--runs",
        str(runs),
        "--smooth-window",
        "100",
        "--out",
        out,
    ]
    if workers:
        argv += ["--workers", str(workers)]
    code = main(argv)
    print(f"wrote {out}")
    return code


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--runs", type=int, default=20)
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument("--outdir", default=os.path.join(HERE, "..", "results"))
    args = parser.parse_args()
    sys.exit(run(args.runs, args.workers, args.outdir))

"""Steady-state error rate against SNR and against system load.

Produces results/ber_vs_snr.csv over 5..20 dB and results/ber_vs_users.csv
over 2..14 users for the reference system.
"""

import argparse
import os
import sys

from stcdma.cli import main

HERE = os.path.dirname(os.path.realpath(__file__))
CONFIG = os.path.join(HERE, "..", "configs", "reference.cfg")


def run(runs: int, workers: int | None, outdir: str) -> int:
    os.makedirs(outdir, exist_ok=True)
    worst = 0
    for command, grid, name in (
        ("ber-vs-snr", "5,8,11,14,17,20", "ber_vs_snr.csv"),
        ("ber-vs-users", "2,4,6,8,10,12,14", "ber_vs_users.csv"),
    ):
        out = os.path.join(outdir, name)
        argv = [
            command,
            "--config",
            CONFIG,
            "--grid",
            grid,
            "--runs",
            str(runs),
            "--out",
            out,
        ]
        if workers:
            argv += ["--workers", str(workers)]
        code = main(argv)
        worst = max(worst, code)
        print(f"wrote {out}")
    return worst


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--runs", type=int, default=10)
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument("--outdir", default=os.path.join(HERE, "..", "results"))
    args = parser.parse_args()
    sys.exit(run(args.runs, args.workers, args.outdir))

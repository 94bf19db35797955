"""Occupied cells after a random projection to 3 dimensions (K = 1000 fixed) for d = 1..10."""

import argparse
import sys

from robustgen import cli
from robustgen.datagen import FIGURE_FAMILIES


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="results/fig2")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--proj-dim", type=int, default=3)
    ap.add_argument("--d-max", type=int, default=10)
    args = ap.parse_args()
    status = 0
    for preset in FIGURE_FAMILIES:
        status |= cli.main(["cover-sweep", "--preset", preset, "--scheme", "random_projection",
                            "--proj-dim", str(args.proj_dim), "--d-values", f"1-{args.d_max}",
                            "--seed", str(args.seed), "--out-dir", args.out_dir, "--quiet"])
    print(f"wrote projection sweeps to {args.out_dir}")
    return status


if __name__ == "__main__":
    sys.exit(main())

"""Cover size K against occupied cells |T_S| for d = 1..10 on the four synthetic families.

Writes one CSV and one SVG per family to --out-dir.
"""

import argparse
import sys

from robustgen import cli
from robustgen.datagen import FIGURE_FAMILIES


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="results/fig1")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--trials", type=int, default=10)
    ap.add_argument("--n", type=int, default=1000)
    args = ap.parse_args()
    status = 0
    for preset in FIGURE_FAMILIES:
        status |= cli.main(["cover-sweep", "--preset", preset, "--scheme", "epsilon_cover",
                            "--d-values", "1-10", "--n", str(args.n), "--trials", str(args.trials),
                            "--seed", str(args.seed), "--out-dir", args.out_dir, "--quiet"])
    print(f"wrote sweeps for {len(FIGURE_FAMILIES)} families to {args.out_dir}")
    return status


if __name__ == "__main__":
    sys.exit(main())

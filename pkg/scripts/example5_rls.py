"""Regularized least squares in 1-d: true risk, occupied-cell bound and uniform-stability bound.

Also prints the lasso comparison between the cover-size bound and the
occupied-cell bound on data near a 2-dimensional slice of [-1,1]^30.
"""

import argparse
import sys

import numpy as np

from robustgen.experiments import LassoGeometry, RLSConfig, compare_lasso, run_rls_trial


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--n", type=int, default=1000)
    ap.add_argument("--lam", type=float, default=0.01)
    args = ap.parse_args()

    cfg = RLSConfig(n=args.n, lam=args.lam)
    risk, thm1, stab = [], [], []
    for s in range(args.trials):
        r = run_rls_trial(cfg, np.random.SeedSequence(args.seed, spawn_key=(s,)))
        risk.append(r.true_risk)
        thm1.append(r.theorem1.total)
        stab.append(r.stability.total)
    risk, thm1, stab = map(np.asarray, (risk, thm1, stab))
    print(f"rls: n={cfg.n} lam={cfg.lam} trials={args.trials}")
    print(f"  true risk        median {np.median(risk):.4g}")
    print(f"  occupied bound   median {np.median(thm1):.4g}  (risk above it in {np.sum(risk > thm1)} trials)")
    print(f"  stability bound  median {np.median(stab):.4g}  (occupied bound smaller in "
          f"{np.mean(thm1 < stab):.1%} of trials)")

    reps = compare_lasso(LassoGeometry(), args.seed)
    print("lasso: d=30, 2 free coordinates, n=5000")
    for name, r in reps.items():
        print(f"  {name:6s} total {r.total:.4g}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

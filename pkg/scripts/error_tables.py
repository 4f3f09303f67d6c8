"""Excess-error tables for RSPM, Gaussian RSPM and the exponential-mechanism baseline."""
import argparse

import numpy as np

from oraclepriv.audit import error_table
from oraclepriv.queries import QueryClass


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--family", default="conj")
    ap.add_argument("--d", type=int, default=3)
    ap.add_argument("--n", type=int, nargs="+", default=[100, 500, 2000])
    ap.add_argument("--eps", type=float, nargs="+", default=[0.5, 1.0])
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    cls = QueryClass(args.family, args.d)
    rng = np.random.default_rng(args.seed)
    print("preset\tn\teps\tmean\tp95\tbound")
    for preset in ("rspm", "gaussian-rspm", "expmech"):
        for r in error_table(preset, cls, args.n, args.eps, args.trials, rng, p=(0.7, 0.5, 0.3)[: args.d] if args.d <= 3 else 0.5):
            print(f"{r['preset']}\t{r['n']}\t{r['eps']}\t{r['mean']:.5f}\t{r['p95']:.5f}\t{r['bound']:.5f}")


if __name__ == "__main__":
    main()

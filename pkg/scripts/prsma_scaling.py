"""Median PRSMA excess error as n grows, at fixed run-level privacy parameters."""
import argparse

import numpy as np

from oraclepriv.audit import product_dataset
from oraclepriv.prsma import prsma_rspm_preset
from oraclepriv.queries import QueryClass


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, nargs="+", default=[1250, 5000, 20000])
    ap.add_argument("--eps-run", type=float, default=0.5)
    ap.add_argument("--delta-run", type=float, default=0.5)
    ap.add_argument("--trials", type=int, default=50)
    args = ap.parse_args()

    cls = QueryClass("conj", 3)
    U = cls.separator()
    prev = None
    for n in args.n:
        S = product_dataset(n, 3, (0.9, 0.8, 0.7), np.random.default_rng(0))
        v = cls.values(S)
        ex, fails = [], 0
        for seed in range(args.trials):
            out = prsma_rspm_preset(S, cls, U, args.eps_run, args.delta_run, rng=np.random.default_rng(seed),
                                    raw=True)
            if out.result is None:
                fails += 1
            else:
                ex.append(v[cls.index_of[out.result]] - v.min())
        med = float(np.median(ex)) if ex else float("nan")
        ratio = "" if prev is None else f"  ratio {prev / med:.2f}" if med > 0 else "  ratio inf"
        print(f"n={n:>6}  median excess {med:.5f}  fails {fails}/{args.trials}{ratio}")
        prev = med


if __name__ == "__main__":
    main()

"""Synthetic-data error of the oracle-query generator across dataset sizes."""
import argparse
import math

import numpy as np

from oraclepriv.audit import product_dataset
from oraclepriv.queries import QueryClass
from oraclepriv.synthgen import max_query_error, oracle_query, preset_T


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, nargs="+", default=[5000, 20000])
    ap.add_argument("--eps", type=float, default=2.0)
    ap.add_argument("--delta", type=float, default=1e-4)
    ap.add_argument("--beta", type=float, default=0.1)
    ap.add_argument("--runs", type=int, default=10)
    args = ap.parse_args()

    cls = QueryClass("conj", 3)
    for n in args.n:
        T = preset_T("gaussian-rspm", m1=3, m2=3, log_X=cls.log_universe, log_Q=math.log(cls.size), n=n,
                     eps=args.eps, delta=args.delta, beta=args.beta)
        errs = []
        for seed in range(args.runs):
            rng = np.random.default_rng(seed)
            S = product_dataset(n, 3, (0.7, 0.5, 0.3), rng)
            errs.append(max_query_error(S, oracle_query(S, cls, T, args.eps, args.delta, args.beta, rng=rng).points,
                                        cls))
        print(f"n={n:>6}  T={T:>5}  median max error {np.median(errs):.4f}  worst {max(errs):.4f}")


if __name__ == "__main__":
    main()

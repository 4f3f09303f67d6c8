"""Empirical privacy audit of RSPM on the two-coordinate micro domain, with a non-private control."""
import argparse

import numpy as np

from oraclepriv.audit import dp_ratio_audit, exact_erm_sampler, rspm_sampler, single_record_neighbors
from oraclepriv.queries import Dataset, QueryClass


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--eps", type=float, default=1.0)
    ap.add_argument("--trials", type=int, default=200_000)
    args = ap.parse_args()

    cls = QueryClass("conj", 2)
    S = Dataset(np.array([[1, 1]] * 4 + [[0, 1]] * 4, dtype=np.int8))
    nbrs = single_record_neighbors(S, cls.universe)
    for name, sampler in (("rspm", rspm_sampler(cls, cls.separator(), args.eps)),
                          ("gaussian-rspm", rspm_sampler(cls, cls.separator(), args.eps, "gaussian", 0.05)),
                          ("exact-erm", exact_erm_sampler(cls))):
        delta = 0.05 if name == "gaussian-rspm" else 0.0
        rep = dp_ratio_audit(sampler, S, nbrs, args.eps, delta, args.trials, np.random.default_rng(0),
                             support=cls.size)
        print(f"{name:<14} {rep.summary()}")


if __name__ == "__main__":
    main()

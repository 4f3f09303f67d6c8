"""Average regret against T for follow-the-private-leader and the dual FTPL learner."""
import argparse

import numpy as np

from oraclepriv.audit import alternating_stream, context_ftpl_regret, expected_perturbation_norm, follow_private_leader
from oraclepriv.queries import QueryClass


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--T", type=int, nargs="+", default=[250, 500, 1000, 2000])
    ap.add_argument("--eps", type=float, default=0.1)
    ap.add_argument("--seeds", type=int, default=20)
    args = ap.parse_args()

    par2 = QueryClass("parity", 2)
    U = par2.separator()
    ez = expected_perturbation_norm(par2, U, args.eps, np.random.default_rng(0))
    par3 = QueryClass("parity", 3)
    print("T\tfpl\tfpl_bound\tcontext_ftpl")
    for T in args.T:
        fpl = np.median([follow_private_leader(par2, alternating_stream(2, T), U, args.eps,
                                               np.random.default_rng(s)).average_regret for s in range(args.seeds)])
        ctx = np.median([context_ftpl_regret(par3, T, np.random.default_rng(s)).average_regret
                         for s in range(args.seeds)])
        print(f"{T}\t{fpl:.4f}\t{args.eps + ez / T:.4f}\t{ctx:.4f}")


if __name__ == "__main__":
    main()

"""Private robust subsampling: privacy that survives a certifiable heuristic oracle.

The sample is split into K equal parts. Each part runs the inner algorithm
``reps`` times at a small subsample budget. A part passes when none of its runs
returned Fail. A Laplace-noised count of passing parts is thresholded, and one
stored output from a passing part is released.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import CapacityError, InputError
from .mechanisms import rspm
from .oracles import CertifiableOracle, FailurePolicy, NEVER
from .queries import Dataset

DEFAULT_REPS_CAP = 100_000


@dataclass(frozen=True)
class PrsmaConfig:
    """Target budget plus the derived run parameters.

    With ``raw=True`` the two targets are taken as the run parameters
    directly, skipping the division by 62 and 11.
    """

    epsilon_target: float
    delta_target: float
    reps_cap: int = DEFAULT_REPS_CAP
    raw: bool = False

    def __post_init__(self):
        if not (self.epsilon_target > 0 and self.delta_target > 0):
            raise InputError("PRSMA needs positive epsilon and delta")
        if self.eps_run > 0.5 or self.delta_run > 0.5:
            raise InputError(
                f"run parameters must be at most 1/2 (eps_run={self.eps_run:.4g}, delta_run={self.delta_run:.4g})"
            )
        if self.reps > self.reps_cap:
            raise CapacityError(f"reps={self.reps} exceeds the cap {self.reps_cap}; raise reps_cap or delta")

    @property
    def eps_run(self) -> float:
        return self.epsilon_target if self.raw else self.epsilon_target / 62.0

    @property
    def delta_run(self) -> float:
        return self.delta_target if self.raw else self.delta_target / 11.0

    @property
    def K(self) -> int:
        return math.ceil((1.0 / self.eps_run) * (1.0 + math.log(2.0 / self.delta_run)))

    @property
    def reps(self) -> int:
        return math.ceil(math.log(self.K / self.delta_run) / self.delta_run)

    @property
    def threshold(self) -> float:
        return (1.0 / self.eps_run) * (1.0 + math.log(1.0 / self.delta_run))

    def eps_prime(self, n: int) -> float:
        """Budget of each inner run; ``n`` is the full sample size."""
        part = n // self.K
        return 1.0 / math.sqrt(8.0 * part * math.log(2.0 * self.K / self.delta_run))

    def min_n(self) -> int:
        return self.K


@dataclass
class PrsmaOutcome:
    result: object  # released output, or None for Fail
    pass_count: int
    noisy_count: float
    threshold: float
    surviving: list
    K: int
    reps: int
    inner_calls: int
    oracle_calls: int
    discarded: np.ndarray
    parts: list = field(repr=False)
    chosen: Optional[tuple] = None  # (part, rep) of the released output
    run_seeds: list = field(default_factory=list, repr=False)
    test_passed: bool = False  # noisy count above the threshold (Fail anyway if no part survived)

    @property
    def failed(self) -> bool:
        return self.result is None


# inner(S_part, eps, oracle, rng) -> object with ``.query`` (None means Fail)
Inner = Callable[[Dataset, float, Callable, np.random.Generator], object]


def partition(n: int, K: int, rng: np.random.Generator) -> tuple[np.ndarray, list]:
    """Discard ``n mod K`` random records, then split a uniform shuffle into K chunks."""
    perm = rng.permutation(n)
    r = n % K
    discarded, kept = perm[:r], perm[r:]
    return np.sort(discarded), [np.sort(c) for c in np.split(kept, K)]


def prsma(inner: Inner, S: Dataset, cfg: PrsmaConfig, oracle, rng: np.random.Generator) -> PrsmaOutcome:
    """Run the robust wrapper once.

    ``oracle`` is handed unchanged to every inner run. All randomness of the
    wrapper and the inner runs descends from ``rng``: one child seed per
    ``(part, rep)`` pair, so a single inner run can be replayed from the outcome.
    """
    K, reps = cfg.K, cfg.reps
    if S.n < K:
        raise InputError(f"PRSMA needs n >= K = {K} records, got n = {S.n}")
    eps_p = cfg.eps_prime(S.n)
    root = np.random.SeedSequence(rng.integers(0, 2**63))
    split_ss, count_ss, pick_ss, runs_ss = root.spawn(4)
    discarded, parts = partition(S.n, K, np.random.default_rng(split_ss))
    seeds = runs_ss.spawn(K * reps)

    calls_before = getattr(oracle, "calls", 0)
    outputs: list[list] = []
    passing = []
    for i, idx in enumerate(parts):
        S_i = S.subset(idx)
        row, ok = [], True
        for t in range(reps):
            out = inner(S_i, eps_p, oracle, np.random.default_rng(seeds[i * reps + t]))
            ok &= out.query is not None
            row.append(out.query)
        outputs.append(row)
        if ok:
            passing.append(i)

    T = len(passing)
    T_noisy = T + np.random.default_rng(count_ss).laplace(0.0, 1.0 / cfg.eps_run)
    result, chosen = None, None
    test_passed = bool(T_noisy > cfg.threshold)
    if test_passed and passing:  # nothing to sample from when every part failed
        pick = np.random.default_rng(pick_ss)
        i = passing[int(pick.integers(T))]
        t = int(pick.integers(reps))
        result, chosen = outputs[i][t], (i, t)
    return PrsmaOutcome(
        result=result, pass_count=T, noisy_count=float(T_noisy), threshold=cfg.threshold,
        surviving=passing, K=K, reps=reps, inner_calls=K * reps,
        oracle_calls=getattr(oracle, "calls", 0) - calls_before,
        discarded=discarded, parts=parts, chosen=chosen, run_seeds=seeds, test_passed=test_passed,
    )


def replay_chosen(inner: Inner, S: Dataset, cfg: PrsmaConfig, outcome: PrsmaOutcome, oracle):
    """Rerun the released inner run on its part with its own seed."""
    if outcome.chosen is None:
        return None
    i, t = outcome.chosen
    seed = outcome.run_seeds[i * outcome.reps + t]
    return inner(S.subset(outcome.parts[i]), cfg.eps_prime(S.n), oracle, np.random.default_rng(seed)).query


def rspm_inner(cls, U) -> Inner:
    def inner(S_part, eps, oracle, rng):
        return rspm(S_part, cls, U, eps, oracle, rng)

    return inner


def prsma_rspm_preset(S: Dataset, cls, U, epsilon_target: float, delta_target: float,
                      policy: FailurePolicy = NEVER, rng=None, *, raw: bool = False,
                      reps_cap: int = DEFAULT_REPS_CAP) -> PrsmaOutcome:
    """PRSMA around Laplace RSPM with a certifiable oracle following ``policy``."""
    cfg = PrsmaConfig(epsilon_target, delta_target, reps_cap=reps_cap, raw=raw)
    oracle_ss, alg_ss = np.random.SeedSequence(rng.integers(0, 2**63)).spawn(2)
    oracle = CertifiableOracle(cls, policy, np.random.default_rng(oracle_ss))
    return prsma(rspm_inner(cls, U), S, cfg, oracle, np.random.default_rng(alg_ss))


def prsma_accuracy_bound(m: int, size_Q: int, n: int, cfg: PrsmaConfig, beta: float) -> float:
    """Accuracy expression of the RSPM preset with every hidden constant set to 1.

    Uses the run parameters ``(eps_run, delta_run)``; requires ``beta > delta_run``.
    """
    eps, delta = cfg.eps_run, cfg.delta_run
    if not beta > delta:
        raise InputError("accuracy bound needs beta > delta_run")
    gap = beta - delta
    a = m * m * math.log(m / gap) * math.log(1.0 / delta)
    b = math.sqrt(math.log(1.0 / delta) * math.log(size_Q / gap))
    return (a + b) / math.sqrt(n * eps)

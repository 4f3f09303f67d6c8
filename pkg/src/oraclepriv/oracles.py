"""Weighted optimisation oracles and the certifiable-oracle coupling runner.

Every oracle takes a :class:`WeightedDataset` and returns an
:class:`OracleAnswer`. ``result is None`` means the oracle failed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InputError
from .queries import WeightedDataset


@dataclass(frozen=True)
class OracleAnswer:
    result: object  # member of the class, or None for Fail
    objective: Optional[float] = None
    calls: int = 1

    @property
    def failed(self) -> bool:
        return self.result is None


FAIL = OracleAnswer(None, None, 1)


def last_member(cls, q):
    """Default corruption rule: answer with the lexicographically-last member."""
    return cls.members[-1]


@dataclass(frozen=True)
class FailurePolicy:
    """When a heuristic oracle misbehaves.

    ``mode`` is one of ``never``, ``bernoulli`` (each call with probability
    ``p``), ``calls`` (the listed 0-based call indices) or ``trigger`` (whenever
    ``trigger(wd)`` is true). ``corrupt`` is used by non-certifiable oracles to
    turn the true argmin into the query they return instead.
    """

    mode: str = "never"
    p: float = 0.0
    calls: frozenset = frozenset()
    trigger: Optional[Callable[[WeightedDataset], bool]] = None
    corrupt: Callable = last_member
    text: str = field(default="never", compare=False)

    def __post_init__(self):
        if self.mode not in ("never", "bernoulli", "calls", "trigger"):
            raise InputError(f"unknown failure mode {self.mode!r}")
        if not 0.0 <= self.p <= 1.0:
            raise InputError("failure probability must lie in [0, 1]")
        if self.mode == "trigger" and self.trigger is None:
            raise InputError("trigger mode needs a predicate")

    @classmethod
    def parse(cls, text: str) -> "FailurePolicy":
        """``never`` | ``bernoulli:p`` | ``calls:i,j,k`` | ``trigger:x1,...,xd``.

        The trigger form fails whenever the given point appears in the weighted dataset.
        """
        text = text.strip()
        mode, _, arg = text.partition(":")
        try:
            if mode == "never":
                return cls(text=text)
            if mode == "bernoulli":
                return cls("bernoulli", p=float(arg), text=text)
            if mode == "calls":
                return cls("calls", calls=frozenset(int(t) for t in arg.split(",") if t), text=text)
            if mode == "trigger":
                return cls("trigger", trigger=contains_point([float(t) for t in arg.split(",")]), text=text)
        except ValueError as exc:
            raise InputError(f"bad failure policy {text!r}") from exc
        raise InputError(f"bad failure policy {text!r}")

    def fires(self, wd: WeightedDataset, call_index: int, rng: np.random.Generator) -> bool:
        if self.mode == "never":
            return False
        if self.mode == "bernoulli":
            return bool(rng.random() < self.p)
        if self.mode == "calls":
            return call_index in self.calls
        return bool(self.trigger(wd))


def contains_point(x) -> Callable[[WeightedDataset], bool]:
    target = np.asarray(x, dtype=float)

    def predicate(wd: WeightedDataset) -> bool:
        if len(wd) == 0:
            return False
        return bool(np.any(np.all(np.asarray(wd.points, dtype=float) == target, axis=1)))

    return predicate


NEVER = FailurePolicy()


def exact_oracle(cls, wd: WeightedDataset) -> OracleAnswer:
    """Exact argmin of ``sum_i w_i q(x_i)``; exact ties go to the smallest canonical key."""
    obj = cls.objective(wd)
    i = int(np.argmin(obj))
    return OracleAnswer(cls.members[i], float(obj[i]), 1)


def certifiable_oracle(cls, wd, policy: FailurePolicy, rng, call_index: int = 0) -> OracleAnswer:
    """Either the exact answer or Fail; never a wrong query."""
    if policy.fires(wd, call_index, rng):
        return FAIL
    return exact_oracle(cls, wd)


def noncertifiable_oracle(cls, wd, policy: FailurePolicy, rng, call_index: int = 0) -> OracleAnswer:
    """Never fails; on a trigger returns the corrupted (possibly suboptimal) query."""
    ans = exact_oracle(cls, wd)
    if policy.fires(wd, call_index, rng):
        q = policy.corrupt(cls, ans.result)
        obj = cls.objective(wd)[cls.index_of[q]] if hasattr(cls, "index_of") else None
        return OracleAnswer(q, None if obj is None else float(obj), 1)
    return ans


class ExactOracle:
    """Callable wrapper that also counts calls."""

    def __init__(self, cls):
        self.cls = cls
        self.calls = 0

    def __call__(self, wd: WeightedDataset) -> OracleAnswer:
        self.calls += 1
        return exact_oracle(self.cls, wd)


class CertifiableOracle(ExactOracle):
    def __init__(self, cls, policy: FailurePolicy = NEVER, rng=None):
        super().__init__(cls)
        self.policy = policy
        self.rng = rng if rng is not None else np.random.default_rng()
        self.failures = 0

    def __call__(self, wd: WeightedDataset) -> OracleAnswer:
        ans = certifiable_oracle(self.cls, wd, self.policy, self.rng, self.calls)
        self.calls += 1
        self.failures += ans.failed
        return ans


class NoncertifiableOracle(CertifiableOracle):
    def __call__(self, wd: WeightedDataset) -> OracleAnswer:
        ans = noncertifiable_oracle(self.cls, wd, self.policy, self.rng, self.calls)
        self.calls += 1
        return ans


class _CouplingOracle:
    """Asks the heuristic first; on Fail records it and answers exactly instead."""

    def __init__(self, heuristic, exact):
        self.heuristic = heuristic
        self.exact = exact
        self.failed = False
        self.calls = 0

    def __call__(self, wd):
        self.calls += 1
        ans = self.heuristic(wd)
        if ans.failed:
            self.failed = True
            return self.exact(wd)
        return ans


def coupled_run(algorithm, S, cls, policy: FailurePolicy, seed: int):
    """Run ``algorithm(S, oracle, rng)`` once under the certifiable-oracle coupling.

    All of the algorithm's randomness comes from ``seed``; the heuristic's
    failure coin uses an independent child stream so the ideal side is exactly
    the run with a perfect oracle. Returns ``(ideal, heuristic)`` where
    ``heuristic`` is None (Fail) if any oracle call failed, else equal to ``ideal``.
    """
    alg_ss, oracle_ss = np.random.SeedSequence(seed).spawn(2)
    heuristic = CertifiableOracle(cls, policy, np.random.default_rng(oracle_ss))
    coupler = _CouplingOracle(heuristic, ExactOracle(cls))
    ideal = algorithm(S, coupler, np.random.default_rng(alg_ss))
    return ideal, (None if coupler.failed else ideal)

"""Privacy primitives and the separator-perturbed minimisation mechanisms."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import InputError
from .oracles import ExactOracle
from .queries import Dataset, SeparatorSet, WeightedDataset


@dataclass(frozen=True)
class PrivacyParams:
    epsilon: float
    delta: float = 0.0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise InputError("epsilon must be positive")
        if not 0.0 <= self.delta < 1.0:
            raise InputError("delta must lie in [0, 1)")


@dataclass(frozen=True)
class MechanismOutput:
    """Outcome of one mechanism run. ``query is None`` means the oracle failed."""

    query: object
    noise_trace: Optional[np.ndarray]
    oracle_calls: int = 1

    @property
    def failed(self) -> bool:
        return self.query is None


# -- samplers --------------------------------------------------------------


def laplace_sample(b: float, rng: np.random.Generator, size=None):
    if not b > 0:
        raise InputError("Laplace scale must be positive")
    return rng.laplace(0.0, b, size)


def gaussian_sample(sigma: float, rng: np.random.Generator, size=None):
    if not sigma > 0:
        raise InputError("Gaussian scale must be positive")
    return rng.normal(0.0, sigma, size)


def gaussian_sigma(m: int, epsilon: float, delta: float) -> float:
    """Noise scale of the Gaussian variant, valid for delta in (0, 1/e)."""
    if not epsilon > 0:
        raise InputError("epsilon must be positive")
    if not 0.0 < delta < math.exp(-1):
        raise InputError("Gaussian RSPM needs delta in (0, 1/e)")
    return 3.5 * math.sqrt(m * math.log(1.0 / delta)) / epsilon


# -- RSPM ------------------------------------------------------------------


def _as_weighted(S) -> WeightedDataset:
    if isinstance(S, WeightedDataset):
        return S
    if isinstance(S, Dataset):
        return WeightedDataset.from_dataset(S)
    return WeightedDataset.from_dataset(Dataset(S))


def perturbed_dataset(S, U: SeparatorSet, eta) -> WeightedDataset:
    """``WD(S, eta)``: the records at their own weights plus each separator element at weight eta_i."""
    eta = np.asarray(eta, dtype=float)
    if len(eta) != U.size:
        raise InputError("need one noise value per separator element")
    return _as_weighted(S) + WeightedDataset(U.elements, eta)


def _run_perturbed(S, cls, U, eta, oracle) -> MechanismOutput:
    oracle = oracle if oracle is not None else ExactOracle(cls)
    ans = oracle(perturbed_dataset(S, U, eta))
    return MechanismOutput(ans.result, np.asarray(eta, dtype=float), 1)


def rspm(S, cls, U: SeparatorSet, epsilon: float, oracle=None, rng=None, noise=None) -> MechanismOutput:
    """Report the separator-perturbed minimiser with ``Lap(m/epsilon)`` weights.

    ``S`` may be a :class:`Dataset` (unit weights) or a :class:`WeightedDataset`
    whose private records carry weight of magnitude at most 1. ``noise``
    overrides the random draw (used for stubs and replay). An oracle Fail is
    returned as ``query=None``; no retry happens here.
    """
    if not epsilon > 0:
        raise InputError("epsilon must be positive")
    m = U.size
    eta = laplace_sample(m / epsilon, rng, m) if noise is None else noise
    return _run_perturbed(S, cls, U, eta, oracle)


def rspm_gaussian(S, cls, U: SeparatorSet, epsilon: float, delta: float,
                  oracle=None, rng=None, noise=None) -> MechanismOutput:
    sigma = gaussian_sigma(U.size, epsilon, delta)
    eta = gaussian_sample(sigma, rng, U.size) if noise is None else noise
    return _run_perturbed(S, cls, U, eta, oracle)


def rspm_noise(kind: str, m: int, epsilon: float, delta: float, rng, size) -> np.ndarray:
    if kind == "laplace":
        return laplace_sample(m / epsilon, rng, size)
    if kind == "gaussian":
        return gaussian_sample(gaussian_sigma(m, epsilon, delta), rng, size)
    raise InputError(f"unknown noise kind {kind!r}")


def rspm_batch(S, cls, U: SeparatorSet, epsilon: float, trials: int, rng,
               kind: str = "laplace", delta: float = 0.0, noise=None) -> np.ndarray:
    """Member indices of ``trials`` independent RSPM runs with the exact oracle.

    Vectorised: the perturbed objective is ``n q(S) + Z_q`` with ``Z = M_U eta``.
    Consumes the rng exactly as ``trials`` sequential calls to :func:`rspm`
    would, so both paths agree draw for draw.
    """
    base = cls.objective(_as_weighted(S))
    M = cls.matrix(U.elements).astype(float)  # |Q| x m
    eta = rspm_noise(kind, U.size, epsilon, delta, rng, (trials, U.size)) if noise is None else np.asarray(noise)
    return np.argmin(base[None, :] + eta @ M.T, axis=1)


def implicit_perturbation(cls, U: SeparatorSet, eta) -> np.ndarray:
    """``Z_q = sum_i eta_i q(e_i)`` for every member of the class."""
    return cls.matrix(U.elements).astype(float) @ np.asarray(eta, dtype=float)


def excess_error(cls, q, S: Dataset) -> float:
    """``q(S) - min_q' q'(S)``."""
    vals = cls.values(S)
    return float(vals[cls.index_of[q]] - vals.min())


def rspm_bound(m: int, epsilon: float, n: int, beta: float) -> float:
    """High-probability excess error of Laplace RSPM."""
    return 2.0 * m * m * math.log(m / beta) / (epsilon * n)


def rspm_expected_bound(m: int, epsilon: float, n: int) -> float:
    return 2.0 * m * m * (1.0 + math.log(m)) / (epsilon * n)


def gaussian_rspm_bound(m: int, epsilon: float, delta: float, n: int, beta: float) -> float:
    """Tail bound for Gaussian RSPM: m * max_i |eta_i| / n with the Gaussian maximum tail.

    ``|Z_q - Z_q'| <= sum_i |eta_i| <= m max_i |eta_i|`` because the separator
    values of two queries differ by at most one per coordinate.
    """
    sigma = gaussian_sigma(m, epsilon, delta)
    return math.sqrt(2.0 * math.log(2.0 * m / beta)) * sigma * m / n


def weighted_rspm_minimizer(cls, U: SeparatorSet, epsilon: float, n: int, *, kind: str = "laplace",
                            delta: float = 0.0, oracle=None):
    """RSPM for inputs with weights of order ``1/n`` on private records.

    Every weight is multiplied by ``n`` so private records sit at unit weight
    and the separator noise keeps its usual scale. Returns a callable
    ``(wd, rng, n_private=None) -> MechanismOutput``; the last argument is
    accepted for interface parity with partition-based minimisers.
    """
    if kind == "gaussian":
        gaussian_sigma(U.size, epsilon, delta)  # validate early

    def minimize(wd: WeightedDataset, rng, n_private=None) -> MechanismOutput:
        scaled = wd.scaled(n)
        if kind == "gaussian":
            return rspm_gaussian(scaled, cls, U, epsilon, delta, oracle, rng)
        return rspm(scaled, cls, U, epsilon, oracle, rng)

    minimize.kind = kind
    return minimize


# -- selection and accounting ---------------------------------------------


def report_noisy_max(values: Sequence[tuple], b: float, rng: np.random.Generator):
    """Label with the largest ``value + Lap(b)``; ties after noise go to the first."""
    if len(values) == 0:
        raise InputError("report_noisy_max needs at least one candidate")
    scores = np.array([v for _, v in values], dtype=float) + laplace_sample(b, rng, len(values))
    return values[int(np.argmax(scores))][0]


def compose_basic(params: Sequence[PrivacyParams]) -> PrivacyParams:
    return PrivacyParams(sum(p.epsilon for p in params), sum(p.delta for p in params))


def advanced_budget(epsilon: float, delta: float, T: int) -> tuple[float, float]:
    """Per-round ``(eps0, delta0)`` so that T rounds compose to ``(epsilon, delta)``."""
    if T < 1:
        raise InputError("T must be at least 1")
    if not 0 < delta < 2:
        raise InputError("delta must lie in (0, 2) for the budget formula")
    return epsilon / math.sqrt(24.0 * T * math.log(2.0 / delta)), delta / (4.0 * T)


def exponential_mechanism_baseline(S: Dataset, cls, epsilon: float, rng):
    """Sample a member with probability proportional to ``exp(-epsilon n q(S) / 2)``."""
    if epsilon < 0:
        raise InputError("epsilon must be non-negative")
    score = -epsilon * cls.objective(_as_weighted(S)) / 2.0
    p = np.exp(score - logsumexp(score))
    return cls.members[int(rng.choice(len(p), p=p / p.sum()))]

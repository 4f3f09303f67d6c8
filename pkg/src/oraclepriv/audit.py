"""Empirical checks: neighbouring-dataset ratio audits, TV distances, regret experiments, error tables.

A passing audit is a sanity check at the configured confidence, not a proof of privacy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import stats

from .errors import CapacityError, InputError
from .mechanisms import (
    gaussian_rspm_bound, gaussian_sigma, implicit_perturbation, rspm_batch, rspm_bound, exponential_mechanism_baseline,
)
from .queries import Dataset, WeightedDataset
from .synthgen import DataPlayerState, default_noise_scale, ftpl_sample

MIN_TRIALS = 10_000
CONFIDENCE = 1e-3

# sampler(S, trials, rng) -> integer output labels
Sampler = Callable[[Dataset, int, np.random.Generator], np.ndarray]


# -- statistics ------------------------------------------------------------


def clopper_pearson(k, n: int, alpha: float):
    """Exact two-sided binomial interval at level ``1 - alpha`` (vectorised in ``k``)."""
    k = np.asarray(k, dtype=float)
    lo = np.where(k > 0, stats.beta.ppf(alpha / 2, k, n - k + 1), 0.0)
    hi = np.where(k < n, stats.beta.ppf(1 - alpha / 2, k + 1, n - k), 1.0)
    return np.nan_to_num(lo), np.nan_to_num(hi, nan=1.0)


def tv_distance(p_a, p_b) -> float:
    """Half the L1 distance between two distributions (arrays or label->prob dicts)."""
    if isinstance(p_a, dict) or isinstance(p_b, dict):
        keys = set(p_a) | set(p_b)
        return 0.5 * sum(abs(p_a.get(k, 0.0) - p_b.get(k, 0.0)) for k in keys)
    return 0.5 * float(np.abs(np.asarray(p_a, float) - np.asarray(p_b, float)).sum())


def empirical(labels, support: Optional[int] = None) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    c = np.bincount(labels, minlength=support or (labels.max() + 1 if len(labels) else 0))
    return c / max(len(labels), 1)


def tv_slack(p_a, n_a: int, p_b, n_b: int, z: float = 3.0) -> float:
    """Sampling allowance for an empirical TV: ``z`` standard errors summed over outcomes, halved."""
    p = (np.asarray(p_a, float) * n_a + np.asarray(p_b, float) * n_b) / (n_a + n_b)
    return 0.5 * z * float(np.sum(np.sqrt(p * (1 - p) * (1.0 / n_a + 1.0 / n_b))))


# -- ratio audit -----------------------------------------------------------


@dataclass
class AuditReport:
    mechanism: str
    trials: int
    epsilon: float
    delta: float
    freq_S: np.ndarray
    freq_neighbors: list
    max_log_ratio: float
    violations: list = field(default_factory=list)
    comparisons: int = 0
    min_count: int = 0

    @property
    def passed(self) -> bool:
        return not self.violations

    def summary(self) -> str:
        state = "PASS" if self.passed else "FAIL"
        return (f"{self.mechanism}: {state} eps={self.epsilon:g} delta={self.delta:g} trials={self.trials} "
                f"neighbors={len(self.freq_neighbors)} max_log_ratio={self.max_log_ratio:.4f} "
                f"violations={len(self.violations)}")


def _events(cA: np.ndarray, cB: np.ndarray) -> list[np.ndarray]:
    """Singletons plus prefix unions in decreasing order of the A/B frequency ratio."""
    support = np.flatnonzero((cA + cB) > 0)
    ev = [np.array([o]) for o in support]
    order = support[np.argsort(-(cA[support] + 0.5) / (cB[support] + 0.5), kind="stable")]
    ev += [order[: k + 1] for k in range(1, len(order))]
    return ev


def _violations(cA, cB, trials, eps, delta, alpha):
    out = []
    for E in _events(cA, cB):
        kA, kB = cA[E].sum(), cB[E].sum()
        loA, _ = clopper_pearson(kA, trials, alpha)
        _, hiB = clopper_pearson(kB, trials, alpha)
        if loA > math.exp(eps) * hiB + delta:
            out.append((tuple(int(e) for e in E), float(loA), float(hiB)))
    return out


def dp_ratio_audit(sampler: Sampler, S: Dataset, neighbors: Sequence[Dataset], eps: float, delta: float,
                   trials: int, rng, *, name: str = "mechanism", support: Optional[int] = None,
                   confidence: float = CONFIDENCE, min_count: int = 50) -> AuditReport:
    """Flag any audited event E with ``Pr_S[E] > e^eps Pr_S'[E] + delta`` beyond the confidence slack.

    Both directions are checked for every neighbour. The per-comparison level
    is ``confidence`` divided by the number of comparisons (Bonferroni).
    """
    if trials < MIN_TRIALS:
        raise CapacityError(f"audit needs at least {MIN_TRIALS} trials per dataset, got {trials}")
    if not neighbors:
        raise InputError("audit needs at least one neighbouring dataset")
    samples = [np.asarray(sampler(D, trials, rng), dtype=np.int64) for D in [S, *neighbors]]
    k = support or int(max(s.max() for s in samples)) + 1
    counts = [np.bincount(s, minlength=k) for s in samples]
    c0 = counts[0]
    n_cmp = sum(2 * len(_events(c0, c)) for c in counts[1:])
    alpha = confidence / max(n_cmp, 1)

    violations, max_lr = [], 0.0
    for j, c in enumerate(counts[1:]):
        for a, b, tag in ((c0, c, "S>S'"), (c, c0, "S'>S")):
            for v in _violations(a, b, trials, eps, delta, alpha):
                violations.append((j, tag) + v)
        both = (c0 >= min_count) & (c >= min_count)
        if both.any():
            max_lr = max(max_lr, float(np.max(np.abs(np.log(c0[both] / c[both])))))
    return AuditReport(name, trials, eps, delta, c0 / trials, [c / trials for c in counts[1:]], max_lr,
                       violations, n_cmp, min_count)


def single_record_neighbors(S: Dataset, pool) -> list[Dataset]:
    """Every dataset obtained by replacing one record with a pool element, deduplicated as multisets."""
    seen, out = set(), []
    base = S.points
    for i in range(S.n):
        for x in np.asarray(pool):
            if np.array_equal(base[i], x):
                continue
            D = S.replace_record(i, x)
            key = tuple(sorted(map(tuple, D.points.tolist())))
            if key not in seen:
                seen.add(key)
                out.append(D)
    return out


# -- reference mechanisms for calibration ----------------------------------


def constant_sampler(label: int = 0) -> Sampler:
    return lambda S, trials, rng: np.full(trials, label)


def exact_erm_sampler(cls) -> Sampler:
    """Non-private: always the exact minimiser's member index."""
    return lambda S, trials, rng: np.full(trials, int(np.argmin(cls.values(S))))


def randomized_response_sampler(eps: float, record: int = 0, coord: int = 0) -> Sampler:
    """Report one bit of one record, kept with probability ``e^eps / (1 + e^eps)``."""
    keep = math.exp(eps) / (1 + math.exp(eps))

    def sample(S, trials, rng):
        bit = int(S.points[record, coord])
        flip = rng.random(trials) >= keep
        return np.where(flip, 1 - bit, bit)

    return sample


def rspm_sampler(cls, U, eps: float, kind: str = "laplace", delta: float = 0.0) -> Sampler:
    return lambda S, trials, rng: rspm_batch(S, cls, U, eps, trials, rng, kind=kind, delta=delta)


# -- follow the private leader --------------------------------------------


@dataclass
class RegretTrace:
    losses: np.ndarray  # learner's loss each round
    best_cumulative: np.ndarray  # min over the class of the cumulative loss after each round
    perturbation_norms: np.ndarray  # ||Z^t||_inf each round

    @property
    def T(self) -> int:
        return len(self.losses)

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.losses)

    @property
    def average_regret(self) -> float:
        return float((self.losses.sum() - self.best_cumulative[-1]) / self.T)


def follow_private_leader(cls, stream, U, eps: float, rng, *, kind: str = "laplace", delta: float = 0.0) -> RegretTrace:
    """Play ``q^t = RSPM(x^1..x^{t-1})`` with fresh perturbation each round; losses ``q^t(x^t)``.

    Implemented through the pERM identity: the played member minimises
    ``sum_{s<t} q(x^s) + Z^t_q`` with ``Z^t = M_U eta^t``.
    """
    X = np.asarray(stream)
    T = len(X)
    L = cls.matrix(X).astype(float).T  # T x |Q|, loss of each member each round
    prefix = np.vstack([np.zeros(cls.size), np.cumsum(L, axis=0)[:-1]])
    M = cls.matrix(U.elements).astype(float)
    if kind == "laplace":
        eta = rng.laplace(0.0, U.size / eps, (T, U.size))
    else:
        eta = rng.normal(0.0, gaussian_sigma(U.size, eps, delta), (T, U.size))
    Z = eta @ M.T
    played = np.argmin(prefix + Z, axis=1)
    losses = L[np.arange(T), played]
    best = np.cumsum(L, axis=0).min(axis=1)
    return RegretTrace(losses, best, np.abs(Z).max(axis=1))


def expected_perturbation_norm(cls, U, eps: float, rng, draws: int = 20_000, *, kind: str = "laplace",
                               delta: float = 0.0) -> float:
    """Monte Carlo ``E ||Z||_inf`` of the implicit RSPM perturbation."""
    if kind == "laplace":
        eta = rng.laplace(0.0, U.size / eps, (draws, U.size))
    else:
        eta = rng.normal(0.0, gaussian_sigma(U.size, eps, delta), (draws, U.size))
    Z = eta @ cls.matrix(U.elements).astype(float).T
    return float(np.abs(Z).max(axis=1).mean())


def alternating_stream(d: int, T: int) -> np.ndarray:
    """Alternate two single-coordinate points; no member is best on both halves."""
    a = np.zeros(d, dtype=np.int8)
    b = np.zeros(d, dtype=np.int8)
    a[0] = 1
    b[-1] = 1
    return np.array([a if t % 2 == 0 else b for t in range(T)])


# -- data-player regret ----------------------------------------------------


def context_ftpl_regret(cls, T: int, rng, *, target=None, samples: int = 64,
                        noise_scale: Optional[float] = None) -> RegretTrace:
    """Regret of the dual FTPL learner against a best-response query player.

    Each round the adversary estimates the learner's distribution from
    ``samples`` draws and plays ``argmax over Q-bar of q(target) - q(S^t)``,
    the non-private query player of the release game. ``target`` defaults to
    the point mass on the all-ones record. The learner's loss ``not q^t`` is
    measured on a fresh batch of draws.
    """
    from .synthgen import negation_closure

    dual_sep = cls.dual().separator()
    scale = noise_scale or default_noise_scale(dual_sep.size, T, cls.log_universe)
    state = DataPlayerState(cls, scale, (), dual_sep)
    qbar = negation_closure(cls)
    value_table = np.vstack([cls.table, 1 - cls.table]).astype(float)  # q(x) for q in Q-bar
    if target is None:
        target = np.ones((1, cls.dim), dtype=np.int8)
    t_idx = cls.locate(np.asarray(target))
    target_vals = value_table[:, t_idx].mean(axis=1)
    cum = np.zeros(cls.universe_size)
    losses, best, norms = np.empty(T), np.empty(T), np.full(T, scale)
    for t in range(T):
        probe = cls.locate(ftpl_sample(state, samples, rng))
        est = np.bincount(probe, minlength=cls.universe_size) / samples
        k = int(np.argmax(target_vals - value_table @ est))
        evals = cls.locate(ftpl_sample(state, samples, rng))
        loss_row = 1.0 - value_table[k]
        losses[t] = loss_row[evals].mean()
        cum += loss_row
        best[t] = cum.min()
        state.push(qbar[k])
    return RegretTrace(losses, best, norms)


# -- error tables ----------------------------------------------------------


def product_dataset(n: int, d: int, p, rng) -> Dataset:
    """Records with independent coordinates, ``Pr[x_j = 1] = p_j``."""
    p = np.broadcast_to(np.asarray(p, dtype=float), (d,))
    return Dataset((rng.random((n, d)) < p).astype(np.int8))


def excess_errors(preset: str, S: Dataset, cls, eps: float, trials: int, rng, *, delta: float = 0.05,
                  U=None) -> np.ndarray:
    """Excess error ``q(S) - min q(S)`` of ``trials`` runs of the chosen learner."""
    U = U if U is not None else cls.separator()
    v = cls.values(S)
    if preset == "rspm":
        idx = rspm_batch(S, cls, U, eps, trials, rng)
    elif preset == "gaussian-rspm":
        idx = rspm_batch(S, cls, U, eps, trials, rng, kind="gaussian", delta=delta)
    elif preset == "expmech":
        idx = np.array([cls.index_of[exponential_mechanism_baseline(S, cls, eps, rng)] for _ in range(trials)])
    else:
        raise InputError(f"unknown preset {preset!r}")
    return v[idx] - v.min()


def bound_value(preset: str, m: int, eps: float, n: int, beta: float, delta: float = 0.05) -> float:
    if preset == "rspm":
        return rspm_bound(m, eps, n, beta)
    if preset == "gaussian-rspm":
        return gaussian_rspm_bound(m, eps, delta, n, beta)
    if preset == "expmech":
        return float("nan")
    raise InputError(f"unknown preset {preset!r}")


def error_table(preset: str, cls, n_grid, eps_grid, trials: int, rng, *, beta: float = 0.05, delta: float = 0.05,
                p=0.5) -> list[dict]:
    """One row per (n, eps): mean and 95th-percentile excess error plus the bound."""
    U = cls.separator()
    rows = []
    for n in n_grid:
        S = product_dataset(int(n), cls.dim, p, rng)
        for eps in eps_grid:
            ex = excess_errors(preset, S, cls, float(eps), trials, rng, delta=delta, U=U)
            rows.append(dict(preset=preset, n=int(n), eps=float(eps), mean=float(ex.mean()),
                             p95=float(np.quantile(ex, 0.95)), bound=bound_value(preset, U.size, eps, n, beta, delta)))
    return rows

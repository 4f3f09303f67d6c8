"""Synthetic data through no-regret play of the query release game.

The data player runs follow-the-perturbed-leader over the dual class (one dual
oracle call per sample). The query player answers each round with a private
best response. The output is a sample from the data player's average play.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InputError
from .mechanisms import MechanismOutput, advanced_budget, report_noisy_max, rspm, weighted_rspm_minimizer
from .oracles import CertifiableOracle, NEVER, exact_oracle
from .prsma import PrsmaConfig, prsma
from .queries import Dataset, DualClass, Query, WeightedDataset, eval_on_dataset

PRESETS = ("gaussian-rspm", "private-oracle", "prsma")


# -- game ------------------------------------------------------------------


def payoff(S: Dataset, x, q: Query) -> float:
    """``A(x, q) = q(S) - q(x)``."""
    return eval_on_dataset(q, S) - q(x)


def payoff_mixed(S: Dataset, S_hat, q: Query) -> float:
    """Payoff against the uniform mixture over the rows of ``S_hat``."""
    X = S_hat.points if isinstance(S_hat, Dataset) else np.asarray(S_hat)
    return eval_on_dataset(q, S) - float(q.evaluate(X).mean())


def negation_closure(cls) -> tuple:
    """``Q-bar``: the members followed by their negations."""
    return tuple(cls.members) + tuple(~q for q in cls.members)


def closure_values(cls, points) -> np.ndarray:
    """Mean value of every query in ``Q-bar`` over ``points`` (a Dataset or an array)."""
    S = points if isinstance(points, Dataset) else Dataset(points)
    v = cls.values(S)
    return np.concatenate([v, 1.0 - v])


def max_query_error(S, S_hat, cls) -> float:
    return float(np.max(np.abs(closure_values(cls, S) - closure_values(cls, S_hat))))


def best_payoff(S, S_hat, cls) -> float:
    """``max over Q-bar of A(S_hat, q)``; the game value is 0, reached at ``S_hat = S``."""
    return float(np.max(closure_values(cls, S) - closure_values(cls, S_hat)))


# -- data player -----------------------------------------------------------


def default_noise_scale(m2: int, T: int, log_universe: float) -> float:
    """Laplace scale ``1/mu`` with rate ``mu = sqrt(m2 log|X| / T)``."""
    return math.sqrt(T / (m2 * max(log_universe, 1e-12)))


class DataPlayerState:
    """History of losses ``not q^tau`` and the perturbation setup of the dual learner."""

    def __init__(self, cls, scale: float, history=(), dual_sep=None):
        if not scale > 0:
            raise InputError("FTPL noise scale must be positive")
        self.cls = cls
        self.dual = DualClass(cls)
        self.U = dual_sep if dual_sep is not None else self.dual.separator()
        self.scale = scale
        self.history: list[Query] = []
        self._M_U = self.dual.matrix(self.U.elements).T.astype(float)  # m2 x |X|
        self._loss = np.zeros(self.dual.size)
        for q in history:
            self.push(q)

    @property
    def universe(self) -> np.ndarray:
        return self.cls.universe

    def push(self, q: Query) -> None:
        """Record the query player's move; the data player's loss is ``not q``."""
        nq = ~q
        self.history.append(nq)
        self._loss = self._loss + self.dual.matrix((nq,))[:, 0]

    @property
    def cumulative_loss(self) -> np.ndarray:
        return self._loss.copy()


def ftpl_draw(state: DataPlayerState, rng, oracle=None, noise=None):
    """One sample from the data player's current distribution via one dual oracle call.

    With ``oracle=None`` the exact dual oracle is used. Returns ``(point, answer)``;
    ``point`` is None when a heuristic oracle fails.
    """
    eta = rng.laplace(0.0, state.scale, state.U.size) if noise is None else np.asarray(noise, dtype=float)
    pts = tuple(state.history) + tuple(state.U.elements)
    wd = WeightedDataset(pts, np.r_[np.ones(len(state.history)), eta]) if pts else WeightedDataset((), [])
    ans = exact_oracle(state.dual, wd) if oracle is None else oracle(wd)
    if ans.result is None:
        return None, ans
    return np.asarray(ans.result), ans


def ftpl_sample(state: DataPlayerState, N: int, rng, noise=None) -> np.ndarray:
    """``N`` i.i.d. draws with the exact dual oracle, vectorised.

    Consumes the rng as ``N`` successive :func:`ftpl_draw` calls would; each
    draw still accounts for one oracle call.
    """
    eta = rng.laplace(0.0, state.scale, (N, state.U.size)) if noise is None else np.asarray(noise)
    idx = np.argmin(state._loss[None, :] + eta @ state._M_U, axis=1)
    return state.universe[idx]


# -- query player ----------------------------------------------------------


@dataclass
class BestResponse:
    query: Optional[Query]
    candidates: tuple = ()
    payoffs: tuple = ()
    oracle_calls: int = 0

    @property
    def failed(self) -> bool:
        return self.query is None


def private_best_response(S: Dataset, S_hat: np.ndarray, eps0: float, minimizer, rng) -> BestResponse:
    """Two private minimisations, one per half of ``Q-bar``, then report-noisy-max.

    ``q1`` minimises ``q(S_hat) - q(S)`` over Q (largest payoff within Q).
    ``q2`` is the negation of the minimiser of ``q(S) - q(S_hat)`` (largest payoff within not-Q).
    The records of ``S`` come first in each weighted dataset.
    """
    n, N = S.n, len(S_hat)
    pts = np.vstack([S.points, S_hat])
    w_priv, w_pub = np.full(n, 1.0 / n), np.full(N, 1.0 / N)
    wd1 = WeightedDataset(pts, np.r_[-w_priv, w_pub])
    wd2 = WeightedDataset(pts, np.r_[w_priv, -w_pub])
    o1 = minimizer(wd1, rng, n)
    o2 = minimizer(wd2, rng, n)
    calls = getattr(o1, "oracle_calls", 1) + getattr(o2, "oracle_calls", 1)
    if o1.query is None or o2.query is None:
        return BestResponse(None, oracle_calls=calls)
    q1, q2 = o1.query, ~o2.query
    a1, a2 = payoff_mixed(S, S_hat, q1), payoff_mixed(S, S_hat, q2)
    q = report_noisy_max([(q1, a1), (q2, a2)], 1.0 / (eps0 * n), rng)
    return BestResponse(q, (q1, q2), (a1, a2), calls)


def prsma_weighted_minimizer(cls, U, eps0: float, delta0: float, policy=NEVER, raw: bool = False,
                             reps_cap: int = 100_000):
    """PRSMA around RSPM for the signed two-sample objectives of the query player.

    Only the first ``n_private`` records are partitioned. Each part keeps the
    public sample, with its total weight scaled to the part size.
    """
    cfg = PrsmaConfig(eps0, delta0, reps_cap=reps_cap, raw=raw)

    def minimize(wd: WeightedDataset, rng, n_private: int):
        priv, pub = wd.points[:n_private], wd.points[n_private:]
        s_priv = np.sign(wd.weights[:n_private])
        pub_w = wd.weights[n_private:] * n_private  # now +-n/N

        def inner(S_part, eps, oracle, r):
            k = S_part.n
            part = WeightedDataset(S_part.points, np.full(k, s_priv[0]))
            public = WeightedDataset(pub, pub_w * (k / n_private))
            return rspm(part + public, cls, U, eps, oracle, r)

        oracle = CertifiableOracle(cls, policy, np.random.default_rng(rng.integers(0, 2**63)))
        out = prsma(inner, Dataset(priv), cfg, oracle, rng)
        return MechanismOutput(out.result, None, out.oracle_calls)

    return minimize


def make_minimizer(preset: str, cls, U, eps0: float, delta0: float, n: int, **kw):
    if preset == "gaussian-rspm":
        return weighted_rspm_minimizer(cls, U, eps0, n, kind="gaussian", delta=delta0)
    if preset == "private-oracle":
        return weighted_rspm_minimizer(cls, U, eps0, n, kind="laplace")
    if preset == "prsma":
        return prsma_weighted_minimizer(cls, U, eps0, delta0, **kw)
    raise InputError(f"unknown preset {preset!r}; choose from {PRESETS}")


# -- OracleQuery -----------------------------------------------------------


def sample_size(size_Q: int, beta: float, alpha: float, factor: float = 2.0) -> int:
    """``ceil(2 log(factor |Q| / beta) / alpha^2)``."""
    return math.ceil(2.0 * math.log(factor * size_Q / beta) / alpha**2)


@dataclass
class SyntheticDataset:
    points: np.ndarray
    rounds: np.ndarray  # tau_j, 1-based round each point was drawn from
    queries: list = field(default_factory=list)  # q^1..q^T
    params: dict = field(default_factory=dict)
    dual_calls: int = 0
    private_calls: int = 0

    @property
    def size(self) -> int:
        return len(self.points)

    def as_dataset(self) -> Dataset:
        return Dataset(self.points)


def default_alpha0(m2: int, T: int, log_universe: float) -> float:
    return min(1.0, m2**0.75 * math.sqrt(log_universe / T))


def oracle_query(S: Dataset, cls, T: int, eps: float, delta: float, beta: float, alpha0: Optional[float] = None,
                 *, preset: str = "gaussian-rspm", minimizer=None, dual_oracle=None, noise_scale=None,
                 rng=None, prsma_kw: Optional[dict] = None) -> Optional[SyntheticDataset]:
    """Run T rounds of FTPL against private best responses and sample the average play.

    Returns None if any private minimisation or dual oracle call fails.
    """
    if T < 1:
        raise InputError("T must be at least 1")
    if not (0 < beta < 1):
        raise InputError("beta must lie in (0, 1)")
    eps0, delta0 = advanced_budget(eps, delta, T)
    beta0 = beta / (4 * T)
    dual_sep = DualClass(cls).separator()
    m2 = dual_sep.size
    alpha0 = default_alpha0(m2, T, cls.log_universe) if alpha0 is None else alpha0
    if not alpha0 > 0:
        raise InputError("alpha0 must be positive")
    N = sample_size(cls.size, beta0, alpha0, 2.0)
    N_final = sample_size(cls.size, beta, alpha0, 8.0)
    scale = default_noise_scale(m2, T, cls.log_universe) if noise_scale is None else noise_scale
    if minimizer is None:
        minimizer = make_minimizer(preset, cls, cls.separator(), eps0, delta0, S.n, **(prsma_kw or {}))

    q0 = cls.members[0]
    state = DataPlayerState(cls, scale, [q0], dual_sep)
    losses = [state.cumulative_loss]  # loss vector defining S^1, S^2, ...
    played, dual_calls, priv_calls = [], 0, 0
    for _ in range(T):
        if dual_oracle is None:
            S_hat = ftpl_sample(state, N, rng)
        else:
            rows = []
            for _ in range(N):
                x, _ans = ftpl_draw(state, rng, dual_oracle)
                if x is None:
                    return None
                rows.append(x)
            S_hat = np.array(rows)
        dual_calls += N
        br = private_best_response(S, S_hat, eps0, minimizer, rng)
        priv_calls += br.oracle_calls
        if br.failed:
            return None
        played.append(br.query)
        state.push(br.query)
        losses.append(state.cumulative_loss)

    taus = rng.integers(0, T, N_final)  # 0-based index into rounds 1..T
    points = np.empty((N_final, cls.dim), dtype=cls.universe.dtype)
    M_U = state._M_U
    for tau in np.unique(taus):
        sel = np.flatnonzero(taus == tau)
        eta = rng.laplace(0.0, scale, (len(sel), m2))
        points[sel] = cls.universe[np.argmin(losses[tau][None, :] + eta @ M_U, axis=1)]
    dual_calls += N_final
    params = dict(T=T, eps=eps, delta=delta, beta=beta, alpha0=alpha0, eps0=eps0, delta0=delta0, beta0=beta0,
                  N=N, N_final=N_final, noise_scale=scale, preset=preset)
    return SyntheticDataset(points, taus + 1, played, params, dual_calls, priv_calls)


# -- presets and accounting ------------------------------------------------


def preset_T(instantiation: str, *, m1: int, m2: int, log_X: float, log_Q: float, n: int, eps: float,
             delta: float, beta: float) -> int:
    """Number of rounds for each private-minimiser instantiation (natural logs, ceiled).

    ``log_X`` and ``log_Q`` are ``log|X|`` and ``log|Q|``.
    """
    if instantiation == "gaussian-rspm":
        num = m2**0.75 * math.sqrt(log_X) * n * eps
        den = m1**1.5 * math.sqrt(math.log(m1 / beta)) * math.log(1.0 / delta)
        return max(1, math.ceil(num / den))
    if instantiation == "private-oracle":
        num = n * eps * m2**0.75 * math.sqrt(log_X)
        den = (log_Q + math.log(1.0 / beta)) * math.sqrt(math.log(1.0 / delta))
        return max(1, math.ceil(num / den))
    if instantiation == "prsma":
        base = m2**0.75 * math.sqrt(log_X * n * eps) / (m1**2 + math.sqrt(log_Q))
        return max(1, math.ceil(base ** (4.0 / 3.0)))
    raise InputError(f"unknown instantiation {instantiation!r}; choose from {PRESETS}")


def advanced_composition(eps1: float, delta1: float, T: int, delta_slack: float) -> tuple[float, float]:
    """Budget of T adaptive ``(eps1, delta1)`` steps under advanced composition."""
    e = math.sqrt(2.0 * T * math.log(1.0 / delta_slack)) * eps1 + T * eps1 * math.expm1(eps1)
    return e, T * delta1 + delta_slack


def oracle_query_budget(eps: float, delta: float, T: int) -> tuple[float, float]:
    """Composed budget of T private best responses, each ``(3 eps0, 2 delta0)``."""
    eps0, delta0 = advanced_budget(eps, delta, T)
    return advanced_composition(3 * eps0, 2 * delta0, T, delta / 2.0)

"""Data universes, statistical query families, separator sets and dual classes.

Five families are supported over ``d``-dimensional points:

* ``conj``   monotone conjunction over an index set (empty set is constant 1)
* ``disj``   monotone disjunction over an index set (empty set is constant 0)
* ``parity`` XOR over an index set (empty set is constant 0)
* ``half``   discrete halfspace ``1{w . x >= 1}`` with ``w`` on a finite grid
* ``dl1``    monotone 1-decision list ``((j1, b1), ..., (jl, bl)), default``

Indices are 0-based everywhere. Boolean points are 0/1 integer rows; halfspace
points take coordinates on a finite grid that contains 0.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import CapacityError, InputError, UnsupportedError

CONJ = "conj"
DISJ = "disj"
PARITY = "parity"
HALF = "half"
DLIST = "dl1"
FAMILIES = (CONJ, DISJ, PARITY, HALF, DLIST)
INDEX_FAMILIES = (CONJ, DISJ, PARITY)
_FAMILY_RANK = {f: i for i, f in enumerate(FAMILIES)}

MAX_DIM = 24
DEFAULT_CAP = 1 << 20
# float slack on the halfspace threshold so that c * (1/c) still counts as >= 1
HALFSPACE_TOL = 1e-9
# largest |Q| * |X| for which the full truth table is cached
_TABLE_CAP = 1 << 26


# ---------------------------------------------------------------------------
# queries


@dataclass(frozen=True)
class Query:
    """A boolean statistical query. Immutable and hashable.

    ``params`` is the sorted index tuple for conj/disj/parity, the weight tuple
    for halfspaces and ``(rules, default)`` for decision lists.
    """

    family: str
    dim: int
    params: tuple
    negated: bool = False

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise UnsupportedError(f"unknown query family {self.family!r}")
        if self.dim < 1:
            raise InputError("query dimension must be positive")
        if self.family in INDEX_FAMILIES:
            idx = tuple(int(i) for i in self.params)
            if list(idx) != sorted(set(idx)):
                raise InputError(f"index set must be sorted and unique: {idx}")
            if idx and (idx[0] < 0 or idx[-1] >= self.dim):
                raise InputError(f"index set {idx} outside [0, {self.dim})")
            object.__setattr__(self, "params", idx)
        elif self.family == HALF:
            w = tuple(float(v) for v in self.params)
            if len(w) != self.dim:
                raise InputError(f"halfspace needs {self.dim} weights, got {len(w)}")
            object.__setattr__(self, "params", w)
        else:
            rules, default = self.params
            rules = tuple((int(j), int(b)) for j, b in rules)
            seen = [j for j, _ in rules]
            if len(set(seen)) != len(seen):
                raise InputError("decision list repeats a literal")
            if any(not 0 <= j < self.dim or b not in (0, 1) for j, b in rules):
                raise InputError(f"bad decision list rules {rules}")
            if int(default) not in (0, 1):
                raise InputError("decision list default must be 0 or 1")
            object.__setattr__(self, "params", (rules, int(default)))

    @property
    def key(self) -> tuple:
        """Canonical sort key; the smallest key wins oracle ties."""
        return (_FAMILY_RANK[self.family], self.dim, self.params, self.negated)

    def __lt__(self, other: "Query") -> bool:
        return self.key < other.key

    def __invert__(self) -> "Query":
        return replace(self, negated=not self.negated)

    def negate(self) -> "Query":
        return ~self

    @property
    def base(self) -> "Query":
        return replace(self, negated=False) if self.negated else self

    def evaluate(self, points) -> np.ndarray:
        """Vectorised evaluation over a ``(k, d)`` array of points."""
        X = np.asarray(points)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.dim:
            raise InputError(f"point dimension {X.shape[1]} != query dimension {self.dim}")
        out = _eval_base(self.family, self.params, X)
        return 1 - out if self.negated else out

    def __call__(self, x) -> int:
        return int(self.evaluate(np.asarray(x)[None, :] if np.ndim(x) == 1 else x)[0])

    def encode(self) -> str:
        if self.family in INDEX_FAMILIES:
            body = ",".join(str(i) for i in self.params)
        elif self.family == HALF:
            body = ",".join(format(w, "g") for w in self.params)
        else:
            rules, default = self.params
            body = ";".join(f"{j}>{b}" for j, b in rules) + f"|{default}"
        return f"{'!' if self.negated else ''}{self.family}[{self.dim}]:{body}"

    @classmethod
    def decode(cls, text: str) -> "Query":
        text = text.strip()
        negated = text.startswith("!")
        if negated:
            text = text[1:]
        try:
            head, body = text.split(":", 1)
            family, dim = head.rstrip("]").split("[")
            dim = int(dim)
        except ValueError as exc:
            raise InputError(f"cannot parse query encoding {text!r}") from exc
        if family in INDEX_FAMILIES:
            params = tuple(int(t) for t in body.split(",") if t)
        elif family == HALF:
            params = tuple(float(t) for t in body.split(","))
        elif family == DLIST:
            rules_s, default = body.split("|")
            rules = tuple(tuple(int(v) for v in r.split(">")) for r in rules_s.split(";") if r)
            params = (rules, int(default))
        else:
            raise UnsupportedError(f"unknown query family {family!r}")
        return cls(family, dim, params, negated)

    def __str__(self) -> str:
        return self.encode()


def _eval_base(family: str, params: tuple, X: np.ndarray) -> np.ndarray:
    if family == CONJ:
        if not params:
            return np.ones(len(X), dtype=np.int8)
        return np.all(X[:, list(params)] == 1, axis=1).astype(np.int8)
    if family == DISJ:
        if not params:
            return np.zeros(len(X), dtype=np.int8)
        return np.any(X[:, list(params)] == 1, axis=1).astype(np.int8)
    if family == PARITY:
        if not params:
            return np.zeros(len(X), dtype=np.int8)
        return (X[:, list(params)].sum(axis=1) % 2).astype(np.int8)
    if family == HALF:
        return (X @ np.asarray(params, dtype=float) >= 1.0 - HALFSPACE_TOL).astype(np.int8)
    rules, default = params
    out = np.full(len(X), default, dtype=np.int8)
    bound = np.zeros(len(X), dtype=bool)
    for j, b in rules:
        hit = (X[:, j] == 1) & ~bound
        out[hit] = b
        bound |= hit
    return out


def conjunction(d: int, idx: Iterable[int] = ()) -> Query:
    return Query(CONJ, d, tuple(sorted(set(idx))))


def disjunction(d: int, idx: Iterable[int] = ()) -> Query:
    return Query(DISJ, d, tuple(sorted(set(idx))))


def parity(d: int, idx: Iterable[int] = ()) -> Query:
    return Query(PARITY, d, tuple(sorted(set(idx))))


def halfspace(w: Sequence[float]) -> Query:
    return Query(HALF, len(w), tuple(w))


def decision_list(d: int, rules: Sequence[tuple[int, int]], default: int) -> Query:
    return Query(DLIST, d, (tuple(rules), default))


def eval_query(q: Query, x) -> int:
    return q(x)


def eval_on_dataset(q: Query, S: "Dataset") -> float:
    """Normalised value ``q(S) = (1/n) sum_i q(x_i)``."""
    if len(S) == 0:
        raise InputError("empty dataset")
    return float(q.evaluate(S.points).mean())


def eval_weighted(q: Query, wd: "WeightedDataset") -> float:
    """Raw weighted sum ``sum_i w_i q(x_i)`` (deliberately un-normalised)."""
    if len(wd) == 0:
        return 0.0
    return float(np.dot(wd.weights, q.evaluate(wd.points)))


# ---------------------------------------------------------------------------
# datasets


def _as_points(points) -> np.ndarray:
    X = np.array(points)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise InputError("points must form a 2-d array")
    if not np.issubdtype(X.dtype, np.number):
        raise InputError("points must be numeric")
    if np.issubdtype(X.dtype, np.floating) and np.all(X == np.round(X)) and np.all(np.isin(X, (0, 1))):
        X = X.astype(np.int8)
    X.setflags(write=False)
    return X


class Dataset:
    """An ordered multiset of points sharing one dimension."""

    __slots__ = ("points",)

    def __init__(self, points):
        X = _as_points(points)
        if len(X) == 0:
            raise InputError("dataset must contain at least one point")
        self.points = X

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return len(self.points)

    def __repr__(self) -> str:
        return f"Dataset(n={self.n}, d={self.dim})"

    def subset(self, idx) -> "Dataset":
        return Dataset(self.points[np.asarray(idx)])

    def replace_record(self, i: int, x) -> "Dataset":
        X = self.points.copy()
        X[i] = x
        return Dataset(X)


class WeightedDataset:
    """Weighted points, the input format of every optimisation oracle.

    ``points`` is a ``(k, d)`` array for primal classes or a tuple of
    :class:`Query` for dual classes.
    """

    __slots__ = ("points", "weights")

    def __init__(self, points, weights):
        if isinstance(points, (tuple, list)) and points and isinstance(points[0], Query):
            self.points = tuple(points)
        else:
            self.points = np.zeros((0, 0)) if len(points) == 0 else _as_points(points)
        w = np.asarray(weights, dtype=float).reshape(-1)
        if len(w) != len(self.points):
            raise InputError("one weight per point required")
        if not np.all(np.isfinite(w)):
            raise InputError("weights must be finite")
        w.setflags(write=False)
        self.weights = w

    @classmethod
    def from_dataset(cls, S: Dataset, weight: float = 1.0) -> "WeightedDataset":
        return cls(S.points, np.full(S.n, weight))

    def __len__(self) -> int:
        return len(self.weights)

    def __add__(self, other: "WeightedDataset") -> "WeightedDataset":
        if len(self) == 0:
            return other
        if len(other) == 0:
            return self
        if isinstance(self.points, tuple):
            return WeightedDataset(self.points + tuple(other.points), np.r_[self.weights, other.weights])
        return WeightedDataset(np.vstack([self.points, other.points]), np.r_[self.weights, other.weights])

    def scaled(self, factor: float) -> "WeightedDataset":
        return WeightedDataset(self.points, self.weights * factor)

    def __repr__(self) -> str:
        return f"WeightedDataset(k={len(self)})"


def negation_doubled(points) -> np.ndarray:
    """Append complement coordinates so monotone classes can express negated literals."""
    X = np.asarray(points)
    return np.hstack([X, 1 - X])


# ---------------------------------------------------------------------------
# classes


def _dl1_encoding_count(d: int) -> int:
    return 2 * sum(math.perm(d, l) * 2**l for l in range(d + 1))


@dataclass(frozen=True)
class QueryClass:
    """A finite, enumerable class of queries of one family.

    ``weight_grid`` (V) and ``point_grid`` (B) are only used by halfspaces;
    B defaults to V together with 0 and the separator constants.
    """

    family: str
    dim: int
    weight_grid: tuple = ()
    point_grid: tuple = ()
    cap: int = DEFAULT_CAP

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise UnsupportedError(f"unsupported family {self.family!r}")
        if not 1 <= self.dim <= MAX_DIM:
            raise InputError(f"dimension must lie in [1, {MAX_DIM}]")
        if self.family == HALF:
            V = tuple(sorted(set(float(v) for v in (self.weight_grid or (-1.0, 1.0)))))
            if len(V) < 2 or V[0] < -1 or V[-1] > 1:
                raise InputError("halfspace weight grid must hold >= 2 values in [-1, 1]")
            object.__setattr__(self, "weight_grid", V)
            B = set(float(b) for b in self.point_grid) or set(V) | set(halfspace_constants(V))
            B.add(0.0)
            object.__setattr__(self, "point_grid", tuple(sorted(B)))
        elif self.weight_grid or self.point_grid:
            raise InputError("grids are only meaningful for halfspaces")

    # -- basic shape ------------------------------------------------------

    @property
    def coordinate_values(self) -> tuple:
        return self.point_grid if self.family == HALF else (0, 1)

    @property
    def encoding_count(self) -> int:
        if self.family in INDEX_FAMILIES:
            return 2**self.dim
        if self.family == HALF:
            return len(self.weight_grid) ** self.dim
        return _dl1_encoding_count(self.dim)

    @property
    def universe_size(self) -> int:
        return len(self.coordinate_values) ** self.dim

    @property
    def log_universe(self) -> float:
        return self.dim * math.log(len(self.coordinate_values))

    @property
    def enumerable(self) -> bool:
        return self.encoding_count <= self.cap and self.universe_size <= self.cap

    def _require_enumerable(self):
        if self.encoding_count > self.cap:
            raise CapacityError(f"{self.family} class at d={self.dim} has {self.encoding_count} members > cap {self.cap}")

    def _require_universe(self):
        if self.universe_size > self.cap:
            raise CapacityError(f"universe of size {self.universe_size} exceeds cap {self.cap}")

    # -- enumeration ------------------------------------------------------

    @cached_property
    def members(self) -> tuple:
        """All distinct queries, sorted by canonical key."""
        self._require_enumerable()
        d = self.dim
        if self.family in INDEX_FAMILIES:
            qs = [Query(self.family, d, idx) for r in range(d + 1) for idx in itertools.combinations(range(d), r)]
        elif self.family == HALF:
            qs = [Query(HALF, d, w) for w in itertools.product(self.weight_grid, repeat=d)]
        else:
            qs = _dl1_distinct(d)
        return tuple(sorted(qs, key=lambda q: q.key))

    @property
    def size(self) -> int:
        return len(self.members)

    def __len__(self) -> int:
        return self.size

    @cached_property
    def index_of(self) -> dict:
        return {q: i for i, q in enumerate(self.members)}

    @cached_property
    def universe(self) -> np.ndarray:
        """Every point of the data universe, in lexicographic grid order."""
        self._require_universe()
        vals = self.coordinate_values
        U = np.array(list(itertools.product(vals, repeat=self.dim)))
        if self.family != HALF:
            U = U.astype(np.int8)
        U.setflags(write=False)
        return U

    def locate(self, points) -> np.ndarray:
        """Universe index of each point (mixed-radix code over the grid)."""
        X = np.asarray(points)
        if X.ndim != 2 or X.shape[1] != self.dim:
            raise InputError(f"expected points of dimension {self.dim}")
        vals = np.asarray(self.coordinate_values, dtype=float)
        if len(vals) == 2 and vals[0] == 0 and vals[1] == 1 and np.issubdtype(X.dtype, np.integer):
            if X.size and (X.min() < 0 or X.max() > 1):
                raise InputError("point coordinate outside the declared coordinate set")
            return X.astype(np.int64) @ (1 << np.arange(self.dim - 1, -1, -1, dtype=np.int64))
        digits = np.searchsorted(vals, X)
        digits = np.clip(digits, 0, len(vals) - 1)
        if not np.all(vals[digits] == X):
            raise InputError("point coordinate outside the declared coordinate set")
        base = len(vals) ** np.arange(self.dim - 1, -1, -1, dtype=np.int64)
        return digits.astype(np.int64) @ base

    def validate_points(self, points) -> None:
        self.locate(points)

    # -- evaluation -------------------------------------------------------

    @cached_property
    def _params(self) -> np.ndarray:
        if self.family in INDEX_FAMILIES:
            M = np.zeros((self.size, self.dim), dtype=np.int64)
            for i, q in enumerate(self.members):
                M[i, list(q.params)] = 1
            return M
        if self.family == HALF:
            return np.array([q.params for q in self.members], dtype=float)
        return np.empty((0, 0))

    def matrix(self, points) -> np.ndarray:
        """Truth table ``M[i, j] = members[i](points[j])`` as int8."""
        X = np.asarray(points)
        if X.ndim == 1:
            X = X[None, :]
        if len(X) == 0:
            return np.zeros((self.size, 0), dtype=np.int8)
        if X.shape[1] != self.dim:
            raise InputError(f"point dimension {X.shape[1]} != class dimension {self.dim}")
        P = self._params
        if self.family == CONJ:
            return ((P @ (1 - X.astype(np.int64)).T) == 0).astype(np.int8)
        if self.family == DISJ:
            return ((P @ X.astype(np.int64).T) > 0).astype(np.int8)
        if self.family == PARITY:
            return ((P @ X.astype(np.int64).T) % 2).astype(np.int8)
        if self.family == HALF:
            return (P @ X.astype(float).T >= 1.0 - HALFSPACE_TOL).astype(np.int8)
        return np.stack([q.evaluate(X) for q in self.members])

    @cached_property
    def table(self) -> np.ndarray | None:
        """Truth table over the whole universe, or None when too large to cache."""
        if self.size * self.universe_size > _TABLE_CAP:
            return None
        T = self.matrix(self.universe)
        T.setflags(write=False)
        return T

    def objective(self, wd: WeightedDataset) -> np.ndarray:
        """``sum_i w_i q(x_i)`` for every member, in member order."""
        if len(wd) == 0:
            return np.zeros(self.size)
        T = self.table
        if T is not None:
            w = np.bincount(self.locate(wd.points), weights=wd.weights, minlength=self.universe_size)
            return T @ w
        pts, inv = np.unique(wd.points, axis=0, return_inverse=True)
        w = np.bincount(inv.reshape(-1), weights=wd.weights, minlength=len(pts))
        return self.matrix(pts) @ w

    def values(self, S: Dataset) -> np.ndarray:
        """Normalised ``q(S)`` for every member."""
        return self.objective(WeightedDataset.from_dataset(S)) / S.n

    # -- structure --------------------------------------------------------

    def separator(self) -> "SeparatorSet":
        return separator_set(self)

    def dual(self) -> "DualClass":
        return DualClass(self)

    def describe(self) -> str:
        if self.family == HALF:
            return f"{self.family}(d={self.dim}, V={list(self.weight_grid)}, B={list(self.point_grid)})"
        return f"{self.family}(d={self.dim})"


def _dl1_distinct(d: int) -> list:
    """Monotone 1-decision lists, one canonical (smallest-key) encoding per function."""
    U = np.array(list(itertools.product((0, 1), repeat=d)), dtype=np.int8)
    best: dict = {}
    for length in range(d + 1):
        for lits in itertools.permutations(range(d), length):
            for bits in itertools.product((0, 1), repeat=length):
                for default in (0, 1):
                    q = Query(DLIST, d, (tuple(zip(lits, bits)), default))
                    tt = q.evaluate(U).tobytes()
                    if tt not in best or q.key < best[tt].key:
                        best[tt] = q
    return list(best.values())


def query_class(family: str, d: int, **kw) -> QueryClass:
    return QueryClass(family, d, **kw)


# ---------------------------------------------------------------------------
# separator sets


@dataclass(frozen=True, eq=False)
class SeparatorSet:
    """Ordered separator elements: points (array) or queries (tuple) for dual classes."""

    elements: object

    @property
    def size(self) -> int:
        return len(self.elements)

    def __len__(self) -> int:
        return self.size

    def __iter__(self):
        return iter(self.elements)


def halfspace_constants(V: Sequence[float]) -> list[float]:
    """One constant ``c`` per consecutive pair ``a < b`` of V with ``b*c >= 1 > a*c``.

    For ``0 < a`` this is the midpoint of ``[1/b, 1/a)``; when ``a <= 0 < b`` the
    interval is unbounded above and ``c = 1/b``; when both are non-positive the
    negative constant ``c = 1/a`` works (``a*c = 1``, ``b*c = b/a < 1``).
    """
    V = sorted(set(float(v) for v in V))
    cs = []
    for a, b in zip(V, V[1:]):
        if b > 0:
            c = 0.5 * (1 / b + 1 / a) if a > 0 else 1 / b
        else:
            c = 1 / a
        cs.append(c)
    return cs


def separator_set(cls) -> SeparatorSet:
    """Canonical separator set for a primal, loss or dual class."""
    if isinstance(cls, LossClass):
        return cls.separator()
    if isinstance(cls, DualClass):
        return dual_separator(cls.primal)
    d = cls.dim
    if cls.family == CONJ:
        E = 1 - np.eye(d, dtype=np.int8)
    elif cls.family in (DISJ, PARITY):
        E = np.eye(d, dtype=np.int8)
    elif cls.family == HALF:
        rows = []
        for j in range(d):
            for c in halfspace_constants(cls.weight_grid):
                s = np.zeros(d)
                s[j] = c
                rows.append(s)
        E = np.array(rows)
    elif cls.family == DLIST:
        rows = []
        for r in range(3):
            for idx in itertools.combinations(range(d), r):
                s = np.zeros(d, dtype=np.int8)
                s[list(idx)] = 1
                rows.append(s)
        E = np.array(rows, dtype=np.int8)
    else:  # pragma: no cover - guarded by QueryClass
        raise UnsupportedError(cls.family)
    E.setflags(write=False)
    return SeparatorSet(E)


def verify_separator(cls, U: SeparatorSet) -> bool:
    """Exhaustive check that every pair of distinct members disagrees on some element of U."""
    members = cls.members  # raises CapacityError for huge classes
    T = cls.matrix(cls.universe)
    R = cls.matrix(U.elements)
    if len(members) <= 1:
        return True
    both = np.hstack([T, R])
    return len(np.unique(R, axis=0)) == len(np.unique(both, axis=0))


def check_size_bound(cls, U: SeparatorSet) -> bool:
    """A class with a separator of size m has at most 2^m distinct members."""
    return len(np.unique(cls.matrix(cls.universe), axis=0)) <= 2 ** U.size


# ---------------------------------------------------------------------------
# dual classes


class DualClass:
    """Roles of points and queries swapped: member ``h_x`` maps a query q to q(x).

    Members are universe points (in lexicographic order); the items it is
    evaluated on are queries of the primal class, possibly negated.
    """

    def __init__(self, primal: QueryClass):
        self.primal = primal

    @property
    def dim(self) -> int:
        return self.primal.dim

    @cached_property
    def members(self) -> tuple:
        return tuple(tuple(x.tolist()) for x in self.primal.universe)

    @property
    def size(self) -> int:
        return self.primal.universe_size

    @property
    def universe(self) -> tuple:
        return self.primal.members

    def matrix(self, queries) -> np.ndarray:
        """``M[x, k] = queries[k](x)`` over the primal universe."""
        queries = tuple(queries)
        if not queries:
            return np.zeros((self.size, 0), dtype=np.int8)
        T = self.primal.table
        if T is not None and all(q.family == self.primal.family and q.dim == self.dim for q in queries):
            idx = self.primal.index_of
            try:
                rows = np.array([idx[q.base] for q in queries])
                neg = np.array([q.negated for q in queries])
                M = T[rows].copy()
                M[neg] = 1 - M[neg]
                return M.T
            except KeyError:
                pass
        return np.stack([q.evaluate(self.primal.universe) for q in queries]).T

    def objective(self, wd: WeightedDataset) -> np.ndarray:
        if len(wd) == 0:
            return np.zeros(self.size)
        agg: dict = {}
        for q, w in zip(wd.points, wd.weights):
            agg[q] = agg.get(q, 0.0) + float(w)
        qs = tuple(agg)
        return self.matrix(qs) @ np.array([agg[q] for q in qs])

    def separator(self) -> SeparatorSet:
        return dual_separator(self.primal)

    @property
    def self_dual(self) -> bool:
        p = self.primal
        if p.family in INDEX_FAMILIES:
            return True
        if p.family == HALF:
            return tuple(p.weight_grid) == tuple(p.point_grid)
        return False

    def dual_query(self, x) -> Query:
        """The member ``h_x`` written as a query of the primal family.

        Paired with :meth:`query_as_point`, ``dual_query(x)(query_as_point(q)) == q(x)``.
        Conjunctions need the coordinate flip ``S -> 1 - 1_S`` (self-dual up to relabeling).
        """
        p = self.primal
        x = np.asarray(x)
        if p.family == CONJ:
            return conjunction(p.dim, np.flatnonzero(x == 0))
        if p.family == DISJ:
            return disjunction(p.dim, np.flatnonzero(x == 1))
        if p.family == PARITY:
            return parity(p.dim, np.flatnonzero(x == 1))
        if p.family == HALF:
            return halfspace(x.astype(float))
        raise UnsupportedError("decision lists have no self-dual relabeling")

    def query_as_point(self, q: Query) -> np.ndarray:
        p = self.primal
        if q.negated:
            raise InputError("relabeling is defined for base queries only")
        if p.family in INDEX_FAMILIES:
            v = np.zeros(p.dim, dtype=np.int8)
            v[list(q.params)] = 1
            return 1 - v if p.family == CONJ else v
        if p.family == HALF:
            return np.asarray(q.params, dtype=float)
        raise UnsupportedError("decision lists have no self-dual relabeling")


def dual_view(cls: QueryClass) -> DualClass:
    return DualClass(cls)


def dual_separator(cls: QueryClass) -> SeparatorSet:
    """Queries of ``cls`` that separate every pair of distinct universe points.

    Boolean families use the d single-literal queries (each returns x_j). For
    halfspaces the weight vectors ``c e_j`` built from the point grid must
    themselves lie on the weight grid.
    """
    d = cls.dim
    if cls.family == CONJ:
        return SeparatorSet(tuple(conjunction(d, [j]) for j in range(d)))
    if cls.family == DISJ:
        return SeparatorSet(tuple(disjunction(d, [j]) for j in range(d)))
    if cls.family == PARITY:
        return SeparatorSet(tuple(parity(d, [j]) for j in range(d)))
    if cls.family == DLIST:
        return SeparatorSet(tuple(decision_list(d, [(j, 1)], 0) for j in range(d)))
    V = set(cls.weight_grid)
    cs = halfspace_constants(cls.point_grid)
    if 0.0 not in V or any(c not in V for c in cs):
        raise UnsupportedError(
            f"halfspace dual separator needs 0 and {cs} on the weight grid {sorted(V)}"
        )
    qs = []
    for j in range(d):
        for c in cs:
            w = [0.0] * d
            w[j] = c
            qs.append(halfspace(w))
    return SeparatorSet(tuple(qs))


# ---------------------------------------------------------------------------
# loss-query lift


class LossClass:
    """Loss queries ``q_h((x, y)) = 1[h(x) != y]`` over labelled points.

    Labelled points are ``(k, d + 1)`` arrays whose last column is the label.
    Members are the hypotheses themselves; evaluation applies the XOR.
    """

    def __init__(self, hypotheses: QueryClass):
        self.hypotheses = hypotheses

    @property
    def dim(self) -> int:
        return self.hypotheses.dim + 1

    @property
    def members(self) -> tuple:
        return self.hypotheses.members

    @property
    def size(self) -> int:
        return self.hypotheses.size

    @property
    def index_of(self) -> dict:
        return self.hypotheses.index_of

    @cached_property
    def universe(self) -> np.ndarray:
        U = self.hypotheses.universe
        top = np.hstack([U, np.zeros((len(U), 1), dtype=U.dtype)])
        bot = np.hstack([U, np.ones((len(U), 1), dtype=U.dtype)])
        out = np.vstack([top, bot])
        out.setflags(write=False)
        return out

    def matrix(self, points) -> np.ndarray:
        Z = np.asarray(points)
        if Z.ndim == 1:
            Z = Z[None, :]
        H = self.hypotheses.matrix(Z[:, :-1])
        y = Z[:, -1].astype(np.int8)
        if not np.all(np.isin(y, (0, 1))):
            raise InputError("labels must be 0 or 1")
        return H ^ y[None, :]

    def objective(self, wd: WeightedDataset) -> np.ndarray:
        if len(wd) == 0:
            return np.zeros(self.size)
        return self.matrix(wd.points) @ wd.weights

    def values(self, S: Dataset) -> np.ndarray:
        return self.objective(WeightedDataset.from_dataset(S)) / S.n

    def separator(self) -> SeparatorSet:
        U = np.asarray(separator_set(self.hypotheses).elements)
        E = np.hstack([U, np.zeros((len(U), 1), dtype=U.dtype)])
        E.setflags(write=False)
        return SeparatorSet(E)


def lift_to_loss_class(hyp_class: QueryClass) -> LossClass:
    return LossClass(hyp_class)


def loss(h: Query, point) -> int:
    """0/1 loss of hypothesis h on a labelled point ``(x..., y)``."""
    z = np.asarray(point)
    return int(h(z[:-1]) != int(z[-1]))

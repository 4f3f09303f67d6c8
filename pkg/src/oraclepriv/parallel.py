"""Seed-per-task parallel map: results do not depend on the number of workers."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np
from joblib import Parallel, delayed


def task_seeds(root: np.random.SeedSequence, k: int) -> list[np.random.SeedSequence]:
    return root.spawn(k)


def _call(fn, item, ss):
    return fn(item, np.random.default_rng(ss))


def seeded_map(fn: Callable, items: Sequence, root: np.random.SeedSequence, jobs: int = 1) -> list:
    """``[fn(item, rng_i)]`` in item order, where ``rng_i`` comes from the i-th spawned child of ``root``."""
    seeds = task_seeds(root, len(items))
    if jobs <= 1 or len(items) <= 1:
        return [_call(fn, it, ss) for it, ss in zip(items, seeds)]
    return Parallel(n_jobs=jobs)(delayed(_call)(fn, it, ss) for it, ss in zip(items, seeds))

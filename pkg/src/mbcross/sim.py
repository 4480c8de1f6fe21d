"""Exact simulation of a branching process together with its crossing counters.

In population ``i >= 1`` the next event comes after an ``Exp(i * (-b_1))``
holding time and replaces one particle by ``j`` particles with probability
``b_j / (-b_1)``.  An event of size ``j`` in the crossing set bumps counter
``j``.  Population 0 is absorbing.

Replicates advance in lockstep as numpy arrays; replicate ``r`` always draws
from stream ``r`` of the base seed, so results do not depend on batching or on
how many workers share the work.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .law import OffspringLaw, as_crossing_set
from .rng import RandomStream, Xoshiro256

DEFAULT_POPULATION_CAP = 10**7
EXTINCTION_POPULATION_CAP = 1000


class AliasTable:
    """Walker/Vose alias table; one uniform draw per sample."""

    def __init__(self, weights: Sequence[float]):
        w = np.asarray(weights, dtype=float)
        if w.ndim != 1 or len(w) == 0 or (w < 0).any() or w.sum() <= 0:
            raise ValueError("alias weights must be a nonempty nonnegative vector with positive sum")
        n = len(w)
        scaled = w * (n / w.sum())
        prob = np.ones(n)
        alias = np.arange(n)
        small = [i for i in range(n) if scaled[i] < 1.0]
        large = [i for i in range(n) if scaled[i] >= 1.0]
        while small and large:
            s, g = small.pop(), large.pop()
            prob[s] = scaled[s]
            alias[s] = g
            scaled[g] = (scaled[g] + scaled[s]) - 1.0
            (small if scaled[g] < 1.0 else large).append(g)
        # leftovers are 1 up to rounding
        self.prob = prob
        self.alias = alias
        self.n = n

    def sample(self, u: np.ndarray) -> np.ndarray:
        x = u * self.n
        col = np.minimum(x.astype(np.int64), self.n - 1)
        frac = x - col
        return np.where(frac < self.prob[col], col, self.alias[col])

    def probabilities(self) -> np.ndarray:
        """Distribution encoded by the table (for checking)."""
        p = self.prob / self.n
        out = p.copy()
        np.add.at(out, self.alias, (1.0 - self.prob) / self.n)
        return out


@dataclass(frozen=True)
class PathRecord:
    events: tuple[tuple[float, int], ...]
    final_population: int
    crossings: tuple[int, ...]
    absorbed: bool
    horizon: float
    aborted: bool = False


@dataclass
class EmpiricalTable:
    """Counts of ``(population, *crossings)`` at time ``t`` over replicates.

    Replicates stopped by the population cap are left out of ``counts`` and
    tallied in ``aborted``, so ``sum(counts) + aborted == replicates``.
    """

    counts: dict[tuple[int, ...], int]
    replicates: int
    base_seed: int
    i0: int
    t: float
    crossing_set: tuple[int, ...] = ()
    aborted: int = 0
    absorbed: int = 0

    def marginal(self) -> dict[tuple[int, ...], int]:
        out: dict[tuple[int, ...], int] = {}
        for key, c in self.counts.items():
            out[key[1:]] = out.get(key[1:], 0) + c
        return out

    def population(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for key, c in self.counts.items():
            out[key[0]] = out.get(key[0], 0) + c
        return out

    @property
    def completed(self) -> int:
        return self.replicates - self.aborted

    def pgf(self, v: Sequence[float]) -> tuple[float, float]:
        """Empirical ``E[v^Y]`` over completed replicates with its standard error."""
        v = np.asarray(v, dtype=float)
        vals, weights = [], []
        for k, c in self.marginal().items():
            vals.append(float(np.prod(v ** np.asarray(k))) if len(k) else 1.0)
            weights.append(c)
        vals, weights = np.asarray(vals), np.asarray(weights, dtype=float)
        n = weights.sum()
        mean = float((vals * weights).sum() / n)
        var = float((weights * (vals - mean) ** 2).sum() / max(n - 1, 1))
        return mean, math.sqrt(var / n)

    def __eq__(self, other) -> bool:
        if not isinstance(other, EmpiricalTable):
            return NotImplemented
        return (self.counts == other.counts and self.replicates == other.replicates
                and self.base_seed == other.base_seed and self.i0 == other.i0
                and self.t == other.t and self.crossing_set == other.crossing_set
                and self.aborted == other.aborted and self.absorbed == other.absorbed)


@dataclass
class _BatchResult:
    population: np.ndarray
    crossings: np.ndarray
    absorbed: np.ndarray
    aborted: np.ndarray
    events: list | None = field(default=None)


class _Sampler:
    def __init__(self, law: OffspringLaw, N):
        self.sizes = np.array([j for j, _ in law.rates], dtype=np.int64)
        self.alias = AliasTable([b for _, b in law.rates])
        self.rate = law.total_rate
        slot = {k: i for i, k in enumerate(N.members)}
        self.slot = np.array([slot.get(int(j), -1) for j in self.sizes], dtype=np.int64)


def _run_batch(sampler: _Sampler, n_slots: int, i0: int, horizon: float, base_seed: int,
               ids: np.ndarray, population_cap: int, record: bool = False) -> _BatchResult:
    n = len(ids)
    pop_out = np.full(n, i0, dtype=np.int64)
    cross_out = np.zeros((n, n_slots), dtype=np.int64)
    absorbed = np.full(n, i0 == 0)
    aborted = np.zeros(n, dtype=bool)
    events = [[] for _ in range(n)] if record else None
    if i0 == 0 or n == 0:
        return _BatchResult(pop_out, cross_out, absorbed, aborted, events)

    rows = np.arange(n)
    gen = Xoshiro256(base_seed, ids)
    pop = pop_out.copy()
    cross = cross_out.copy()
    clock = np.zeros(n)
    while len(rows):
        u_time = gen.uniform()
        u_size = gen.uniform()
        clock = clock + (-np.log(1.0 - u_time)) / (pop * sampler.rate)
        fired = clock <= horizon
        pick = sampler.alias.sample(u_size)
        size = sampler.sizes[pick]
        slot = sampler.slot[pick]
        pop = np.where(fired, pop + size - 1, pop)
        hit = fired & (slot >= 0)
        if hit.any():
            cross[hit, slot[hit]] += 1
        if record:
            for r, tm, sz in zip(rows[fired], clock[fired], size[fired]):
                events[r].append((float(tm), int(sz)))
        dead = fired & (pop == 0)
        capped = fired & (pop > population_cap)
        done = ~fired | dead | capped
        if done.any():
            finished = rows[done]
            pop_out[finished] = pop[done]
            cross_out[finished] = cross[done]
            absorbed[finished] = dead[done]
            aborted[finished] = capped[done]
            keep = ~done
            rows, pop, cross, clock = rows[keep], pop[keep], cross[keep], clock[keep]
            gen.keep(keep)
    return _BatchResult(pop_out, cross_out, absorbed, aborted, events)


def _check_inputs(i0: int, horizon: float) -> None:
    if i0 < 0:
        raise ValueError("initial population must be nonnegative")
    if not (horizon >= 0 and math.isfinite(horizon)):
        raise ValueError("horizon must be finite and nonnegative")


def simulate_path(law: OffspringLaw, N, i0: int, horizon: float, stream: RandomStream,
                  population_cap: int = DEFAULT_POPULATION_CAP) -> PathRecord:
    """One trajectory on ``[0, horizon]`` drawn from ``stream``."""
    N = as_crossing_set(N, law)
    _check_inputs(i0, horizon)
    res = _run_batch(_Sampler(law, N), len(N), i0, horizon, stream.base_seed,
                     np.array([stream.index], dtype=np.uint64), population_cap, record=True)
    return PathRecord(tuple(res.events[0]), int(res.population[0]),
                      tuple(int(c) for c in res.crossings[0]), bool(res.absorbed[0]),
                      float(horizon), bool(res.aborted[0]))


def _chunks(reps: int, parts: int) -> list[np.ndarray]:
    parts = max(1, min(parts, reps))
    bounds = np.linspace(0, reps, parts + 1).astype(np.int64)
    return [np.arange(a, b, dtype=np.uint64) for a, b in zip(bounds[:-1], bounds[1:])]


def _run_replicates(law, N, i0, t, reps, base_seed, parallelism, population_cap, block=1 << 16):
    if reps < 1:
        raise ValueError("reps must be at least 1")
    _check_inputs(i0, t)
    sampler = _Sampler(law, N)
    chunks = [c for part in _chunks(reps, parallelism)
              for c in np.array_split(part, max(1, -(-len(part) // block)))]

    def work(ids):
        return _run_batch(sampler, len(N), i0, t, base_seed, ids, population_cap)

    if parallelism > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            results = list(pool.map(work, chunks))
    else:
        results = [work(c) for c in chunks]
    return _BatchResult(np.concatenate([r.population for r in results]),
                        np.concatenate([r.crossings for r in results]),
                        np.concatenate([r.absorbed for r in results]),
                        np.concatenate([r.aborted for r in results]))


def monte_carlo(law: OffspringLaw, N, i0: int, t: float, reps: int, base_seed: int,
                parallelism: int = 1, population_cap: int = DEFAULT_POPULATION_CAP) -> EmpiricalTable:
    """Tabulate ``(X(t), Y(t))`` over ``reps`` replicates started from ``i0``."""
    N = as_crossing_set(N, law)
    res = _run_replicates(law, N, i0, t, reps, base_seed, parallelism, population_cap)
    ok = ~res.aborted
    keys = np.column_stack([res.population[ok], res.crossings[ok]])
    uniq, cnt = np.unique(keys, axis=0, return_counts=True)
    counts = {tuple(int(x) for x in row): int(c) for row, c in zip(uniq, cnt)}
    return EmpiricalTable(counts, reps, base_seed, i0, float(t), N.members,
                          aborted=int(res.aborted.sum()), absorbed=int(res.absorbed.sum()))


def estimate_extinction(law: OffspringLaw, i0: int, reps: int, horizon: float, base_seed: int,
                        population_cap: int = EXTINCTION_POPULATION_CAP,
                        parallelism: int = 1) -> tuple[float, float]:
    """Fraction of replicates absorbed by ``horizon``, with its binomial standard error.

    Paths whose population exceeds ``population_cap`` are stopped and counted
    as surviving; this biases the estimate down by at most the extinction
    probability from ``population_cap`` particles, ``rho**population_cap``.
    A horizon of ``50 / |b_1|`` or more is advisable.
    """
    res = _run_replicates(law, as_crossing_set(()), i0, horizon, reps, base_seed,
                          parallelism, population_cap)
    est = float(res.absorbed.mean())
    return est, math.sqrt(est * (1.0 - est) / reps)

"""Independent checks: uniformization of the truncated chain and Monte Carlo reports."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Mapping

import numpy as np
from scipy import sparse
from scipy.stats import poisson

from .law import OffspringLaw, as_crossing_set
from .series import CoeffTable, Truncation
from .sim import EmpiricalTable

POISSON_TAIL = 1e-12
Z_THRESHOLD = 4.0
MIN_EXPECTED = 10.0


def uniformization_dist(law: OffspringLaw, N, i0: int, t: float, Jmax: int, K: int,
                        ) -> tuple[CoeffTable, float]:
    """Transient law of ``(X(t), Y(t))`` on ``{j <= Jmax, |k| <= K}`` by uniformization.

    Transitions leaving the lattice go to an absorbing outside state, so
    each retained entry is a lower bound on the true probability and
    ``leaked_mass`` is the probability of having left by time ``t``.  The
    Poisson series is cut where its tail drops below 1e-12.
    """
    N = as_crossing_set(N, law)
    if i0 < 0 or Jmax < i0:
        raise ValueError(f"need 0 <= i0 <= Jmax, got i0={i0}, Jmax={Jmax}")
    if not (t >= 0 and math.isfinite(t)):
        raise ValueError("t must be finite and nonnegative")
    n = len(N)
    trunc = Truncation(K, Jmax)
    start = (i0,) + (0,) * n
    lam = Jmax * law.total_rate
    if t == 0.0 or lam == 0.0:
        return CoeffTable({start: 1.0}, n, trunc), 0.0

    states = [s for s in product(range(Jmax + 1), *(range(K + 1),) * n) if sum(s[1:]) <= K]
    index = {s: i for i, s in enumerate(states)}
    outside = len(states)
    rows, cols, vals = [outside], [outside], [1.0]
    slot = {k: i for i, k in enumerate(N.members)}
    for s, i in index.items():
        j = s[0]
        rows.append(i)
        cols.append(i)
        vals.append(1.0 - j * law.total_rate / lam)
        if j == 0:
            continue
        for size, b in law.rates:
            k = list(s[1:])
            if size in slot:
                k[slot[size]] += 1
            target = (j + size - 1,) + tuple(k)
            rows.append(i)
            cols.append(index.get(target, outside))
            vals.append(j * b / lam)
    # column-vector form: pi_{n+1} = P^T pi_n; duplicate outside entries are summed
    size = len(states) + 1
    PT = sparse.csr_matrix((vals, (cols, rows)), shape=(size, size))

    mu = lam * t
    n_hi = int(poisson.isf(POISSON_TAIL, mu)) + 1
    weights = poisson.pmf(np.arange(n_hi + 1), mu)
    pi = np.zeros(size)
    pi[index[start]] = 1.0
    acc = weights[0] * pi
    for w in weights[1:]:
        pi = PT @ pi
        acc += w * pi
    table = CoeffTable({s: acc[i] for i, s in enumerate(states)}, n, trunc)
    return table, float(acc[outside])


def _check_distribution(d: Mapping) -> None:
    for key, value in d.items():
        if value < 0:
            raise ValueError(f"negative probability {value!r} at {key}")


def total_variation(a: Mapping, b: Mapping) -> float:
    """TV distance; missing mass of a sub-normalized table counts as disjoint."""
    _check_distribution(a)
    _check_distribution(b)
    keys = set(a) | set(b)
    diff = sum(abs(a.get(k, 0.0) - b.get(k, 0.0)) for k in keys)
    gap = abs(sum(a.values()) - sum(b.values()))
    return min(1.0, 0.5 * diff + 0.5 * gap)


@dataclass
class Cell:
    key: tuple | str
    observed: int
    expected: float
    z: float


@dataclass
class ZReport:
    cells: list[Cell]
    max_abs_z: float
    tv: float
    threshold: float
    replicates: int
    passed: bool
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "max_abs_z": self.max_abs_z,
            "tv": self.tv,
            "threshold": self.threshold,
            "replicates": self.replicates,
            "cells": [{"key": list(c.key) if isinstance(c.key, tuple) else c.key,
                       "observed": c.observed, "expected": c.expected, "z": c.z}
                      for c in self.cells],
            "notes": self.notes,
        }

    def render(self) -> str:
        lines = [f"{'cell':>16} {'observed':>10} {'expected':>12} {'z':>8}"]
        for c in self.cells:
            key = ",".join(map(str, c.key)) if isinstance(c.key, tuple) else c.key
            lines.append(f"{key:>16} {c.observed:>10d} {c.expected:>12.2f} {c.z:>8.3f}")
        verdict = "PASS" if self.passed else "FAIL"
        lines.append(f"max|z| = {self.max_abs_z:.3f} (threshold {self.threshold})  "
                     f"TV = {self.tv:.3g}  replicates = {self.replicates}  {verdict}")
        lines.extend(f"note: {n}" for n in self.notes)
        return "\n".join(lines)


def _z(observed: float, n: int, p: float) -> float:
    var = n * p * (1.0 - p)
    if var <= 0.0:
        return 0.0 if abs(observed - n * p) < 0.5 else math.inf
    return (observed - n * p) / math.sqrt(var)


def mc_z_report(empirical: EmpiricalTable, analytic: CoeffTable, threshold: float = Z_THRESHOLD,
                min_expected: float = MIN_EXPECTED) -> ZReport:
    """Per-cell binomial z-scores of Monte Carlo counts against analytic probabilities.

    Cells expected to hold fewer than ``min_expected`` replicates, together
    with any mass outside the analytic table, are pooled into one tail cell.
    """
    observed = empirical.counts if analytic.joint else empirical.marginal()
    n = sum(observed.values())
    if n == 0:
        raise ValueError("empirical table is empty")
    cells: list[Cell] = []
    seen_obs, seen_p = 0, 0.0
    for key in sorted(analytic):
        p = max(analytic[key], 0.0)
        if n * p >= min_expected:
            o = observed.get(key, 0)
            cells.append(Cell(key, o, n * p, _z(o, n, p)))
            seen_obs += o
            seen_p += p
    pool_p = min(max(1.0 - seen_p, 0.0), 1.0)
    pool_o = n - seen_obs
    cells.append(Cell("pooled", pool_o, n * pool_p, _z(pool_o, n, pool_p)))
    max_z = max(abs(c.z) for c in cells)
    freq = {k: c / n for k, c in observed.items()}
    tv = total_variation(freq, {k: max(x, 0.0) for k, x in analytic.items()})
    notes = []
    if empirical.aborted:
        notes.append(f"{empirical.aborted} replicates hit the population cap and were excluded")
    return ZReport(cells, max_z, tv, threshold, n, bool(max_z < threshold), notes)


def expected_tv(analytic: Mapping, n: int, n_boot: int = 200, seed: int = 0) -> float:
    """Mean TV between a size-``n`` multinomial sample of ``analytic`` and ``analytic`` itself."""
    keys = list(analytic)
    p = np.array([max(analytic[k], 0.0) for k in keys])
    rest = max(0.0, 1.0 - p.sum())
    probs = np.append(p, rest)
    probs /= probs.sum()
    rng = np.random.default_rng(seed)
    draws = rng.multinomial(n, probs, size=n_boot) / n
    return float(0.5 * np.abs(draws - probs).sum(axis=1).mean())

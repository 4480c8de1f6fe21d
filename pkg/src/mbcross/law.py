"""Offspring laws of Markov branching processes and their generating functions.

A law is the finite family of event rates ``b_j`` (``j != 1``): a particle is
replaced by ``j`` particles at rate ``b_j``.  The diagonal rate
``b_1 = -sum(b_j)`` is always recomputed from the others.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

DEFAULT_MAX_SUPPORT = 64


class LawError(ValueError):
    """Invalid offspring law or crossing set."""


@dataclass(frozen=True)
class OffspringLaw:
    """Finite-support branching generator ``B(u) = sum_j b_j u^j``.

    ``rates`` holds the off-diagonal rates as sorted ``(j, b_j)`` pairs with
    ``j != 1``; zero rates are dropped at construction.
    """

    rates: tuple[tuple[int, float], ...]

    @property
    def b1(self) -> float:
        return -float(sum(b for _, b in self.rates))

    @property
    def max_offspring(self) -> int:
        return max(j for j, _ in self.rates)

    @property
    def total_rate(self) -> float:
        """Per-particle event rate ``-b_1``."""
        return -self.b1

    def rate(self, j: int) -> float:
        if j == 1:
            return self.b1
        return dict(self.rates).get(j, 0.0)

    def coefficients(self) -> np.ndarray:
        """Dense ascending coefficients of ``B``, including the ``b_1`` term."""
        c = np.zeros(max(self.max_offspring, 1) + 1)
        for j, b in self.rates:
            c[j] = b
        c[1] = self.b1
        return c

    def as_dict(self) -> dict[int, float]:
        return dict(self.rates)


def _offspring_size(key) -> int:
    if isinstance(key, str):
        key = key.strip()
        if not key.lstrip("-").isdigit():
            raise LawError(f"offspring size {key!r} is not an integer")
        return int(key)
    if isinstance(key, bool) or int(key) != key:
        raise LawError(f"offspring size {key!r} is not an integer")
    return int(key)


def make_law(rates: Mapping[int, float], max_support: int = DEFAULT_MAX_SUPPORT) -> OffspringLaw:
    """Validate a rate table ``{j: b_j}`` and build the law."""
    clean: dict[int, float] = {}
    for key, value in rates.items():
        j = _offspring_size(key)
        if j < 0:
            raise LawError(f"offspring size {j} is negative")
        if j == 1:
            raise LawError("offspring size 1 carries no event; b_1 is derived from the other rates")
        if j > max_support:
            raise LawError(f"offspring size {j} exceeds max_support={max_support}")
        b = float(value)
        if not np.isfinite(b) or b < 0:
            raise LawError(f"rate b_{j}={value!r} must be finite and nonnegative")
        if b > 0:
            clean[j] = clean.get(j, 0.0) + b
    if not clean:
        raise LawError("law needs at least one positive rate")
    return OffspringLaw(tuple(sorted(clean.items())))


@dataclass(frozen=True)
class CrossingSet:
    """Tracked offspring sizes, sorted ascending, never containing 1."""

    members: tuple[int, ...] = field(default=())

    def __post_init__(self):
        m = self.members
        if any(k == 1 for k in m):
            raise LawError("crossing set may not contain 1")
        if any(k < 0 for k in m):
            raise LawError("crossing set members must be nonnegative")
        if list(m) != sorted(set(m)):
            raise LawError("crossing set members must be distinct and ascending")

    @property
    def size(self) -> int:
        return len(self.members)

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def index(self, k: int) -> int:
        return self.members.index(k)

    def check_against(self, law: OffspringLaw) -> None:
        for k in self.members:
            if law.rate(k) <= 0:
                raise LawError(f"crossing set member {k} has zero rate in the law")


def make_crossing_set(members: Iterable[int], law: OffspringLaw | None = None) -> CrossingSet:
    cs = CrossingSet(tuple(sorted(int(k) for k in members)))
    if len(set(cs.members)) != len(cs.members):
        raise LawError("crossing set members must be distinct")
    if law is not None:
        cs.check_against(law)
    return cs


def as_crossing_set(N, law: OffspringLaw | None = None) -> CrossingSet:
    if isinstance(N, CrossingSet):
        if law is not None:
            N.check_against(law)
        return N
    return make_crossing_set(N, law)


def _check_unit(name: str, x: float) -> None:
    if not (0.0 <= x <= 1.0):
        raise ValueError(f"{name}={x!r} outside [0, 1]")


def B_eval(law: OffspringLaw, u: float) -> float:
    """Evaluate ``B(u)`` on ``[0, 1]``."""
    _check_unit("u", u)
    return float(np.polynomial.polynomial.polyval(u, law.coefficients()))


def phi_coefficients(law: OffspringLaw, N: CrossingSet, v: Sequence[float]) -> np.ndarray:
    """Ascending coefficients of ``u -> B(u) - sum_{k in N} b_k (1 - v_k) u^k``."""
    if len(v) != len(N):
        raise ValueError(f"v has {len(v)} entries but the crossing set has {len(N)}")
    c = law.coefficients()
    for k, vk in zip(N.members, v):
        _check_unit(f"v[{k}]", vk)
        c[k] = law.rate(k) * vk
    return c


def phi_eval(law: OffspringLaw, N, u: float, v: Sequence[float]) -> float:
    """Evaluate the weighted generator ``Bbar_N(u) + B_N(u, v)``."""
    N = as_crossing_set(N)
    _check_unit("u", u)
    return float(np.polynomial.polynomial.polyval(u, phi_coefficients(law, N, v)))


def complement_coefficients(law: OffspringLaw, N: CrossingSet) -> np.ndarray:
    """Coefficients of ``Bbar_N``: ``B`` with every tracked size removed."""
    return phi_coefficients(law, N, [0.0] * len(N))

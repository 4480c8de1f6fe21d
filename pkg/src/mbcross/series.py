"""Sparse multi-index coefficient tables and their truncated convolution algebra.

Tables come in two forms.  A *marginal* table is keyed by multi-indices
``k = (k_1, ..., k_N)``; a *joint* table is keyed by ``(j, k_1, ..., k_N)``
where ``j`` is a population size.  Every table records the lattice
``{j <= jmax, |k| <= K}`` on which it is complete.  Internally the algebra
runs on dense ``numpy`` boxes; only the keyed view is part of the contract.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from types import MappingProxyType
from typing import Iterator, Mapping

import numpy as np
from scipy import signal

NUMERICAL_SLACK = 1e-12


class MultiIndex(tuple):
    """Tuple of nonnegative counts, one per crossing-set member."""

    def __new__(cls, counts=()):
        counts = tuple(int(c) for c in counts)
        if any(c < 0 for c in counts):
            raise ValueError(f"multi-index counts must be nonnegative, got {counts}")
        return super().__new__(cls, counts)

    @classmethod
    def zero(cls, n: int) -> "MultiIndex":
        return cls((0,) * n)

    @classmethod
    def unit(cls, n: int, i: int) -> "MultiIndex":
        return cls(tuple(int(m == i) for m in range(n)))

    @property
    def order(self) -> int:
        return sum(self)

    def plus(self, i: int) -> "MultiIndex":
        c = list(self)
        c[i] += 1
        return MultiIndex(c)

    def minus(self, i: int) -> "MultiIndex":
        if self[i] == 0:
            raise ValueError(f"cannot subtract e_{i} from {tuple(self)}")
        c = list(self)
        c[i] -= 1
        return MultiIndex(c)


@dataclass(frozen=True)
class Truncation:
    """Completeness lattice ``{j <= jmax, |k| <= K}``; ``jmax`` is None for marginal tables."""

    K: int
    jmax: int | None = None

    def __post_init__(self):
        if self.K < 0 or (self.jmax is not None and self.jmax < 0):
            raise ValueError(f"truncation bounds must be nonnegative: {self}")

    @property
    def joint(self) -> bool:
        return self.jmax is not None

    def contains(self, key: tuple) -> bool:
        if self.joint:
            return 0 <= key[0] <= self.jmax and sum(key[1:]) <= self.K
        return sum(key) <= self.K

    def box_shape(self, n_vars: int) -> tuple[int, ...]:
        shape = (self.K + 1,) * n_vars
        return ((self.jmax + 1,) + shape) if self.joint else shape


class CoeffTable(Mapping):
    """Read-only sparse table of nonnegative coefficients.

    Missing keys inside the truncation lattice are exact zeros.
    """

    def __init__(self, entries: Mapping, n_vars: int, truncation: Truncation,
                 slack: float = NUMERICAL_SLACK):
        width = n_vars + (1 if truncation.joint else 0)
        clean = {}
        for key, value in entries.items():
            key = tuple(int(x) for x in key)
            if len(key) != width or any(x < 0 for x in key):
                raise ValueError(f"bad table index {key} for {width} coordinates")
            if not truncation.contains(key):
                raise ValueError(f"index {key} lies outside truncation {truncation}")
            value = float(value)
            if value < -slack:
                raise ValueError(f"coefficient at {key} is {value!r} < -{slack}")
            clean[key] = value
        self._entries = MappingProxyType(clean)
        self.n_vars = n_vars
        self.truncation = truncation

    @property
    def joint(self) -> bool:
        return self.truncation.joint

    def __getitem__(self, key):
        key = tuple(key)
        if key in self._entries:
            return self._entries[key]
        if self.truncation.contains(key):
            return 0.0
        raise KeyError(key)

    def __iter__(self) -> Iterator[tuple]:
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, key) -> bool:
        return tuple(key) in self._entries

    def __repr__(self) -> str:
        form = "joint" if self.joint else "marginal"
        return f"CoeffTable({form}, n_vars={self.n_vars}, {self.truncation}, {len(self)} entries)"

    def total(self) -> float:
        return float(sum(self._entries.values()))

    def same_values(self, other: "CoeffTable") -> bool:
        return (self.truncation == other.truncation and self.n_vars == other.n_vars
                and dict(self._entries) == dict(other._entries))

    def to_dense(self) -> np.ndarray:
        arr = np.zeros(self.truncation.box_shape(self.n_vars))
        for key, value in self._entries.items():
            arr[key] = value
        return arr

    @classmethod
    def from_dense(cls, arr: np.ndarray, truncation: Truncation,
                   slack: float = NUMERICAL_SLACK) -> "CoeffTable":
        """Keep every box cell that lies inside ``truncation`` (zeros included)."""
        n_vars = arr.ndim - (1 if truncation.joint else 0)
        entries = {}
        for key in product(*(range(min(s, b)) for s, b in
                             zip(arr.shape, truncation.box_shape(n_vars)))):
            if truncation.contains(key):
                entries[key] = arr[key]
        return cls(entries, n_vars, truncation, slack=slack)

    def marginalize_population(self) -> "CoeffTable":
        """Sum a joint table over the population coordinate."""
        if not self.joint:
            raise ValueError("table is already marginal")
        out: dict[tuple, float] = {}
        for key, value in self._entries.items():
            out[key[1:]] = out.get(key[1:], 0.0) + value
        return CoeffTable(out, self.n_vars, Truncation(self.truncation.K))

    def evaluate(self, v, u: float | None = None) -> float:
        """Evaluate the truncated generating function at ``v`` (and ``u`` for joint tables)."""
        v = np.asarray(v, dtype=float)
        acc = 0.0
        for key, value in self._entries.items():
            k = key[1:] if self.joint else key
            term = value * float(np.prod(v ** np.asarray(k))) if len(k) else value
            if self.joint:
                term *= u ** key[0]
            acc += term
        return acc


def delta_table(n_vars: int, truncation: Truncation, population: int = 1) -> CoeffTable:
    """Unit mass at index zero (at population ``population`` for joint tables)."""
    key = ((population,) if truncation.joint else ()) + (0,) * n_vars
    return CoeffTable({key: 1.0}, n_vars, truncation)


# -- dense kernels ---------------------------------------------------------

def truncated_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Cauchy product of two equally shaped boxes, cropped back to the box.

    One axis is convolved directly.  Boxes with two or more axes go through
    the FFT, which adds absolute roundoff near 1e-16 times the largest entry.
    """
    if a.ndim == 0:
        return a * b
    if a.ndim == 1:
        return np.convolve(a, b)[: a.shape[0]]
    full = signal.fftconvolve(a, b)
    return full[tuple(slice(0, s) for s in a.shape)]


def dense_powers(g: np.ndarray, imax: int) -> list[np.ndarray]:
    """Truncated convolution powers ``g^{*0}, ..., g^{*imax}`` built incrementally."""
    one = np.zeros_like(g)
    one[(0,) * g.ndim] = 1.0
    powers = [one]
    for _ in range(imax):
        powers.append(truncated_product(powers[-1], g))
    return powers


# -- keyed operations ------------------------------------------------------

def _check_compatible(a: CoeffTable, b: CoeffTable) -> None:
    if a.joint != b.joint:
        raise ValueError("cannot convolve a marginal table with a joint table")
    if a.n_vars != b.n_vars:
        raise ValueError(f"tables index {a.n_vars} and {b.n_vars} crossing coordinates")


def _boxed(a: CoeffTable, trunc: Truncation) -> np.ndarray:
    arr = np.zeros(trunc.box_shape(a.n_vars))
    for key, value in a.items():
        if all(x < s for x, s in zip(key, arr.shape)):
            arr[key] = value
    return arr


def convolve(a: CoeffTable, b: CoeffTable, trunc: Truncation | None = None) -> CoeffTable:
    """``(a * b)_l = sum_{m + n = l} a_m b_n`` restricted to ``trunc``.

    Entries of the result are exact only where both inputs are complete,
    so ``trunc`` defaults to the tighter of the two input truncations.
    """
    _check_compatible(a, b)
    if trunc is None:
        jmax = None if not a.joint else min(a.truncation.jmax, b.truncation.jmax)
        trunc = Truncation(min(a.truncation.K, b.truncation.K), jmax)
    if trunc.joint != a.joint:
        raise ValueError("truncation form does not match the tables")
    out = truncated_product(_boxed(a, trunc), _boxed(b, trunc))
    return CoeffTable.from_dense(out, trunc)


def convolve_powers(a: CoeffTable, imax: int, trunc: Truncation | None = None) -> list[CoeffTable]:
    """All powers ``a^{*0}, ..., a^{*imax}`` in one incremental pass."""
    if imax < 0:
        raise ValueError("power must be nonnegative")
    trunc = trunc or a.truncation
    if trunc.joint != a.joint:
        raise ValueError("truncation form does not match the table")
    powers = dense_powers(_boxed(a, trunc), imax)
    return [CoeffTable.from_dense(p, trunc) for p in powers]


def convolve_power(a: CoeffTable, i: int, trunc: Truncation | None = None) -> CoeffTable:
    return convolve_powers(a, i, trunc)[i]

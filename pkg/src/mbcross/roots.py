"""Minimal nonnegative roots of branching generators and their Taylor tables."""
from __future__ import annotations

import logging
import math
from typing import NamedTuple, Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from .law import OffspringLaw, as_crossing_set, complement_coefficients, phi_coefficients
from .series import CoeffTable, Truncation, dense_powers

log = logging.getLogger(__name__)

ROOT_TOL = 1e-12
DEGRADED_TOL = 1e-8


class RootResult(NamedTuple):
    value: float
    degraded: bool
    iterations: int


class RootError(ArithmeticError):
    pass


def leftmost_root(coeffs: np.ndarray, tol: float = ROOT_TOL, max_iter: int = 200) -> RootResult:
    """Smallest root in ``[0, 1]`` of a polynomial that is convex there.

    Requires ``f(0) >= 0 >= f(1)`` and nonnegative coefficients of degree 0 and
    >= 2.  Newton's method started at 0 climbs monotonically to the leftmost
    root.  When the slope at the stopping point is nearly flat the root is
    (close to) double; it is then located as the minimiser of ``f`` by
    bisecting ``f'``, and the result is flagged as degraded.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    dcoeffs = P.polyder(coeffs)
    scale = float(np.abs(coeffs).sum())
    noise = 64 * np.finfo(float).eps * scale

    def f(u):
        return float(P.polyval(u, coeffs))

    def df(u):
        return float(P.polyval(u, dcoeffs))

    if f(0.0) <= 0.0:
        return RootResult(0.0, False, 0)

    u, it = 0.0, 0
    newton_ok = False
    while it < max_iter:
        it += 1
        fu, du = f(u), df(u)
        if fu <= 0.0:
            newton_ok = True
            break
        if du >= 0.0:
            break
        step = -fu / du
        if u + step > 1.0:
            break
        u += step
        if step <= tol:
            newton_ok = True
            break

    if newton_ok and abs(df(u)) > math.sqrt(tol) * scale:
        return RootResult(min(u, 1.0), False, it)

    # near-double root or a Newton failure: locate the minimiser of f on [u, 1]
    lo, hi = u, 1.0
    if df(hi) <= 0.0:
        umin = hi
    else:
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if df(mid) < 0.0:
                lo = mid
            else:
                hi = mid
            it += 1
        umin = 0.5 * (lo + hi)
    if f(umin) >= -noise:
        return RootResult(umin, True, it)
    # genuine crossing left of the minimiser
    lo, hi = u, umin
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0.0:
            lo = mid
        else:
            hi = mid
        it += 1
    return RootResult(0.5 * (lo + hi), True, it)


def _root(coeffs, tol) -> float:
    res = leftmost_root(coeffs, tol)
    if res.degraded:
        log.debug("near-double root at %.16g; accuracy ~%g", res.value, DEGRADED_TOL)
    return res.value


def rho_plain(law: OffspringLaw, tol: float = ROOT_TOL) -> float:
    """Extinction probability from one particle: minimal root of ``B`` on [0, 1]."""
    return _root(law.coefficients(), tol)


def rho_weighted(law: OffspringLaw, N, v: Sequence[float], tol: float = ROOT_TOL) -> float:
    """Minimal nonnegative root of ``u -> Bbar_N(u) + B_N(u, v)``."""
    N = as_crossing_set(N, law)
    return _root(phi_coefficients(law, N, v), tol)


def rho_taylor(law: OffspringLaw, N, K: int, tol: float = ROOT_TOL) -> CoeffTable:
    """Taylor coefficients ``rho_k`` of ``v -> rho(v)`` for ``|k| <= K``.

    Order by order: with every coefficient of order ``< n`` known and those
    of order ``n`` held at zero, the coefficient at ``l + e_i`` of the identity
    ``Bbar_N(rho(v)) + B_N(rho(v), v) = 0`` is linear in ``rho_{l+e_i}``
    with slope ``Bbar_N'(rho_0)``.
    """
    if K < 0:
        raise ValueError("K must be nonnegative")
    N = as_crossing_set(N, law)
    n = len(N)
    cbar = complement_coefficients(law, N)
    rho0 = _root(cbar, tol)
    slope = float(P.polyval(rho0, P.polyder(cbar)))
    if slope >= 0.0:
        raise RootError(
            f"Bbar_N'(rho_0) = {slope:.3g} >= 0 at rho_0 = {rho0:.12g}; "
            "the Taylor recursion is singular for this law and crossing set")

    trunc = Truncation(K)
    rho = np.zeros(trunc.box_shape(n))
    rho[(0,) * n] = rho0
    if n == 0 or K == 0:
        return CoeffTable.from_dense(rho, trunc)

    M = law.max_offspring
    untracked = [(j, b) for j, b in enumerate(cbar) if j != 1 and b > 0]
    tracked = [(N.index(k), law.rate(k), k) for k in N]
    order = sum(np.ix_(*(np.arange(K + 1),) * n))
    for m in range(1, K + 1):
        powers = dense_powers(rho, M)
        acc = np.zeros_like(rho)
        for j, b in untracked:
            acc += b * powers[j]
        for axis, b, k in tracked:
            shifted = np.zeros_like(rho)
            src = [slice(None)] * n
            dst = [slice(None)] * n
            src[axis] = slice(0, K)
            dst[axis] = slice(1, K + 1)
            shifted[tuple(dst)] = powers[k][tuple(src)]
            acc += b * shifted
        level = order == m
        rho[level] = -acc[level] / slope
    return CoeffTable.from_dense(rho, trunc)

"""Analytic oracles for the two solvable death-count models.

* birth-death: ``b_0 = p b``, ``b_2 = q b``;
* cubic: ``b_0 = p b``, ``b_3 = q b``.

In both, ``Y(t)`` counts deaths.  Time-``t`` coefficients come from the
first-order linear equation for ``g_n`` with its explicit integrating factor;
the integrals are evaluated by Chebyshev (Clenshaw-Curtis type) cumulative
quadrature on shared nodes, refined until two node counts agree.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import chebyshev as C

QUAD_TOL = 1e-10


class QuadratureError(ArithmeticError):
    pass


def _check_params(p, q, b=1.0, t=0.0):
    if not 0 < p < 1:
        raise ValueError(f"p={p!r} must lie in (0, 1)")
    if abs(p + q - 1) > 1e-12:
        raise ValueError(f"p + q must equal 1, got {p} + {q}")
    if not b > 0:
        raise ValueError(f"b={b!r} must be positive")
    if not t >= 0:
        raise ValueError(f"t={t!r} must be nonnegative")


def bd_roots(p: float, q: float, v: float) -> tuple[float, float]:
    """Roots ``alpha >= beta`` of ``p v - y + q y^2``."""
    disc = math.sqrt(max(1.0 - 4.0 * p * q * v, 0.0))
    return (1.0 + disc) / (2.0 * q), (1.0 - disc) / (2.0 * q)


def bd_pgf(p: float, q: float, b: float, t: float, u: float, v: float) -> float:
    """``G(t, u, v)`` for the birth-death law (death counts)."""
    _check_params(p, q, b, t)
    for name, x in (("u", u), ("v", v)):
        if not 0.0 <= x <= 1.0:
            raise ValueError(f"{name}={x!r} outside [0, 1]")
    if t == 0.0:
        return float(u)
    alpha, beta = bd_roots(p, q, v)
    if u == beta or u == alpha:
        return float(u)
    if alpha - beta < 1e-15:
        d = u - alpha
        return alpha + d / (1.0 - d * b * q * t)
    expo = (alpha - beta) * b * q * t
    ratio = (alpha - u) / (beta - u)
    if expo > 700.0:
        return beta
    return beta + (alpha - beta) / (1.0 - ratio * math.exp(expo))


def _cheb_nodes(n: int) -> np.ndarray:
    return np.cos(np.pi * (np.arange(n) + 0.5) / n)[::-1]


def _linear_recursion(t: float, nmax: int, g0: Callable, log_if: Callable,
                      forcing: Callable, nodes: int) -> list[float]:
    """Solve ``g_n = I(t) int_0^t F_n / I`` order by order on Chebyshev nodes."""
    x = _cheb_nodes(nodes)
    s = 0.5 * t * (x + 1.0)
    li = log_if(s)
    li_end = float(log_if(np.array([t]))[0])
    gs = [g0(s)]
    out = [float(g0(np.array([t]))[0])]
    for n in range(1, nmax + 1):
        f = forcing(n, gs) * np.exp(-li)
        coef = C.chebint(C.chebfit(x, f, nodes - 1), lbnd=-1)
        gs.append(np.exp(li) * 0.5 * t * C.chebval(x, coef))
        out.append(math.exp(li_end) * 0.5 * t * float(C.chebval(1.0, coef)))
    return out


def _refined(compute: Callable[[int], list[float]], tol: float = QUAD_TOL) -> list[float]:
    prev = compute(48)
    for nodes in (96, 192, 384):
        cur = compute(nodes)
        if max(abs(a - c) for a, c in zip(prev, cur)) < tol:
            return cur
        prev = cur
    raise QuadratureError("Chebyshev quadrature did not settle below tolerance")


def bd_death_coeffs(p: float, q: float, b: float, t: float, nmax: int) -> list[float]:
    """``P(Y(t) = n)`` for ``n <= nmax`` in the birth-death model."""
    _check_params(p, q, b, t)
    if t == 0.0:
        return [1.0] + [0.0] * nmax

    def g0(s):
        return 1.0 / (q + p * np.exp(b * s))

    def log_if(s):
        return b * s - 2.0 * np.log(q + p * np.exp(b * s))

    def forcing(n, gs):
        f = b * q * sum(gs[k] * gs[n - k] for k in range(1, n))
        return f + (b * p if n == 1 else 0.0)

    return _refined(lambda nodes: _linear_recursion(t, nmax, g0, log_if, forcing, nodes))


def cubic_death_coeffs(p: float, q: float, b: float, t: float, nmax: int) -> list[float]:
    """``P(Y(t) = n)`` for ``n <= nmax`` in the cubic model."""
    _check_params(p, q, b, t)
    if t == 0.0:
        return [1.0] + [0.0] * nmax

    def g0(s):
        return (q + p * np.exp(2.0 * b * s)) ** -0.5

    def log_if(s):
        return 2.0 * b * s - 1.5 * np.log(q + p * np.exp(2.0 * b * s))

    def forcing(n, gs):
        # compositions of n into three parts, every part strictly below n
        def sq(m):
            return sum(gs[i] * gs[m - i] for i in range(max(0, m - n + 1), min(m, n - 1) + 1))

        f = b * q * sum(gs[k] * sq(n - k) for k in range(n))
        return f + (b * p if n == 1 else 0.0)

    return _refined(lambda nodes: _linear_recursion(t, nmax, g0, log_if, forcing, nodes))


def _double_factorial_odd(m: int) -> int:
    out = 1
    for i in range(3, m + 1, 2):
        out *= i
    return out


def bd_extinction_series(p, q, nmax: int) -> list:
    """Coefficients of ``rho(v) = (1 - sqrt(1 - 4pqv)) / (2q)``, indices ``0..nmax``.

    Term ``n >= 2`` is ``p (2n-3)!! 2^{n-1} (pq)^{n-1} / n!``; exact integer
    arithmetic up to ``n = 150``, log-gamma evaluation beyond.  ``Fraction``
    inputs give exact rationals in the exact range.
    """
    _check_params(p, q)
    out = [0 * p, p]
    for n in range(2, nmax + 1):
        if n <= 150:
            num = _double_factorial_odd(2 * n - 3) * 2 ** (n - 1)
            frac = Fraction(num, math.factorial(n))
            if isinstance(p, Fraction):
                out.append(p * frac * (p * q) ** (n - 1))
            else:
                out.append(p * float(frac) * (p * q) ** (n - 1))
        else:
            # (2n-3)!! = (2n-2)! / (2^{n-1} (n-1)!)
            log_term = (math.lgamma(2 * n - 1) - math.lgamma(n) - math.lgamma(n + 1)
                        + (n - 1) * math.log(float(p) * float(q)) + math.log(float(p)))
            out.append(math.exp(log_term))
    return out[: nmax + 1]


def cubic_extinction_series(p, q, nmax: int) -> list:
    """Coefficients of ``rho(v)`` in the cubic model: the root of ``p v - y + q y^3``.

    ``g_0 = 0``, ``g_1 = p``, ``g_n = q [g^3]_n``; works for ``Fraction`` inputs.
    """
    _check_params(p, q)
    zero = 0 * p
    g = [zero, p]
    sq = [zero, zero]  # sq[m] = [g^2]_m
    for n in range(2, nmax + 1):
        m = len(sq)
        if m < n:
            sq.append(sum((g[i] * g[m - i] for i in range(1, m)), zero))
        g.append(q * sum((g[k] * sq[n - k] for k in range(1, n)), zero))
    return g[: nmax + 1]


def pgf_from_coeffs(coeffs: Sequence[float], v: float) -> float:
    return float(sum(c * v ** n for n, c in enumerate(coeffs)))

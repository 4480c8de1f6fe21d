"""Crossing-count distributions from the generating-function ODE.

``G(t, u, v)`` solves ``dy/dt = Bbar_N(y) + B_N(y, v)`` with ``y(0) = u``.
Its Taylor coefficients in ``v`` (and ``u``) are the transition
probabilities of the process augmented with crossing counters.  Every
coefficient depends only on coefficients that are componentwise no larger,
so the coefficient ODE restricted to any downward-closed lattice is closed:
truncation costs nothing beyond the integrator's own error.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.polynomial import chebyshev as C
from numpy.polynomial import polynomial as P
from scipy.integrate import solve_ivp

from .law import OffspringLaw, as_crossing_set, complement_coefficients, phi_coefficients
from .roots import rho_plain, rho_taylor
from .series import CoeffTable, Truncation, delta_table, dense_powers


class IntegrationError(RuntimeError):
    def __init__(self, message: str, t_reached: float):
        super().__init__(f"{message} (reached t={t_reached:.6g})")
        self.t_reached = t_reached


@dataclass(frozen=True)
class OdeSettings:
    """Tolerances for the embedded Runge-Kutta 4(5) (Dormand-Prince) integrator."""

    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_step: float = np.inf
    method: str = "RK45"

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0 and self.max_step > 0):
            raise ValueError(f"ODE tolerances and max_step must be positive: {self}")


DEFAULT_SETTINGS = OdeSettings()


def _integrate(rhs, y0: np.ndarray, t: float, settings: OdeSettings) -> np.ndarray:
    sol = solve_ivp(rhs, (0.0, t), y0, method=settings.method, rtol=settings.rel_tol,
                    atol=settings.abs_tol, max_step=settings.max_step, t_eval=None)
    if sol.status != 0:
        raise IntegrationError(f"integration failed: {sol.message}", float(sol.t[-1]))
    return sol.y[:, -1]


def _check_time(t: float) -> None:
    if not (np.isfinite(t) and t >= 0):
        raise ValueError(f"time t={t!r} must be finite and nonnegative")


def solve_G(law: OffspringLaw, N, t: float, u: float, v: Sequence[float],
            settings: OdeSettings = DEFAULT_SETTINGS) -> float:
    """``G(t, u, v)``, clamped to [0, 1]."""
    N = as_crossing_set(N, law)
    _check_time(t)
    if not 0.0 <= u <= 1.0:
        raise ValueError(f"u={u!r} outside [0, 1]")
    c = phi_coefficients(law, N, v)
    if t == 0.0:
        return float(u)

    def rhs(_, y):
        return [P.polyval(y[0], c)]

    y = _integrate(rhs, np.array([float(u)]), t, settings)[0]
    return float(min(max(y, 0.0), 1.0))


def pgf_from_state_i(law: OffspringLaw, N, t: float, v: Sequence[float], i: int,
                     settings: OdeSettings = DEFAULT_SETTINGS) -> float:
    """``E[v^Y(t) | X(0) = i] = G(t, 1, v)^i``."""
    if i < 0:
        raise ValueError("initial population must be nonnegative")
    if i == 0:
        return 1.0
    return solve_G(law, N, t, 1.0, v, settings) ** i


def _coefficient_rhs(law: OffspringLaw, N, shape: tuple[int, ...], k_axis0: int):
    """Right-hand side of the coefficient system on a dense box.

    ``g' = sum_{i notin N} b_i g^{*i} + sum_{i in N} b_i shift_i(g^{*i})`` where
    ``shift_i`` moves the tracked coordinate of ``i`` up by one.
    """
    cbar = complement_coefficients(law, N)
    untracked = [(j, b) for j, b in enumerate(cbar) if b != 0.0]
    tracked = [(k_axis0 + N.index(k), law.rate(k), k) for k in N]
    M = max(law.max_offspring, 1)  # b_1 term needs g^{*1}
    ndim = len(shape)

    def rhs(_, y):
        g = y.reshape(shape)
        powers = dense_powers(g, M)
        out = np.zeros(shape)
        for j, b in untracked:
            out += b * powers[j]
        for axis, b, k in tracked:
            src = [slice(None)] * ndim
            dst = [slice(None)] * ndim
            src[axis] = slice(0, shape[axis] - 1)
            dst[axis] = slice(1, shape[axis])
            out[tuple(dst)] += b * powers[k][tuple(src)]
        return out.ravel()

    return rhs


def marginal_coeffs(law: OffspringLaw, N, t: float, K: int,
                    settings: OdeSettings = DEFAULT_SETTINGS) -> CoeffTable:
    """``g_k(t) = P(Y(t) = k | X(0) = 1)`` for ``|k| <= K``."""
    N = as_crossing_set(N, law)
    _check_time(t)
    if K < 0:
        raise ValueError("K must be nonnegative")
    trunc = Truncation(K)
    if t == 0.0:
        return delta_table(len(N), trunc)
    shape = trunc.box_shape(len(N))
    g0 = np.zeros(shape)
    g0[(0,) * len(N)] = 1.0
    y = _integrate(_coefficient_rhs(law, N, shape, 0), g0.ravel(), t, settings)
    return CoeffTable.from_dense(y.reshape(shape), trunc, slack=1e-8)


def joint_coeffs(law: OffspringLaw, N, t: float, Jmax: int, K: int,
                 settings: OdeSettings = DEFAULT_SETTINGS) -> CoeffTable:
    """``g_{j,k}(t) = P(X(t) = j, Y(t) = k | X(0) = 1)`` for ``j <= Jmax, |k| <= K``."""
    N = as_crossing_set(N, law)
    _check_time(t)
    if K < 0 or Jmax < 0:
        raise ValueError("K and Jmax must be nonnegative")
    trunc = Truncation(K, Jmax)
    if t == 0.0:
        if Jmax == 0:
            return CoeffTable({}, len(N), trunc)
        return delta_table(len(N), trunc, population=1)
    shape = trunc.box_shape(len(N))
    g0 = np.zeros(shape)
    if Jmax >= 1:
        g0[(1,) + (0,) * len(N)] = 1.0
    y = _integrate(_coefficient_rhs(law, N, shape, 1), g0.ravel(), t, settings)
    return CoeffTable.from_dense(y.reshape(shape), trunc, slack=1e-8)


def extinction_conditioned_coeffs(law: OffspringLaw, N, K: int) -> CoeffTable:
    """Law of the total crossing counts given extinction: coefficients ``rho_k / rho``."""
    rho = rho_plain(law)
    if rho <= 0.0:
        raise ValueError("extinction is impossible (b_0 = 0); conditioning on it is degenerate")
    table = rho_taylor(law, N, K)
    return CoeffTable({k: x / rho for k, x in table.items()}, table.n_vars, table.truncation)


def marginal_coeffs_integral(law: OffspringLaw, N, t: float, K: int, nodes: int = 96,
                             settings: OdeSettings = DEFAULT_SETTINGS) -> CoeffTable:
    """Cross-check route through the first-order linear equations for ``g_k``.

    Each ``g_k`` (``k != 0``) solves ``g_k' = Bbar_N'(g_0) g_k + F_k`` where
    ``F_k`` collects every convolution term not involving ``g_k`` itself.
    This is integrated order by order with the integrating factor
    ``exp(int Bbar_N'(g_0))`` and Chebyshev spectral quadrature on shared
    nodes, rather than dividing by ``Bbar_N(g_0)``, which can vanish.
    """
    N = as_crossing_set(N, law)
    _check_time(t)
    n = len(N)
    trunc = Truncation(K)
    if t == 0.0 or n == 0:
        return marginal_coeffs(law, N, t, K, settings)
    cbar = complement_coefficients(law, N)
    dbar = P.polyder(cbar)
    x = np.cos(np.pi * (np.arange(nodes) + 0.5) / nodes)[::-1]
    s = 0.5 * t * (x + 1.0)

    sol = solve_ivp(lambda _, y: [P.polyval(y[0], cbar)], (0.0, t), [1.0], method="DOP853",
                    rtol=1e-13, atol=1e-15, dense_output=True)
    g0 = sol.sol(s)[0]

    def cumint(f):
        coef = C.chebint(C.chebfit(x, f, nodes - 1), lbnd=-1)
        return 0.5 * t * C.chebval(x, coef), 0.5 * t * C.chebval(1.0, coef)

    log_if, log_if_end = cumint(P.polyval(g0, dbar))
    shape = trunc.box_shape(n)
    g = np.zeros(shape + (nodes,))
    g[(0,) * n] = g0
    end = np.zeros(shape)
    end[(0,) * n] = sol.sol(t)[0]
    order = sum(np.ix_(*(np.arange(K + 1),) * n))
    rhs = _coefficient_rhs(law, N, shape, 0)
    for m in range(1, K + 1):
        level = order == m
        F = np.stack([rhs(None, g[..., i].ravel()).reshape(shape) for i in range(nodes)], axis=-1)
        for idx in zip(*np.nonzero(level)):
            inner, total = cumint(F[idx] * np.exp(-log_if))
            g[idx] = np.exp(log_if) * inner
            end[idx] = np.exp(log_if_end) * total
    return CoeffTable.from_dense(end, trunc, slack=1e-8)

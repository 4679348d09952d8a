"""Exact Dyson map for the unstable quartic oscillator in its harmonic form.

The non-Hermitian Hamiltonian is

    H(t) = p^2 - p/2 + (i/2){x, p^2} + g(t) (x - i)^2,

and the map is ``eta = exp(gamma1 x) exp(gamma2 p^3 + i gamma3 p^2 + i gamma4 p)``
with

    gamma1 = g'/(6g),  gamma2 = 1/(6g),
    gamma3 = (12 g^3 + g'^2 - g g'') / (4 g' g^2),
    gamma4 = (g/g') (c1 - log(g)/2),

valid when ``g = sigma^-3 / 2`` with quadratic ``sigma``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import expm

from .coefficient_functions import CoeffFn, TimeGrid, power_sigma
from .errors import ConditioningError, ConfigError, DomainError
from .operator_algebra import MatrixRep
from .verification import ResidualReport
from .weyl import WeylPoly

EXPONENT_CEILING = 40.0


def _times(grid) -> np.ndarray:
    return grid.points if isinstance(grid, TimeGrid) else np.atleast_1d(np.asarray(grid, dtype=float))


# ---------------------------------------------------------------------------
# coupling function
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SigmaClass:
    """``sigma(t) = c1 + c2 t + c3 t^2`` defining ``g = sigma^-3 / 2``."""

    c1: float
    c2: float
    c3: float

    @property
    def is_constant(self) -> bool:
        return self.c2 == 0.0 and self.c3 == 0.0

    def sigma(self, t):
        t = np.asarray(t, dtype=float)
        return self.c1 + self.c2 * t + self.c3 * t * t

    def g(self) -> CoeffFn:
        return power_sigma(self.c1, self.c2, self.c3, power=-3, scale=0.5)

    def check_window(self, t) -> None:
        """Raise :class:`DomainError` where ``sigma <= 0``."""
        s = np.atleast_1d(self.sigma(t))
        bad = np.flatnonzero(s <= 0)
        if bad.size:
            tt = np.atleast_1d(np.asarray(t, dtype=float))
            raise DomainError("sigma must be positive", float(tt[bad[0]]))


def _as_g(source) -> CoeffFn:
    return source.g() if isinstance(source, SigmaClass) else source


def g_derivatives(source, t) -> tuple[np.ndarray, ...]:
    """``(g, g', g'', g''')`` at ``t`` for a :class:`SigmaClass` or a CoeffFn."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if isinstance(source, SigmaClass):
        source.check_window(t)
    g = _as_g(source)
    out = tuple(np.asarray(g.deriv(t, k), dtype=float) * np.ones_like(t) for k in range(4))
    if np.any(out[0] <= 0):
        raise DomainError("g must be positive", float(t[np.argmax(out[0] <= 0)]))
    return out


def g_from_sigma(sc: SigmaClass, t) -> np.ndarray:
    """``g = sigma^-3 / 2``; derivatives via :func:`g_derivatives`."""
    return g_derivatives(sc, t)[0]


def g_ode_residual(source, t) -> np.ndarray:
    """``-14 g'^3/(9 g^2) + 2 g' g''/g - g'''/2`` (zero on the sigma class)."""
    g, g1, g2, g3 = g_derivatives(source, t)
    return -14 * g1 ** 3 / (9 * g ** 2) + 2 * g1 * g2 / g - g3 / 2


def g_ode_residual_printed(source, t) -> np.ndarray:
    """The same combination with the ``+14 g'^3/(9 g^2)`` sign."""
    g, g1, g2, g3 = g_derivatives(source, t)
    return 14 * g1 ** 3 / (9 * g ** 2) + 2 * g1 * g2 / g - g3 / 2


# ---------------------------------------------------------------------------
# gammas
# ---------------------------------------------------------------------------

@dataclass
class QuarticGammas:
    """Samples of the four map coefficients."""

    t: np.ndarray
    gamma1: np.ndarray
    gamma2: np.ndarray
    gamma3: np.ndarray
    gamma4: np.ndarray
    c1: float
    g: CoeffFn

    def stacked(self) -> np.ndarray:
        return np.array([self.gamma1, self.gamma2, self.gamma3, self.gamma4])


def _gamma_array(source, t, c1: float) -> np.ndarray:
    t = np.atleast_1d(np.asarray(t, dtype=float))
    g, g1, g2, _ = g_derivatives(source, t)
    zero = np.flatnonzero(np.abs(g1) < 1e-14)
    if zero.size:
        raise DomainError("g' vanishes", float(t[zero[0]]))
    cross = np.flatnonzero(np.sign(g1[:-1]) != np.sign(g1[1:]))
    if cross.size:
        raise DomainError("g' changes sign", float(t[cross[0] + 1]))
    return np.array([g1 / (6 * g), 1 / (6 * g),
                     (12 * g ** 3 + g1 ** 2 - g * g2) / (4 * g1 * g ** 2),
                     (g / g1) * (c1 - np.log(g) / 2)])


def quartic_gammas(source, c1: float, grid) -> QuarticGammas:
    """Sample ``gamma1..gamma4`` on a grid.

    Raises
    ------
    DomainError
        If ``g' = 0`` at a sample or changes sign between samples.
    """
    t = _times(grid)
    G = _gamma_array(source, t, c1)
    return QuarticGammas(t, *G, c1=float(c1), g=_as_g(source))


# ---------------------------------------------------------------------------
# order-by-order relations
# ---------------------------------------------------------------------------

@dataclass
class RecursionReport:
    """Max absolute residual of each order relation and where it occurs."""

    residuals: dict
    worst_t: dict
    tol: float

    @property
    def passed(self) -> bool:
        return all(v < self.tol for v in self.residuals.values())

    def failures(self) -> list[str]:
        return [k for k, v in self.residuals.items() if not v < self.tol]


def recursion_relations(source, t, c1: float = 0.0, c_all: float = 1.0) -> dict:
    """Pointwise residuals of the order relations, keyed by relation name.

    ``gamma3_split``: final gamma3 = 1/(2 gamma1^(1)) + gamma3^(2).
    ``gamma1_order1``: final gamma1 = g'/(6g).
    ``gamma2_order1``: final gamma2 = 1/(6g).
    ``gamma1_order2``: -2 (gamma1^(1))^2 gamma3^(1) with gamma3^(1) = 0.
    ``gamma1_order3``: the order-three expression with the printed gamma3^(2).
    ``gamma4_order0``: gamma4' + gamma4 (g''/g' - g'/g) + 1/2.
    ``gamma4_all_orders``: -gamma4 g'^2/(3g^2) + g' gamma4'/(3g) + gamma4 g''/(3g)
    for gamma4 = c_all g/g'.
    ``g_ode``: the coupling equation.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    g, g1, g2, g3 = g_derivatives(source, t)
    G = _gamma_array(source, t, c1)
    ga1 = g1 / (6 * g)
    ga3_0 = 1 / (2 * ga1)
    ga3_1 = np.zeros_like(t)
    ga3_2 = (g1 ** 2 - g * g2) / (4 * g ** 2 * g1)
    ga1_2 = -2 * ga1 ** 2 * ga3_1
    ga1_3 = (-ga3_2 * g1 ** 2 / (18 * g ** 2) + g1 ** 3 / (72 * g ** 4)
             + ga3_1 ** 2 * g1 ** 3 / (54 * g ** 3) - g1 * g2 / (72 * g ** 3))
    # gamma4^(0) = (g/g')(c1 - log g / 2); d/dt (g/g') = 1 - g g''/g'^2
    L = c1 - np.log(g) / 2
    ga4 = (g / g1) * L
    ga4_dot = (1 - g * g2 / g1 ** 2) * L - 0.5
    gn = c_all * g / g1
    gn_dot = c_all * (1 - g * g2 / g1 ** 2)
    return {
        "gamma3_split": G[2] - ga3_0 - ga3_2,
        "gamma1_order1": G[0] - ga1,
        "gamma2_order1": G[1] - 1 / (6 * g),
        "gamma1_order2": ga1_2,
        "gamma1_order3": ga1_3,
        "gamma4_order0": ga4_dot + ga4 * (g2 / g1 - g1 / g) + 0.5,
        "gamma4_all_orders": -gn * g1 ** 2 / (3 * g ** 2) + g1 * gn_dot / (3 * g) + gn * g2 / (3 * g),
        "g_ode": g_ode_residual(source, t),
    }


def recursion_constraints_check(source, grid, tol: float = 1e-8, c1: float = 0.0) -> RecursionReport:
    """Evaluate every order relation on a grid against ``tol``."""
    t = _times(grid)
    rel = recursion_relations(source, t, c1)
    res, worst = {}, {}
    for k, v in rel.items():
        a = np.abs(v)
        i = int(np.argmax(a))
        res[k] = float(a[i])
        worst[k] = float(t[i])
    return RecursionReport(res, worst, tol)


def gamma4_order0_fd(source, t, c1: float = 0.0, step: float = 1e-4) -> np.ndarray:
    """``gamma4' + gamma4 (g''/g' - g'/g)`` with ``gamma4'`` by central difference."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    g, g1, g2, _ = g_derivatives(source, t)
    gp = _gamma_array(source, t + step, c1)[3]
    gm = _gamma_array(source, t - step, c1)[3]
    g4 = _gamma_array(source, t, c1)[3]
    return (gp - gm) / (2 * step) + g4 * (g2 / g1 - g1 / g)


# ---------------------------------------------------------------------------
# Weyl-algebra construction
# ---------------------------------------------------------------------------

def hamiltonian_weyl(g: float) -> WeylPoly:
    """``p^2 - p/2 + (i/2){x, p^2} + g (x - i)^2``."""
    x, p = WeylPoly.x(), WeylPoly.p()
    return p * p - 0.5 * p + 0.5j * x.anticommutator(p * p) + g * (x - 1j) ** 2


def dyson_h_weyl(g: float, gam, gam_dot) -> WeylPoly:
    """``eta H eta^-1 + i eta_dot eta^-1`` computed exactly in the Weyl algebra.

    ``exp(F(p)) x exp(-F(p)) = x - i F'(p)`` and
    ``exp(gamma1 x) p exp(-gamma1 x) = p + i gamma1``.
    """
    g1, g2, g3, g4 = gam
    d1, d2, d3, d4 = gam_dot
    x, p = WeylPoly.x(), WeylPoly.p()
    P = p + 1j * g1
    X = x - 1j * (3 * g2 * P * P + 2j * g3 * P + 1j * g4)
    conj = hamiltonian_weyl(g).substitute(X, P)
    Fdot = d2 * P ** 3 + 1j * d3 * P * P + 1j * d4 * P
    return conj + 1j * (d1 * x + Fdot)


def leading_order_gammas(source, t, c1: float = 0.0) -> np.ndarray:
    """``(gamma1^(1), gamma2^(1), gamma3^(0), gamma4^(0))`` at ``t``, shape ``(4, nt)``."""
    g, g1, _, _ = g_derivatives(source, t)
    return np.array([g1 / (6 * g), 1 / (6 * g), 3 * g / g1, (g / g1) * (c1 - np.log(g) / 2)])


def first_order_residual(g: float, gam) -> WeylPoly:
    """Anti-Hermitian order-one part of the scaled expansion.

    ``i[(1/2 - 3 g gamma2){X, p^2} + (4 g gamma1 gamma3 - 2 g) X]`` with
    ``X = x + 2 gamma3 p + gamma4``, where ``gam`` holds the leading-order
    components of :func:`leading_order_gammas`.  Zero when ``gamma2 = 1/(6g)``
    and ``gamma3 = 1/(2 gamma1)``.
    """
    g1, g2, g3, g4 = (float(v) for v in np.asarray(gam, dtype=float).reshape(4))
    x, p = WeylPoly.x(), WeylPoly.p()
    X = x + 2 * g3 * p + g4
    return 1j * ((0.5 - 3 * g * g2) * X.anticommutator(p * p) + (4 * g * g1 * g3 - 2 * g) * X)


def first_order_printed(g: float, gam) -> WeylPoly:
    """``2 i h3 + sum (gamma + gamma^dagger)[q, h2]`` with slots ``x, p^3, p^2, p``.

    Only the real slots ``x`` and ``p^3`` contribute.
    """
    g1, g2, _, _ = (float(v) for v in np.asarray(gam, dtype=float).reshape(4))
    x, p = WeylPoly.x(), WeylPoly.p()
    h2 = g * x * x
    h3 = 0.5 * x.anticommutator(p * p) - 2 * g * x
    return 2j * h3 + 2 * g1 * x.commutator(h2) + 2 * g2 * (p ** 3).commutator(h2)


# ---------------------------------------------------------------------------
# matrix-level verification
# ---------------------------------------------------------------------------

def hamiltonian_matrix(g: float, rep: MatrixRep) -> np.ndarray:
    """``H`` from the representation's ``p^2``, ``p``, ``{x, p^2}`` and ``x``."""
    x, p, p2, xp2, I = (np.asarray(rep[k]) for k in ("x", "p", "p2", "xp2", "I"))
    return p2 - 0.5 * p + 0.5j * xp2 + g * (x @ x - 2j * x - I)


def _interior_herm(M: np.ndarray, idx: np.ndarray) -> float:
    Mi = M[np.ix_(idx, idx)]
    return float(np.linalg.norm(Mi - Mi.conj().T) / np.linalg.norm(Mi))


def exponent_norm(gam, rep: MatrixRep) -> float:
    """``|gamma2| max|p|^3 + |gamma1| max|x|``: growth of the map's exponents."""
    w = np.linalg.eigvalsh(np.asarray(rep["p"]))
    return float(abs(gam[1]) * np.abs(w).max() ** 3 + abs(gam[0]) * np.abs(w).max())


def _eta_direct(gam, rep: MatrixRep) -> np.ndarray:
    x, p = np.asarray(rep["x"]), np.asarray(rep["p"])
    w, V = np.linalg.eigh(p)
    F = gam[1] * w ** 3 + 1j * gam[2] * w ** 2 + 1j * gam[3] * w
    return expm(gam[0] * x) @ (V * np.exp(F)) @ V.conj().T


def quartic_tdde_residual(source, c1: float, rep: MatrixRep, grid, fd_step: float = 1e-4,
                          method: str = "weyl", ceiling: float = EXPONENT_CEILING,
                          gamma_fn: Callable | None = None) -> ResidualReport:
    """Hermiticity residual of ``h`` on the interior of a one-mode representation.

    Parameters
    ----------
    source : SigmaClass or CoeffFn
        Coupling ``g``.
    method : {'weyl', 'direct'}
        ``'weyl'`` conjugates exactly in the Weyl algebra and represents ``h``
        on the Fock basis; ``'direct'`` uses truncated matrix exponentials and
        refuses exponent norms above ``ceiling``.
    gamma_fn : callable, optional
        ``t_array -> (4, nt)`` replacement for the gammas (defect injection).

    Raises
    ------
    ConditioningError
        ``'direct'`` only, when the exponent norm exceeds ``ceiling``.
    """
    if rep.mode_count != 1:
        raise ConfigError("quartic verification needs a one-mode representation")
    if method not in ("weyl", "direct"):
        raise ConfigError(f"unknown method {method!r}")
    t = _times(grid)
    gfun = gamma_fn or (lambda tt: _gamma_array(source, tt, c1))
    gvals = g_derivatives(source, t)[0]
    idx = rep.interior_indices()
    herm = []
    for tv, gv in zip(t, gvals):
        G = np.asarray(gfun(np.array([tv - fd_step, tv, tv + fd_step])), dtype=float)
        gam, gdot = G[:, 1], (G[:, 2] - G[:, 0]) / (2 * fd_step)
        if method == "weyl":
            h = dyson_h_weyl(float(gv), gam, gdot).to_matrix(rep.dim)
        else:
            en = max(exponent_norm(G[:, k], rep) for k in range(3))
            if en > ceiling:
                raise ConditioningError(
                    f"exponent norm {en:.3g} above ceiling {ceiling:g} (|gamma2 p^3| dominates)", en)
            etas = [_eta_direct(G[:, k], rep) for k in range(3)]
            e_inv = np.linalg.inv(etas[1])
            H = hamiltonian_matrix(float(gv), rep)
            h = etas[1] @ H @ e_inv + 1j * (etas[2] - etas[0]) / (2 * fd_step) @ e_inv
        herm.append(_interior_herm(h, idx))
    nan = np.full(t.size, np.nan)
    return ResidualReport(t, np.array(herm), nan.copy(), nan.copy(), label=f"quartic-{method}")

"""Order-by-order perturbative construction of Dyson maps.

Two regimes are covered.

* Time independent: ``H = h0 + i eps h1`` with ``eta = exp(q/2)``, ``q`` odd in
  ``eps``.  Each order is a commutator equation ``[h0, q_k] = r_k`` solved in the
  eigenbasis of ``h0``.
* Time dependent: the coupled-oscillator chains for the slot choices
  ``(K4, K3)`` (Hermitian map, orders 1..5) and ``(K4, i K1)`` (non-Hermitian map,
  orders 0..3 for the second slot), integrated with fixed-step RK4.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .coefficient_functions import CoeffFn, TimeGrid
from .errors import ConfigError, IntegrationError, SingularConfigurationError, UnsatisfiableError

MAX_ORDER = 5


# ---------------------------------------------------------------------------
# time-independent scheme
# ---------------------------------------------------------------------------

def _comm(a, b):
    return a @ b - b @ a


def solve_commutator_equation(h0: np.ndarray, rhs: np.ndarray, degeneracy_tol: float = 1e-10,
                              obstruction_tol: float = 1e-10) -> np.ndarray:
    """Solve ``[h0, X] = rhs`` for ``X`` with zero component on degenerate pairs.

    Raises
    ------
    UnsatisfiableError
        If ``rhs`` has a component on a pair of (numerically) equal eigenvalues.
    """
    h0 = np.asarray(h0, dtype=complex)
    E, V = np.linalg.eigh(h0)
    r = V.conj().T @ np.asarray(rhs, dtype=complex) @ V
    gap = E[:, None] - E[None, :]
    degenerate = np.abs(gap) <= degeneracy_tol * max(1.0, np.abs(E).max())
    scale = max(1.0, np.abs(r).max())
    if np.any(np.abs(r[degenerate]) > obstruction_tol * scale):
        a, b = np.argwhere(degenerate & (np.abs(r) > obstruction_tol * scale))[0]
        raise UnsatisfiableError(
            f"right-hand side couples degenerate levels {a},{b} (E={E[a]:.6g}); "
            "no solution commutes away this component")
    x = np.zeros_like(r)
    x[~degenerate] = r[~degenerate] / gap[~degenerate]
    return V @ x @ V.conj().T


def solve_time_independent_first_order(h0: np.ndarray, h1: np.ndarray, **kw) -> np.ndarray:
    """Hermitian ``q1`` with ``[h0, q1] = 2 i h1``.

    In the eigenbasis of ``h0``: ``(q1)_ab = 2i (h1)_ab / (E_a - E_b)``, zero on
    degenerate pairs.
    """
    return solve_commutator_equation(h0, 2j * np.asarray(h1, dtype=complex), **kw)


def solve_time_independent(h0: np.ndarray, h1: np.ndarray, **kw) -> dict[int, np.ndarray]:
    """Odd-order generators ``q1, q3, q5`` of ``eta = exp(q/2)``.

    Even orders are set to zero (the freedom of adding terms commuting with ``h0``).

    Returns
    -------
    dict
        ``{1: q1, 3: q3, 5: q5}``.
    """
    h1 = np.asarray(h1, dtype=complex)
    q1 = solve_time_independent_first_order(h0, h1, **kw)
    c11 = _comm(q1, h1)
    r3 = 1j / 6.0 * _comm(q1, c11)
    q3 = solve_commutator_equation(h0, r3, **kw)
    r5 = 1j / 6.0 * (_comm(q1, _comm(q3, h1)) + _comm(q3, c11)
                     - _comm(q1, _comm(q1, _comm(q1, c11))) / 60.0)
    q5 = solve_commutator_equation(h0, r5, **kw)
    return {1: q1, 3: q3, 5: q5}


# ---------------------------------------------------------------------------
# time-dependent chains
# ---------------------------------------------------------------------------

def chain_rhs_hermitian_K4K3(state, t: float, c: float, lam: float, order: int = 5) -> np.ndarray:
    """Right-hand side of the ``(K4, K3)`` chain up to ``order``.

    ``state = [g1_1..g1_order, g2_1..g2_order]`` where ``gi_l`` is the order-``l``
    coefficient of slot ``i``.
    """
    if not 1 <= order <= MAX_ORDER:
        raise ConfigError(f"chain order must be in 1..{MAX_ORDER}, got {order}")
    y = np.zeros(2 * MAX_ORDER)
    s = np.asarray(state, dtype=float)
    y[:order] = s[:order]
    y[MAX_ORDER:MAX_ORDER + order] = s[order:2 * order]
    a1, a2, a3, a4, a5 = y[:5]
    b1, b2, b3, b4, b5 = y[5:]
    d1 = c * np.array([
        b1,
        b2,
        b1 ** 3 / 6 + b3,
        b1 ** 2 * b2 / 2 + b4,
        b1 ** 5 / 120 + b1 * b2 ** 2 / 2 + b1 ** 2 * b3 / 2 + b5,
    ])
    d2 = np.array([
        -c * a1 - lam,
        -c * a2,
        c * (a1 ** 3 / 3 - a3 - a1 * b1 ** 2 / 2),
        c * (a1 ** 2 * a2 - a4 - a2 * b1 ** 2 / 2 - a1 * b1 * b2),
        c * (a1 * a2 ** 2 - 2 * a1 ** 5 / 15 + a1 ** 2 * a3 - a5 + a1 ** 3 * b1 ** 2 / 6
             - a1 * b1 ** 4 / 24 - a3 * b1 ** 2 / 2 - a2 * b1 * b2 - a1 * b2 ** 2 / 2
             - a1 * b1 * b3),
    ])
    return np.concatenate([d1[:order], d2[:order]])


def chain_rhs_nonhermitian_K4K1(state, t: float, c: float, lam: float,
                                variant: str = "corrected") -> np.ndarray:
    """Right-hand side of the ``(K4, i K1)`` chain.

    ``state = [g1_1, g1_2, g1_3, g2_0, g2_1, g2_2]``; the second slot stores the
    real function multiplying ``i``.

    Parameters
    ----------
    variant : {'corrected', 'printed'}
        The last equation of the printed chain carries ``g2_1 / 2`` where the
        expansion of the exact constraint gives ``g2_1**2 / 2``.  ``'printed'``
        reproduces the printed term for comparison.

    Raises
    ------
    SingularConfigurationError
        If ``g1_1 == 0`` (it divides every second-slot equation).
    """
    g11, g12, g13, g20, g21, g22 = np.asarray(state, dtype=float)
    if g11 == 0.0:
        raise SingularConfigurationError(f"gamma1^(1) vanishes at t={t}; chain is singular")
    sn, cs = np.sin(g20), np.cos(g20)
    r = g12 / g11
    quad = g21 / 2 if variant == "printed" else g21 ** 2 / 2
    d = np.array([
        lam * sn,
        lam * g21 * cs,
        lam * g22 * cs - 0.5 * lam * g21 ** 2 * sn,
        c + lam * cs / g11,
        -lam / g11 * (r * cs + g21 * sn),
        lam / g11 * ((g11 ** 2 / 3 + r ** 2 - g13 / g11 - quad) * cs + (r * g21 - g22) * sn),
    ])
    return d


CHAIN_LAYOUTS = {
    "K4K3": {"slots": ("K4", "K3"), "reality": ("real", "real"),
             "orders": (range(1, 6), range(1, 6))},
    "K4K1": {"slots": ("K4", "iK1"), "reality": ("real", "imaginary"),
             "orders": (range(1, 4), range(0, 3))},
}


@dataclass
class OdeChain:
    """A perturbative chain ready for integration.

    Attributes
    ----------
    case_id : {'K4K3', 'K4K1'}
    order : int
        Highest order kept (1..5 for ``K4K3``; fixed at 3 for ``K4K1``).
    c, lam : CoeffFn
    y0 : ndarray
        Initial state at ``t0``.
    t0 : float
    variant : str
        Only used by ``K4K1``.
    """

    case_id: str
    order: int
    c: CoeffFn
    lam: CoeffFn
    y0: np.ndarray
    t0: float = 0.0
    variant: str = "corrected"

    def __post_init__(self):
        if self.case_id not in CHAIN_LAYOUTS:
            raise ConfigError(f"unknown chain {self.case_id!r}")
        if self.case_id == "K4K3" and not 1 <= self.order <= MAX_ORDER:
            raise ConfigError(f"order {self.order} unsupported; the chains stop at {MAX_ORDER}")
        if self.case_id == "K4K1" and self.order != 3:
            raise ConfigError("the K4K1 chain is available at order 3 only")
        self.y0 = np.asarray(self.y0, dtype=float)
        if self.y0.shape != (self.size,):
            raise ConfigError(f"initial state must have {self.size} entries")

    @property
    def size(self) -> int:
        return 2 * self.order if self.case_id == "K4K3" else 6

    @property
    def slot_orders(self) -> tuple[list[int], list[int]]:
        if self.case_id == "K4K3":
            return list(range(1, self.order + 1)), list(range(1, self.order + 1))
        return [1, 2, 3], [0, 1, 2]

    def rhs(self, y, t: float) -> np.ndarray:
        c, lam = float(self.c(t)), float(self.lam(t))
        if self.case_id == "K4K3":
            return chain_rhs_hermitian_K4K3(y, t, c, lam, self.order)
        return chain_rhs_nonhermitian_K4K1(y, t, c, lam, self.variant)


def hermitian_chain(c: CoeffFn, lam: CoeffFn, order: int = 5, y0=None, t0: float = 0.0) -> OdeChain:
    """``(K4, K3)`` chain; zero initial conditions by default."""
    y0 = np.zeros(2 * order) if y0 is None else y0
    return OdeChain("K4K3", order, c, lam, y0, t0)


def nonhermitian_chain(c: CoeffFn, lam: CoeffFn, y0, t0: float = 0.0,
                       variant: str = "corrected") -> OdeChain:
    """``(K4, i K1)`` chain; ``y0`` must have ``g1_1 != 0``."""
    return OdeChain("K4K1", 3, c, lam, y0, t0, variant)


@dataclass
class GammaSeries:
    """Sampled perturbative coefficients ``gamma_i^(l)(t)``.

    ``values[slot][l]`` and ``derivs[slot][l]`` are arrays over ``t``; ``derivs``
    are the chain right-hand sides evaluated on the samples.  Slots tagged
    ``'imaginary'`` store the real function multiplying ``i``.
    """

    t: np.ndarray
    max_order: int
    slot_labels: tuple[str, ...]
    reality: tuple[str, ...]
    values: list[dict[int, np.ndarray]]
    derivs: list[dict[int, np.ndarray]]
    case_id: str = ""
    lam: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        for slot in self.values:
            for arr in slot.values():
                if not np.all(np.isfinite(arr)):
                    raise IntegrationError("non-finite sample in gamma series",
                                           float(self.t[~np.isfinite(arr)][0]))

    def __getitem__(self, key: tuple[int, int]) -> np.ndarray:
        slot, order = key
        return self.values[slot][order]

    def derivative(self, slot: int, order: int) -> np.ndarray:
        return self.derivs[slot][order]

    def summed(self, slot: int, eps: float) -> np.ndarray:
        """``sum_l eps**l gamma_slot^(l)(t)``."""
        return sum(eps ** l * v for l, v in self.values[slot].items())

    def with_zeroed(self, slot: int, order: int) -> "GammaSeries":
        """Copy with one coefficient function replaced by zero (defect injection)."""
        vals = [dict(d) for d in self.values]
        vals[slot][order] = np.zeros_like(vals[slot][order])
        return replace(self, values=vals)

    def columns(self) -> tuple[list[str], np.ndarray]:
        """Column names and a ``(len(t), ncol)`` array for CSV output."""
        names, cols = ["t"], [self.t]
        for i, slot in enumerate(self.values):
            for l in sorted(slot):
                names.append(f"gamma{i + 1}_{l}")
                cols.append(slot[l])
        return names, np.column_stack(cols)


def _rk4(f: Callable, y0: np.ndarray, ts: np.ndarray) -> np.ndarray:
    ys = np.empty((len(ts), len(y0)))
    ys[0] = y = np.array(y0, dtype=float)
    for i in range(len(ts) - 1):
        t, h = ts[i], ts[i + 1] - ts[i]
        k1 = f(y, t)
        k2 = f(y + 0.5 * h * k1, t + 0.5 * h)
        k3 = f(y + 0.5 * h * k2, t + 0.5 * h)
        k4 = f(y + h * k3, t + h)
        y = y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise IntegrationError(f"state became non-finite at t={ts[i + 1]:.6g}", float(ts[i + 1]))
        ys[i + 1] = y
    return ys


def rk4(f: Callable, y0, grid: TimeGrid) -> np.ndarray:
    """Classical fixed-step RK4 of ``y' = f(y, t)`` on the grid points."""
    return _rk4(f, np.asarray(y0, dtype=float), grid.points)


def integrate_chain(chain: OdeChain, grid: TimeGrid) -> GammaSeries:
    """Integrate a chain with RK4 at the grid spacing, starting at ``grid.t_start``."""
    if not np.isclose(grid.t_start, chain.t0):
        raise ConfigError("grid must start at the chain's initial time")
    ts = grid.points
    ys = _rk4(chain.rhs, chain.y0, ts)
    ds = np.array([chain.rhs(y, t) for y, t in zip(ys, ts)])
    o1, o2 = chain.slot_orders
    n1 = len(o1)
    values = [{l: ys[:, k] for k, l in enumerate(o1)},
              {l: ys[:, n1 + k] for k, l in enumerate(o2)}]
    derivs = [{l: ds[:, k] for k, l in enumerate(o1)},
              {l: ds[:, n1 + k] for k, l in enumerate(o2)}]
    lay = CHAIN_LAYOUTS[chain.case_id]
    lam = np.asarray(chain.lam(ts), dtype=float) * np.ones(len(ts))
    return GammaSeries(ts, chain.order, lay["slots"], lay["reality"], values, derivs,
                       chain.case_id, lam)


def collapses(series: GammaSeries, tol: float = 1e-12) -> bool:
    """True if only ``gamma2^(1)`` moves, i.e. the chain reduced to one equation."""
    for i, slot in enumerate(series.values):
        for l, v in slot.items():
            if (i, l) == (1, 1):
                continue
            if np.max(np.abs(v - v[0])) > tol:
                return False
    return True


# ---------------------------------------------------------------------------
# truncated power series in eps (coefficient arrays of shape (K+1, nt))
# ---------------------------------------------------------------------------

def series_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    K = a.shape[0]
    out = np.zeros_like(a)
    for k in range(K):
        out[k] = sum(a[j] * b[k - j] for j in range(k + 1))
    return out


def series_exp(a: np.ndarray) -> np.ndarray:
    """``exp`` of a truncated series via ``k E_k = sum_j j A_j E_(k-j)``."""
    K = a.shape[0]
    e = np.zeros_like(a)
    e[0] = np.exp(a[0])
    for k in range(1, K):
        e[k] = sum(j * a[j] * e[k - j] for j in range(1, k + 1)) / k
    return e


def series_div(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    K = a.shape[0]
    q = np.zeros_like(a)
    for k in range(K):
        q[k] = (a[k] - sum(b[j] * q[k - j] for j in range(1, k + 1))) / b[0]
    return q


def series_sinh(a):
    return 0.5 * (series_exp(a) - series_exp(-a))


def series_cosh(a):
    return 0.5 * (series_exp(a) + series_exp(-a))


def series_tanh(a):
    return series_div(series_sinh(a), series_cosh(a))


@dataclass
class MatchReport:
    """Per-order residuals of the closed-form consistency check."""

    per_order: dict[tuple[str, int], float]
    weighted_max: float
    worst_t: float
    worst_order: int
    worst_component: str
    tol: float

    @property
    def passed(self) -> bool:
        return self.weighted_max < self.tol

    @property
    def first_failing_order(self) -> int | None:
        bad = [l for (comp, l), r in self.per_order.items() if r >= self.tol]
        return min(bad) if bad else None


def closed_form_match(series: GammaSeries, eps: float, c: CoeffFn, tol: float = 1e-7,
                      lam: CoeffFn | None = None) -> MatchReport:
    """Check the ``(K4, K3)`` series against the sinh/cosh/tanh closed forms.

    With ``G_i = sum_l eps^l gamma_i^(l)`` the derivatives must satisfy, order by
    order up to ``eps**K``,

        dG1/dt = c [sinh G2],   dG2/dt = -eps lam - c [cosh G2 tanh G1].

    The residual at order ``l`` is weighted by ``eps**l``; the check passes when
    the sum of weighted residuals stays below ``tol`` everywhere.  ``lam``
    defaults to the samples recorded during integration.
    """
    if series.case_id != "K4K3":
        raise ConfigError("closed_form_match applies to the K4K3 chain")
    K = series.max_order
    t = series.t
    nt = len(t)
    if lam is not None:
        lam_s = np.asarray(lam(t), dtype=float) * np.ones(nt)
    elif series.lam is not None:
        lam_s = series.lam
    else:
        raise ConfigError("lambda samples unavailable; pass lam explicitly")
    G1 = np.zeros((K + 1, nt))
    G2 = np.zeros((K + 1, nt))
    for l in range(1, K + 1):
        G1[l] = series.values[0][l]
        G2[l] = series.values[1][l]
    cv = np.asarray(c(t), dtype=float) * np.ones(nt)
    rhs1 = cv * series_sinh(G2)
    rhs2 = -cv * series_mul(series_cosh(G2), series_tanh(G1))
    rhs2[1] -= lam_s
    per_order = {}
    total = np.zeros(nt)
    worst = (0.0, 1, "gamma1")
    for l in range(1, K + 1):
        for comp, rhs, slot in (("gamma1", rhs1, 0), ("gamma2", rhs2, 1)):
            r = np.abs(series.derivs[slot][l] - rhs[l])
            per_order[(comp, l)] = float(r.max())
            w = eps ** l * r
            total += w
            if w.max() > worst[0]:
                worst = (float(w.max()), l, comp)
    i = int(np.argmax(total))
    return MatchReport(per_order, float(total.max()), float(t[i]), worst[1], worst[2], tol)

"""Exact Dyson maps for the coupled oscillators.

Every map is an ordered product ``eta = exp(g1 Q1) exp(g2 Q2) [exp(g3 Q3)]``
whose coefficients are parameterised by an auxiliary function ``chi``.  All
auxiliary equations become autonomous in the accumulated coupling

    s(t) = int_{t0}^{t} lambda(t') dt'

(``mu`` instead of ``lambda`` for the maps with a Hermitian ``K4`` coupling):

    chi_ss = F(chi),   chi_dot = lambda chi_s,

so closed forms are written in ``s`` and the numeric oracle integrates
``(chi, chi_s)`` in ``t`` with RK4.

Row identifiers are ``eta1`` .. ``eta6`` (two slots) and ``eta7H`` / ``eta7NH``
(three slots, ``g2 = -g1``).  Constraints are ``'c=0'``, ``'c=plam'``,
``'c=lam'`` and ``'lam=pmu'``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .coefficient_functions import CoeffFn, TimeGrid, constant
from .errors import ConfigError, DegenerateConstantError, DomainError
from .operator_algebra import KVector

log = logging.getLogger(__name__)

# slot generators; a trailing flag marks a purely imaginary coefficient (i K)
SLOTS = {
    "eta1": (("K4", False), ("K3", False)),
    "eta2": (("K3", False), ("K4", False)),
    "eta3": (("K4", False), ("K1", True)),
    "eta4": (("K4", False), ("K2", True)),
    "eta5": (("K3", False), ("K1", True)),
    "eta6": (("K3", False), ("K2", True)),
    "eta7H": (("K1", False), ("K2", False), ("K3", False)),
    "eta7NH": (("K1", False), ("K2", False), ("K4", True)),
}

ROWS = {
    ("eta1", "c=0"): "none",
    ("eta1", "c=plam"): "Aux1",
    ("eta2", "c=0"): "Aux4",
    ("eta2", "c=lam"): "Aux5",
    ("eta3", "c=0"): "Aux2",
    ("eta4", "c=0"): "Aux2",
    ("eta5", "c=0"): "Aux2",
    ("eta6", "c=0"): "Aux2",
    ("eta3", "c=plam"): "Aux3",
    ("eta4", "c=plam"): "Aux3",
    ("eta5", "c=plam"): "Aux1",
    ("eta6", "c=plam"): "Aux1",
    ("eta7H", "lam=pmu"): "Osc",
    ("eta7NH", "lam=pmu"): "Hyp",
}

# rows whose second-slot sign is a free choice (the constraint ODEs are even in g2 at c=0)
BRANCHED = {("eta5", "c=0"), ("eta6", "c=0")}


@dataclass(frozen=True)
class DysonCase:
    """One catalogue row with its constants.

    Attributes
    ----------
    id : str
        ``eta1`` .. ``eta6``, ``eta7H`` or ``eta7NH``.
    constraint : str
        ``'c=0'``, ``'c=plam'``, ``'c=lam'`` or ``'lam=pmu'``.
    p, k1, k2 : float
    branch : {+1, -1}
        Sign of the second slot where the row offers a choice; ignored elsewhere.
    """

    id: str
    constraint: str
    p: float = 0.0
    k1: float = 0.0
    k2: float = 0.0
    branch: int = 1

    def __post_init__(self):
        if (self.id, self.constraint) not in ROWS:
            raise ConfigError(f"no catalogue row ({self.id}, {self.constraint})")
        if self.branch not in (1, -1):
            raise ConfigError("branch must be +1 or -1")
        self._check_constants()

    def _check_constants(self):
        key = (self.id, self.constraint)
        p, k1 = self.p, self.k1
        if self.constraint == "c=plam" and not abs(p) < 1:
            raise DomainError(f"{self.id} with c = p lambda needs |p| < 1, got p={p}")
        if key in {("eta3", "c=plam"), ("eta4", "c=plam")} and p == 0:
            raise DegenerateConstantError(f"{self.id}: p = 0 makes chi touch 1 (coth singular)")
        if key in {("eta3", "c=0"), ("eta4", "c=0"), ("eta5", "c=0"), ("eta6", "c=0")} and k1 == 0:
            raise DegenerateConstantError(f"{self.id} with c = 0 divides by k1; k1 = 0 rejected")
        if key == ("eta2", "c=lam") and not k1 > 0:
            raise DegenerateConstantError("eta2 with c = lambda needs k1 > 0 (log k1)")
        if self.id == "eta7H":
            kap = np.sqrt(1 - p * p) if abs(p) < 1 else np.nan
            if not abs(p) < 1:
                raise DomainError(f"eta7H needs |p| < 1, got {p}")
            if not k1 <= -2 * kap:
                raise DomainError(f"eta7H needs k1 <= -2 sqrt(1-p^2) = {-2 * kap:.6g}, got {k1}")
        if self.id == "eta7NH" and not abs(p) > 1:
            raise DomainError(f"eta7NH needs |p| > 1, got {p}")

    @property
    def aux(self) -> str:
        return ROWS[(self.id, self.constraint)]

    @property
    def slots(self):
        return SLOTS[self.id]

    @property
    def kappa(self) -> float:
        return float(np.sqrt(1 - self.p ** 2)) if abs(self.p) < 1 else float("nan")

    @property
    def label(self) -> str:
        tag = {"c=0": "c0", "c=plam": "cpl", "c=lam": "cl", "lam=pmu": "lpm"}[self.constraint]
        br = "" if (self.id, self.constraint) not in BRANCHED else ("_bp" if self.branch > 0 else "_bm")
        return f"{self.id}_{tag}{br}"


def catalogue_rows() -> list[tuple[str, str]]:
    return list(ROWS)


# ---------------------------------------------------------------------------
# constraint equations of the two-slot and three-slot maps
# ---------------------------------------------------------------------------

def table1_rhs(case: DysonCase | str, g1, g2, c, lam):
    """Right-hand side ``(g1_dot, g2_dot)`` of the row's constraint ODEs.

    ``case`` may be a :class:`DysonCase` or a map id.  For imaginary slots ``g2``
    is the real function multiplying ``i``.
    """
    cid = case.id if isinstance(case, DysonCase) else case
    g1, g2 = np.asarray(g1, dtype=float), np.asarray(g2, dtype=float)
    if cid == "eta1":
        return c * np.sinh(g2), -c * np.cosh(g2) * np.tanh(g1) - lam
    if cid == "eta2":
        return (-lam * np.cosh(g2) - c * np.sinh(g2),
                (c * np.cosh(g2) + lam * np.sinh(g2)) * np.tanh(g1))
    if cid == "eta3":
        return lam * np.sin(g2), c + lam * np.cos(g2) / np.tanh(g1)
    if cid == "eta4":
        return -lam * np.sin(g2), -c - lam * np.cos(g2) / np.tanh(g1)
    if cid == "eta5":
        return -lam * np.cos(g2), c + lam * np.sin(g2) / np.tanh(g1)
    if cid == "eta6":
        return -lam * np.cos(g2), -c + lam * np.sin(g2) / np.tanh(g1)
    raise ConfigError(f"table1_rhs has no row for {cid}")


def case3_rhs(kind: str, g1, g3, mu, lam):
    """Constraint ODEs of the three-slot maps (``g2 = -g1``)."""
    g1, g3 = np.asarray(g1, dtype=float), np.asarray(g3, dtype=float)
    if kind == "hermitian":
        return -0.5 * np.sinh(g3) * mu, np.cosh(g3) * np.tanh(2 * g1) * mu - lam
    if kind == "nonhermitian":
        return -0.5 * np.sin(g3) * lam, mu - np.cos(g3) / np.tanh(2 * g1) * lam
    raise ConfigError(f"unknown case-3 kind {kind!r}")


# ---------------------------------------------------------------------------
# auxiliary functions
# ---------------------------------------------------------------------------

def aux1_closed(s, p: float, k1: float, k2: float, X: float, sg: int = -1):
    """General real solution of ``chi_ss = kappa^2 chi - sg p k1 / 2``.

    ``chi = e^{-u} [(e^u + sg p k1)^2 + X] / (4 kappa^2)`` with
    ``u = kappa (2 k2 - s)``.  Returns ``(chi, chi_s)``.
    """
    kap2 = 1.0 - p * p
    kap = np.sqrt(kap2)
    u = kap * (2 * k2 - np.asarray(s, dtype=float))
    eu, emu = np.exp(u), np.exp(-u)
    B = p * p * k1 * k1 + X
    chi = (eu + 2 * sg * p * k1 + B * emu) / (4 * kap2)
    chi_s = -kap * (eu - B * emu) / (4 * kap2)
    return chi, chi_s


def aux1_limit_p0(s, k2: float, Y: float):
    """``p -> 0`` limit of :func:`aux1_closed` with ``X = (1-p^2) Y``; solves ``chi_ss = chi``."""
    u = 2 * k2 - np.asarray(s, dtype=float)
    return 0.25 * (np.exp(u) + Y * np.exp(-u))


def aux1_limit_k10(s, p: float, k2: float, X: float):
    """``k1 -> 0`` limit of :func:`aux1_closed`; solves ``chi_ss = kappa^2 chi``."""
    kap2 = 1.0 - p * p
    u = np.sqrt(kap2) * (2 * k2 - np.asarray(s, dtype=float))
    return (np.exp(u) + X * np.exp(-u)) / (4 * kap2)


def aux_force(case: DysonCase):
    """``F`` with ``chi_ss = F(chi)`` for the row (canonical form of its auxiliary equation)."""
    p, k1 = case.p, case.k1
    kap2 = 1 - p * p
    key = (case.id, case.constraint)
    if key in {("eta1", "c=plam"), ("eta5", "c=plam")}:
        return lambda x: kap2 * x + 0.5 * p * k1
    if key == ("eta6", "c=plam"):
        return lambda x: kap2 * x - 0.5 * p * k1
    if case.aux == "Aux2":
        return lambda x: x
    if case.aux == "Aux3":
        return lambda x: kap2 * x
    if case.aux == "Aux4":
        return lambda x: x + k1 * k1 / x ** 3
    if case.aux == "Aux5":
        return lambda x: k1 * k1 / x ** 3
    if case.aux == "Osc":
        return lambda x: -kap2 * x - 0.5 * p * k1
    if case.aux == "Hyp":
        return lambda x: (p * p - 1) * x - 1.0
    return None


def chi_closed(case: DysonCase, s):
    """Closed-form ``(chi, chi_s)`` of the row as functions of ``s``."""
    s = np.asarray(s, dtype=float)
    p, k1, k2 = case.p, case.k1, case.k2
    kap2 = 1 - p * p
    key = (case.id, case.constraint)
    if case.aux == "none":
        return k2 - s, -np.ones_like(s)
    if key == ("eta1", "c=plam"):
        return aux1_closed(s, p, k1, k2, -p * p * kap2 * (k1 * k1 - 4), -1)
    if key == ("eta5", "c=plam"):
        return aux1_closed(s, p, k1, k2, kap2 * (k1 * k1 + 4), -1)
    if key == ("eta6", "c=plam"):
        return aux1_closed(s, p, k1, k2, kap2 * (k1 * k1 + 4), +1)
    if case.aux == "Aux4":
        A = 1 + k1 * k1
        sh, ch = np.sinh(k2 - s), np.cosh(k2 - s)
        chi = np.sqrt(1 + A * sh * sh)
        return chi, -A * sh * ch / chi
    if case.aux == "Aux5":
        w = k2 - k1 * s
        chi = np.sqrt(1 + w * w)
        return chi, -k1 * w / chi
    if case.aux == "Aux2":
        amp = np.sqrt(1 + k1 * k1) / k1
        if case.id in ("eta5", "eta6"):
            amp = -amp
        return amp * np.sinh(s - k2), amp * np.cosh(s - k2)
    if case.aux == "Aux3":
        kap = np.sqrt(kap2)
        return np.cosh(kap * (s - k2)) / kap, np.sinh(kap * (s - k2))
    if case.aux == "Osc":
        kap = np.sqrt(kap2)
        C = np.sqrt(max(k1 * k1 / 4 - kap2, 0.0)) / kap2
        ph = kap * (s - k2)
        return C * np.cos(ph) - p * k1 / (2 * kap2), -C * kap * np.sin(ph)
    if case.aux == "Hyp":
        q2 = p * p - 1
        q = np.sqrt(q2)
        ph = q * (s - k1)
        return (p * p * np.cosh(ph) + 1) / q2, p * p * q * np.sinh(ph) / q2
    raise ConfigError(f"no closed form for {key}")


@dataclass
class ChiSolution:
    """Auxiliary function sampled on a set of times.

    Attributes
    ----------
    t, s : ndarray
        Times and accumulated coupling ``s(t)``.
    chi, chi_s : ndarray
        ``chi`` and its derivative with respect to ``s``.
    chi_dot : ndarray
        Time derivative ``coupling(t) * chi_s``.
    source : {'closed_form', 'numeric_ode', 'none'}
    """

    t: np.ndarray
    s: np.ndarray
    chi: np.ndarray
    chi_s: np.ndarray
    chi_dot: np.ndarray
    source: str = "closed_form"

    def __post_init__(self):
        if not (np.all(np.isfinite(self.chi)) and np.all(np.isfinite(self.chi_s))):
            bad = ~(np.isfinite(self.chi) & np.isfinite(self.chi_s))
            raise DomainError("auxiliary function is not finite", float(np.atleast_1d(self.t)[bad][0]))


def _coupling(case: DysonCase, lam: CoeffFn, mu: CoeffFn | None) -> CoeffFn:
    if case.id.startswith("eta7"):
        if mu is None:
            raise ConfigError("three-slot maps integrate over mu; pass mu")
        return mu
    return lam


def solve_auxiliary(case: DysonCase, lam: CoeffFn, grid: TimeGrid | np.ndarray,
                    method: str = "closed_form", t0: float | None = None,
                    mu: CoeffFn | None = None) -> ChiSolution:
    """Auxiliary function of the row on a grid.

    Parameters
    ----------
    method : {'closed_form', 'numeric_ode'}
        The numeric path integrates ``chi_dot = L chi_s``, ``chi_s_dot = L F(chi)``
        (``L`` the coupling) with RK4 at the grid spacing, starting from the
        closed-form value at the first grid point.  It serves as an independent
        oracle for the closed forms.
    t0 : float, optional
        Anchor of ``s``; defaults to 0.
    """
    ts = grid.points if isinstance(grid, TimeGrid) else np.asarray(grid, dtype=float)
    t0 = 0.0 if t0 is None else float(t0)
    L = _coupling(case, lam, mu)
    s = np.asarray(L.antideriv(t0, ts), dtype=float) * np.ones_like(ts)
    Lv = np.asarray(L(ts), dtype=float) * np.ones_like(ts)
    if method == "closed_form" or case.aux == "none":
        chi, chi_s = chi_closed(case, s)
        src = "none" if case.aux == "none" else "closed_form"
        return ChiSolution(ts, s, chi, chi_s, Lv * chi_s, src)
    if method != "numeric_ode":
        raise ConfigError(f"unknown method {method!r}")
    F = aux_force(case)
    chi0, w0 = (float(v[0]) for v in chi_closed(case, s[:1]))
    from .perturbation_engine import _rk4

    def rhs(y, t):
        l = float(L(t))
        return np.array([l * y[1], l * F(y[0])])

    ys = _rk4(rhs, np.array([chi0, w0]), ts)
    return ChiSolution(ts, s, ys[:, 0], ys[:, 1], Lv * ys[:, 1], "numeric_ode")


def aux_equation_residual(case: DysonCase, chi: ChiSolution, lam: CoeffFn,
                          mu: CoeffFn | None = None) -> np.ndarray:
    """Pointwise residual of ``chi'' - (L'/L) chi' - L^2 F(chi)`` in ``t``.

    Derivatives of the samples use fourth-order central differences; the two
    samples at each end are dropped.
    """
    F = aux_force(case)
    if F is None:
        raise ConfigError(f"{case.id} has no auxiliary equation")
    L = _coupling(case, lam, mu)
    t, x = chi.t, chi.chi
    h = t[1] - t[0]
    d1 = (x[:-4] - 8 * x[1:-3] + 8 * x[3:-1] - x[4:]) / (12 * h)
    d2 = (-x[:-4] + 16 * x[1:-3] - 30 * x[2:-2] + 16 * x[3:-1] - x[4:]) / (12 * h * h)
    tc = t[2:-2]
    Lv, dL = L(tc), L.deriv(tc, 1)
    return d2 * Lv - dL * d1 - Lv ** 3 * F(x[2:-2])


# ---------------------------------------------------------------------------
# gammas from chi
# ---------------------------------------------------------------------------

def _unwrap(x, t):
    t = np.asarray(t)
    if x.ndim == 1 and x.size > 1 and np.all(np.diff(t) > 0):
        return np.unwrap(x)
    return x


def eta1_printed_gamma2(chi, k1: float, p: float):
    """``arccosh(-(k1 + 2 chi/p) / (2 sqrt(1+chi^2)))`` without orientation.

    ``2 chi/p`` is taken as zero where ``chi == 0`` (covers ``p = 0``).
    """
    chi = np.asarray(chi, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        term = np.where(chi == 0, 0.0, 2 * chi / p if p != 0 else np.inf)
    arg = -(k1 + term) / (2 * np.sqrt(1 + chi * chi))
    return np.arccosh(arg), arg


def gammas_from_chi(case: DysonCase, chi: ChiSolution) -> np.ndarray:
    """Slot coefficients from the auxiliary function.

    Returns
    -------
    ndarray, shape (nslots, nt)
        Real coefficients; imaginary slots store the function multiplying ``i``.

    Notes
    -----
    Rows whose printed parameterisation uses an even inverse function
    (``arccosh``, ``arccos``) fix the orientation from ``chi_s`` through the
    row's first integral, written as an equivalent smooth expression.
    """
    x, xs, t = chi.chi, chi.chi_s, chi.t
    p, k1 = case.p, case.k1
    key = (case.id, case.constraint)
    one = np.ones_like(x)
    if key == ("eta1", "c=0"):
        return np.array([k1 * one, x])
    if key == ("eta1", "c=plam"):
        g1 = np.arcsinh(x)
        if p == 0:
            g2, arg = eta1_printed_gamma2(x, k1, p)
        else:
            arg = eta1_printed_gamma2(x, k1, p)[1]
            g2 = np.arcsinh(xs / (p * np.sqrt(1 + x * x)))
        bad = ~(arg >= 1 - 1e-9)
        if np.any(bad):
            raise DomainError("eta1 (c = p lambda): arccosh argument below 1", float(t[bad][0]))
        if np.any(arg > 1):
            log.debug("eta1: arccosh argument >= 1 holds; the printed '<= 1' bound does not")
        return np.array([g1, g2])
    if key == ("eta2", "c=0"):
        if np.any(x < 1 - 1e-12):
            raise DomainError("eta2: chi < 1", float(t[x < 1 - 1e-12][0]))
        A = 1 + k1 * k1
        # smooth form of +-arccosh(chi): sqrt(A) sinh(k2 - s)
        g1 = np.arcsinh(np.sqrt(A) * np.sinh(case.k2 - chi.s)) if chi.source == "closed_form" \
            else -np.sign(xs) * np.arccosh(np.maximum(x, 1.0))
        return np.array([g1, np.arcsinh(k1 / x)])
    if key == ("eta2", "c=lam"):
        g1 = np.arcsinh(case.k2 - k1 * chi.s) if chi.source == "closed_form" \
            else -np.sign(xs) * np.arccosh(np.maximum(x, 1.0))
        return np.array([g1, np.log(k1 / x)])
    if case.aux == "Aux2":
        g1 = np.arcsinh(k1 * np.sqrt(1 + x * x))
        if case.id == "eta3":
            g2 = np.arctan(x)
        elif case.id == "eta4":
            g2 = -np.arctan(x)
        else:
            g2 = case.branch * (0.5 * np.pi - np.arctan(x))
        return np.array([g1, g2])
    if case.aux == "Aux3":
        if np.any(x <= 1):
            raise DomainError(f"{case.id}: chi <= 1", float(t[x <= 1][0]))
        g2 = np.arctan2(xs, -p * x)
        if p > 0:
            g2 = np.mod(g2, 2 * np.pi)
        g2 = _unwrap(g2, t)
        return np.array([np.arccosh(x), g2 if case.id == "eta3" else -g2])
    if key in {("eta5", "c=plam"), ("eta6", "c=plam")}:
        if np.any(x <= 1):
            raise DomainError(f"{case.id}: chi <= 1", float(t[x <= 1][0]))
        R = np.sqrt(x * x - 1)
        sg = -1 if case.id == "eta5" else 1
        v = (k1 + sg * 2 * p * x) / (2 * R)
        if np.any(np.abs(v) > 1 + 1e-9):
            raise DomainError(f"{case.id}: arcsin argument outside [-1, 1]",
                              float(t[np.abs(v) > 1 + 1e-9][0]))
        g2 = _unwrap(np.arctan2(v, -xs / R), t)
        return np.array([np.arccosh(x), g2])
    if case.aux == "Osc":
        g1 = 0.5 * np.arcsinh(x)
        g3 = np.arcsinh(-xs / np.sqrt(1 + x * x))
        return np.array([g1, -g1, g3])
    if case.aux == "Hyp":
        if np.any(x <= 1):
            raise DomainError("eta7NH: chi <= 1", float(t[x <= 1][0]))
        g1 = 0.5 * np.arccosh(x)
        g3 = _unwrap(np.arctan2(-xs / p, (x + 1) / p), t)
        return np.array([g1, -g1, g3])
    raise ConfigError(f"no parameterisation for {key}")


# ---------------------------------------------------------------------------
# Hermitian coefficients and the K4 coefficient of the three-slot maps
# ---------------------------------------------------------------------------

def hermitian_coeffs(case: DysonCase, chi: ChiSolution, lam, b) -> tuple[np.ndarray, np.ndarray]:
    """``(f_plus, f_minus)`` of ``h = f+ K1 + f- K2`` for the row.

    Parameters
    ----------
    lam, b : float or ndarray
        ``lambda(t)`` and ``b(t)`` at the samples of ``chi``.

    Raises
    ------
    DegenerateConstantError
        If the row divides by ``k1`` and ``k1 == 0``.
    """
    x, xs = chi.chi, chi.chi_s
    p, k1 = case.p, case.k1
    lam = np.asarray(lam, dtype=float)
    b = np.asarray(b, dtype=float) * np.ones_like(x)
    key = (case.id, case.constraint)
    if case.aux == "Aux2" and k1 == 0:
        raise DegenerateConstantError(f"{case.id} with c = 0 divides by k1")
    if key == ("eta1", "c=0"):
        return b.copy(), b.copy()
    if key == ("eta1", "c=plam"):
        d = lam * (2 * x + p * k1) / (4 * (1 + x * x))
        return b + p * lam / 2 - d, b + p * lam / 2 + d
    if key == ("eta2", "c=0"):
        d = lam * k1 / (2 * x * x)
        return b + d, b - d
    if key == ("eta2", "c=lam"):
        d = lam * k1 / (2 * x * x)
        return b + lam / 2 + d, b + lam / 2 - d
    if case.aux == "Aux2":
        R = np.sqrt(1 + (1 + x * x) * k1 * k1)
        den = 2 * k1 * (1 + x * x)
        if case.id == "eta3":
            return b - lam * (1 + R) / den, b - lam * (-1 + R) / den
        if case.id == "eta4":
            return b + lam * (-1 + R) / den, b + lam * (1 + R) / den
        f5 = (b + lam * (-1 - R) / den, b + lam * (1 - R) / den)
        f6 = (b + lam * (1 - R) / den, b + lam * (-1 - R) / den)
        if case.branch > 0:
            return f5 if case.id == "eta5" else f6
        # negative branch: the other row's coefficients plus d/dt arccot(chi)
        g2dot = -lam * xs / (1 + x * x)
        base = f6 if case.id == "eta5" else f5
        return base[0] + g2dot, base[1] + g2dot
    if case.aux == "Aux3":
        if case.id == "eta3":
            return b + p * lam * x / (2 * (x - 1)), b + p * lam * x / (2 * (x + 1))
        return b + p * lam - p * lam * x / (2 * (x + 1)), b + p * lam - p * lam * x / (2 * (x - 1))
    if key == ("eta5", "c=plam"):
        n = lam * (2 * p * x - k1) / 4
        return b + n / (x - 1), b + n / (x + 1)
    if key == ("eta6", "c=plam"):
        n = lam * (2 * p * x + k1) / 4
        return b + p * lam - n / (x + 1), b + p * lam - n / (x - 1)
    raise ConfigError(f"{key} is not a two-slot catalogue row")


def case3_k4_coefficient(case: DysonCase, chi: ChiSolution, mu) -> np.ndarray:
    """``K4`` coefficient of ``h`` for the three-slot maps."""
    x = chi.chi
    mu = np.asarray(mu, dtype=float)
    if case.id == "eta7H":
        return (2 * case.p * x - case.k1) * mu / (2 * (1 + x * x))
    if case.id == "eta7NH":
        return mu / (x - 1)
    raise ConfigError("K4 coefficient only exists for eta7H / eta7NH")


def case3_k4_printed(case: DysonCase, chi: ChiSolution, mu) -> np.ndarray:
    """Literal printed ``K4`` coefficient of the Hermitian three-slot map (for comparison)."""
    x = chi.chi
    return -(case.k1 + 2 * case.p * x) * np.asarray(mu) / (2 * (1 + x * x))


# ---------------------------------------------------------------------------
# assembled map
# ---------------------------------------------------------------------------

@dataclass
class ExactMap:
    """A catalogue row bound to its Hamiltonian coefficient functions.

    The non-Hermitian Hamiltonian is ``H = a K1 + b K2 + i lam K3 + mu K4`` with
    ``b`` fixed by the constraint (``b = a - c``); the three-slot maps use
    ``lam = p mu`` and ``b = a``.

    Parameters
    ----------
    case : DysonCase
    a, lam : CoeffFn
    mu : CoeffFn, optional
        Only for ``eta7H`` / ``eta7NH`` (then ``lam`` is ignored and set to ``p mu``).
    t0 : float
        Anchor of ``s``.
    """

    case: DysonCase
    a: CoeffFn
    lam: CoeffFn
    mu: CoeffFn | None = None
    t0: float = 0.0
    _lam_eff: CoeffFn = field(init=False, repr=False)

    def __post_init__(self):
        if self.case.id.startswith("eta7"):
            if self.mu is None:
                raise ConfigError("three-slot maps need mu")
            self._lam_eff = self.mu.scaled(self.case.p)
        else:
            self._lam_eff = self.lam

    # coefficient functions ------------------------------------------------

    def coefficients(self, t):
        """``(a, b, lam, mu)`` at ``t``."""
        t = np.asarray(t, dtype=float)
        a = np.asarray(self.a(t), dtype=float) * np.ones_like(t)
        lam = np.asarray(self._lam_eff(t), dtype=float) * np.ones_like(t)
        mu = np.zeros_like(t) if self.mu is None else np.asarray(self.mu(t), dtype=float) * np.ones_like(t)
        c = {"c=0": 0.0, "c=plam": self.case.p * lam, "c=lam": lam, "lam=pmu": 0.0}[self.case.constraint]
        return a, a - c, lam, mu

    def c(self, t):
        a, b, _, _ = self.coefficients(t)
        return a - b

    def hamiltonian_kvector(self, t: float) -> KVector:
        a, b, lam, mu = (float(v) for v in self.coefficients(t))
        return KVector([a, b, 1j * lam, mu])

    # auxiliary function and gammas ---------------------------------------

    def chi(self, t, method: str = "closed_form") -> ChiSolution:
        return solve_auxiliary(self.case, self._lam_eff, np.atleast_1d(np.asarray(t, dtype=float)),
                               method=method, t0=self.t0, mu=self.mu)

    def gammas(self, t) -> np.ndarray:
        """Slot coefficients, shape ``(nslots, nt)``."""
        return gammas_from_chi(self.case, self.chi(t))

    @property
    def slots(self):
        return self.case.slots

    def fpm(self, t) -> tuple[np.ndarray, np.ndarray]:
        """``f_plus, f_minus`` at ``t``."""
        chi = self.chi(t)
        a, b, lam, mu = self.coefficients(chi.t)
        if self.case.id.startswith("eta7"):
            return a.copy(), a.copy()
        return hermitian_coeffs(self.case, chi, lam, b)

    def predicted_h(self, t) -> np.ndarray:
        """Coefficients of the predicted ``h`` along ``K1..K4``, shape ``(4, nt)``."""
        chi = self.chi(t)
        a, b, lam, mu = self.coefficients(chi.t)
        if self.case.id.startswith("eta7"):
            f4 = case3_k4_coefficient(self.case, chi, mu)
            return np.array([a, a, np.zeros_like(a), f4])
        fp, fm = hermitian_coeffs(self.case, chi, lam, b)
        z = np.zeros_like(fp)
        return np.array([fp, fm, z, z])

    def constraint_rhs(self, t, gam=None) -> np.ndarray:
        """Constraint ODE right-hand sides at the map's own (or supplied) gammas."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        gam = self.gammas(t) if gam is None else np.asarray(gam, dtype=float)
        a, b, lam, mu = self.coefficients(t)
        if self.case.id == "eta7H":
            d1, d3 = case3_rhs("hermitian", gam[0], gam[2], mu, lam)
            return np.array([d1, -d1, d3])
        if self.case.id == "eta7NH":
            d1, d3 = case3_rhs("nonhermitian", gam[0], gam[2], mu, lam)
            return np.array([d1, -d1, d3])
        return np.array(table1_rhs(self.case, gam[0], gam[1], a - b, lam))

    def check_admissible(self, t) -> None:
        """Raise :class:`DomainError` if any sample violates the row's domain."""
        self.gammas(np.atleast_1d(np.asarray(t, dtype=float)))


@dataclass
class ConstraintReport:
    """Finite-difference check of the constraint ODEs."""

    max_residual: float
    worst_t: float
    worst_component: int
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_residual < self.tol


def fd4(y: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order central first derivative along the last axis (interior points)."""
    return (y[..., :-4] - 8 * y[..., 1:-3] + 8 * y[..., 3:-1] - y[..., 4:]) / (12 * h)


def verify_constraint_odes(emap: ExactMap, grid: TimeGrid, gammas: np.ndarray | None = None,
                           tol: float = 1e-6) -> ConstraintReport:
    """Compare finite-difference slot derivatives with the constraint ODEs.

    The residual is ``|g_dot_fd - rhs| / max(1, |rhs|)`` at every interior grid
    point (fourth-order differences; two points dropped at each end).
    """
    t = grid.points
    gam = emap.gammas(t) if gammas is None else np.asarray(gammas, dtype=float)
    rhs = emap.constraint_rhs(t, gam)[:, 2:-2]
    fd = fd4(gam, grid.step)
    r = np.abs(fd - rhs) / np.maximum(1.0, np.abs(rhs))
    i, j = np.unravel_index(int(np.argmax(r)), r.shape)
    return ConstraintReport(float(r[i, j]), float(t[2 + j]), int(i), tol)


def case3_map(kind: str, mu: CoeffFn, p: float, k1: float, grid: TimeGrid | np.ndarray,
              a: CoeffFn | None = None, k2: float = 0.0, t0: float = 0.0):
    """Three-slot maps with a Hermitian ``K4`` coupling.

    Parameters
    ----------
    kind : {'hermitian', 'nonhermitian'}
    k1 : float
        Hermitian kind: constant of the invariant (``k1 <= -2 sqrt(1-p^2)``).
        Non-Hermitian kind: shift of ``s`` (the invariant constant is fixed so
        that ``gamma3`` is real).

    Returns
    -------
    gamma1, gamma3, f4 : ndarray
        ``gamma2 = -gamma1``; ``f4`` is the ``K4`` coefficient of ``h``.
    """
    cid = {"hermitian": "eta7H", "nonhermitian": "eta7NH"}.get(kind)
    if cid is None:
        raise ConfigError(f"unknown case-3 kind {kind!r}")
    case = DysonCase(cid, "lam=pmu", p=p, k1=k1, k2=k2)
    em = ExactMap(case, a if a is not None else constant(1.0), constant(0.0), mu=mu, t0=t0)
    ts = grid.points if isinstance(grid, TimeGrid) else np.asarray(grid, dtype=float)
    g = em.gammas(ts)
    return g[0], g[2], em.predicted_h(ts)[3]

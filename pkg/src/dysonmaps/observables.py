"""Time-dependent oscillator eigenfunctions and instantaneous energies.

Every Hermitian counterpart ``h = f_+ K1 + f_- K2`` decouples into two
oscillators ``f (p^2 + x^2) / 2``.  Their states follow from the auxiliary
function of the dissipative Ermakov-Pinney equation

    chi'' - (f'/f) chi' + f^2 chi = f^2 / chi^3,

solved by ``chi = sqrt(sqrt(1 + c^2) + c cos(2 F))`` with ``F = int_0^t f``.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.integrate import quad
from scipy.special import eval_hermite, roots_hermite

from .coefficient_functions import CoeffFn, TimeGrid, from_name
from .errors import ConfigError, DomainError
from .exact_maps import DysonCase, ExactMap

GH_NODES = 200


def _times(grid) -> np.ndarray:
    return grid.points if isinstance(grid, TimeGrid) else np.atleast_1d(np.asarray(grid, dtype=float))


# ---------------------------------------------------------------------------
# Ermakov-Pinney solution
# ---------------------------------------------------------------------------

@dataclass
class EpSolution:
    """Closed-form solution of the dissipative Ermakov-Pinney equation.

    Attributes
    ----------
    f : CoeffFn
    c : float
        Integration constant.
    t, chi, chi_dot : ndarray
        Samples on the requested grid.
    residual : float
        Max finite-difference residual of the equation on the grid.
    """

    f: CoeffFn
    c: float
    t: np.ndarray
    chi: np.ndarray
    chi_dot: np.ndarray
    residual: float = float("nan")

    def phase_integral(self, t: float) -> float:
        """``int_0^t f / chi^2``."""
        val, _ = quad(lambda s: float(self.f(s)) / ep_chi(self.f, self.c, s)[0] ** 2, 0.0, t,
                      epsabs=1e-13, epsrel=1e-12, limit=200)
        return val

    def at(self, t: float) -> tuple[float, float]:
        """``(chi, chi_dot)`` at a single time."""
        chi, chid = ep_chi(self.f, self.c, t)
        return float(chi), float(chid)

    @property
    def chi_min(self) -> float:
        return math.sqrt(math.sqrt(1 + self.c ** 2) - abs(self.c))


def ep_chi(f: CoeffFn, c: float, t) -> tuple[np.ndarray, np.ndarray]:
    """``chi`` and ``chi_dot`` of the closed form at ``t`` (``F`` anchored at 0)."""
    t = np.asarray(t, dtype=float)
    F = np.asarray(f.antideriv(0.0, t), dtype=float)
    chi = np.sqrt(np.sqrt(1 + c * c) + c * np.cos(2 * F))
    chi_dot = -c * np.asarray(f(t), dtype=float) * np.sin(2 * F) / chi
    return chi, chi_dot


def ep_residual(f: CoeffFn, c: float, t, step: float = 1e-4) -> np.ndarray:
    """Fourth-order central-difference residual of the equation at ``t``.

    The damping term is evaluated as ``f' (chi'/f)`` with ``chi'/f`` in closed
    form, which stays finite at zeros of ``f``.
    """
    t = np.asarray(t, dtype=float)
    v = [ep_chi(f, c, t + k * step)[0] for k in (-2, -1, 0, 1, 2)]
    c0 = v[2]
    chi_dd = (-v[0] + 16 * v[1] - 30 * v[2] + 16 * v[3] - v[4]) / (12 * step ** 2)
    F = np.asarray(f.antideriv(0.0, t), dtype=float)
    chid_over_f = -c * np.sin(2 * F) / c0
    fv = np.asarray(f(t), dtype=float)
    fd = np.asarray(f.deriv(t, 1), dtype=float)
    return chi_dd - fd * chid_over_f + fv ** 2 * c0 - fv ** 2 / c0 ** 3


def solve_ep(f: CoeffFn, c: float, grid, tol: float = 1e-7, step: float = 1e-4) -> EpSolution:
    """Sample the closed-form solution and verify it by finite differences.

    Raises
    ------
    DomainError
        If the residual, relative to ``max(1, f^2 (chi + chi^-3))``, exceeds
        ``tol``; carries the worst time.
    """
    t = _times(grid)
    chi, chid = ep_chi(f, c, t)
    # scaled by the size of the potential terms so fast-growing f is comparable
    scale = np.maximum(1.0, np.asarray(f(t), dtype=float) ** 2 * (chi + chi ** -3))
    res = np.abs(ep_residual(f, c, t, step)) / scale
    worst = int(np.argmax(res))
    if res[worst] > tol:
        raise DomainError(f"Ermakov-Pinney residual {res[worst]:.3g} above {tol:g}", float(t[worst]))
    return EpSolution(f, float(c), t, chi, chid, float(res[worst]))


# ---------------------------------------------------------------------------
# wavefunctions
# ---------------------------------------------------------------------------

def _norm(n: int, chi: float) -> float:
    return 1.0 / math.sqrt(2.0 ** n * math.factorial(n) * math.sqrt(math.pi) * chi)


def wavefunction(n: int, f: CoeffFn, ep: EpSolution, x, t: float) -> np.ndarray:
    """Normalised oscillator eigenfunction ``phi_n(x, t)`` including its phase."""
    if n < 0:
        raise ConfigError("n must be nonnegative")
    chi, chid = ep.at(t)
    fv = float(f(t))
    x = np.asarray(x, dtype=float)
    A = 1j * chid / (fv * chi) - 1.0 / chi ** 2 if fv != 0 else -1.0 / chi ** 2
    alpha = -(n + 0.5) * ep.phase_integral(t)
    return np.exp(1j * alpha) * _norm(n, chi) * np.exp(A * x ** 2 / 2) * eval_hermite(n, x / chi)


def _wave_and_derivative(n: int, fv: float, chi: float, chid: float, xi: np.ndarray):
    """``phi`` and ``d phi / dx`` without the Gaussian modulus at ``x = chi xi``."""
    A = (1j * chid / (fv * chi) if fv != 0 else 0.0) - 1.0 / chi ** 2
    x = chi * xi
    phase = np.exp(1j * A.imag * x ** 2 / 2) if isinstance(A, complex) else 1.0
    Hn = eval_hermite(n, xi)
    dHn = 2 * n * eval_hermite(n - 1, xi) if n > 0 else np.zeros_like(xi)
    N = _norm(n, chi)
    phi = N * phase * Hn
    dphi = N * phase * (A * x * Hn + dHn / chi)
    return phi, dphi


def overlap(n: int, m: int, f: CoeffFn, ep: EpSolution, t: float, nodes: int = GH_NODES) -> complex:
    """``<phi_n | phi_m>`` by Gauss-Hermite quadrature with ``chi``-scaled abscissae."""
    xi, w = roots_hermite(nodes)
    chi, chid = ep.at(t)
    fv = float(f(t))
    pn, _ = _wave_and_derivative(n, fv, chi, chid, xi)
    pm, _ = _wave_and_derivative(m, fv, chi, chid, xi)
    I = ep.phase_integral(t)
    ph = np.exp(1j * (n - m) * I)
    return complex(ph * chi * np.sum(w * np.conj(pn) * pm))


def k1_expectation(n: int, ep: EpSolution) -> float:
    """``<phi_n | K1 | phi_n> = (n + 1/2) sqrt(1 + c^2)``."""
    return (n + 0.5) * math.sqrt(1 + ep.c ** 2)


def k1_expectation_quadrature(n: int, f: CoeffFn, ep: EpSolution, t: float,
                              nodes: int = GH_NODES) -> float:
    """``<phi_n | (p^2 + x^2)/2 | phi_n>`` by Gauss-Hermite quadrature."""
    xi, w = roots_hermite(nodes)
    chi, chid = ep.at(t)
    phi, dphi = _wave_and_derivative(n, float(f(t)), chi, chid, xi)
    x = chi * xi
    val = 0.5 * chi * np.sum(w * (np.abs(dphi) ** 2 + x ** 2 * np.abs(phi) ** 2))
    return float(val)


# ---------------------------------------------------------------------------
# instantaneous energies
# ---------------------------------------------------------------------------

@dataclass
class EnergyCurve:
    """Samples of ``E^{n,m}(t)`` for one Dyson map."""

    map_id: str
    n: int
    m: int
    c_plus: float
    c_minus: float
    t: np.ndarray
    E: np.ndarray

    @property
    def max_imag(self) -> float:
        return float(np.max(np.abs(np.imag(self.E)))) if self.E.size else 0.0

    def to_csv(self, path) -> Path:
        """Write ``t,E`` with 12 significant digits."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "E"])
            for tv, ev in zip(self.t, np.real(self.E)):
                w.writerow([f"{tv:.12g}", f"{ev:.12g}"])
        return path


def energy_from_f(fp, fm, n: int, m: int, c_plus: float, c_minus: float) -> np.ndarray:
    """``f_+ (n + 1/2) sqrt(1 + c_+^2) + f_- (m + 1/2) sqrt(1 + c_-^2)``."""
    if n < 0 or m < 0:
        raise ConfigError("quantum numbers must be nonnegative")
    sp = np.sqrt(np.asarray(1 + c_plus ** 2, dtype=complex))
    sm = np.sqrt(np.asarray(1 + c_minus ** 2, dtype=complex))
    return np.asarray(fp) * (n + 0.5) * sp + np.asarray(fm) * (m + 0.5) * sm


def energy_expectation(emap: ExactMap, n: int, m: int, c_plus: float, c_minus: float,
                       grid) -> EnergyCurve:
    """Instantaneous energy of ``Psi^{n,m}`` for an exact map.

    Raises
    ------
    DomainError
        If the map is not admissible somewhere on the grid.
    """
    t = _times(grid)
    fp, fm = emap.fpm(t)
    E = energy_from_f(fp, fm, n, m, c_plus, c_minus)
    return EnergyCurve(emap.case.label, n, m, float(c_plus), float(c_minus), t, E)


# ---------------------------------------------------------------------------
# figure data
# ---------------------------------------------------------------------------

FIG_T_END = 3 * math.pi
FIG_SAMPLES = 600
FIG1_PANELS = {"a": ("cost", (1, 1)), "b": ("half_t", (1, 1)),
               "c": ("cost", (1, 0)), "d": ("half_t", (1, 0))}
FIG2_PANELS = {"a": -0.1, "b": -0.3, "c": -0.5, "d": -0.9}
FIG2_NM = ((1, 1), (1, 0))


def figure_cases(figure: int) -> list[tuple[str, str, DysonCase, tuple[int, int]]]:
    """``(panel, a_name, case, (n, m))`` entries for a figure."""
    out = []
    if figure == 1:
        for panel, (a_name, nm) in FIG1_PANELS.items():
            for i in range(1, 7):
                out.append((panel, a_name, DysonCase(f"eta{i}", "c=0", 0.0, 2.0, 0.0, 1), nm))
    elif figure == 2:
        for panel, p in FIG2_PANELS.items():
            for i in (1, 3, 4, 5, 6):
                for nm in FIG2_NM:
                    out.append((panel, "cost", DysonCase(f"eta{i}", "c=plam", p, 2.5, 1.0), nm))
    else:
        raise ConfigError(f"figure must be 1 or 2, got {figure}")
    return out


def figure_curves(figure: int, samples: int = FIG_SAMPLES, c_plus: float = 1.0,
                  c_minus: float = 1.0) -> list[tuple[str, EnergyCurve]]:
    """Energy curves of a figure as ``(panel, curve)`` pairs."""
    t = np.linspace(0.0, FIG_T_END, samples)
    lam = from_name("sin2t")
    out = []
    for panel, a_name, case, (n, m) in figure_cases(figure):
        emap = ExactMap(case, from_name(a_name), lam)
        out.append((panel, energy_expectation(emap, n, m, c_plus, c_minus, t)))
    return out


def emit_figure_data(figure: int, outdir: str | os.PathLike, samples: int = FIG_SAMPLES) -> list[Path]:
    """Write one ``t,E`` CSV per (panel, map, n, m); returns the paths in emission order."""
    outdir = Path(outdir)
    paths = []
    for panel, curve in figure_curves(figure, samples):
        name = f"fig{figure}{panel}_{curve.map_id}_n{curve.n}_m{curve.m}.csv"
        paths.append(curve.to_csv(outdir / name))
    return paths

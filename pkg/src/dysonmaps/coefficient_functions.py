"""Time-dependent scalar coefficients with derivatives and antiderivatives.

Catalogue names accepted by :func:`from_name`:

``sin2t``, ``cost``, ``half_t``, ``exp``, ``const:<v>``, ``sigma3:<c1>,<c2>,<c3>``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .errors import ConfigError, DomainError, QuadratureError

KINDS = ("sin_scaled", "cos_scaled", "linear", "power_sigma", "constant",
         "exponential", "tabulated")


def adaptive_simpson(f: Callable[[float], float], a: float, b: float,
                     tol: float = 1e-10, max_depth: int = 50) -> float:
    """Adaptive Simpson quadrature of a scalar function on ``[a, b]``.

    Raises
    ------
    QuadratureError
        If the recursion depth is exhausted before the local error
        estimates fall below ``tol``.
    """
    if a == b:
        return 0.0
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0
    fa, fb, fm = f(a), f(b), f(0.5 * (a + b))
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    worst = [0.0]

    def rec(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        err = left + right - whole
        if abs(err) <= 15.0 * tol:
            return left + right + err / 15.0
        if depth <= 0:
            worst[0] = max(worst[0], abs(err) / 15.0)
            return left + right + err / 15.0
        return (rec(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + rec(m, b, fm, frm, fb, right, 0.5 * tol, depth - 1))

    val = rec(a, b, fa, fm, fb, whole, tol, max_depth)
    if worst[0] > tol:
        raise QuadratureError(f"adaptive Simpson on [{a}, {b}] did not converge", worst[0])
    return sign * val


@dataclass(frozen=True)
class CoeffFn:
    """Scalar coefficient function of time.

    Attributes
    ----------
    kind : str
        One of :data:`KINDS`.
    params : tuple of float
        ``sin_scaled``/``cos_scaled``: (amplitude, omega);
        ``linear``: (slope, intercept); ``constant``: (value,);
        ``exponential``: (amplitude, rate);
        ``power_sigma``: (c1, c2, c3, power, scale) for ``scale * sigma**power``
        with ``sigma = c1 + c2 t + c3 t^2``;
        ``tabulated``: unused (see ``table``).
    table : tuple of arrays, optional
        ``(t, values)`` for the tabulated kind.
    name : str
        Label used in reports.
    """

    kind: str
    params: tuple = ()
    table: tuple | None = field(default=None, repr=False, compare=False)
    name: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown coefficient kind {self.kind!r}")
        if self.kind == "tabulated":
            if self.table is None:
                raise ConfigError("tabulated coefficient needs a (t, values) table")
            tt, vv = (np.asarray(a, dtype=float) for a in self.table)
            object.__setattr__(self, "_spline", CubicSpline(tt, vv))

    # evaluation -----------------------------------------------------------

    def _check_domain(self, t):
        if self.kind == "tabulated":
            lo, hi = self.table[0][0], self.table[0][-1]
            t = np.asarray(t, dtype=float)
            bad = (t < lo - 1e-12) | (t > hi + 1e-12)
            if np.any(bad):
                raise DomainError(f"tabulated coefficient {self.name!r} is defined "
                                  f"on [{lo}, {hi}]", float(np.atleast_1d(t)[bad.ravel()][0]))

    def __call__(self, t):
        return self.deriv(t, 0)

    def eval(self, t):
        """Value at ``t`` (scalar or array)."""
        return self.deriv(t, 0)

    def deriv(self, t, order: int = 1):
        """Analytic derivative of the given order (0 to 3)."""
        if not 0 <= order <= 3:
            raise ConfigError("derivative order must be between 0 and 3")
        self._check_domain(t)
        t = np.asarray(t, dtype=float)
        k, P = self.kind, self.params
        if k in ("sin_scaled", "cos_scaled"):
            amp, w = P
            phase = w * t + (0.0 if k == "sin_scaled" else 0.5 * np.pi) + 0.5 * np.pi * order
            out = amp * w ** order * np.sin(phase)
        elif k == "linear":
            out = (P[0] * t + P[1]) if order == 0 else (np.full_like(t, P[0]) if order == 1
                                                          else np.zeros_like(t))
        elif k == "constant":
            out = np.full_like(t, P[0]) if order == 0 else np.zeros_like(t)
        elif k == "exponential":
            amp, r = P
            out = amp * r ** order * np.exp(r * t)
        elif k == "power_sigma":
            out = self._power_sigma(t, order)
        else:
            out = self._spline(t, order)
        return out[()] if out.ndim == 0 else out

    def _power_sigma(self, t, order):
        c1, c2, c3, k, scale = self.params
        s = c1 + c2 * t + c3 * t * t
        s1 = c2 + 2.0 * c3 * t
        s2 = 2.0 * c3
        if np.any(s <= 0):
            bad = np.atleast_1d(t)[np.atleast_1d(s <= 0)][0]
            raise DomainError("sigma must be positive", float(bad))
        if order == 0:
            return scale * s ** k
        if order == 1:
            return scale * k * s ** (k - 1) * s1
        if order == 2:
            return scale * (k * (k - 1) * s ** (k - 2) * s1 ** 2 + k * s ** (k - 1) * s2)
        return scale * (k * (k - 1) * (k - 2) * s ** (k - 3) * s1 ** 3
                        + 3 * k * (k - 1) * s ** (k - 2) * s1 * s2)

    # integration ----------------------------------------------------------

    @property
    def has_closed_antiderivative(self) -> bool:
        return self.kind in ("sin_scaled", "cos_scaled", "linear", "constant",
                             "exponential", "tabulated")

    def _primitive(self, t):
        k, P = self.kind, self.params
        if k == "sin_scaled":
            return -P[0] / P[1] * np.cos(P[1] * t)
        if k == "cos_scaled":
            return P[0] / P[1] * np.sin(P[1] * t)
        if k == "linear":
            return 0.5 * P[0] * t * t + P[1] * t
        if k == "constant":
            return P[0] * t
        if k == "exponential":
            return P[0] / P[1] * np.exp(P[1] * t)
        return self._spline.antiderivative()(t)

    def antideriv(self, t0: float, t, tol: float = 1e-10, method: str = "auto"):
        """Integral of the function from ``t0`` to ``t``.

        Parameters
        ----------
        t0 : float
            Anchor of the integral.
        t : float or array_like
        tol : float
            Absolute tolerance of the adaptive Simpson fallback.
        method : {'auto', 'closed', 'quadrature'}
            ``'auto'`` uses the closed form when one exists.
        """
        self._check_domain(t)
        t_arr = np.asarray(t, dtype=float)
        use_closed = method == "closed" or (method == "auto" and self.has_closed_antiderivative)
        if use_closed:
            if not self.has_closed_antiderivative:
                raise ConfigError(f"{self.kind} has no closed antiderivative")
            out = self._primitive(t_arr) - self._primitive(np.float64(t0))
            return out[()] if np.ndim(out) == 0 else out
        f = lambda s: float(self.eval(s))
        flat = t_arr.ravel()
        order = np.argsort(flat)
        res = np.empty_like(flat)
        acc, prev = 0.0, float(t0)
        # chain the integrals between sorted points; split across t0
        for i in order:
            ti = float(flat[i])
            if (prev - t0) * (ti - t0) < 0:
                acc, prev = 0.0, float(t0)
            acc += adaptive_simpson(f, prev, ti, tol / max(len(flat), 1))
            prev = ti
            res[i] = acc
        # for points on the other side of t0 the chain restarts at t0
        out = res.reshape(t_arr.shape)
        return out[()] if out.ndim == 0 else out

    def scaled(self, k: float, name: str = "") -> "CoeffFn":
        """The function multiplied by the constant ``k``."""
        k = float(k)
        P = self.params
        label = name or f"{k:g}*{self.name}"
        if self.kind in ("sin_scaled", "cos_scaled", "exponential"):
            return CoeffFn(self.kind, (k * P[0],) + tuple(P[1:]), name=label)
        if self.kind in ("linear", "constant"):
            return CoeffFn(self.kind, tuple(k * v for v in P), name=label)
        if self.kind == "power_sigma":
            return CoeffFn(self.kind, tuple(P[:4]) + (k * P[4],), name=label)
        tt, vv = self.table
        return CoeffFn("tabulated", table=(tt, tuple(k * v for v in vv)), name=label)

    # zeros ----------------------------------------------------------------

    def zeros(self, t0: float, t1: float, samples: int = 2001) -> np.ndarray:
        """Sign-change zeros of the function on ``[t0, t1]``, plus sampled exact zeros."""
        ts = np.linspace(t0, t1, samples)
        v = np.asarray(self.eval(ts), dtype=float)
        out = list(ts[v == 0.0])
        for i in np.flatnonzero(v[:-1] * v[1:] < 0):
            out.append(brentq(lambda s: float(self.eval(s)), ts[i], ts[i + 1], xtol=1e-14))
        return np.array(sorted(out))


def sin_scaled(omega: float = 1.0, amplitude: float = 1.0, name: str = "") -> CoeffFn:
    return CoeffFn("sin_scaled", (float(amplitude), float(omega)), name=name)


def cos_scaled(omega: float = 1.0, amplitude: float = 1.0, name: str = "") -> CoeffFn:
    return CoeffFn("cos_scaled", (float(amplitude), float(omega)), name=name)


def linear(slope: float, intercept: float = 0.0, name: str = "") -> CoeffFn:
    return CoeffFn("linear", (float(slope), float(intercept)), name=name)


def constant(value: float, name: str = "") -> CoeffFn:
    return CoeffFn("constant", (float(value),), name=name or f"const:{value:g}")


def exponential(rate: float = 1.0, amplitude: float = 1.0, name: str = "") -> CoeffFn:
    return CoeffFn("exponential", (float(amplitude), float(rate)), name=name)


def power_sigma(c1: float, c2: float, c3: float, power: float = -3.0,
                scale: float = 0.5, name: str = "") -> CoeffFn:
    """``scale * (c1 + c2 t + c3 t^2)**power``; defaults give ``sigma^-3 / 2``."""
    return CoeffFn("power_sigma", (float(c1), float(c2), float(c3), float(power), float(scale)),
                   name=name)


def tabulated(t, values, name: str = "") -> CoeffFn:
    t = np.asarray(t, dtype=float)
    if t.ndim != 1 or t.size < 4 or np.any(np.diff(t) <= 0):
        raise ConfigError("tabulated coefficient needs >= 4 strictly increasing times")
    return CoeffFn("tabulated", (), table=(tuple(t), tuple(np.asarray(values, dtype=float))),
                   name=name)


def from_name(name: str) -> CoeffFn:
    """Resolve a catalogue name such as ``sin2t`` or ``sigma3:1,0.2,0.1``."""
    key = name.strip()
    if key == "sin2t":
        return sin_scaled(2.0, name=key)
    if key == "cost":
        return cos_scaled(1.0, name=key)
    if key == "half_t":
        return linear(0.5, name=key)
    if key in ("exp", "exp_t"):
        return exponential(1.0, name=key)
    if key == "zero":
        return constant(0.0, name=key)
    if key.startswith("const:"):
        try:
            return constant(float(key[6:]), name=key)
        except ValueError as exc:
            raise ConfigError(f"bad constant in {name!r}") from exc
    if key.startswith("sigma3:"):
        try:
            c = [float(v) for v in key[7:].split(",")]
        except ValueError as exc:
            raise ConfigError(f"bad sigma coefficients in {name!r}") from exc
        if len(c) != 3:
            raise ConfigError(f"sigma3 needs three coefficients, got {name!r}")
        return power_sigma(*c, name=key)
    raise ConfigError(f"unknown coefficient name {name!r}")


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid with ``steps`` intervals on ``[t_start, t_end]``."""

    t_start: float
    t_end: float
    steps: int

    def __post_init__(self):
        if not self.t_end > self.t_start:
            raise ConfigError("time grid needs t_end > t_start")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ConfigError("time grid needs a positive integer step count")

    @classmethod
    def from_step(cls, t_start: float, t_end: float, step: float) -> "TimeGrid":
        steps = max(1, int(round((t_end - t_start) / step)))
        return cls(t_start, t_end, steps)

    @property
    def step(self) -> float:
        return (self.t_end - self.t_start) / self.steps

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.t_start, self.t_end, self.steps + 1)

    def __len__(self):
        return self.steps + 1

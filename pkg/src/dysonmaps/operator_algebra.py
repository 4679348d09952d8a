"""Four-generator algebra of the coupled oscillators and truncated Fock matrices.

The generators are

    K1 = (px^2 + x^2)/2,  K2 = (py^2 + y^2)/2,
    K3 = (x y + px py)/2, K4 = (x py - y px)/2,

with hbar = 1.  They close under commutation; ``K1 + K2`` is central.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable, Mapping

import numpy as np

from .errors import ConfigError, DomainError

GENERATORS = ("K1", "K2", "K3", "K4")

# STRUCTURE[i, j] holds the components of [K_{i+1}, K_{j+1}] along K1..K4.
STRUCTURE = np.zeros((4, 4, 4), dtype=complex)
STRUCTURE[0, 2, 3] = 1j  # [K1,K3] = i K4
STRUCTURE[0, 3, 2] = -1j  # [K1,K4] = -i K3
STRUCTURE[1, 2, 3] = -1j  # [K2,K3] = -i K4
STRUCTURE[1, 3, 2] = 1j  # [K2,K4] = i K3
STRUCTURE[2, 3, 0] = 0.5j  # [K3,K4] = i (K1 - K2)/2
STRUCTURE[2, 3, 1] = -0.5j
STRUCTURE -= STRUCTURE.transpose(1, 0, 2)

RELATIONS = (("K1", "K2"), ("K1", "K3"), ("K1", "K4"),
             ("K2", "K3"), ("K2", "K4"), ("K3", "K4"))


class KVector:
    """Element of the complex span of K1..K4.

    Parameters
    ----------
    coeffs : array_like, shape (4,)
        Components along K1, K2, K3, K4.
    """

    __slots__ = ("_c",)

    def __init__(self, coeffs):
        c = np.array(coeffs, dtype=complex).reshape(4)
        c.setflags(write=False)
        self._c = c

    @property
    def coeffs(self) -> np.ndarray:
        return self._c

    @classmethod
    def zero(cls) -> "KVector":
        return cls(np.zeros(4))

    @classmethod
    def basis(cls, name: str) -> "KVector":
        c = np.zeros(4, dtype=complex)
        c[GENERATORS.index(name)] = 1.0
        return cls(c)

    def __add__(self, other: "KVector") -> "KVector":
        return KVector(self._c + other._c)

    def __sub__(self, other: "KVector") -> "KVector":
        return KVector(self._c - other._c)

    def __neg__(self) -> "KVector":
        return KVector(-self._c)

    def __mul__(self, scalar) -> "KVector":
        return KVector(self._c * complex(scalar))

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        return isinstance(other, KVector) and np.array_equal(self._c, other._c)

    def __hash__(self):
        return hash(self._c.tobytes())

    def allclose(self, other: "KVector", atol: float = 1e-14) -> bool:
        return bool(np.allclose(self._c, other._c, rtol=0.0, atol=atol))

    def norm(self) -> float:
        return float(np.linalg.norm(self._c))

    def to_matrix(self, rep: "MatrixRep") -> np.ndarray:
        """Matrix of this element in a two-mode representation."""
        return sum(c * rep[name] for c, name in zip(self._c, GENERATORS))

    def __repr__(self):
        terms = ", ".join(f"{n}={c:.6g}" for n, c in zip(GENERATORS, self._c))
        return f"KVector({terms})"


def commutator_k(a: KVector, b: KVector) -> KVector:
    """Commutator ``[a, b]`` from the structure constants."""
    return KVector(np.einsum("i,j,ijk->k", a.coeffs, b.coeffs, STRUCTURE))


def ladder_ops(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Position and momentum matrices on the first ``n`` Fock levels.

    Uses ``x = (a + a^dag)/sqrt(2)`` and ``p = i (a^dag - a)/sqrt(2)``.
    """
    a = np.diag(np.sqrt(np.arange(1, n, dtype=float)), 1).astype(complex)
    ad = a.conj().T
    x = (a + ad) / np.sqrt(2.0)
    p = 1j * (ad - a) / np.sqrt(2.0)
    return x, p


@dataclass(frozen=True)
class MatrixRep:
    """Truncated Fock-space matrices with an interior margin.

    Attributes
    ----------
    dim_per_mode : int
        Kept Fock levels per mode.
    mode_count : int
        1 (quartic) or 2 (coupled oscillators).
    matrices : Mapping[str, ndarray]
        Named operator matrices, all of size ``dim_per_mode**mode_count``.
    interior_margin : int
        Number of top Fock levels per mode excluded from residual checks.
    """

    dim_per_mode: int
    mode_count: int
    matrices: Mapping[str, np.ndarray] = field(repr=False)
    interior_margin: int = 3

    @property
    def dim(self) -> int:
        return self.dim_per_mode ** self.mode_count

    def __getitem__(self, name: str) -> np.ndarray:
        return self.matrices[name]

    def quanta(self) -> tuple[np.ndarray, ...]:
        """Fock quantum numbers of each basis state, one array per mode."""
        n = self.dim_per_mode
        if self.mode_count == 1:
            return (np.arange(n),)
        nx, ny = np.divmod(np.arange(n * n), n)
        return nx, ny

    def interior_indices(self) -> np.ndarray:
        """Basis indices with every quantum number below ``n - margin``."""
        cut = self.dim_per_mode - self.interior_margin
        mask = np.ones(self.dim, dtype=bool)
        for q in self.quanta():
            mask &= q < cut
        return np.flatnonzero(mask)

    def project(self, m: np.ndarray) -> np.ndarray:
        idx = self.interior_indices()
        return m[np.ix_(idx, idx)]

    def block_indices(self, total: int) -> np.ndarray:
        """Indices of the two-mode states with ``nx + ny == total``, ordered by nx."""
        if self.mode_count != 2:
            raise ConfigError("quantum-number blocks need a two-mode representation")
        nx, ny = self.quanta()
        idx = np.flatnonzero(nx + ny == total)
        return idx[np.argsort(nx[idx])]

    def interior_blocks(self) -> list[int]:
        """Total-quanta values whose blocks are complete and inside the margin."""
        return list(range(self.dim_per_mode - self.interior_margin))

    def block(self, m: np.ndarray, total: int) -> np.ndarray:
        idx = self.block_indices(total)
        return m[np.ix_(idx, idx)]


def build_fock_rep_2mode(n: int, margin: int = 3) -> MatrixRep:
    """Two-mode representation carrying x, y, px, py and K1..K4.

    Quadratic operators are formed in dimension ``n + 2`` and truncated, so
    they are exact on every kept level.
    """
    if n < 4:
        raise ConfigError(f"two-mode truncation needs n >= 4, got {n}")
    if not 0 <= margin < n:
        raise ConfigError(f"margin must satisfy 0 <= margin < n, got {margin}")
    xb, pb = ladder_ops(n + 2)
    x, p = xb[:n, :n], pb[:n, :n]
    ho = 0.5 * (pb @ pb + xb @ xb)[:n, :n]
    eye = np.eye(n)
    mats = {
        "x": np.kron(x, eye), "px": np.kron(p, eye),
        "y": np.kron(eye, x), "py": np.kron(eye, p),
        "K1": np.kron(ho, eye), "K2": np.kron(eye, ho),
        "K3": 0.5 * (np.kron(x, x) + np.kron(p, p)),
        "K4": 0.5 * (np.kron(x, p) - np.kron(p, x)),
        "I": np.eye(n * n, dtype=complex),
    }
    for m in mats.values():
        m.setflags(write=False)
    return MatrixRep(n, 2, MappingProxyType(mats), margin)


def build_fock_rep_1mode(n: int, margin: int = 10) -> MatrixRep:
    """One-mode representation with x, p, p^2, p^3 and ``{x, p^2}``.

    The powers of p are matrix powers of the stored p, so they commute exactly.
    """
    if n < 8:
        raise ConfigError(f"one-mode truncation needs n >= 8, got {n}")
    if not 0 <= margin < n:
        raise ConfigError(f"margin must satisfy 0 <= margin < n, got {margin}")
    x, p = ladder_ops(n)
    p2 = p @ p
    p3 = p2 @ p
    mats = {"x": x, "p": p, "p2": p2, "p3": p3,
            "xp2": x @ p2 + p2 @ x, "I": np.eye(n, dtype=complex)}
    for m in mats.values():
        m.setflags(write=False)
    return MatrixRep(n, 1, MappingProxyType(mats), margin)


def _expected(a: str, b: str) -> KVector:
    return commutator_k(KVector.basis(a), KVector.basis(b))


@dataclass(frozen=True)
class AlgebraReport:
    """Per-relation interior residuals of the commutation table."""

    residuals: Mapping[str, float]
    tol: float

    @property
    def passed(self) -> bool:
        return all(r < self.tol for r in self.residuals.values())

    @property
    def failed_relation(self) -> str | None:
        for name, r in self.residuals.items():
            if not r < self.tol:
                return name
        return None

    def raise_for_failure(self) -> None:
        name = self.failed_relation
        if name is not None:
            raise DomainError(f"relation {name} violated: residual "
                              f"{self.residuals[name]:.3e} >= {self.tol:.1e}")


def verify_algebra(rep: MatrixRep, tol: float = 1e-10) -> AlgebraReport:
    """Check the six commutation relations on the interior of ``rep``.

    The residual of ``[A, B] = C`` is ``||P([A,B] - C)P||_F`` divided by
    ``max(||PCP||_F, ||PAP||_F ||PBP||_F / ||P||_F, 1)``.
    """
    if rep.mode_count != 2:
        raise ConfigError("verify_algebra needs a two-mode representation")
    out = {}
    for a, b in RELATIONS:
        A, B = rep[a], rep[b]
        comm = rep.project(A @ B - B @ A)
        exp = rep.project(_expected(a, b).to_matrix(rep))
        scale = max(np.linalg.norm(exp),
                    np.linalg.norm(rep.project(A)) * np.linalg.norm(rep.project(B))
                    / np.sqrt(len(rep.interior_indices())), 1.0)
        out[f"[{a},{b}]"] = float(np.linalg.norm(comm - exp) / scale)
    return AlgebraReport(MappingProxyType(out), tol)


def kvector_from_matrix(m: np.ndarray, rep: MatrixRep) -> tuple[KVector, float]:
    """Least-squares K-components of ``m`` on the interior.

    Returns
    -------
    vec : KVector
    residual : float
        Relative Frobenius norm of the part of ``m`` outside the span.
    """
    target = rep.project(m).ravel()
    basis = np.stack([rep.project(rep[g]).ravel() for g in GENERATORS], axis=1)
    coef, *_ = np.linalg.lstsq(basis, target, rcond=None)
    resid = np.linalg.norm(basis @ coef - target) / max(np.linalg.norm(target), 1e-300)
    return KVector(coef), float(resid)


@dataclass(frozen=True)
class HamiltonianSpec:
    """Time-dependent coefficients of a model Hamiltonian.

    For ``model='coupled'`` the Hamiltonian is ``a K1 + b K2 + i lam K3 + mu K4``;
    for ``model='quartic'`` only ``g`` is used.
    """

    model: str
    a: Callable | None = None
    b: Callable | None = None
    lam: Callable | None = None
    mu: Callable | None = None
    g: Callable | None = None

    def __post_init__(self):
        if self.model not in ("coupled", "quartic"):
            raise ConfigError(f"unknown model {self.model!r}")
        if self.model == "coupled" and (self.a is None or self.lam is None):
            raise ConfigError("coupled model needs at least a and lam")
        if self.model == "quartic" and self.g is None:
            raise ConfigError("quartic model needs g")

    def _eval(self, f, t):
        return np.zeros_like(np.asarray(t, dtype=float)) if f is None else f(t)

    def coefficients(self, t):
        """Return ``(a, b, lam, mu)`` at ``t``; ``b`` defaults to ``a``."""
        a = self.a(t)
        b = a if self.b is None else self.b(t)
        return a, b, self.lam(t), self._eval(self.mu, t)

    def c(self, t):
        a, b, _, _ = self.coefficients(t)
        return a - b

    def kvector(self, t: float) -> KVector:
        a, b, lam, mu = self.coefficients(t)
        return KVector([a, b, 1j * lam, mu])

    def matrix(self, rep: MatrixRep, t: float) -> np.ndarray:
        if self.model == "quartic":
            g = self.g(t)
            x = rep["x"]
            return (rep["p2"] - 0.5 * rep["p"] + 0.5j * rep["xp2"]
                    + g * (x @ x - 2j * x - rep["I"]))
        return self.kvector(t).to_matrix(rep)

    def validate(self, times) -> None:
        """Check the model invariants on the sample times."""
        times = np.asarray(times, dtype=float)
        if self.model == "quartic":
            g = np.asarray(self.g(times), dtype=float)
            bad = np.flatnonzero(~(g > 0))
            if bad.size:
                raise DomainError("quartic coupling g must be positive", times[bad[0]])
            return
        for name in ("a", "b", "lam", "mu"):
            f = getattr(self, name)
            if f is None:
                continue
            v = np.asarray(f(times))
            if np.iscomplexobj(v) and np.any(np.abs(v.imag) > 0):
                raise DomainError(f"coefficient {name} is not real")

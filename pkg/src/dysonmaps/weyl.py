"""Normal-ordered polynomials in ``x`` and ``p`` with ``[x, p] = i``.

A polynomial is stored as ``{(i, j): coeff}`` for monomials ``x^i p^j``.
Products reorder ``p^j x^k`` with

    p^j x^k = sum_r r! C(j, r) C(k, r) (-i)^r x^(k-r) p^(j-r).
"""

from __future__ import annotations

from collections import defaultdict
from math import comb, factorial

import numpy as np

from .operator_algebra import ladder_ops


class WeylPoly:
    """Element of the Weyl algebra in normal (x-left) order."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict | None = None):
        self.terms = {k: complex(v) for k, v in (terms or {}).items() if v != 0}

    @classmethod
    def x(cls) -> "WeylPoly":
        return cls({(1, 0): 1})

    @classmethod
    def p(cls) -> "WeylPoly":
        return cls({(0, 1): 1})

    @classmethod
    def const(cls, v: complex) -> "WeylPoly":
        return cls({(0, 0): v})

    @staticmethod
    def _lift(o) -> "WeylPoly":
        return o if isinstance(o, WeylPoly) else WeylPoly.const(o)

    def __add__(self, o):
        o = self._lift(o)
        d = defaultdict(complex, self.terms)
        for k, v in o.terms.items():
            d[k] += v
        return WeylPoly(d)

    __radd__ = __add__

    def __neg__(self):
        return WeylPoly({k: -v for k, v in self.terms.items()})

    def __sub__(self, o):
        return self + (-self._lift(o))

    def __rsub__(self, o):
        return (-self) + o

    def __mul__(self, o):
        if not isinstance(o, WeylPoly):
            return WeylPoly({k: v * o for k, v in self.terms.items()})
        d = defaultdict(complex)
        for (i, j), a in self.terms.items():
            for (k, l), b in o.terms.items():
                for r in range(min(j, k) + 1):
                    d[(i + k - r, j - r + l)] += a * b * factorial(r) * comb(j, r) * comb(k, r) * (-1j) ** r
        return WeylPoly(d)

    def __rmul__(self, o):
        return self * o

    def __pow__(self, n: int):
        out = WeylPoly.const(1)
        for _ in range(n):
            out = out * self
        return out

    def commutator(self, o) -> "WeylPoly":
        return self * o - o * self

    def anticommutator(self, o) -> "WeylPoly":
        return self * o + o * self

    def adjoint(self) -> "WeylPoly":
        """``(x^i p^j)^dagger = p^j x^i``, re-ordered."""
        out = WeylPoly()
        x, p = WeylPoly.x(), WeylPoly.p()
        for (i, j), v in self.terms.items():
            out = out + (p ** j) * (x ** i) * np.conj(v)
        return out

    def substitute(self, X: "WeylPoly", P: "WeylPoly") -> "WeylPoly":
        """Image under the automorphism ``x -> X``, ``p -> P``."""
        out = WeylPoly()
        for (i, j), v in self.terms.items():
            out = out + (X ** i) * (P ** j) * v
        return out

    @property
    def degree(self) -> int:
        return max((i + j for i, j in self.terms), default=0)

    def max_abs(self) -> float:
        return max((abs(v) for v in self.terms.values()), default=0.0)

    def to_matrix(self, n: int) -> np.ndarray:
        """Fock-basis matrix on ``n`` levels, exact on every kept level.

        Monomials are formed in dimension ``n + degree`` and truncated.
        """
        big = n + self.degree
        xb, pb = ladder_ops(big)
        xpow = [np.eye(big, dtype=complex)]
        ppow = [np.eye(big, dtype=complex)]
        for _ in range(self.degree):
            xpow.append(xpow[-1] @ xb)
            ppow.append(ppow[-1] @ pb)
        M = np.zeros((big, big), dtype=complex)
        for (i, j), v in self.terms.items():
            M += v * (xpow[i] @ ppow[j])
        return M[:n, :n]

    def __repr__(self) -> str:
        parts = [f"({v:.6g})x^{i}p^{j}" for (i, j), v in sorted(self.terms.items())]
        return " + ".join(parts) if parts else "0"

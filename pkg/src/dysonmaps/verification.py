"""Matrix-level checks of Dyson maps on truncated Fock spaces.

For the coupled oscillators every ``K_i`` conserves the total number of quanta
``N = nx + ny``, so all operators are block diagonal and each block with
``N < n`` is represented exactly.  Residuals are therefore evaluated block by
block on the interior blocks ``N < n - margin``.

``h = eta H eta^-1 + i eta_dot eta^-1`` is formed as follows.

* ``eta H eta^-1`` by successive conjugations in the eigenbasis of each slot
  generator.
* ``eta_dot eta^-1`` by a central difference of the telescoped increment
  ``eta(t +- d) eta(t)^-1 - I``, which avoids cancellation.

Blocks whose map is badly conditioned (estimate above ``1e6``) are evaluated
with arbitrary-precision ball arithmetic at a precision matched to the condition estimate.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable, Sequence

import flint
import numpy as np
from scipy.linalg import expm

from .coefficient_functions import CoeffFn
from .errors import ConditioningError, ConfigError, ExceptionalPointError
from .exact_maps import ExactMap
from .operator_algebra import MatrixRep

MP_THRESHOLD = 1e6


# ---------------------------------------------------------------------------
# generic full-matrix Dyson map
# ---------------------------------------------------------------------------

def slot_matrix(rep: MatrixRep, slot) -> np.ndarray:
    """Matrix of a slot ``(name, imaginary)``: ``K`` or ``i K``."""
    name, imag = slot
    m = np.asarray(rep[name], dtype=complex)
    return 1j * m if imag else m


def dyson_matrix(slots: Sequence, gammas: Sequence[float], rep: MatrixRep,
                 ceiling: float = 1e12) -> np.ndarray:
    """``eta = prod_i exp(gamma_i Q_i)`` in slot order (scaling and squaring).

    Raises
    ------
    ConditioningError
        If the exponent norms bound the condition number above ``ceiling``.
    """
    eta = np.eye(rep.dim, dtype=complex)
    total = 0.0
    for slot, g in zip(slots, gammas):
        Q = slot_matrix(rep, slot)
        if not slot[1]:
            total += abs(g) * np.linalg.norm(Q, 2)
        eta = eta @ expm(g * Q)
    if 2 * total > np.log(ceiling):
        raise ConditioningError(f"Dyson map exponent norm {total:.3g} exceeds the ceiling",
                                total)
    return eta


# ---------------------------------------------------------------------------
# block engine
# ---------------------------------------------------------------------------

@dataclass
class _Block:
    N: int
    K: dict            # name -> Hermitian block (numpy)
    eig: dict          # name -> (w, V)

    @property
    def size(self) -> int:
        return self.N + 1


class BlockEngine:
    """Per-block exact representation of the coupled-oscillator operators."""

    def __init__(self, rep: MatrixRep):
        if rep.mode_count != 2:
            raise ConfigError("block engine needs a two-mode representation")
        self.rep = rep
        self.blocks: list[_Block] = []
        for N in rep.interior_blocks():
            K = {k: rep.block(np.asarray(rep[k], dtype=complex), N) for k in ("K1", "K2", "K3", "K4")}
            eig = {k: np.linalg.eigh(v) for k, v in K.items()}
            self.blocks.append(_Block(N, K, eig))

    @staticmethod
    def condition_estimate(block: _Block, slots, gam) -> float:
        """Upper bound on ``cond(eta)`` in the block from the Hermitian slots."""
        e = 0.0
        for (name, imag), g in zip(slots, gam):
            if not imag:
                w = block.eig[name][0]
                e += abs(g) * (w.max() - w.min())
        return float(np.exp(min(e, 700.0)))


# float path --------------------------------------------------------------

def _conj_np(w, V, z, X):
    """``exp(z G) X exp(-z G)`` with ``G = V diag(w) V^H``."""
    f = np.exp(z * (w[:, None] - w[None, :]))
    return V @ (f * (V.conj().T @ X @ V)) @ V.conj().T


def _delta_np(eigs, zs, dzs):
    """``eta(gamma + dgamma) eta(gamma)^-1 - I`` via nested expm1 increments."""
    D = None
    for (w, V), z, dz in list(zip(eigs, zs, dzs))[::-1]:
        Em1 = (V * np.expm1(dz * w)) @ V.conj().T
        if D is None:
            D = Em1
        else:
            D = Em1 + (np.eye(len(w)) + Em1) @ _conj_np(w, V, z, D)
    return D


def _eta_np(eigs, zs):
    eta = None
    for (w, V), z in zip(eigs, zs):
        E = (V * np.exp(z * w)) @ V.conj().T
        eta = E if eta is None else eta @ E
    return eta


# high-precision path ----------------------------------------------------

def _exact_entry(v: float):
    """Exact ball for an entry of the form ``+- sqrt(q) / 2`` with integer ``q``."""
    if v == 0.0:
        return flint.arb(0)
    q = round(4 * v * v)
    if q > 0 and abs(4 * v * v - q) < 1e-9 * q:
        r = flint.arb(q).sqrt() / 2
        return r if v > 0 else -r
    return flint.arb(v)


def _exact_block(X: np.ndarray):
    """acb matrix whose entries are the exact values the float block rounds."""
    m = X.shape[0]
    return flint.acb_mat(m, m, [flint.acb(_exact_entry(X[i, j].real), _exact_entry(X[i, j].imag))
                               for i in range(m) for j in range(m)])


def _to_np(A) -> np.ndarray:
    return np.array([[complex(e.mid()) for e in row] for row in A.tolist()])


def _fro(A) -> float:
    return float(np.linalg.norm(_to_np(A)))


def _acb(z: complex):
    return flint.acb(float(np.real(z)), float(np.imag(z)))


# ---------------------------------------------------------------------------
# residual reports
# ---------------------------------------------------------------------------

@dataclass
class ResidualReport:
    """Per-time relative residuals (interior blocks).

    Columns: ``herm`` = ||h - h^H|| / ||h||, ``pred`` = ||h - h_pred|| / ||h_pred||
    (Frobenius norms summed over interior blocks) and ``tdqh`` =
    max over blocks of ||H^H rho - rho H - i rho_dot|| / ||rho||.
    """

    t: np.ndarray
    herm: np.ndarray
    pred: np.ndarray
    tdqh: np.ndarray
    fd_error: np.ndarray = field(default_factory=lambda: np.zeros(0))
    precision: list = field(default_factory=list)
    excluded: np.ndarray = field(default_factory=lambda: np.zeros(0))
    label: str = ""

    def max(self, column: str) -> float:
        v = getattr(self, column)
        v = v[np.isfinite(v)]
        return float(v.max()) if v.size else float("nan")

    def passed(self, tol: float) -> bool:
        cols = [c for c in ("herm", "pred", "tdqh") if np.any(np.isfinite(getattr(self, c)))]
        return all(self.max(c) < tol for c in cols)

    def fd_flagged(self, tol: float) -> bool:
        """True if the Richardson estimate of the difference error exceeds ``10 tol``."""
        return bool(self.fd_error.size and np.nanmax(self.fd_error) > 10 * tol)

    def to_csv(self, path=None) -> str:
        """CSV with columns ``t, herm_resid, pred_resid, tdqh_resid`` (12 significant digits)."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "herm_resid", "pred_resid", "tdqh_resid"])
        for row in zip(self.t, self.herm, self.pred, self.tdqh):
            w.writerow([f"{v:.12g}" for v in row])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def exclusion_times(funcs: Sequence[CoeffFn], t0: float, t1: float) -> np.ndarray:
    """Zeros of the coefficient functions inside ``[t0, t1]``."""
    zs = [f.zeros(t0, t1) for f in funcs if not (f.kind == "constant" and f.params[0] == 0.0)]
    z = np.sort(np.concatenate(zs)) if zs else np.zeros(0)
    # shared zeros found by different functions differ by rounding only
    return z[np.concatenate(([True], np.diff(z) > 1e-9))] if z.size else z


def exclude(times: np.ndarray, zeros: np.ndarray, radius: float = 0.05) -> tuple[np.ndarray, np.ndarray]:
    """Split ``times`` into kept samples and those within ``radius`` of a zero."""
    times = np.asarray(times, dtype=float)
    if zeros.size == 0:
        return times, np.zeros(0)
    near = np.min(np.abs(times[:, None] - zeros[None, :]), axis=1) < radius
    return times[~near], times[near]


def _ham_block(blk: _Block, coeffs) -> np.ndarray:
    a, b, lam, mu = coeffs
    return a * blk.K["K1"] + b * blk.K["K2"] + 1j * lam * blk.K["K3"] + mu * blk.K["K4"]


def _pred_block(blk: _Block, f) -> np.ndarray:
    return f[0] * blk.K["K1"] + f[1] * blk.K["K2"] + f[2] * blk.K["K3"] + f[3] * blk.K["K4"]


def _block_residuals(blk: _Block, slots, gam5: np.ndarray, coeffs, d: float,
                     want_tdqh: bool, force_mp: bool = False):
    """Residual pieces for one block.

    ``gam5`` holds the slot coefficients at ``t - 2d, t - d, t, t + d, t + d2``.
    Returns ``(h, fd_err_abs, tdqh_rel, precision)``.
    """
    Hb = _ham_block(blk, coeffs)
    zfac = [1j if imag else 1.0 for _, imag in slots]
    names = [name for name, _ in slots]
    g0 = gam5[:, 2]
    zs = [z * g for z, g in zip(zfac, g0)]
    dz = {k: [z * (gam5[i, k] - g0[i]) for i, z in enumerate(zfac)] for k in (0, 1, 3, 4)}
    cond = BlockEngine.condition_estimate(blk, slots, g0)
    if cond < MP_THRESHOLD and not force_mp:
        eigs = [blk.eig[n] for n in names]
        X = Hb
        for (w, V), z in list(zip(eigs, zs))[::-1]:
            X = _conj_np(w, V, z, X)
        Dp, Dm = _delta_np(eigs, zs, dz[3]), _delta_np(eigs, zs, dz[1])
        D2p, D2m = _delta_np(eigs, zs, dz[4]), _delta_np(eigs, zs, dz[0])
        A1 = (Dp - Dm) / (2 * d)
        A2 = (D2p - D2m) / (4 * d)
        h = X + 1j * A1
        fd_err = np.linalg.norm(A1 - A2) / 3.0
        tq = np.nan
        if want_tdqh:
            tq = _tdqh_np(eigs, zfac, gam5, Hb, d)
        return h, fd_err, tq, "float64"
    dps = int(30 + 2 * np.log10(max(cond, 10.0)))
    old = flint.ctx.dps
    flint.ctx.dps = dps
    try:
        K = {n: _exact_block(blk.K[n]) for n in set(names) | {"K1", "K2", "K3", "K4"}}

        def eta(k, sign=1):
            E = None
            order = range(len(names)) if sign > 0 else range(len(names) - 1, -1, -1)
            for i in order:
                F = (K[names[i]] * _acb(sign * zfac[i] * gam5[i, k])).exp()
                E = F if E is None else E * F
            return E

        a, b, lam, mu = coeffs
        Hm = (K["K1"] * _acb(a) + K["K2"] * _acb(b) + K["K3"] * _acb(1j * lam)
              + K["K4"] * _acb(mu))
        e_inv = eta(2, -1)
        etas = {k: eta(k) for k in range(5)}
        A1 = (etas[3] - etas[1]) * e_inv * flint.acb(1 / (2 * d))
        A2 = (etas[4] - etas[0]) * e_inv * flint.acb(1 / (4 * d))
        h = _to_np(etas[2] * Hm * e_inv + A1 * flint.acb(0, 1))
        fd_err = _fro(A1 - A2) / 3.0
        tq = np.nan
        if want_tdqh:
            rho = {k: etas[k].conjugate().transpose() * etas[k] for k in (1, 2, 3)}
            R = (Hm.conjugate().transpose() * rho[2] - rho[2] * Hm
                 - (rho[3] - rho[1]) * flint.acb(0, 1 / (2 * d)))
            tq = _fro(R) / _fro(rho[2])
    finally:
        flint.ctx.dps = old
    return h, fd_err, tq, f"mp{dps}"


def _tdqh_np(eigs, zfac, gam5, Hb, d):
    etas = {k: _eta_np(eigs, [z * g for z, g in zip(zfac, gam5[:, k])]) for k in (1, 2, 3)}
    rho = {k: e.conj().T @ e for k, e in etas.items()}
    R = Hb.conj().T @ rho[2] - rho[2] @ Hb - 1j * (rho[3] - rho[1]) / (2 * d)
    return np.linalg.norm(R) / np.linalg.norm(rho[2])


def residual_report(emap: ExactMap, rep: MatrixRep, times, fd_step: float = 1e-4,
                    gamma_fn: Callable | None = None, tdqh: bool = True,
                    apply_exclusions: bool = True, engine: BlockEngine | None = None,
                    force_mp: bool = False) -> ResidualReport:
    """TDDE and TDQH residuals of an exact map on a two-mode representation.

    Parameters
    ----------
    emap : ExactMap
    rep : MatrixRep
    times : array_like
    fd_step : float
        Central-difference step for ``eta_dot``.
    gamma_fn : callable, optional
        ``t_array -> (nslots, nt)`` replacement for ``emap.gammas`` (defect
        injection).
    apply_exclusions : bool
        Drop samples within 0.05 of a zero of ``a``, ``b`` or ``lambda``.
    """
    engine = engine or BlockEngine(rep)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    excluded = np.zeros(0)
    if apply_exclusions and times.size:
        funcs = [emap.a, emap._lam_eff] + ([emap.mu] if emap.mu is not None else [])
        zeros = exclusion_times(funcs, times.min() - 0.1, times.max() + 0.1)
        times, excluded = exclude(times, zeros)
    gfun = gamma_fn or emap.gammas
    slots = emap.slots
    out = {k: [] for k in ("herm", "pred", "tdqh", "fd", "prec")}
    for t in times:
        tt = t + fd_step * np.arange(-2, 3)
        gam5 = np.asarray(gfun(tt), dtype=float)
        coeffs = [float(v[0]) for v in emap.coefficients(np.array([t]))]
        f = emap.predicted_h(np.array([t]))[:, 0]
        num_h = den_h = num_p = den_p = fd = 0.0
        tq = 0.0
        precs = []
        for blk in engine.blocks:
            Pb = _pred_block(blk, f)
            h, fd_err, tqb, prec = _block_residuals(blk, slots, gam5, coeffs, fd_step, tdqh, force_mp)
            precs.append(prec)
            num_h += np.linalg.norm(h - h.conj().T) ** 2
            den_h += np.linalg.norm(h) ** 2
            num_p += np.linalg.norm(h - Pb) ** 2
            den_p += np.linalg.norm(Pb) ** 2
            fd += fd_err ** 2
            if tdqh:
                tq = max(tq, tqb)
        out["herm"].append(np.sqrt(num_h / den_h))
        out["pred"].append(np.sqrt(num_p / den_p) if den_p > 0 else np.inf)
        out["tdqh"].append(tq if tdqh else np.nan)
        out["fd"].append(np.sqrt(fd / den_h))
        out["prec"].append(max(set(precs), key=precs.count) if precs else "")
    return ResidualReport(times, np.array(out["herm"]), np.array(out["pred"]), np.array(out["tdqh"]),
                          np.array(out["fd"]), out["prec"], excluded, emap.case.label)


def tdde_residual(emap: ExactMap, rep: MatrixRep, times, fd_step: float = 1e-4, **kw) -> ResidualReport:
    """Hermiticity and prediction residuals of ``h = eta H eta^-1 + i eta_dot eta^-1``."""
    return residual_report(emap, rep, times, fd_step, tdqh=False, **kw)


def tdqh_residual(emap: ExactMap, rep: MatrixRep, times, fd_step: float = 1e-4, **kw) -> ResidualReport:
    """All three residuals including ``H^H rho - rho H - i rho_dot`` with ``rho = eta^H eta``."""
    return residual_report(emap, rep, times, fd_step, tdqh=True, **kw)


def tdqh_matrix_residual(H: np.ndarray, rho_fn: Callable[[float], np.ndarray], t: float,
                         fd_step: float = 1e-4) -> float:
    """``||H^H rho - rho H - i rho_dot|| / ||rho||`` for explicit matrices."""
    rho = rho_fn(t)
    rdot = (rho_fn(t + fd_step) - rho_fn(t - fd_step)) / (2 * fd_step)
    R = H.conj().T @ rho - rho @ H - 1j * rdot
    return float(np.linalg.norm(R) / np.linalg.norm(rho))


# ---------------------------------------------------------------------------
# energy operator
# ---------------------------------------------------------------------------

def _assemble(blocks_mats, engine: BlockEngine):
    idx = np.concatenate([engine.rep.block_indices(b.N) for b in engine.blocks])
    pos = {k: i for i, k in enumerate(idx)}
    M = np.zeros((len(idx), len(idx)), dtype=complex)
    for b, m in zip(engine.blocks, blocks_mats):
        bi = [pos[k] for k in engine.rep.block_indices(b.N)]
        M[np.ix_(bi, bi)] = m
    return M, idx


@dataclass
class EnergyOperator:
    """``H_tilde = eta^-1 h eta`` on the interior blocks, with ``h``, ``eta`` and ``rho``."""

    H_tilde: np.ndarray
    h: np.ndarray
    eta: np.ndarray
    rho: np.ndarray
    indices: np.ndarray

    @property
    def pseudo_hermiticity_residual(self) -> float:
        """``||rho H_tilde - H_tilde^H rho|| / ||rho H_tilde||``."""
        a = self.rho @ self.H_tilde
        return float(np.linalg.norm(a - self.H_tilde.conj().T @ self.rho) / np.linalg.norm(a))


def energy_operator(emap: ExactMap, rep: MatrixRep, t: float, fd_step: float = 1e-4,
                    engine: BlockEngine | None = None) -> EnergyOperator:
    """Energy operator ``H + i eta^-1 eta_dot`` (double precision, interior blocks).

    Raises
    ------
    ConditioningError
        If a block's condition estimate exceeds ``1e6``.
    """
    engine = engine or BlockEngine(rep)
    tt = t + fd_step * np.arange(-2, 3)
    gam5 = np.asarray(emap.gammas(tt), dtype=float)
    coeffs = [float(v[0]) for v in emap.coefficients(np.array([t]))]
    zfac = [1j if imag else 1.0 for _, imag in emap.slots]
    hs, Ht, etas, rhos = [], [], [], []
    for blk in engine.blocks:
        cond = BlockEngine.condition_estimate(blk, emap.slots, gam5[:, 2])
        if cond >= MP_THRESHOLD:
            raise ConditioningError(f"block N={blk.N} condition estimate {cond:.2e}", np.log(cond))
        h, _, _, _ = _block_residuals(blk, emap.slots, gam5, coeffs, fd_step, False)
        eigs = [blk.eig[n] for n, _ in emap.slots]
        eta = _eta_np(eigs, [z * g for z, g in zip(zfac, gam5[:, 2])])
        eta_inv = np.linalg.inv(eta)
        hs.append(h)
        Ht.append(eta_inv @ h @ eta)
        etas.append(eta)
        rhos.append(eta.conj().T @ eta)
    Htil, idx = _assemble(Ht, engine)
    return EnergyOperator(Htil, _assemble(hs, engine)[0], _assemble(etas, engine)[0],
                          _assemble(rhos, engine)[0], idx)


# ---------------------------------------------------------------------------
# time-independent benchmark
# ---------------------------------------------------------------------------

def benchmark_theta(c: float, lam: float) -> float:
    """``theta = arctanh(-lam / c)`` of the benchmark map ``exp(theta K4)``."""
    if c == 0 or abs(lam) >= abs(c):
        raise ExceptionalPointError(f"no real benchmark map for |lam| >= |c| (c={c}, lam={lam})")
    return float(np.arctanh(-lam / c))


def benchmark_hamiltonian(a: float, b: float, lam: float, mu: float, rep: MatrixRep) -> np.ndarray:
    """``(a+b)/2 (K1+K2) + sqrt(c^2-lam^2)/2 (K1-K2) + mu K4``."""
    c = a - b
    w = np.sqrt(complex(c * c - lam * lam))
    K1, K2, K4 = (np.asarray(rep[k], dtype=complex) for k in ("K1", "K2", "K4"))
    return 0.5 * (a + b) * (K1 + K2) + 0.5 * w * (K1 - K2) + mu * K4


def benchmark_eigenvalues(a: float, b: float, lam: float, mu: float, n_max: int, m_max: int) -> np.ndarray:
    """Table ``E[n, m]`` of the time-independent eigenvalue formula (complex).

    Square roots are principal branches, as in the printed product form.

    Raises
    ------
    ExceptionalPointError
        If ``c^2 == lam^2``.
    """
    c = a - b
    d = complex(c * c - lam * lam)
    if d == 0:
        raise ExceptionalPointError(f"exceptional point c^2 = lam^2 (c={c}, lam={lam})")
    n = np.arange(n_max + 1)[:, None]
    m = np.arange(m_max + 1)[None, :]
    return 0.5 * (1 + n + m) * (a + b) + 0.5 * (n - m) * np.sqrt(d) * np.sqrt(1 + mu * mu / d)


def classify_regime(a: float, b: float, lam: float, mu: float = 0.0) -> str:
    """``'symmetric'`` if every ``E[n, m]`` is real, ``'broken'`` otherwise.

    Raises
    ------
    ExceptionalPointError
        At ``c^2 == lam^2``.
    """
    E = benchmark_eigenvalues(a, b, lam, mu, 1, 1)
    return "symmetric" if np.all(np.abs(E.imag) < 1e-14 * max(1.0, np.abs(E).max())) else "broken"


def benchmark_check(a: float, b: float, lam: float, mu: float, rep: MatrixRep,
                    n_max: int = 4, m_max: int = 4) -> dict:
    """Compare the eigenvalue formula with diagonalisation on the interior blocks.

    Returns
    -------
    dict
        ``formula_vs_herm``: max deviation from the eigenvalues of the benchmark
        Hermitian matrix; ``formula_vs_H``: from the non-Hermitian ``H`` itself;
        ``map_vs_herm``: ``||eta H eta^-1 - h_bench|| / ||h_bench||`` (only when
        the benchmark map exists, else ``nan``).
    """
    E = benchmark_eigenvalues(a, b, lam, mu, n_max, m_max)
    hb = benchmark_hamiltonian(a, b, lam, mu, rep)
    K = {k: np.asarray(rep[k], dtype=complex) for k in ("K1", "K2", "K3", "K4")}
    H = a * K["K1"] + b * K["K2"] + 1j * lam * K["K3"] + mu * K["K4"]
    dev_h = dev_H = 0.0
    for N in range(n_max + m_max + 1):
        if N not in rep.interior_blocks():
            raise ConfigError(f"representation too small for N={N}")
        expect = np.sort_complex(np.array([E[n, N - n] for n in range(N + 1)
                                           if n <= n_max and N - n <= m_max]))
        for M, key in ((hb, "h"), (H, "H")):
            ev = np.linalg.eigvals(rep.block(M, N))
            # match each expected value to the nearest computed one
            dev = max(np.min(np.abs(ev - e)) for e in expect)
            if key == "h":
                dev_h = max(dev_h, dev)
            else:
                dev_H = max(dev_H, dev)
    map_dev = float("nan")
    c = a - b
    if c != 0 and abs(lam) < abs(c):
        th = benchmark_theta(c, lam)
        idx = np.concatenate([rep.block_indices(N) for N in rep.interior_blocks()])
        w, V = np.linalg.eigh(K["K4"][np.ix_(idx, idx)])
        Hi = H[np.ix_(idx, idx)]
        X = _conj_np(w, V, th, Hi)
        hbi = hb[np.ix_(idx, idx)]
        map_dev = float(np.linalg.norm(X - hbi) / np.linalg.norm(hbi))
    return {"formula_vs_herm": float(dev_h), "formula_vs_H": float(dev_H), "map_vs_herm": map_dev}

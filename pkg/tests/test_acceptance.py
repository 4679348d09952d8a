"""Acceptance criteria, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -s`` or ``python tests/test_acceptance.py``.
Criteria with a runtime budget are also timed against it.
"""

import time

import numpy as np
import pytest

from dysonmaps.coefficient_functions import TimeGrid, from_name
from dysonmaps.errors import ExceptionalPointError
from dysonmaps.exact_maps import (BRANCHED, DysonCase, ExactMap, catalogue_rows, solve_auxiliary,
                                  verify_constraint_odes)
from dysonmaps.observables import (energy_expectation, figure_curves, k1_expectation,
                                   k1_expectation_quadrature, solve_ep)
from dysonmaps.operator_algebra import (GENERATORS, RELATIONS, KVector, build_fock_rep_1mode,
                                        build_fock_rep_2mode, commutator_k, verify_algebra)
from dysonmaps.perturbation_engine import closed_form_match, hermitian_chain, integrate_chain
from dysonmaps.quartic import (SigmaClass, g_ode_residual, quartic_tdde_residual,
                               recursion_constraints_check)
from dysonmaps.verification import (BlockEngine, benchmark_check, classify_regime,
                                    tdqh_residual)

try:
    from conftest import record_acceptance
except ImportError:  # standalone run
    def record_acceptance(line):
        print(line)


def _report(number, title, ok, detail, elapsed, budget):
    in_time = budget is None or elapsed < budget
    status = "PASS" if ok and in_time else "FAIL"
    timing = f"{elapsed:.1f}s" + ("" if budget is None else f"/{budget:g}s")
    timing += "" if in_time else " OVER BUDGET"
    record_acceptance(f"ACCEPTANCE {number} {status}: {title} | {detail} | {timing}")
    return ok and in_time


def _timed(fn):
    t0 = time.perf_counter()
    ok, detail = fn()
    return ok, detail, time.perf_counter() - t0


# 1 -----------------------------------------------------------------------------------

K = {g: KVector.basis(g) for g in GENERATORS}
ALG_TABLE = {
    ("K1", "K2"): KVector.zero(),
    ("K1", "K3"): 1j * K["K4"],
    ("K1", "K4"): -1j * K["K3"],
    ("K2", "K3"): -1j * K["K4"],
    ("K2", "K4"): 1j * K["K3"],
    ("K3", "K4"): 0.5j * (K["K1"] - K["K2"]),
}


def criterion_1():
    sc = max((commutator_k(K[a], K[b]) - ALG_TABLE[a, b]).norm() for a, b in RELATIONS)
    report = verify_algebra(build_fock_rep_2mode(12, 3), tol=1e-10)
    mat = max(report.residuals.values())
    ok = sc <= 1e-14 and report.passed and len(report.residuals) == 6
    return ok, f"structure constants {sc:.1e} (<=1e-14), matrix n=12 margin=3 {mat:.1e} (<1e-10)"


# 2 -----------------------------------------------------------------------------------

def criterion_2():
    lam = from_name("sin2t")
    grid = TimeGrid.from_step(0.0, 3.0, 1e-3)
    worst = 0.0
    for p in (0.0, 0.3, -0.3, 0.9, -0.9):
        c = lam.scaled(p)
        series = integrate_chain(hermitian_chain(c, lam, 5), grid)
        for eps in (0.05, 0.1):
            worst = max(worst, closed_form_match(series, eps, c, tol=1e-7).weighted_max)
    return worst < 1e-7, f"order-5 chain vs closed forms max {worst:.1e} (<1e-7), 10 (p, eps) pairs"


# 3 -----------------------------------------------------------------------------------

def catalogue_cases():
    out = []
    for cid, con in catalogue_rows():
        if cid == "eta7H":
            out.append(DysonCase(cid, con, 0.5, -3.0, 0.0))
        elif cid == "eta7NH":
            out.append(DysonCase(cid, con, 1.5, 1.0, 0.0))
        else:
            for br in ((1, -1) if (cid, con) in BRANCHED else (1,)):
                if con == "c=0":
                    out.append(DysonCase(cid, con, 0.0, 2.0, 0.0, br))
                elif con == "c=plam":
                    out += [DysonCase(cid, con, p, 2.5, 1.0, br) for p in (-0.1, -0.3, -0.5, -0.9)]
                else:
                    out.append(DysonCase(cid, con, 0.0, 2.5, 1.0, br))
    return out


def _bind(case, a="cost"):
    if case.id.startswith("eta7"):
        return ExactMap(case, from_name(a), from_name("zero"), mu=from_name("sin2t"))
    return ExactMap(case, from_name(a), from_name("sin2t"))


def criterion_3():
    grid = TimeGrid.from_step(0.2, 3.0, 1e-3)
    cases = catalogue_cases()
    ode = oracle = 0.0
    failed = []
    for case in cases:
        em = _bind(case)
        r = verify_constraint_odes(em, grid, tol=1e-6)
        ode = max(ode, r.max_residual)
        if not r.passed:
            failed.append(case.label)
        if case.aux != "none":
            a = solve_auxiliary(case, em._lam_eff, grid, mu=em.mu)
            b = solve_auxiliary(case, em._lam_eff, grid, method="numeric_ode", mu=em.mu)
            d = float(np.abs(a.chi - b.chi).max())
            oracle = max(oracle, d)
            if not d < 1e-7:
                failed.append(case.label + ":oracle")
    rows = {(c.id, c.constraint) for c in cases}
    ok = not failed and rows == set(catalogue_rows())
    return ok, (f"{len(rows)} rows / {len(cases)} parameter sets, constraint ODE max {ode:.1e} "
                f"(<1e-6), closed vs numeric {oracle:.1e} (<1e-7)"
                + (f", failed {failed}" if failed else ""))


# 4 -----------------------------------------------------------------------------------

def figure_rows():
    rows = []
    for a in ("cost", "half_t"):
        for i in range(1, 7):
            for br in ((1, -1) if (f"eta{i}", "c=0") in BRANCHED else (1,)):
                rows.append((a, DysonCase(f"eta{i}", "c=0", 0.0, 2.0, 0.0, br)))
    for p in (-0.1, -0.3, -0.5, -0.9):
        for i in (1, 3, 4, 5, 6):
            rows.append(("cost", DysonCase(f"eta{i}", "c=plam", p, 2.5, 1.0)))
    return rows


def criterion_4():
    rep = build_fock_rep_2mode(16, 4)
    engine = BlockEngine(rep)
    times = np.linspace(0.2, 3.0, 57)
    worst = {"herm": 0.0, "pred": 0.0, "tdqh": 0.0}
    failed = []
    rows = figure_rows()
    for a, case in rows:
        r = tdqh_residual(_bind(case, a), rep, times, fd_step=1e-4, engine=engine)
        for k in worst:
            worst[k] = max(worst[k], r.max(k))
        if not r.passed(1e-5):
            failed.append(f"{case.label}/p={case.p:g}/a={a}")
    detail = (f"{len(rows)} rows, herm {worst['herm']:.1e} pred {worst['pred']:.1e} "
              f"tdqh {worst['tdqh']:.1e} (<1e-5)" + (f", failed {failed}" if failed else ""))
    return not failed, detail


# 5 -----------------------------------------------------------------------------------

def criterion_5():
    rep = build_fock_rep_2mode(16, 4)
    engine = BlockEngine(rep)
    times = np.linspace(0.2, 3.0, 29)
    worst = 0.0
    exact = True
    for case in (DysonCase("eta7H", "lam=pmu", 0.5, -3.0, 0.0),
                 DysonCase("eta7H", "lam=pmu", -0.3, -2.5, 0.0),
                 DysonCase("eta7NH", "lam=pmu", 1.5, 1.0, 0.0),
                 DysonCase("eta7NH", "lam=pmu", -2.0, 0.5, 0.0)):
        em = _bind(case)
        r = tdqh_residual(em, rep, times, engine=engine)
        worst = max(worst, r.max("herm"), r.max("pred"), r.max("tdqh"))
        g = em.gammas(times)
        exact &= bool(np.array_equal(g[1], -g[0]))
    return worst < 1e-5 and exact, f"matrix residual max {worst:.1e} (<1e-5), gamma2 == -gamma1: {exact}"


# 6 -----------------------------------------------------------------------------------

def criterion_6():
    grid = np.linspace(0.0, 3.0, 301)
    ep_worst = 0.0
    for name in ("cost", "sin2t", "half_t", "exp", "const:1"):
        for c in (0.0, 0.5, -0.5, 1.0, -1.0):
            ep_worst = max(ep_worst, solve_ep(from_name(name), c, grid, tol=1e-7).residual)
    k1_worst = 0.0
    for name in ("cost", "half_t"):
        f = from_name(name)
        for c in (0.0, 0.5, -1.0):
            ep = solve_ep(f, c, grid)
            for n in (0, 1, 2):
                ref = (n + 0.5) * np.sqrt(1 + c * c)
                vals = [k1_expectation_quadrature(n, f, ep, t) for t in (0.0, 0.7, 1.9, 2.8)]
                k1_worst = max(k1_worst, abs(k1_expectation(n, ep) - ref),
                               float(np.abs(np.array(vals) - ref).max()))
    imag = max(c.max_imag for fig in (1, 2) for _, c in figure_curves(fig))
    t = np.linspace(0, 3 * np.pi, 600)
    degenerate, split = 0.0, np.inf
    for a in ("cost", "half_t"):
        E = {}
        for cid in ("eta1", "eta2"):
            em = ExactMap(DysonCase(cid, "c=0", 0.0, 2.0, 0.0), from_name(a), from_name("sin2t"))
            for nm in ((1, 1), (2, 2), (1, 0)):
                E[cid, nm] = energy_expectation(em, *nm, 1.0, 1.0, t).E
        degenerate = max(degenerate, *(float(np.abs(E["eta1", nm] - E["eta2", nm]).max())
                                       for nm in ((1, 1), (2, 2))))
        split = min(split, float(np.abs(E["eta1", (1, 0)] - E["eta2", (1, 0)]).max()))
    ok = ep_worst < 1e-7 and k1_worst < 1e-6 and imag < 1e-10 and degenerate < 1e-10 and split > 1e-3
    return ok, (f"EP {ep_worst:.1e} (<1e-7), <K1> {k1_worst:.1e} (<1e-6), max Im E {imag:.1e} "
                f"(<1e-10), E1=E2 at n=m {degenerate:.1e}, n!=m splitting {split:.2f}")


# 7 -----------------------------------------------------------------------------------

SIGMAS = (SigmaClass(1.0, 0.2, 0.1), SigmaClass(0.5, 1.0, 0.0), SigmaClass(3.0, -1.0, 0.1))


def criterion_7():
    window = np.linspace(0.5, 1.5, 11)
    rep = build_fock_rep_1mode(48, 10)
    rec = gode = herm = 0.0
    for sc in SIGMAS:
        report = recursion_constraints_check(sc, window, tol=1e-8)
        rec = max(rec, *(v for k, v in report.residuals.items() if k != "g_ode"))
        gode = max(gode, float(np.abs(g_ode_residual(sc, window)).max()))
        herm = max(herm, quartic_tdde_residual(sc, 0.0, rep, window).max("herm"))
    neg = recursion_constraints_check(from_name("exp"), window, tol=1e-8)
    neg_fails = not neg.passed
    neg_herm = quartic_tdde_residual(from_name("exp"), 0.0, rep, window).max("herm")
    ok = rec < 1e-8 and gode < 1e-10 and herm < 1e-4 and neg_fails
    return ok, (f"order relations {rec:.1e} (<1e-8), g-ODE {gode:.1e} (<1e-10), "
                f"hermiticity n=48 {herm:.1e} (<1e-4); g=e^t fails {neg.failures()} "
                f"(g-ODE {neg.residuals['g_ode']:.2f}; its hermiticity {neg_herm:.1e})")


# 8 -----------------------------------------------------------------------------------

def criterion_8():
    rep = build_fock_rep_2mode(14, 3)
    worst = 0.0
    for a, b, lam, mu in ((2.0, 0.5, 0.7, 0.0), (1.5, 0.2, 0.4, 0.3), (3.0, 1.0, 1.5, 0.0),
                          (1.0, 0.8, 0.5, 0.0), (2.0, 1.0, 0.0, 0.6), (1.2, 1.2, 0.4, 0.0)):
        res = benchmark_check(a, b, lam, mu, rep, 4, 4)
        worst = max(worst, res["formula_vs_herm"], res["formula_vs_H"])
    cls_ok = True
    for c in (0.0, 0.5, -1.0, 2.0):
        for lam in (0.3, 0.5, 1.0, 2.5, -0.7):
            try:
                got = classify_regime(1.0 + c, 1.0, lam)
            except ExceptionalPointError:
                cls_ok &= abs(lam) == abs(c)
                continue
            want = "broken" if abs(lam) >= abs(c) else "symmetric"
            cls_ok &= got == want
    ok = worst < 1e-8 and cls_ok
    return ok, f"formula vs diagonalisation n,m<=4 {worst:.1e} (<1e-8), classifier correct: {cls_ok}"


CRITERIA = [
    (1, "algebra", criterion_1, 5),
    (2, "perturbative chains", criterion_2, 30),
    (3, "catalogue consistency", criterion_3, 60),
    (4, "matrix TDDE/TDQH sweep", criterion_4, 600),
    (5, "case-3 maps", criterion_5, None),
    (6, "observables", criterion_6, None),
    (7, "quartic", criterion_7, 300),
    (8, "time-independent benchmark", criterion_8, None),
]


@pytest.mark.parametrize("number, title, fn, budget", CRITERIA, ids=[f"criterion_{c[0]}" for c in CRITERIA])
def test_acceptance(number, title, fn, budget):
    ok, detail, elapsed = _timed(fn)
    assert _report(number, title, ok, detail, elapsed, budget), detail


if __name__ == "__main__":
    results = []
    for number, title, fn, budget in CRITERIA:
        ok, detail, elapsed = _timed(fn)
        results.append(_report(number, title, ok, detail, elapsed, budget))
    raise SystemExit(0 if all(results) else 1)

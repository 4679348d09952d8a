import numpy as np
import pytest

from dysonmaps.coefficient_functions import TimeGrid, from_name
from dysonmaps.errors import ConfigError, DegenerateConstantError, DomainError
from dysonmaps.exact_maps import (BRANCHED, DysonCase, ExactMap, aux1_closed, aux1_limit_k10,
                                  aux1_limit_p0, aux_equation_residual, aux_force,
                                  case3_map, catalogue_rows, chi_closed, solve_auxiliary,
                                  table1_rhs, verify_constraint_odes)

GRID = TimeGrid.from_step(0.2, 3.0, 1e-3)


def catalogue_cases():
    """Every row with admissible constants; both branches where offered."""
    out = []
    for cid, con in catalogue_rows():
        if cid == "eta7H":
            out.append(DysonCase(cid, con, 0.5, -3.0, 0.0))
            continue
        if cid == "eta7NH":
            out.append(DysonCase(cid, con, 1.5, 1.0, 0.0))
            continue
        for br in ((1, -1) if (cid, con) in BRANCHED else (1,)):
            if con == "c=0":
                out.append(DysonCase(cid, con, 0.0, 2.0, 0.0, br))
            elif con == "c=plam":
                out += [DysonCase(cid, con, p, 2.5, 1.0, br) for p in (-0.9, -0.3)]
            else:
                out.append(DysonCase(cid, con, 0.0, 2.5, 1.0, br))
    return out


def bind(case):
    if case.id.startswith("eta7"):
        return ExactMap(case, from_name("cost"), from_name("zero"), mu=from_name("sin2t"))
    return ExactMap(case, from_name("cost"), from_name("sin2t"))


CASES = catalogue_cases()


def test_catalogue_has_fourteen_rows():
    assert len(catalogue_rows()) == 14
    assert {cid for cid, _ in catalogue_rows()} == {f"eta{i}" for i in range(1, 7)} | {"eta7H", "eta7NH"}


@pytest.mark.parametrize("case", CASES, ids=lambda c: f"{c.label}_p{c.p:g}")
def test_constraint_odes(case):
    report = verify_constraint_odes(bind(case), GRID)
    assert report.passed, report


@pytest.mark.parametrize("case", [c for c in CASES if c.aux != "none"],
                         ids=lambda c: f"{c.label}_p{c.p:g}")
def test_closed_form_against_numeric_oracle(case):
    em = bind(case)
    mu = em.mu
    a = solve_auxiliary(case, em._lam_eff, GRID, mu=mu)
    b = solve_auxiliary(case, em._lam_eff, GRID, method="numeric_ode", mu=mu)
    assert b.source == "numeric_ode"
    assert np.abs(a.chi - b.chi).max() < 1e-7
    assert np.abs(aux_equation_residual(case, a, em._lam_eff, mu)).max() < 1e-6


def test_defective_gammas_fail_constraints():
    em = bind(DysonCase("eta1", "c=plam", -0.3, 2.5, 1.0))
    g = em.gammas(GRID.points)
    g[1] *= 1.001
    assert not verify_constraint_odes(em, GRID, gammas=g).passed


@pytest.mark.parametrize("sg", [1, -1])
def test_aux1_solves_its_equation(sg):
    s = np.linspace(-1, 1, 401)
    h = s[1] - s[0]
    p, k1 = -0.4, 1.7
    chi, chi_s = aux1_closed(s, p, k1, 0.3, 0.8, sg)
    chi_ss = np.gradient(chi_s, h, edge_order=2)
    assert np.abs(chi_ss - ((1 - p * p) * chi - sg * p * k1 / 2))[2:-2].max() < 1e-5
    assert np.abs(np.gradient(chi, h, edge_order=2) - chi_s)[2:-2].max() < 1e-4


def test_aux1_limit_p0():
    s = np.linspace(-1, 1, 11)
    Y = 0.6
    for p in (1e-3, 1e-5):
        chi, _ = aux1_closed(s, p, 2.0, 0.3, (1 - p * p) * Y - p * p * 4.0)
        assert np.abs(chi - aux1_limit_p0(s, 0.3, Y)).max() < 10 * p
    lim = aux1_limit_p0(s, 0.3, Y)
    h = 1e-4
    dd = (aux1_limit_p0(s + h, 0.3, Y) - 2 * lim + aux1_limit_p0(s - h, 0.3, Y)) / h ** 2
    assert np.allclose(dd, lim, atol=1e-6)


def test_aux1_limit_k10():
    s = np.linspace(-1, 1, 11)
    chi, _ = aux1_closed(s, -0.5, 0.0, 0.3, 0.9)
    assert np.allclose(chi, aux1_limit_k10(s, -0.5, 0.3, 0.9), atol=1e-14)
    chi_small, _ = aux1_closed(s, -0.5, 1e-6, 0.3, 0.9)
    assert np.abs(chi_small - chi).max() < 1e-5


def test_chi_closed_none_row():
    chi, chi_s = chi_closed(DysonCase("eta1", "c=0", k2=0.5), np.array([0.0, 1.0]))
    assert np.allclose(chi, [0.5, -0.5]) and np.allclose(chi_s, -1)
    assert aux_force(DysonCase("eta1", "c=0")) is None


def test_table1_accepts_ids():
    a = table1_rhs("eta3", 0.4, 0.2, 0.1, 0.7)
    b = table1_rhs(DysonCase("eta3", "c=0", k1=2.0), 0.4, 0.2, 0.1, 0.7)
    assert np.allclose(a, b)
    with pytest.raises(ConfigError):
        table1_rhs("eta9", 0, 0, 0, 0)


@pytest.mark.parametrize("kw, err", [
    (dict(id="eta1", constraint="c=lam"), ConfigError),
    (dict(id="eta1", constraint="c=plam", p=1.2), DomainError),
    (dict(id="eta3", constraint="c=plam", p=0.0, k1=2.0), DegenerateConstantError),
    (dict(id="eta3", constraint="c=0", k1=0.0), DegenerateConstantError),
    (dict(id="eta2", constraint="c=lam", k1=-1.0), DegenerateConstantError),
    (dict(id="eta7H", constraint="lam=pmu", p=0.5, k1=0.0), DomainError),
    (dict(id="eta7NH", constraint="lam=pmu", p=0.5), DomainError),
    (dict(id="eta1", constraint="c=0", branch=0), ConfigError),
])
def test_case_validation(kw, err):
    with pytest.raises(err):
        DysonCase(**kw)


def test_labels_distinguish_branches():
    a = DysonCase("eta5", "c=0", k1=2.0, branch=1).label
    b = DysonCase("eta5", "c=0", k1=2.0, branch=-1).label
    assert a != b


def test_three_slot_map_needs_mu():
    with pytest.raises(ConfigError):
        ExactMap(DysonCase("eta7H", "lam=pmu", 0.5, -3.0), from_name("cost"), from_name("zero"))


@pytest.mark.parametrize("kind, p, k1", [("hermitian", 0.5, -3.0), ("nonhermitian", 1.5, 1.0)])
def test_case3_gamma2_is_minus_gamma1(kind, p, k1):
    em = ExactMap(DysonCase("eta7H" if kind == "hermitian" else "eta7NH", "lam=pmu", p, k1),
                  from_name("cost"), from_name("zero"), mu=from_name("sin2t"))
    g = em.gammas(GRID.points)
    assert np.array_equal(g[1], -g[0])
    g1, g3, f4 = case3_map(kind, from_name("sin2t"), p, k1, GRID)
    assert np.array_equal(g1, g[0]) and np.array_equal(g3, g[2])
    assert np.all(np.isfinite(f4))


def test_case3_unknown_kind():
    with pytest.raises(ConfigError):
        case3_map("other", from_name("sin2t"), 0.5, -3.0, GRID)


def test_predicted_h_is_diagonal_in_k1_k2():
    em = bind(DysonCase("eta3", "c=plam", -0.5, 2.5, 1.0))
    h = em.predicted_h(np.linspace(0.3, 2.5, 7))
    assert h.shape == (4, 7)
    assert np.all(h[2:] == 0)

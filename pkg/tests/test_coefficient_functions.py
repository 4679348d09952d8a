import numpy as np
import pytest
from scipy.integrate import quad

from dysonmaps.coefficient_functions import (CoeffFn, TimeGrid, adaptive_simpson, constant,
                                             from_name, power_sigma, tabulated)
from dysonmaps.errors import ConfigError, DomainError

NAMES = ["sin2t", "cost", "half_t", "exp", "const:0.7", "sigma3:1,0.2,0.1"]
T = np.linspace(0.3, 2.7, 9)


@pytest.mark.parametrize("name", NAMES)
@pytest.mark.parametrize("order", [1, 2, 3])
def test_derivatives_match_finite_differences(name, order):
    f = from_name(name)
    h = 1e-3
    lo = np.asarray(f.deriv(T - h, order - 1), dtype=float)
    hi = np.asarray(f.deriv(T + h, order - 1), dtype=float)
    fd = (hi - lo) / (2 * h)
    assert np.allclose(f.deriv(T, order), fd, atol=1e-5, rtol=1e-5)


@pytest.mark.parametrize("name", NAMES)
def test_antiderivative_against_scipy(name):
    f = from_name(name)
    for t in (0.0, 1.3, 2.9):
        ref, _ = quad(lambda s: float(f(s)), 0.4, t, epsabs=1e-13)
        assert abs(float(f.antideriv(0.4, t)) - ref) < 1e-10


def test_closed_and_quadrature_agree():
    f = from_name("sin2t")
    a = f.antideriv(0.0, T, method="closed")
    b = f.antideriv(0.0, T, method="quadrature")
    assert np.allclose(a, b, atol=1e-10)


def test_quadrature_across_anchor():
    f = from_name("cost")
    t = np.array([-1.0, -0.2, 0.5, 1.5])
    assert np.allclose(f.antideriv(0.3, t, method="quadrature"), np.sin(t) - np.sin(0.3), atol=1e-10)


def test_power_sigma_has_no_closed_form():
    f = power_sigma(1, 0.2, 0.1)
    assert not f.has_closed_antiderivative
    with pytest.raises(ConfigError):
        f.antideriv(0.0, 1.0, method="closed")


def test_adaptive_simpson():
    assert abs(adaptive_simpson(np.exp, 0.0, 1.0, 1e-12) - (np.e - 1)) < 1e-11


def test_sigma_domain():
    f = power_sigma(1.0, -1.0, 0.0)
    with pytest.raises(DomainError):
        f(np.array([0.5, 2.0]))


def test_scaled():
    for name in NAMES:
        f = from_name(name)
        assert np.allclose(f.scaled(-0.3)(T), -0.3 * np.asarray(f(T)))


def test_zeros():
    z = from_name("cost").zeros(0.0, 3 * np.pi)
    assert np.allclose(z, [np.pi / 2, 3 * np.pi / 2, 5 * np.pi / 2], atol=1e-12)
    assert from_name("exp").zeros(0, 3).size == 0


def test_tabulated_domain_and_values():
    t = np.linspace(0, 2, 81)
    f = tabulated(t, np.sin(t), name="tab")
    assert abs(float(f(1.0)) - np.sin(1.0)) < 1e-6
    with pytest.raises(DomainError):
        f(2.5)
    with pytest.raises(ConfigError):
        tabulated([0, 1, 1, 2], [0, 0, 0, 0])


@pytest.mark.parametrize("bad", ["nope", "const:x", "sigma3:1,2", "sigma3:a,b,c"])
def test_unknown_names(bad):
    with pytest.raises(ConfigError):
        from_name(bad)


def test_unknown_kind_and_order():
    with pytest.raises(ConfigError):
        CoeffFn("bogus")
    with pytest.raises(ConfigError):
        constant(1.0).deriv(0.0, 4)


def test_time_grid():
    g = TimeGrid(0.0, 3.0, 3000)
    assert len(g) == 3001 and g.step == pytest.approx(1e-3)
    assert g.points[-1] == 3.0
    assert TimeGrid.from_step(0.2, 3.0, 1e-3).steps == 2800
    with pytest.raises(ConfigError):
        TimeGrid(1.0, 0.0, 10)
    with pytest.raises(ConfigError):
        TimeGrid(0.0, 1.0, 0)

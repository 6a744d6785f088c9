import math

import numpy as np
import pytest
from numpy.polynomial.hermite_e import hermegauss

from gchaos.catalog import Payoff
from gchaos.gheat import CflError, PdeConfig, g_function, solve_gheat
from gchaos.scenario import VolatilityBounds

WIDE = VolatilityBounds(0.5, 2.0)


def gauss_hermite_expectation(phi, sigma, T=1.0, points=200):
    """E[phi(sigma sqrt(T) Z)] by Gauss-Hermite quadrature (probabilists' weight)."""
    z, w = hermegauss(points)
    return float(np.sum(w * phi(sigma * math.sqrt(T) * z)) / math.sqrt(2 * math.pi))


def test_g_function():
    assert g_function(1.0, WIDE) == 2.0
    assert g_function(-1.0, WIDE) == -0.125
    assert g_function(0.0, WIDE) == 0.0
    np.testing.assert_allclose(g_function(np.array([2.0, -2.0]), VolatilityBounds(1, 1)), [1.0, -1.0])


def test_g_function_sublinear():
    a = np.linspace(-3, 3, 25)
    for x in a:
        for y in a:
            assert g_function(x + y, WIDE) <= g_function(x, WIDE) + g_function(y, WIDE) + 1e-15
        assert g_function(2.5 * x, WIDE) == pytest.approx(2.5 * g_function(x, WIDE))


def test_linear_payoff_is_invariant():
    sol = solve_gheat(Payoff.parse("linear"), PdeConfig(WIDE))
    assert abs(sol.value_at_zero) <= 1e-8
    np.testing.assert_allclose(sol.u, sol.x, atol=1e-9)


@pytest.mark.parametrize("payoff, expected", [("square", 4.0), ("neg-square", -0.25)])
def test_quadratic_endpoints(payoff, expected):
    u0 = solve_gheat(Payoff.parse(payoff), PdeConfig(WIDE)).value_at_zero
    assert u0 == pytest.approx(expected, rel=1e-2)


@pytest.mark.parametrize("sigma", [0.3, 1.0, 1.7])
def test_degeneration_to_heat_equation(sigma):
    b = VolatilityBounds(sigma, sigma)
    u0 = solve_gheat(Payoff.parse("square"), PdeConfig(b, horizon=2.0)).value_at_zero
    assert u0 == pytest.approx(sigma**2 * 2.0, rel=5e-3)


@pytest.mark.parametrize("payoff", ["square", "abs", "call(0.5)", "call(-1)", "neg-square", "poly(1, 0, -0.5)"])
def test_convex_concave_shortcut(payoff):
    phi = Payoff.parse(payoff)
    sigma = WIDE.sigma_hi if phi.shape == "convex" else WIDE.sigma_lo
    ref = gauss_hermite_expectation(phi, sigma)
    u0 = solve_gheat(phi, PdeConfig(WIDE)).value_at_zero
    assert abs(u0 - ref) <= 1e-2 * abs(ref)


def test_dominates_constant_scenarios():
    # PDE value is at least the classical expectation under every constant volatility
    for text in ["square", "neg-square", "abs", "call(0.5)", "poly(0, 0, 0, 1, -1)"]:
        phi = Payoff.parse(text)
        u0 = solve_gheat(phi, PdeConfig(WIDE)).value_at_zero
        for s in (0.5, 1.25, 2.0):
            assert gauss_hermite_expectation(phi, s) <= u0 + 1e-2 * abs(u0) + 1e-9


def test_grid_convergence_second_order():
    phi = Payoff.parse("poly(0, 0, 0, 0, 1)")
    vals = [solve_gheat(phi, PdeConfig(WIDE, space_steps=M)).value_at_zero for M in (100, 200, 400, 800)]
    diffs = np.abs(np.diff(vals))
    assert np.all(diffs[:-1] / diffs[1:] >= 3.0)


def test_cfl_guard():
    with pytest.raises(CflError):
        PdeConfig(WIDE, space_steps=800, time_steps=100)
    cfg = PdeConfig(WIDE)
    assert cfg.cfl_number <= 0.5
    assert cfg.half_width == pytest.approx(12.0)
    with pytest.raises(ValueError):
        PdeConfig(WIDE, space_steps=101)


def test_profile_csv(tmp_path):
    sol = solve_gheat(Payoff.parse("abs"), PdeConfig(WIDE, space_steps=40))
    dest = tmp_path / "u.csv"
    sol.write_csv(dest)
    lines = dest.read_text().splitlines()
    assert lines[0] == "x,u" and len(lines) == 42
    x, u = map(float, lines[21].split(","))
    assert x == 0.0 and u == sol.value_at_zero

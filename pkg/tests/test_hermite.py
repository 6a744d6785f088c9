import math

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial import hermite_e

from gchaos.hermite import (
    ChaosPolynomial,
    DegreeOverflowError,
    hermite_coeffs,
    hermite_coeffs_explicit,
    hermite_eval,
    hermite_scaled_eval,
)


@pytest.mark.parametrize(
    "n, expected",
    [
        (0, [1]),
        (1, [0, 1]),
        (2, [-1, 0, 1]),
        (3, [0, -3, 0, 1]),
        (4, [3, 0, -6, 0, 1]),
    ],
)
def test_low_degree_coefficients(n, expected):
    assert list(hermite_coeffs(n).coeffs) == expected
    assert list(hermite_coeffs_explicit(n).coeffs) == expected


@pytest.mark.parametrize("n", range(31))
def test_recurrence_matches_explicit_sum(n):
    assert hermite_coeffs(n) == hermite_coeffs_explicit(n)


@pytest.mark.parametrize("n", range(9))
def test_rodrigues_formula(n):
    # derivative definition, evaluated symbolically
    x = sympy.symbols("x")
    h = sympy.expand(sympy.simplify((-1) ** n * sympy.exp(x**2 / 2) * sympy.diff(sympy.exp(-(x**2) / 2), x, n)))
    coeffs = [int(h.coeff(x, k)) for k in range(n + 1)]
    assert coeffs == list(hermite_coeffs(n).coeffs)


@pytest.mark.parametrize("n", [5, 12, 20])
def test_matches_numpy_hermite_e(n):
    ref = hermite_e.herme2poly([0] * n + [1])
    np.testing.assert_array_equal(ref, np.array(hermite_coeffs(n).coeffs, dtype=float))


@pytest.mark.parametrize("n", range(31))
def test_structure(n):
    p = hermite_coeffs(n)
    assert p.degree == n and len(p.coeffs) == n + 1 and p.coeffs[-1] == 1
    assert all(c == 0 for k, c in enumerate(p.coeffs) if (n - k) % 2)
    # parity h_n(-x) = (-1)^n h_n(x) on coefficients
    flipped = [c * (-1) ** k for k, c in enumerate(p.coeffs)]
    assert flipped == [(-1) ** n * c for c in p.coeffs]


def test_degree_guard():
    with pytest.raises(DegreeOverflowError, match="degree overflow"):
        hermite_coeffs(31)
    with pytest.raises(DegreeOverflowError):
        hermite_coeffs_explicit(40)
    with pytest.raises(DegreeOverflowError):
        hermite_scaled_eval(31, 1.0, 1.0)
    assert hermite_coeffs(35, wide=True) == hermite_coeffs_explicit(35, wide=True)
    with pytest.raises(ValueError):
        hermite_coeffs(-1)


def test_chaos_polynomial_invariants_enforced():
    with pytest.raises(ValueError):
        ChaosPolynomial(2, (0, 0, 2))
    with pytest.raises(ValueError):
        ChaosPolynomial(2, (0, 1, 1))
    with pytest.raises(ValueError):
        ChaosPolynomial(2, (1, 1))


def test_eval_examples():
    assert hermite_eval(1, 2.5) == 2.5
    assert hermite_eval(2, 3.0) == 8.0
    assert hermite_eval(4, 0.0) == 3.0
    np.testing.assert_array_equal(hermite_eval(2, np.array([0.0, 1.0, 2.0])), [-1.0, 0.0, 3.0])


def test_scaled_eval_examples():
    assert hermite_scaled_eval(2, 3.0, 4.0) == 5.0
    assert hermite_scaled_eval(3, 2.0, 0.0) == 8.0
    for n in range(11):
        for x in (-2.0, 0.0, 1.5):
            assert hermite_scaled_eval(n, x, 1.0) == pytest.approx(hermite_eval(n, x), rel=1e-14, abs=1e-14)


def test_scaled_eval_rejects_negative_v():
    with pytest.raises(ValueError):
        hermite_scaled_eval(2, 1.0, -1e-9)


def test_scaled_eval_broadcasts():
    x = np.linspace(-2, 2, 5)
    out = hermite_scaled_eval(3, x, 2.0)
    np.testing.assert_allclose(out, x**3 - 3 * 2.0 * x)


@settings(max_examples=400, deadline=None)
@given(
    n=st.integers(0, 10),
    x=st.floats(-10, 10),
    logv=st.floats(math.log(1e-6), math.log(1e3)),
)
def test_homogeneity(n, x, logv):
    v = math.exp(logv)
    H = hermite_scaled_eval(n, x, v)
    direct = v ** (n / 2) * hermite_eval(n, x / math.sqrt(v))
    assert abs(H - direct) <= 1e-12 * max(1.0, abs(H))


@settings(max_examples=400, deadline=None)
@given(n=st.integers(2, 10), x=st.floats(-10, 10), v=st.floats(0, 1e3))
def test_scaled_recurrence(n, x, v):
    lhs = hermite_scaled_eval(n, x, v)
    rhs = x * hermite_scaled_eval(n - 1, x, v) - (n - 1) * v * hermite_scaled_eval(n - 2, x, v)
    scale = max(1.0, abs(x) ** n, v ** (n / 2))
    assert abs(lhs - rhs) <= 1e-12 * scale

import dataclasses
import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gchaos.hermite import hermite_coeffs
from gchaos.ito import (
    CostLimitError,
    GridFunction,
    GridMismatchError,
    SimplexFunction,
    SymmetryError,
    corollary_closed_form,
    ito_integral,
    iterated_general,
    iterated_levels,
    iterated_product,
    l2_norm_sq_cube,
    l2_norm_sq_simplex,
    multiple_integral,
    qv_integral,
    recursion_residual,
    theorem1_rhs,
)
from gchaos.scenario import (
    BangBang,
    Constant,
    Piecewise,
    TimeGrid,
    VolatilityBounds,
    build_scenario,
    path_from_increments,
    simulate_batch,
)

WIDE = VolatilityBounds(0.5, 2.0)


@pytest.fixture
def two_step():
    scen = build_scenario(WIDE, TimeGrid(1.0, 2), Constant(1.0), 0)
    return path_from_increments(scen, [1.0, -0.5])


def _batch(N, count=100, seed=1, spec=BangBang(0.2), bounds=WIDE):
    return simulate_batch(build_scenario(bounds, TimeGrid(1.0, N), spec, seed), count, seed)


def brute_force_J(fvals, dB, n):
    """Direct enumeration over strictly increasing index tuples."""
    total = 0.0
    for idx in itertools.combinations(range(len(dB)), n):
        term = 1.0
        for i in idx:
            term *= fvals[i] * dB[i]
        total += term
    return total


def test_hand_examples(two_step):
    one = GridFunction.constant(two_step.grid, 1.0)
    assert ito_integral(one, two_step) == 0.5
    assert qv_integral(one, two_step, "realized") == 1.25
    assert iterated_product(one, two_step, 0) == 1.0
    assert iterated_product(one, two_step, 2) == -0.5
    assert multiple_integral(one, two_step, 2) == -1.0
    assert multiple_integral(one, two_step, 0) == 1.0


def test_ito_integral_examples():
    b = _batch(8, 20)
    one = GridFunction.constant(b.grid, 1.0)
    np.testing.assert_allclose(ito_integral(one, b), b.B_T, rtol=1e-13, atol=1e-15)
    eta = GridFunction(b.grid, [2.0] * 4 + [-1.0] * 4)
    B_half = b.B[:, 4]
    expected = 2 * B_half - (b.B_T - B_half)
    np.testing.assert_allclose(ito_integral(eta, b), expected, rtol=1e-13, atol=1e-14)


def test_qv_integral_examples():
    b = _batch(32, 10, spec=Constant(1.7))
    one = GridFunction.constant(b.grid, 1.0)
    np.testing.assert_allclose(qv_integral(one, b, "realized"), b.qv_realized[:, -1], rtol=1e-14)
    np.testing.assert_allclose(qv_integral(one, b, "scenario"), 1.7**2, rtol=1e-14)
    with pytest.raises(ValueError):
        qv_integral(one, b, "other")


def test_grid_mismatch():
    b = _batch(8, 2)
    with pytest.raises(GridMismatchError):
        ito_integral(GridFunction.constant(TimeGrid(1.0, 16), 1.0), b)
    with pytest.raises(GridMismatchError):
        GridFunction(TimeGrid(1.0, 4), [1.0, 2.0])


def test_iterated_product_matches_enumeration():
    b = _batch(10, 5)
    f = GridFunction.sample(b.grid, lambda t: 1 + t / 2)
    for n in range(5):
        for j, p in enumerate(b):
            assert iterated_product(f, p, n) == pytest.approx(brute_force_J(f.values, p.dB, n), rel=1e-12, abs=1e-15)


def test_first_order_is_ito_integral():
    b = _batch(16, 10)
    f = GridFunction.sample(b.grid, np.cos)
    np.testing.assert_allclose(iterated_product(f, b, 1), ito_integral(f, b), rtol=1e-13, atol=1e-15)
    g1 = SimplexFunction(1, b.grid, lambda i: np.cos(b.grid.times[i]))
    np.testing.assert_allclose(iterated_general(g1, b), ito_integral(f, b), rtol=1e-13, atol=1e-15)


@pytest.mark.parametrize("n, N", [(1, 128), (2, 128), (3, 128), (4, 32)])
def test_oracle_equivalence(n, N):
    b = _batch(N, 100, seed=n)
    f = GridFunction.sample(b.grid, lambda t: 1 + t / 2)
    fast = iterated_product(f, b, n)
    slow = iterated_general(SimplexFunction.product(f, n), b)
    # same summands, different order: compare against the absolute-sum scale
    absolute = iterated_product(GridFunction(b.grid, np.abs(f.values)), dataclasses.replace(b, dB=np.abs(b.dB)), n)
    assert np.all(np.abs(fast - slow) <= 1e-12 * np.maximum(absolute, 1e-300))


def test_iterated_general_zero_kernel_and_guard():
    b = _batch(16, 3)
    zero = SimplexFunction(3, b.grid, lambda i, j, k: np.zeros(np.shape(i)))
    assert not np.any(iterated_general(zero, b))
    with pytest.raises(CostLimitError):
        iterated_general(SimplexFunction.product(GridFunction.constant(b.grid, 1.0), 5), b)
    big = _batch(1024, 1)
    with pytest.raises(CostLimitError):
        iterated_general(SimplexFunction.product(GridFunction.constant(big.grid, 1.0), 2), big)


def test_general_kernel_against_enumeration():
    b = _batch(12, 4)
    t = b.grid.times
    g = SimplexFunction(2, b.grid, lambda i, j: np.exp(-np.abs(t[i] - t[j])))
    for p in b:
        ref = sum(
            math.exp(-abs(t[i] - t[j])) * p.dB[i] * p.dB[j] for i, j in itertools.combinations(range(12), 2)
        )
        assert iterated_general(g, p) == pytest.approx(ref, rel=1e-12, abs=1e-15)
    assert multiple_integral(g, b[0]) == pytest.approx(2 * iterated_general(g, b[0]))


def test_non_symmetric_kernel_rejected():
    grid = TimeGrid(1.0, 8)
    with pytest.raises(SymmetryError):
        SimplexFunction(2, grid, lambda i, j: i - 2.0 * j)


def test_discrete_exactness_order_two():
    for spec in (Constant(2.0), BangBang(0.3), Piecewise([(0.25, 0.5), (0.75, 1.5)])):
        b = _batch(256, 200, seed=9, spec=spec)
        one = GridFunction.constant(b.grid, 1.0)
        lhs = 2 * iterated_product(one, b, 2)
        rhs = b.B_T**2 - b.qv_realized[:, -1]
        assert np.all(np.abs(lhs - rhs) <= 1e-12 * np.maximum(1.0, b.B_T**2))


def test_theorem_rhs_low_orders(two_step):
    f = GridFunction.constant(two_step.grid, 1.0)
    assert theorem1_rhs(f, two_step, 0) == 1.0
    assert theorem1_rhs(f, two_step, 1) == 0.5
    assert theorem1_rhs(f, two_step, 2) == 0.5**2 - 1.25


def test_theorem_rhs_zero_norm():
    b = _batch(16, 3, spec=Constant(0.0), bounds=VolatilityBounds(0.0, 1.0))
    f = GridFunction.constant(b.grid, 1.0)
    for n in range(6):
        np.testing.assert_array_equal(theorem1_rhs(f, b, n), 1.0 if n == 0 else 0.0)
        np.testing.assert_array_equal(multiple_integral(f, b, n), 1.0 if n == 0 else 0.0)


def test_theorem_residual_shrinks_with_refinement():
    errs = []
    for N in (64, 256, 1024):
        b = _batch(N, 400, seed=5)
        f = GridFunction.sample(b.grid, lambda t: 1 + t / 2)
        errs.append(np.sqrt(np.mean((multiple_integral(f, b, 3) - theorem1_rhs(f, b, 3)) ** 2)))
    assert errs[0] > errs[1] > errs[2]


def test_recursion_residual_sides():
    b = _batch(64, 50)
    f = GridFunction.sample(b.grid, lambda t: 1 + t)
    for n in range(2, 11):
        res = recursion_residual(f, b, n, side="closed")
        theta, v = ito_integral(f, b), qv_integral(f.squared(), b)
        scale = np.maximum(1.0, np.maximum(np.abs(theta) ** n, v ** (n / 2)))
        assert np.all(np.abs(res) <= 1e-10 * scale)
    one = GridFunction.constant(b.grid, 1.0)
    d = recursion_residual(one, b, 2, side="discrete")
    assert np.all(np.abs(d) <= 1e-12 * np.maximum(1.0, b.B_T**2))
    zero = _batch(8, 1, spec=Constant(0.0), bounds=VolatilityBounds(0.0, 1.0))[0]
    assert recursion_residual(GridFunction.constant(zero.grid, 1.0), zero, 2) == 0.0
    with pytest.raises(ValueError):
        recursion_residual(f, b, 1)


def test_corollary_examples():
    b = _batch(32, 20)
    B, Q = b.B_T, b.qv_realized[:, -1]
    np.testing.assert_allclose(corollary_closed_form(b, 1), B)
    np.testing.assert_allclose(corollary_closed_form(b, 2), 0.5 * B**2 - 0.5 * Q, rtol=1e-13)
    np.testing.assert_allclose(corollary_closed_form(b, 3), B**3 / 6 - 0.5 * Q * B, rtol=1e-12, atol=1e-14)
    scen_q = b.qv_scenario[-1]
    np.testing.assert_allclose(corollary_closed_form(b, 2, "scenario"), 0.5 * B**2 - 0.5 * scen_q, rtol=1e-13)


def test_corollary_is_theorem_over_factorial():
    b = _batch(128, 100)
    one = GridFunction.constant(b.grid, 1.0)
    for n in range(11):
        cf = corollary_closed_form(b, n)
        ref = theorem1_rhs(one, b, n) / math.factorial(n)
        assert np.all(np.abs(cf - ref) <= 1e-12 * np.maximum(1.0, np.abs(ref)))


def test_symmetrization_constant():
    # ||g||^2 on the ordered simplex times n! equals ||g||^2 on the cube
    for n, g in [
        (2, lambda a, b: np.exp(-(a - b) ** 2)),
        (2, lambda a, b: (1 + a) * (1 + b)),
        (3, lambda a, b, c: np.cos(a + b + c)),
    ]:
        simplex = l2_norm_sq_simplex(g, n, 1.0, points=16)
        cube = l2_norm_sq_cube(g, n, 1.0, points=16)
        assert math.factorial(n) * simplex == pytest.approx(cube, rel=1e-9)
    # polynomial kernels integrate exactly
    assert l2_norm_sq_simplex(lambda a, b: np.ones_like(a), 2, 2.0) == pytest.approx(2.0)
    assert l2_norm_sq_cube(lambda a, b, c: a * b * c, 3, 1.0) == pytest.approx(1 / 27)


@settings(max_examples=60, deadline=None)
@given(
    dB=st.lists(st.floats(-2, 2), min_size=1, max_size=12),
    n=st.integers(0, 4),
    scale=st.floats(0.1, 3.0),
)
def test_iterated_product_property(dB, n, scale):
    scen = build_scenario(VolatilityBounds(0.0, 1.0), TimeGrid(1.0, len(dB)), Constant(1.0), 0)
    p = path_from_increments(scen, dB)
    f = GridFunction(p.grid, np.linspace(0.5, 1.5, len(dB)) * scale)
    got = iterated_product(f, p, n)
    ref = brute_force_J(f.values, p.dB, n)
    absref = brute_force_J(np.abs(f.values), np.abs(p.dB), n)
    assert abs(got - ref) <= 1e-12 * max(absref, 1e-300)
    levels = iterated_levels(f, p, n)
    assert len(levels) == n + 1 and levels[0] == 1.0


def test_hermite_coeffs_used_by_corollary_are_exact_ratios():
    # coefficient of <B>^m B^(n-2m) is (-1)^m / (2^m m! (n-2m)!)
    for n in range(8):
        c = hermite_coeffs(n).coeffs
        for m in range(n // 2 + 1):
            assert c[n - 2 * m] / math.factorial(n) == pytest.approx(
                (-1) ** m / (2**m * math.factorial(m) * math.factorial(n - 2 * m)), rel=1e-15
            )

"""Pathwise discrete integrals against ``dB`` and ``d<B>``.

All integrands are evaluated at left endpoints. Every routine accepts either
a single :class:`~gchaos.scenario.BrownianPath` or a
:class:`~gchaos.scenario.PathBatch`; for a batch the result has one entry per
path.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
from numpy.polynomial.legendre import leggauss

from .hermite import hermite_coeffs, hermite_scaled_eval
from .scenario import TimeGrid

REALIZED = "realized"
SCENARIO = "scenario"

MAX_GENERAL_ORDER = 4
MAX_GENERAL_STEPS = 512


class GridMismatchError(ValueError):
    pass


class CostLimitError(ValueError):
    pass


class SymmetryError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Deterministic step function: ``values[i]`` is used on ``[t_i, t_{i+1})``."""

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.steps,):
            raise GridMismatchError(f"expected {self.grid.steps} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid function values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def sample(cls, grid: TimeGrid, fn: Callable[[np.ndarray], np.ndarray]) -> "GridFunction":
        """Sample ``fn`` at the left endpoint of every interval."""
        return cls(grid, np.broadcast_to(np.asarray(fn(grid.left_times), dtype=float), (grid.steps,)))

    @classmethod
    def constant(cls, grid: TimeGrid, c: float) -> "GridFunction":
        return cls(grid, np.full(grid.steps, float(c)))

    def squared(self) -> "GridFunction":
        return GridFunction(self.grid, self.values**2)

    def l2_norm_sq(self) -> float:
        """``sum f_i^2 dt``, the deterministic ``int_0^T f^2 dt`` on the grid."""
        return float(np.sum(self.values**2) * self.grid.dt)


@dataclass(frozen=True, eq=False)
class SimplexFunction:
    """Symmetric kernel ``g`` of ``order`` variables sampled on grid nodes.

    ``evaluator`` takes ``order`` integer index arrays of equal shape and
    returns ``g(t_{i_1}, ..., t_{i_n})`` elementwise. Symmetry is checked on
    a deterministic sample of index tuples at construction.
    """

    order: int
    grid: TimeGrid
    evaluator: Callable[..., np.ndarray]
    symmetry_samples: int = field(default=64, repr=False)

    def __post_init__(self):
        if self.order < 0:
            raise ValueError("order must be nonnegative")
        if self.order > 1:
            gen = np.random.default_rng(0)
            idx = gen.integers(0, self.grid.steps, size=(self.symmetry_samples, self.order))
            base = np.asarray(self(*idx.T), dtype=float)
            for perm in itertools.permutations(range(self.order)):
                other = np.asarray(self(*idx[:, perm].T), dtype=float)
                if not np.allclose(base, other, rtol=1e-12, atol=1e-14):
                    raise SymmetryError(f"kernel is not symmetric under permutation {perm}")

    def __call__(self, *idx):
        return self.evaluator(*idx)

    @classmethod
    def product(cls, f: GridFunction, n: int) -> "SimplexFunction":
        """Tensor power ``f(t_1) f(t_2) ... f(t_n)``."""
        vals = f.values

        def ev(*idx):
            out = np.ones(np.shape(idx[0]) if idx else ())
            for i in idx:
                out = out * vals[i]
            return out

        return cls(n, f.grid, ev)


def _check_grid(grid: TimeGrid, path) -> None:
    if grid != path.grid:
        raise GridMismatchError(f"integrand grid {grid} does not match path grid {path.grid}")


def ito_integral(eta: GridFunction, path):
    """``sum_j eta_j (B_{t_{j+1}} - B_{t_j})``."""
    _check_grid(eta.grid, path)
    out = np.sum(eta.values * path.dB, axis=-1)
    return out if np.ndim(out) else float(out)


def qv_increments(path, which: str = REALIZED) -> np.ndarray:
    if which == REALIZED:
        return path.dB * path.dB
    if which == SCENARIO:
        return np.broadcast_to(path.scenario.qv_increments, np.shape(path.dB))
    raise ValueError(f"which must be 'realized' or 'scenario', got {which!r}")


def qv_integral(eta: GridFunction, path, which: str = REALIZED):
    """``sum_j eta_j (<B>_{t_{j+1}} - <B>_{t_j})``.

    ``which="realized"`` uses squared increments; ``"scenario"`` uses
    ``sigma_j^2 dt``.
    """
    _check_grid(eta.grid, path)
    out = np.sum(eta.values * qv_increments(path, which), axis=-1)
    return out if np.ndim(out) else float(out)


def iterated_levels(f: GridFunction, path, n: int) -> list:
    """Terminal values ``J_0 .. J_n`` of the iterated integrals of ``f``.

    Level ``k`` at node ``i + 1`` is level ``k`` at node ``i`` plus level
    ``k - 1`` at node ``i`` times ``f_i dB_i``; cost is O(N n).
    """
    _check_grid(f.grid, path)
    if n < 0:
        raise ValueError("n must be nonnegative")
    fdb = f.values * path.dB
    lead = np.shape(path.dB)[:-1]
    zero = np.zeros(lead + (1,))
    level = np.ones(np.shape(path.dB))  # level 0 at left endpoints
    out = [np.ones(lead)]
    for _ in range(n):
        nodes = np.concatenate([zero, np.cumsum(level * fdb, axis=-1)], axis=-1)
        out.append(nodes[..., -1])
        level = nodes[..., :-1]
    return [o if np.ndim(o) else float(o) for o in out]


def iterated_product(f: GridFunction, path, n: int):
    """Discrete ``J_n`` of the product kernel ``f^{(x)n}``, with ``J_0 = 1``."""
    return iterated_levels(f, path, n)[n]


def iterated_general(g: SimplexFunction, path, chunk: int = 1 << 16):
    """Brute-force ``sum_{i_1 < ... < i_n} g(t_{i_1}, ..., t_{i_n}) dB_{i_1} ... dB_{i_n}``.

    O(N^n); only meant as an oracle for :func:`iterated_product`.

    Raises
    ------
    CostLimitError
        If ``order > 4`` or the grid has more than 512 steps.
    """
    _check_grid(g.grid, path)
    n, N = g.order, g.grid.steps
    if n > MAX_GENERAL_ORDER or N > MAX_GENERAL_STEPS:
        raise CostLimitError(
            f"naive simplex sum limited to order <= {MAX_GENERAL_ORDER} and N <= {MAX_GENERAL_STEPS}; got order {n}, N {N}"
        )
    dB = np.asarray(path.dB, dtype=float)
    lead = dB.shape[:-1]
    if n == 0:
        out = np.broadcast_to(np.asarray(g(), dtype=float), lead).copy()
        return out if out.ndim else float(out)
    total = np.zeros(lead)
    combos = itertools.combinations(range(N), n)
    while True:
        block = np.fromiter(itertools.chain.from_iterable(itertools.islice(combos, chunk)), dtype=np.intp)
        if block.size == 0:
            break
        idx = block.reshape(-1, n)
        term = np.asarray(g(*idx.T), dtype=float) * np.ones(lead + (idx.shape[0],))
        for k in range(n):
            term = term * dB[..., idx[:, k]]
        total = total + term.sum(axis=-1)
    return total if total.ndim else float(total)


Kernel = Union[SimplexFunction, GridFunction]


def multiple_integral(g: Kernel, path, n: int | None = None):
    """``I_n = n! J_n``.

    ``g`` is either a general symmetric kernel (evaluated by the naive sum)
    or a :class:`GridFunction` ``f`` together with ``n``, meaning the product
    kernel ``f^{(x)n}``.
    """
    if isinstance(g, SimplexFunction):
        if n is not None and n != g.order:
            raise ValueError(f"order mismatch: kernel has order {g.order}, got n={n}")
        return math.factorial(g.order) * iterated_general(g, path)
    if n is None:
        raise ValueError("n is required for a product-form kernel")
    return math.factorial(n) * iterated_product(g, path, n)


def theta_and_norm_sq(f: GridFunction, path, which: str = REALIZED):
    """``theta_T = int f dB`` and ``||f||_T^2 = int f^2 d<B>``."""
    theta = ito_integral(f, path)
    v = qv_integral(f.squared(), path, which)
    if np.any(np.asarray(v) < 0):
        raise ArithmeticError("negative quadratic-variation integral")
    return theta, v


def theorem1_rhs(f: GridFunction, path, n: int, which: str = REALIZED):
    """Closed-form side ``||f||_T^n h_n(theta_T / ||f||_T)`` as ``H_n(theta_T, ||f||_T^2)``."""
    theta, v = theta_and_norm_sq(f, path, which)
    return hermite_scaled_eval(n, theta, v)


def recursion_residual(f: GridFunction, path, n: int, side: str = "closed", which: str = REALIZED):
    """``I_n - theta_T I_{n-1} + (n-1) ||f||_T^2 I_{n-2}``.

    ``side="closed"`` takes every ``I_k`` from :func:`theorem1_rhs`;
    ``side="discrete"`` takes them from the iterated sums.
    """
    if n < 2:
        raise ValueError("recursion needs n >= 2")
    theta, v = theta_and_norm_sq(f, path, which)
    if side == "closed":
        i_n, i_1, i_2 = (hermite_scaled_eval(k, theta, v) for k in (n, n - 1, n - 2))
    elif side == "discrete":
        levels = iterated_levels(f, path, n)
        i_n, i_1, i_2 = (math.factorial(k) * np.asarray(levels[k]) for k in (n, n - 1, n - 2))
    else:
        raise ValueError(f"side must be 'closed' or 'discrete', got {side!r}")
    out = np.asarray(i_n) - np.asarray(theta) * i_1 + (n - 1) * np.asarray(v) * i_2
    return out if out.ndim else float(out)


def corollary_closed_form(path, n: int, which: str = REALIZED):
    """``sum_m (-1)^m <B>_T^m B_T^(n-2m) / (2^m m! (n-2m)!)``, equal to ``J_n`` for ``f = 1``."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    b = np.asarray(path.B)[..., -1]
    if which == REALIZED:
        q = np.asarray(path.qv_realized)[..., -1]
    elif which == SCENARIO:
        q = np.full(np.shape(b), path.qv_scenario[-1])
    else:
        raise ValueError(f"which must be 'realized' or 'scenario', got {which!r}")
    coeffs = hermite_coeffs(n).coeffs
    nfact = math.factorial(n)
    out = np.zeros(np.shape(b))
    for m in range(n // 2 + 1):
        out = out + (coeffs[n - 2 * m] / nfact) * q**m * b ** (n - 2 * m)
    return out if out.ndim else float(out)


# -- deterministic L2 norms of kernels ------------------------------------------


def _simplex_nodes(n: int, T: float, points: int):
    """Gauss-Legendre nodes/weights on ``0 <= x_1 <= ... <= x_n <= T``."""
    z, w = leggauss(points)
    z, w = (z + 1) / 2, w / 2
    ws = np.array([1.0])
    cols: list[np.ndarray] = []
    upper = np.array([T])
    for _ in range(n):
        new = (upper[:, None] * z[None, :]).ravel()
        ws = (ws[:, None] * upper[:, None] * w[None, :]).ravel()
        cols = [np.repeat(c, points) for c in cols]
        cols.append(new)
        upper = new
    return cols[::-1], ws


def l2_norm_sq_simplex(g: Callable[..., np.ndarray], n: int, T: float, points: int = 12) -> float:
    """``int_{S_n} g^2`` by nested Gauss-Legendre quadrature."""
    cols, ws = _simplex_nodes(n, T, points)
    return float(np.sum(ws * np.asarray(g(*cols), dtype=float) ** 2))


def l2_norm_sq_cube(g: Callable[..., np.ndarray], n: int, T: float, points: int = 12) -> float:
    """``int_{[0,T]^n} g^2`` by tensor Gauss-Legendre quadrature."""
    z, w = leggauss(points)
    z, w = T * (z + 1) / 2, T * w / 2
    grids = np.meshgrid(*([z] * n), indexing="ij")
    wt = np.ones([points] * n)
    for W in np.meshgrid(*([w] * n), indexing="ij"):
        wt = wt * W
    return float(np.sum(wt * np.asarray(g(*grids), dtype=float) ** 2))

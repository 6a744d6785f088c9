"""Explicit finite differences for ``u_t = G(u_xx)``, ``u(0, .) = phi``.

The value ``u(T, 0)`` is the sublinear expectation of ``phi(B_T)`` and serves
as an independent check on the Monte Carlo scenario sweep.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .catalog import Payoff
from .scenario import VolatilityBounds


class CflError(ValueError):
    """Explicit scheme would be unstable for the requested steps."""


def g_function(alpha, bounds: VolatilityBounds):
    """``G(alpha) = (sigma_hi^2 alpha^+ - sigma_lo^2 alpha^-) / 2``."""
    a = np.asarray(alpha, dtype=float)
    out = 0.5 * (bounds.sigma_hi**2 * np.maximum(a, 0.0) - bounds.sigma_lo**2 * np.maximum(-a, 0.0))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class PdeConfig:
    """Space-time grid for the explicit solver.

    ``half_width`` defaults to ``6 sigma_hi sqrt(T)``. ``time_steps`` defaults
    to the smallest count with ``sigma_hi^2 dt / dx^2 <= cfl_target``.
    """

    bounds: VolatilityBounds
    horizon: float = 1.0
    half_width: float | None = None
    space_steps: int = 800
    time_steps: int | None = None
    cfl_target: float = 0.9

    def __post_init__(self):
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if self.space_steps < 2 or self.space_steps % 2:
            raise ValueError("space_steps must be an even integer >= 2 so that x = 0 is a node")
        if self.half_width is None:
            object.__setattr__(self, "half_width", 6.0 * self.bounds.sigma_hi * math.sqrt(self.horizon))
        if self.half_width <= 0:
            raise ValueError("half_width must be positive")
        if self.time_steps is None:
            k = math.ceil(self.bounds.sigma_hi**2 * self.horizon / (self.cfl_target * self.dx**2))
            object.__setattr__(self, "time_steps", max(k, 1))
        if self.cfl_number > 0.5 + 1e-12:
            raise CflError(
                f"CFL violated: sigma_hi^2 dt / (2 dx^2) = {self.cfl_number:.4g} > 1/2 "
                f"(dx={self.dx:.4g}, dt={self.dt:.4g}); increase time_steps"
            )

    @property
    def dx(self) -> float:
        return 2.0 * self.half_width / self.space_steps

    @property
    def dt(self) -> float:
        return self.horizon / self.time_steps

    @property
    def cfl_number(self) -> float:
        return 0.5 * self.bounds.sigma_hi**2 * self.dt / self.dx**2

    @property
    def x(self) -> np.ndarray:
        x = np.linspace(-self.half_width, self.half_width, self.space_steps + 1)
        x[self.space_steps // 2] = 0.0
        return x


@dataclass(frozen=True, eq=False)
class GHeatSolution:
    x: np.ndarray
    u: np.ndarray
    config: PdeConfig

    @property
    def value_at_zero(self) -> float:
        return float(self.u[self.config.space_steps // 2])

    def write_csv(self, dest) -> None:
        with open(dest, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "u"])
            for xi, ui in zip(self.x, self.u):
                w.writerow([format(float(xi), ".17g"), format(float(ui), ".17g")])


def solve_gheat(phi: Payoff, cfg: PdeConfig) -> GHeatSolution:
    """March ``u <- u + dt G(D2 u)`` from ``phi`` to time ``T``.

    Boundary nodes follow ``phi(+-L) + t G(phi''(+-L))``: exact for payoffs
    that are linear or quadratic near the edges.
    """
    x = cfg.x
    u = np.asarray(phi(x), dtype=float).copy()
    ends = x[[0, -1]]
    phi_ends = np.asarray(phi(ends), dtype=float)
    drift_ends = g_function(phi.second_derivative(ends), cfg.bounds)
    inv_dx2 = 1.0 / cfg.dx**2
    dt = cfg.dt
    for k in range(cfg.time_steps):
        d2 = (u[2:] - 2.0 * u[1:-1] + u[:-2]) * inv_dx2
        u[1:-1] += dt * g_function(d2, cfg.bounds)
        u[[0, -1]] = phi_ends + (k + 1) * dt * drift_ends
    return GHeatSolution(x, u, cfg)

"""Upper and lower expectations by a sweep over volatility scenarios.

The sublinear expectation of a path functional ``X`` is approximated by the
largest Monte Carlo mean of ``X`` over a finite list of admissible scenarios.
Every scenario reuses the same Gaussian draws (common random numbers), so
differences between scenario means are not blurred by sampling noise.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import ito, rng
from .catalog import Payoff, TimeFunction
from .scenario import (
    BangBang,
    Constant,
    ScenarioSpec,
    TimeGrid,
    VolatilityBounds,
    build_scenario,
    constant_sweep,
    iter_batches,
    scenario_to_dict,
)

MAX_CHAOS_ORDER = 5


# -- functionals -----------------------------------------------------------------


class Functional:
    """A real functional of a simulated path, evaluated row-wise on a batch."""

    def evaluate(self, batch) -> np.ndarray:
        raise NotImplementedError

    def describe(self) -> dict:
        raise NotImplementedError

    def __neg__(self) -> "Functional":
        return Scaled(self, -1.0)

    def __add__(self, other: "Functional") -> "Functional":
        return Sum(self, other)


@dataclass(frozen=True)
class TerminalPayoff(Functional):
    payoff: Payoff

    def evaluate(self, batch):
        return np.asarray(self.payoff(batch.B[..., -1]), dtype=float)

    def describe(self):
        return {"kind": "terminal-payoff", "payoff": str(self.payoff)}


@dataclass(frozen=True)
class ChaosIntegral(Functional):
    """``I_n`` of the product kernel ``f^{(x)n}``, raised to ``power``."""

    n: int
    f: TimeFunction
    power: int = 1

    def evaluate(self, batch):
        f = ito.GridFunction.sample(batch.grid, self.f)
        return np.asarray(ito.multiple_integral(f, batch, self.n), dtype=float) ** self.power

    def describe(self):
        return {"kind": "chaos-integral", "n": self.n, "f": str(self.f), "power": self.power}


@dataclass(frozen=True)
class SquaredItoIntegral(Functional):
    eta: TimeFunction

    def evaluate(self, batch):
        eta = ito.GridFunction.sample(batch.grid, self.eta)
        return np.asarray(ito.ito_integral(eta, batch), dtype=float) ** 2

    def describe(self):
        return {"kind": "squared-ito-integral", "eta": str(self.eta)}


@dataclass(frozen=True)
class Scaled(Functional):
    inner: Functional
    factor: float

    def evaluate(self, batch):
        return self.factor * self.inner.evaluate(batch)

    def describe(self):
        return {"kind": "scaled", "factor": self.factor, "inner": self.inner.describe()}


@dataclass(frozen=True)
class Sum(Functional):
    left: Functional
    right: Functional

    def evaluate(self, batch):
        return self.left.evaluate(batch) + self.right.evaluate(batch)

    def describe(self):
        return {"kind": "sum", "left": self.left.describe(), "right": self.right.describe()}


def functional_from_dict(d: dict, horizon: float = 1.0) -> Functional:
    kind = d.get("kind")
    if kind == "terminal-payoff":
        return TerminalPayoff(Payoff.parse(d["payoff"]))
    if kind == "chaos-integral":
        return ChaosIntegral(int(d["n"]), TimeFunction.parse(d.get("f", "one"), horizon), int(d.get("power", 1)))
    if kind == "squared-ito-integral":
        return SquaredItoIntegral(TimeFunction.parse(d.get("eta", "one"), horizon))
    raise ValueError(f"unknown functional kind {kind!r}")


# -- estimation ------------------------------------------------------------------


@dataclass
class ScenarioEstimate:
    id: int
    scenario: dict
    mean: float
    se: float


@dataclass
class EstimateReport:
    functional: dict
    bounds: dict
    grid: dict
    rows: list[ScenarioEstimate]
    upper: float
    lower: float
    argmax: int
    argmin: int
    paths_per_scenario: int
    seed: int

    @property
    def upper_se(self) -> float:
        return self.rows[self.argmax].se

    @property
    def lower_se(self) -> float:
        return self.rows[self.argmin].se

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def default_scenarios(bounds: VolatilityBounds, points: int = 9, switch_probs=(0.05, 0.5)) -> list[ScenarioSpec]:
    """Constant sweep from ``sigma_lo`` to ``sigma_hi`` plus bang-bang scenarios."""
    out: list[ScenarioSpec] = list(constant_sweep(bounds, points))
    if not bounds.classical:
        out += [BangBang(p) for p in switch_probs]
    return out


def _scenario_seed(seed: int, index: int) -> int:
    return int(rng.stream_keys(seed, rng.STREAM_SCENARIO, index, 1)[0])


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    n = values.size
    if np.ptp(values) == 0.0:
        return float(values[0]), 0.0
    mean = math.fsum(values) / n
    if n < 2:
        return mean, float("inf")
    var = math.fsum((values - mean) ** 2) / (n - 1)
    return mean, math.sqrt(var / n)


def scenario_samples(X: Functional, scenario, paths: int, seed: int, batch_size: int = 2000) -> np.ndarray:
    """Values of ``X`` on paths ``0 .. paths - 1`` of one scenario."""
    parts = [np.broadcast_to(X.evaluate(b), (len(b),)) for b in iter_batches(scenario, paths, seed, batch_size)]
    return np.concatenate(parts)


def upper_expectation(
    X: Functional,
    bounds: VolatilityBounds,
    grid: TimeGrid,
    scenarios: list[ScenarioSpec],
    paths_per_scenario: int,
    seed: int,
    batch_size: int = 2000,
) -> EstimateReport:
    """Largest scenario mean of ``X``; the report also carries the smallest.

    Scenario ``i`` draws any switching randomness from a stream keyed by
    ``(seed, i)``, so appending scenarios never alters earlier rows.

    Raises
    ------
    ValueError
        Empty scenario list, or the list lacks the constant scenarios at
        ``sigma_lo`` and ``sigma_hi``.
    """
    if not scenarios:
        raise ValueError("scenario list is empty")
    if not isinstance(X, Functional):
        raise TypeError(f"X must be a Functional, got {type(X).__name__}")
    consts = {float(s.sigma) for s in scenarios if isinstance(s, Constant)}
    missing = [s for s in (bounds.sigma_lo, bounds.sigma_hi) if s not in consts]
    if missing:
        raise ValueError(f"scenario list must include constant scenarios at {missing}")
    if paths_per_scenario < 1:
        raise ValueError("paths_per_scenario must be positive")
    rows = []
    for i, spec in enumerate(scenarios):
        scen = build_scenario(bounds, grid, spec, _scenario_seed(seed, i))
        mean, se = _mean_se(scenario_samples(X, scen, paths_per_scenario, seed, batch_size))
        rows.append(ScenarioEstimate(i, scenario_to_dict(spec), mean, se))
    means = [r.mean for r in rows]
    hi, lo = int(np.argmax(means)), int(np.argmin(means))
    return EstimateReport(
        functional=X.describe(),
        bounds={"sigma_lo": bounds.sigma_lo, "sigma_hi": bounds.sigma_hi},
        grid={"horizon": grid.horizon, "steps": grid.steps},
        rows=rows,
        upper=means[hi],
        lower=means[lo],
        argmax=hi,
        argmin=lo,
        paths_per_scenario=paths_per_scenario,
        seed=seed,
    )


def lower_expectation(X: Functional, *args, **kwargs) -> EstimateReport:
    """``-upper(-X)``, reported for ``X``."""
    neg = upper_expectation(-X, *args, **kwargs)
    rows = [ScenarioEstimate(r.id, r.scenario, -r.mean, r.se) for r in neg.rows]
    return EstimateReport(
        functional=X.describe(),
        bounds=neg.bounds,
        grid=neg.grid,
        rows=rows,
        upper=-neg.lower,
        lower=-neg.upper,
        argmax=neg.argmin,
        argmin=neg.argmax,
        paths_per_scenario=neg.paths_per_scenario,
        seed=neg.seed,
    )


# -- moment bounds ---------------------------------------------------------------------


@dataclass
class BoundCheck:
    name: str
    lhs: float
    se: float
    rhs: float
    argmax: int
    estimate: EstimateReport = field(repr=False)

    @property
    def slack(self) -> float:
        return self.lhs - self.rhs

    @property
    def passed(self) -> bool:
        return self.slack <= 3.0 * self.se

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "lhs": self.lhs,
            "se": self.se,
            "rhs": self.rhs,
            "slack": self.slack,
            "allowance": 3.0 * self.se,
            "passed": self.passed,
            "argmax": self.argmax,
        }


def _grid_values(fn: TimeFunction | ito.GridFunction, grid: TimeGrid) -> np.ndarray:
    if isinstance(fn, ito.GridFunction):
        if fn.grid != grid:
            raise ito.GridMismatchError("function grid does not match the requested grid")
        return fn.values
    return ito.GridFunction.sample(grid, fn).values


class _GridSquaredIto(Functional):
    def __init__(self, values):
        self.values = values

    def evaluate(self, batch):
        return np.sum(self.values * batch.dB, axis=-1) ** 2

    def describe(self):
        return {"kind": "squared-ito-integral", "eta": "grid-values"}


def moment_bound_check(
    eta, bounds: VolatilityBounds, grid: TimeGrid, scenarios, paths: int, seed: int
) -> BoundCheck:
    """Upper expectation of ``(int eta dB)^2`` against ``sigma_hi^2 sum eta_i^2 dt``."""
    if isinstance(eta, TimeFunction):
        X: Functional = SquaredItoIntegral(eta)
    else:
        X = _GridSquaredIto(_grid_values(eta, grid))
    vals = _grid_values(eta, grid)
    rhs = bounds.sigma_hi**2 * float(np.sum(vals**2)) * grid.dt
    rep = upper_expectation(X, bounds, grid, scenarios, paths, seed)
    return BoundCheck(f"ito-moment[{eta}]", rep.upper, rep.upper_se, rhs, rep.argmax, rep)


def chaos_moment_bound_check(
    f: TimeFunction, n: int, bounds: VolatilityBounds, grid: TimeGrid, scenarios, paths: int, seed: int
) -> BoundCheck:
    """Upper expectation of ``I_n^2`` against ``sigma_hi^(2n) n! ||f||^(2n)``.

    ``||f||^2`` is the grid sum ``sum f_i^2 dt``.
    """
    if n > MAX_CHAOS_ORDER:
        raise ValueError(f"chaos order {n} exceeds the limit {MAX_CHAOS_ORDER}")
    if n < 0:
        raise ValueError("n must be nonnegative")
    vals = _grid_values(f, grid)
    norm_sq = float(np.sum(vals**2)) * grid.dt
    rhs = bounds.sigma_hi ** (2 * n) * math.factorial(n) * norm_sq**n
    rep = upper_expectation(ChaosIntegral(n, f, power=2), bounds, grid, scenarios, paths, seed)
    return BoundCheck(f"chaos-moment[n={n}, f={f}]", rep.upper, rep.upper_se, rhs, rep.argmax, rep)

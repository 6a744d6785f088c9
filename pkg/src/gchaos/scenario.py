"""Time grids, volatility scenarios and G-Brownian path simulation.

A G-Brownian path is simulated as a classical Gaussian path whose
volatility on each grid interval is picked by an admissible scenario with
values in ``[sigma_lo, sigma_hi]``. Scenarios are piecewise constant on the
grid and fixed before any Gaussian draw is made, which makes them adapted.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence, Union

import numpy as np

from . import rng


class BoundsViolationError(ValueError):
    pass


class ScenarioSpecError(ValueError):
    pass


@dataclass(frozen=True)
class VolatilityBounds:
    sigma_lo: float
    sigma_hi: float

    def __post_init__(self):
        lo, hi = float(self.sigma_lo), float(self.sigma_hi)
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise ValueError("volatility bounds must be finite")
        if lo < 0:
            raise ValueError(f"sigma_lo must be nonnegative, got {lo}")
        if hi <= 0:
            raise ValueError(f"sigma_hi must be positive, got {hi}")
        if lo > hi:
            raise ValueError(f"sigma_lo={lo} exceeds sigma_hi={hi}")
        object.__setattr__(self, "sigma_lo", lo)
        object.__setattr__(self, "sigma_hi", hi)

    @property
    def classical(self) -> bool:
        return self.sigma_lo == self.sigma_hi

    def contains(self, sigma: float) -> bool:
        return self.sigma_lo <= sigma <= self.sigma_hi


@dataclass(frozen=True)
class TimeGrid:
    """Uniform partition of ``[0, horizon]`` into ``steps`` intervals."""

    horizon: float
    steps: int

    def __post_init__(self):
        if not self.horizon > 0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValueError(f"steps must be a positive integer, got {self.steps}")
        object.__setattr__(self, "horizon", float(self.horizon))
        object.__setattr__(self, "steps", int(self.steps))

    @property
    def dt(self) -> float:
        return self.horizon / self.steps

    @property
    def times(self) -> np.ndarray:
        t = np.arange(self.steps + 1) * self.dt
        t[-1] = self.horizon
        return t

    @property
    def left_times(self) -> np.ndarray:
        return self.times[:-1]


# -- scenario descriptors ---------------------------------------------------


@dataclass(frozen=True)
class Constant:
    sigma: float
    kind: str = field(default="constant", init=False)


@dataclass(frozen=True)
class Piecewise:
    """Consecutive ``(fraction_of_horizon, sigma)`` segments."""

    segments: tuple[tuple[float, float], ...]
    kind: str = field(default="piecewise", init=False)

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple((float(a), float(s)) for a, s in self.segments))


@dataclass(frozen=True)
class BangBang:
    """Randomly switch between the two extreme volatilities.

    At each step the current value flips with probability ``switch_prob``.
    The starting value is a fair coin.
    """

    switch_prob: float
    kind: str = field(default="bang-bang-random", init=False)


ScenarioSpec = Union[Constant, Piecewise, BangBang]


def scenario_from_dict(d: dict) -> ScenarioSpec:
    """Parse a JSON-style scenario descriptor."""
    kind = d.get("kind")
    rest = {k: v for k, v in d.items() if k != "kind"}
    try:
        if kind == "constant":
            return Constant(**rest)
        if kind == "piecewise":
            return Piecewise(tuple(tuple(s) for s in rest.pop("segments")), **rest)
        if kind in ("bang-bang", "bang-bang-random"):
            return BangBang(**rest)
    except (TypeError, KeyError) as exc:
        raise ScenarioSpecError(f"bad {kind} scenario {d!r}: {exc}") from None
    raise ScenarioSpecError(f"unknown scenario kind {kind!r}")


def scenario_to_dict(spec: ScenarioSpec) -> dict:
    if isinstance(spec, Constant):
        return {"kind": "constant", "sigma": spec.sigma}
    if isinstance(spec, Piecewise):
        return {"kind": "piecewise", "segments": [list(s) for s in spec.segments]}
    return {"kind": "bang-bang", "switch_prob": spec.switch_prob}


def constant_sweep(bounds: VolatilityBounds, points: int = 9) -> list[Constant]:
    """Constant scenarios on an even grid from ``sigma_lo`` to ``sigma_hi``."""
    if bounds.classical:
        return [Constant(bounds.sigma_hi)]
    sig = np.linspace(bounds.sigma_lo, bounds.sigma_hi, points)
    sig[0], sig[-1] = bounds.sigma_lo, bounds.sigma_hi
    return [Constant(float(s)) for s in sig]


@dataclass(frozen=True, eq=False)
class ScenarioPath:
    grid: TimeGrid
    bounds: VolatilityBounds
    sigma: np.ndarray
    kind: str

    def __post_init__(self):
        sigma = np.asarray(self.sigma, dtype=float)
        if sigma.shape != (self.grid.steps,):
            raise ValueError(f"sigma must have {self.grid.steps} entries, got shape {sigma.shape}")
        bad = (sigma < self.bounds.sigma_lo) | (sigma > self.bounds.sigma_hi)
        if bad.any():
            i = int(np.argmax(bad))
            raise BoundsViolationError(
                f"sigma[{i}]={sigma[i]} outside [{self.bounds.sigma_lo}, {self.bounds.sigma_hi}]"
            )
        sigma.setflags(write=False)
        object.__setattr__(self, "sigma", sigma)

    @property
    def qv_increments(self) -> np.ndarray:
        return self.sigma**2 * self.grid.dt


def build_scenario(
    bounds: VolatilityBounds, grid: TimeGrid, spec: ScenarioSpec, rng_seed: int = 0
) -> ScenarioPath:
    """Realize a scenario descriptor as a volatility trajectory on ``grid``.

    Raises
    ------
    BoundsViolationError
        A requested volatility lies outside ``bounds``.
    ScenarioSpecError
        Piecewise fractions do not sum to one, or the switch probability is
        not in ``[0, 1]``.
    """
    n = grid.steps
    if isinstance(spec, Constant):
        if not bounds.contains(spec.sigma):
            raise BoundsViolationError(
                f"constant sigma={spec.sigma} outside [{bounds.sigma_lo}, {bounds.sigma_hi}]"
            )
        sigma = np.full(n, float(spec.sigma))
    elif isinstance(spec, Piecewise):
        if not spec.segments:
            raise ScenarioSpecError("piecewise scenario needs at least one segment")
        fracs = np.array([a for a, _ in spec.segments])
        if np.any(fracs <= 0) or abs(fracs.sum() - 1.0) > 1e-9:
            raise ScenarioSpecError(f"segment fractions must be positive and sum to 1, got {fracs.tolist()}")
        for _, s in spec.segments:
            if not bounds.contains(s):
                raise BoundsViolationError(
                    f"segment sigma={s} outside [{bounds.sigma_lo}, {bounds.sigma_hi}]"
                )
        cuts = np.cumsum(fracs)[:-1]
        # segment owning step i is decided by its left endpoint i/N
        seg = np.searchsorted(cuts, np.arange(n) / n + 1e-12, side="right")
        sigma = np.array([s for _, s in spec.segments])[seg]
    elif isinstance(spec, BangBang):
        p = float(spec.switch_prob)
        if not 0.0 <= p <= 1.0:
            raise ScenarioSpecError(f"switch_prob must be in [0, 1], got {p}")
        keys = rng.stream_keys(rng_seed, rng.STREAM_SCENARIO, 0, 1)
        u = rng.uniforms(keys, n + 1)[0]
        high = u[0] < 0.5
        flips = u[1:] < p
        flips[0] = False
        state = np.logical_xor(high, np.cumsum(flips) % 2 == 1)
        sigma = np.where(state, bounds.sigma_hi, bounds.sigma_lo)
    else:
        raise ScenarioSpecError(f"unsupported scenario descriptor {spec!r}")
    return ScenarioPath(grid, bounds, sigma, spec.kind)


# -- paths --------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BrownianPath:
    """One simulated path.

    ``dB`` is defined as the first difference of ``B``, so
    ``B[i + 1] - B[i] == dB[i]`` holds bit for bit.
    """

    grid: TimeGrid
    scenario: ScenarioPath
    dB: np.ndarray
    B: np.ndarray
    qv_scenario: np.ndarray
    qv_realized: np.ndarray

    @property
    def B_T(self) -> float:
        return float(self.B[-1])


@dataclass(frozen=True, eq=False)
class PathBatch:
    """Many paths under one scenario, stored row-wise.

    Array attributes have a leading path axis, so the integral routines in
    :mod:`gchaos.ito` accept a batch wherever they accept a single path and
    return one value per row.
    """

    grid: TimeGrid
    scenario: ScenarioPath
    dB: np.ndarray  # (paths, N)
    B: np.ndarray  # (paths, N + 1)
    qv_scenario: np.ndarray  # (N + 1,), shared by every row
    qv_realized: np.ndarray  # (paths, N + 1)
    start: int = 0

    def __len__(self) -> int:
        return self.dB.shape[0]

    def __getitem__(self, j: int) -> BrownianPath:
        return BrownianPath(
            self.grid, self.scenario, self.dB[j], self.B[j], self.qv_scenario, self.qv_realized[j]
        )

    def __iter__(self) -> Iterator[BrownianPath]:
        return (self[j] for j in range(len(self)))

    @property
    def B_T(self) -> np.ndarray:
        return self.B[:, -1]


def _running(increments: np.ndarray) -> np.ndarray:
    pad = np.zeros(increments.shape[:-1] + (1,))
    return np.concatenate([pad, np.cumsum(increments, axis=-1)], axis=-1)


def simulate_batch(scenario: ScenarioPath, count: int, master_seed: int, start: int = 0) -> PathBatch:
    """Simulate paths ``start .. start + count - 1`` of the stream ``master_seed``.

    Path ``j`` depends only on ``(master_seed, j)`` and the scenario, so
    batches over disjoint index ranges can be produced independently. The
    Gaussian draws do not depend on the scenario, which gives common random
    numbers across scenarios.
    """
    if count < 1:
        raise ValueError(f"count must be positive, got {count}")
    grid = scenario.grid
    keys = rng.stream_keys(master_seed, rng.STREAM_GAUSS, start, count)
    z = rng.normals(keys, grid.steps)
    B = _running(scenario.sigma * math.sqrt(grid.dt) * z)
    dB = np.diff(B, axis=-1)
    return PathBatch(
        grid=grid,
        scenario=scenario,
        dB=dB,
        B=B,
        qv_scenario=_running(scenario.qv_increments),
        qv_realized=_running(dB * dB),
        start=start,
    )


def iter_batches(
    scenario: ScenarioPath, count: int, master_seed: int, batch_size: int = 2000
) -> Iterator[PathBatch]:
    """Yield consecutive batches covering path indices ``0 .. count - 1``."""
    for start in range(0, count, batch_size):
        yield simulate_batch(scenario, min(batch_size, count - start), master_seed, start)


def simulate_paths(scenario: ScenarioPath, count: int, master_seed: int) -> list[BrownianPath]:
    """``count`` independent paths as individual records."""
    return list(simulate_batch(scenario, count, master_seed))


def realized_qv_series(path: BrownianPath) -> np.ndarray:
    """Running sums of squared increments, starting at 0."""
    return _running(np.asarray(path.dB, dtype=float) ** 2)


def write_path_csv(path: BrownianPath, dest) -> None:
    """Write ``t, B, qv_realized, sigma`` rows, one per grid point.

    ``sigma`` at a node is the volatility of the interval starting there;
    the final node repeats the last interval's value.
    """
    sigma = np.append(path.scenario.sigma, path.scenario.sigma[-1])
    rows = zip(path.grid.times, path.B, path.qv_realized, sigma)
    own = isinstance(dest, (str, bytes)) or hasattr(dest, "__fspath__")
    fh = open(dest, "w", newline="") if own else dest
    try:
        w = csv.writer(fh)
        w.writerow(["t", "B", "qv_realized", "sigma"])
        for row in rows:
            w.writerow([format(float(v), ".17g") for v in row])
    finally:
        if own:
            fh.close()


def read_path_csv(src) -> dict[str, np.ndarray]:
    with open(src, newline="") as fh:
        r = csv.DictReader(fh)
        data = {k: [] for k in r.fieldnames}
        for row in r:
            for k, v in row.items():
                data[k].append(float(v))
    return {k: np.array(v) for k, v in data.items()}


def path_from_increments(scenario: ScenarioPath, dB: Sequence[float]) -> BrownianPath:
    """Wrap explicit increments as a path (hand-built test cases, replay)."""
    dB = np.asarray(dB, dtype=float)
    if dB.shape != (scenario.grid.steps,):
        raise ValueError(f"expected {scenario.grid.steps} increments, got shape {dB.shape}")
    B = _running(dB)
    dB = np.diff(B)
    return BrownianPath(
        scenario.grid, scenario, dB, B, _running(scenario.qv_increments), _running(dB * dB)
    )

"""Named payoffs and deterministic time functions.

Both the Monte Carlo estimators and the PDE solver draw terminal payoffs
from :class:`Payoff`, so cross-checks always compare the same function.
Descriptors are short strings such as ``"square"``, ``"call(0.5)"``,
``"poly(1, 0, 3)"`` (coefficients in increasing degree), ``"one"`` or
``"affine(1, 0.5)"``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

_CALL = re.compile(r"^\s*([a-zA-Z][\w-]*)\s*(?:\((.*)\))?\s*$")


def _split(text: str) -> tuple[str, tuple[float, ...]]:
    m = _CALL.match(text)
    if not m:
        raise ValueError(f"cannot parse descriptor {text!r}")
    name, args = m.group(1), m.group(2)
    if args is None or not args.strip():
        return name, ()
    try:
        return name, tuple(float(a) for a in args.split(","))
    except ValueError:
        raise ValueError(f"non-numeric argument in {text!r}") from None


PAYOFF_NAMES = ("linear", "square", "neg-square", "call", "abs", "poly")


@dataclass(frozen=True)
class Payoff:
    name: str
    params: tuple[float, ...] = ()

    def __post_init__(self):
        arity = {"linear": 0, "square": 0, "neg-square": 0, "abs": 0, "call": 1}
        if self.name not in PAYOFF_NAMES:
            raise ValueError(f"unknown payoff {self.name!r}; expected one of {PAYOFF_NAMES}")
        if self.name == "poly":
            if not self.params:
                raise ValueError("poly payoff needs at least one coefficient")
        elif len(self.params) != arity[self.name]:
            raise ValueError(f"payoff {self.name!r} takes {arity[self.name]} parameter(s)")
        if not all(np.isfinite(self.params)):
            raise ValueError("payoff parameters must be finite")

    @classmethod
    def parse(cls, text: str) -> "Payoff":
        name, args = _split(text)
        return cls(name, args)

    @classmethod
    def constant(cls, c: float) -> "Payoff":
        return cls("poly", (float(c),))

    def __str__(self) -> str:
        if not self.params:
            return self.name
        return f"{self.name}({', '.join(format(p, 'g') for p in self.params)})"

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.name == "linear":
            out = x.copy()
        elif self.name == "square":
            out = x * x
        elif self.name == "neg-square":
            out = -x * x
        elif self.name == "abs":
            out = np.abs(x)
        elif self.name == "call":
            out = np.maximum(x - self.params[0], 0.0)
        else:
            out = np.polynomial.polynomial.polyval(x, self.params) * np.ones_like(x)
        return out if out.ndim else float(out)

    def second_derivative(self, x):
        """Classical second derivative away from kinks (0 at the kink)."""
        x = np.asarray(x, dtype=float)
        if self.name == "square":
            out = np.full_like(x, 2.0)
        elif self.name == "neg-square":
            out = np.full_like(x, -2.0)
        elif self.name == "poly":
            d2 = np.polynomial.polynomial.polyder(self.params, 2) if len(self.params) > 2 else [0.0]
            out = np.polynomial.polynomial.polyval(x, d2) * np.ones_like(x)
        else:
            out = np.zeros_like(x)
        return out if out.ndim else float(out)

    @property
    def shape(self) -> str | None:
        """``"convex"``, ``"concave"`` or ``None`` when neither is known."""
        if self.name in ("square", "abs", "call", "linear"):
            return "convex"
        if self.name == "neg-square":
            return "concave"
        c = self.params
        if len(c) <= 2:
            return "convex"
        if len(c) == 3:
            return "convex" if c[2] >= 0 else "concave"
        return None


@dataclass(frozen=True)
class TimeFunction:
    """Deterministic ``f`` on ``[0, T]``: ``one``, ``affine(a, b) = a + b t`` or samples.

    ``samples`` is a piecewise-constant function taking ``values[k]`` on the
    ``k``-th of ``len(values)`` equal subintervals of ``[0, horizon]``.
    """

    name: str
    params: tuple[float, ...] = ()
    horizon: float = 1.0

    def __post_init__(self):
        if self.name == "one" and self.params:
            raise ValueError("'one' takes no parameters")
        if self.name == "affine" and len(self.params) != 2:
            raise ValueError("affine(a, b) takes two parameters")
        if self.name == "samples" and not self.params:
            raise ValueError("samples needs at least one value")
        if self.name not in ("one", "affine", "samples", "zero"):
            raise ValueError(f"unknown time function {self.name!r}")

    @classmethod
    def parse(cls, spec, horizon: float = 1.0) -> "TimeFunction":
        if isinstance(spec, dict):
            if set(spec) != {"samples"}:
                raise ValueError(f"time function object must be {{'samples': [...]}}, got keys {sorted(spec)}")
            return cls("samples", tuple(float(v) for v in spec["samples"]), horizon)
        name, args = _split(spec)
        return cls(name, args, horizon)

    def __str__(self) -> str:
        if self.name == "samples":
            return f"samples[{len(self.params)}]"
        if not self.params:
            return self.name
        return f"{self.name}({', '.join(format(p, 'g') for p in self.params)})"

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.name == "one":
            return np.ones_like(t)
        if self.name == "zero":
            return np.zeros_like(t)
        if self.name == "affine":
            a, b = self.params
            return a + b * t
        k = len(self.params)
        idx = np.clip(np.floor(t / self.horizon * k).astype(int), 0, k - 1)
        return np.asarray(self.params)[idx]

    def integral_sq(self, T: float) -> float:
        """``int_0^T f(t)^2 dt`` in closed form."""
        if self.name == "one":
            return T
        if self.name == "zero":
            return 0.0
        if self.name == "affine":
            a, b = self.params
            return a * a * T + a * b * T**2 + b * b * T**3 / 3
        v = np.asarray(self.params)
        edges = np.linspace(0.0, self.horizon, len(v) + 1)
        widths = np.clip(np.minimum(edges[1:], T) - edges[:-1], 0.0, None)
        return float(np.sum(v**2 * widths))

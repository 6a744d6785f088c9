"""Probabilists' Hermite polynomials with exact integer coefficients.

``h_n`` is built two ways: the three-term recurrence
``h_n(y) = y h_{n-1}(y) - (n-1) h_{n-2}(y)`` and the closed-form sum
``h_n(x) = n! sum_m (-1)^m x^(n-2m) / (2^m m! (n-2m)!)``. Both produce plain
Python integers, so they can be compared for exact equality.

The homogeneous form ``H_n(x, v) = v^(n/2) h_n(x / sqrt(v))`` is evaluated
without ever dividing by ``sqrt(v)``, which keeps it defined at ``v = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

MAX_DEGREE = 30


class DegreeOverflowError(ValueError):
    """Requested degree is above the supported cap."""


class HermiteConsistencyError(ArithmeticError):
    """A term of the explicit sum failed to reduce to an integer."""


@dataclass(frozen=True)
class ChaosPolynomial:
    """Monic integer polynomial ``sum_k coeffs[k] x^k`` of a given degree."""

    degree: int
    coeffs: tuple[int, ...]

    def __post_init__(self):
        if len(self.coeffs) != self.degree + 1:
            raise ValueError("coeffs must have degree + 1 entries")
        if self.coeffs[-1] != 1:
            raise ValueError("Hermite polynomials are monic")
        for k, c in enumerate(self.coeffs):
            if c != 0 and (self.degree - k) % 2:
                raise ValueError(f"coefficient {k} breaks parity of degree {self.degree}")

    def __call__(self, x):
        return _horner(self.coeffs, x)


def _check_degree(n: int, wide: bool) -> None:
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
        raise TypeError(f"degree must be an integer, got {type(n).__name__}")
    if n < 0:
        raise ValueError(f"degree must be nonnegative, got {n}")
    if n > MAX_DEGREE and not wide:
        raise DegreeOverflowError(
            f"degree overflow: n={n} exceeds {MAX_DEGREE}; pass wide=True for big-integer coefficients"
        )


@lru_cache(maxsize=None)
def _recurrence_table(n: int) -> tuple[tuple[int, ...], ...]:
    rows = [(1,), (0, 1)]
    for k in range(2, n + 1):
        prev, prev2 = rows[k - 1], rows[k - 2]
        row = [0] * (k + 1)
        for j, c in enumerate(prev):
            row[j + 1] += c
        for j, c in enumerate(prev2):
            row[j] -= (k - 1) * c
        rows.append(tuple(row))
    return tuple(rows[: n + 1])


def hermite_coeffs(n: int, wide: bool = False) -> ChaosPolynomial:
    """Coefficients of ``h_n`` from the three-term recurrence.

    Parameters
    ----------
    n : int
        Degree, ``0 <= n <= 30`` unless ``wide`` is set.
    wide : bool
        Allow degrees above the cap. Coefficients are Python integers either
        way; the cap exists so that callers porting values to fixed-width
        integers opt in explicitly.

    Raises
    ------
    DegreeOverflowError
        If ``n > 30`` and ``wide`` is false.
    """
    _check_degree(n, wide)
    return ChaosPolynomial(int(n), _recurrence_table(int(n))[int(n)])


def hermite_coeffs_explicit(n: int, wide: bool = False) -> ChaosPolynomial:
    """Coefficients of ``h_n`` from the closed-form alternating sum.

    Every term is formed as an exact fraction and must reduce to an integer.
    """
    _check_degree(n, wide)
    n = int(n)
    coeffs = [0] * (n + 1)
    nfact = math.factorial(n)
    for m in range(n // 2 + 1):
        term = Fraction((-1) ** m * nfact, 2**m * math.factorial(m) * math.factorial(n - 2 * m))
        if term.denominator != 1:
            raise HermiteConsistencyError(f"non-integral term n={n}, m={m}: {term}")
        coeffs[n - 2 * m] = term.numerator
    return ChaosPolynomial(n, tuple(coeffs))


def _horner(coeffs, x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for c in reversed(coeffs):
        out = out * x + float(c)
    return out if out.ndim else float(out)


def hermite_eval(n: int, x):
    """Evaluate ``h_n`` at ``x`` (scalar or array) by Horner's rule."""
    return _horner(hermite_coeffs(n).coeffs, x)


def hermite_scaled_eval(n: int, x, v):
    """Homogeneous Hermite form ``H_n(x, v)``.

    ``H_n(x, v) = sum_m c_{n-2m} x^(n-2m) v^m`` where ``c`` are the integer
    coefficients of ``h_n``. For ``v > 0`` this equals
    ``v^(n/2) h_n(x / sqrt(v))``; at ``v = 0`` it is ``x^n``.

    Broadcasts over array ``x`` and ``v``.

    Raises
    ------
    ValueError
        If any ``v`` is negative.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any(v < 0):
        raise ValueError("v must be nonnegative (it plays the role of a quadratic variation)")
    coeffs = hermite_coeffs(n).coeffs
    x, v = np.broadcast_arrays(x, v)
    out = np.zeros(x.shape)
    vm = np.ones(x.shape)
    for m in range(n // 2 + 1):
        out = out + float(coeffs[n - 2 * m]) * x ** (n - 2 * m) * vm
        vm = vm * v
    return out if out.ndim else float(out)

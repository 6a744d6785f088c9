"""Counter-based SplitMix64 substreams and inverse-CDF normals.

Every path ``j`` under a master seed gets its own SplitMix64 sequence keyed by

    key(master, j, stream) = mix(mix(master ^ salt[stream]) + (j + 1) * GAMMA)

and its ``k``-th output is ``mix(key + (k + 1) * GAMMA)``. Because each draw
is a pure function of ``(master, stream, j, k)``, disjoint path ranges can be
generated in any order or in parallel and still reproduce the same values.

Uniforms take the top 53 bits, offset by half a unit so they lie strictly
inside (0, 1); normals are ``ndtri(u)``.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK = (1 << 64) - 1

# stream salts keep the Gaussian draws and the scenario switching draws apart
STREAM_GAUSS = 0x6761757373000001
STREAM_SCENARIO = 0x7363656E00000002


def mix64(z: np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer applied elementwise to a uint64 array."""
    z = np.asarray(z, dtype=np.uint64)
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _u64(value: int) -> np.ndarray:
    return np.array([int(value) & _MASK], dtype=np.uint64)


def stream_keys(master_seed: int, stream: int, start: int, count: int) -> np.ndarray:
    """Per-index keys for indices ``start .. start + count - 1``."""
    base = mix64(_u64(master_seed) ^ _u64(stream))
    idx = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    return mix64(base + idx * GAMMA)


def uniforms(keys: np.ndarray, n: int) -> np.ndarray:
    """``n`` uniforms in (0, 1) per key, shape ``(len(keys), n)``."""
    k = np.arange(1, n + 1, dtype=np.uint64)
    bits = mix64(keys[:, None] + k[None, :] * GAMMA)
    return ((bits >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def normals(keys: np.ndarray, n: int) -> np.ndarray:
    return ndtri(uniforms(keys, n))

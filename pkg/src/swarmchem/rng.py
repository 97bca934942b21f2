"""Deterministic randomness.

Two kinds of randomness are used in this package:

* Counter-based streams for everything that happens inside an engine step.
  A value is a pure function of ``(seed, stream tag, step, particle index,
  draw column)``; nothing is mutated, so the simulation state never carries
  generator state and any snapshot resumes bit-exactly from (seed, step).
* Sequential ``numpy.random.Generator`` instances (PCG64) for operator-style
  calls that take an explicit ``rng`` argument: recipe mutation/crossover and
  interactive-evolution commands.
"""

from __future__ import annotations

import numpy as np

RandomSource = np.random.Generator

MASK64 = 0xFFFFFFFFFFFFFFFF

_MUL1 = np.uint64(0xBF58476D1CE4E5B9)
_MUL2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_INV_2_53 = float(2.0**-53)

# Stream tags: one per kind of in-step draw, so disabling one mechanism never
# shifts the draws of another (capability monotonicity depends on this).
TAG_SPAWN = 1
TAG_STEER = 2
TAG_DIFFERENTIATE = 3
TAG_SHARE = 4
TAG_EVOLVE = 5
TAG_PERTURB = 6


def make_rng(seed: int) -> RandomSource:
    """Sequential generator for operator-style calls."""
    return np.random.Generator(np.random.PCG64(int(seed) & MASK64))


def _mix(x: np.ndarray | np.uint64) -> np.ndarray | np.uint64:
    """splitmix64 finalizer; a bijection on 64-bit words. Overflow wraps by design."""
    with np.errstate(over="ignore"):
        x = x ^ (x >> np.uint64(30))
        x = x * _MUL1
        x = x ^ (x >> np.uint64(27))
        x = x * _MUL2
        return x ^ (x >> np.uint64(31))


def stream_key(seed: int, *path: int) -> int:
    """Derive a substream key from a seed and a path of small integers."""
    k = _mix(np.uint64(int(seed) & MASK64))
    with np.errstate(over="ignore"):
        for p in path:
            k = _mix((k + _GOLDEN) ^ np.uint64(int(p) & MASK64))
    return int(k)


def _bits(key: int, index: np.ndarray, col: int) -> np.ndarray:
    idx = np.asarray(index, dtype=np.uint64)
    with np.errstate(over="ignore"):
        h = _mix(idx + _GOLDEN)
        h = _mix(h ^ (np.uint64(key) + np.uint64(col) * _MUL1))
    return h


def uniform(key: int, index: np.ndarray, col: int = 0) -> np.ndarray:
    """Uniform floats in [0, 1), one per entry of ``index``."""
    return (_bits(key, index, col) >> np.uint64(11)).astype(np.float64) * _INV_2_53


def _uniform_open(key: int, index: np.ndarray, col: int) -> np.ndarray:
    # (0, 1]: safe as a log() argument.
    return ((_bits(key, index, col) >> np.uint64(11)) + np.uint64(1)).astype(np.float64) * _INV_2_53


def normals(key: int, index: np.ndarray, ncols: int) -> np.ndarray:
    """Standard normals of shape (len(index), ncols) via Box-Muller."""
    index = np.asarray(index)
    out = np.empty((len(index), ncols), dtype=np.float64)
    for c in range(ncols):
        u1 = _uniform_open(key, index, 2 * c)
        u2 = uniform(key, index, 2 * c + 1)
        out[:, c] = np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
    return out


def unit_vectors(key: int, index: np.ndarray, dim: int) -> np.ndarray:
    """Uniform directions on the (dim-1)-sphere, one per entry of ``index``."""
    v = normals(key, index, dim)
    n = np.linalg.norm(v, axis=1, keepdims=True)
    n[n < 1e-300] = 1.0
    return v / n

"""Dense vector helpers, seeded random streams and minibatch sampling.

Vectors are plain 1-d float64 numpy arrays. Random streams are built on the
Philox counter-based generator, so a given ``(seed, run_index)`` pair
reproduces the exact same draw sequence on every platform.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

Vector = np.ndarray
MiniBatch = np.ndarray  # integer index array, size B


class DimensionMismatch(ValueError):
    """Operands have incompatible dimensions."""


class NonFiniteValue(ValueError):
    """A function evaluation produced NaN or Inf."""


def stream(seed: int, run_index: int = 0) -> np.random.Generator:
    """Independent random stream keyed by ``(seed, run_index)``.

    Streams with distinct run indices under the same seed are statistically
    independent (Philox keyed through a spawned SeedSequence).
    """
    ss = np.random.SeedSequence(seed, spawn_key=(run_index,))
    return np.random.Generator(np.random.Philox(ss))


def dot(a: Vector, b: Vector) -> float:
    if a.shape != b.shape:
        raise DimensionMismatch(f"dot: shapes {a.shape} and {b.shape} differ")
    return float(np.dot(a, b))


def norm_sq(a: Vector) -> float:
    return float(np.dot(a, a))


def finite_diff_grad(f: Callable[[Vector], float], x: Vector, h: float) -> Vector:
    """Central-difference gradient, entry i = (f(x + h e_i) - f(x - h e_i)) / 2h."""
    if h <= 0:
        raise ValueError("finite_diff_grad: h must be positive")
    g = np.empty_like(x, dtype=np.float64)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        hi = f(x + e)
        lo = f(x - e)
        if not (np.isfinite(hi) and np.isfinite(lo)):
            raise NonFiniteValue(f"finite_diff_grad: non-finite evaluation at entry {i}")
        g[i] = (hi - lo) / (2.0 * h)
    return g


def sample_batch(rng: np.random.Generator, n: int, B: int) -> MiniBatch:
    """Draw B distinct indices uniformly from [0, n) without replacement."""
    if not 1 <= B <= n:
        raise ValueError(f"sample_batch: need 1 <= B <= n, got B={B}, n={n}")
    return rng.choice(n, size=B, replace=False)

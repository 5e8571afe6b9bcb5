"""Dense matrix helpers and the deterministic random stream.

Conventions used everywhere in this package:

* matrices are 2-D C-contiguous float64 numpy arrays, batches as rows;
* randomness comes from :class:`Rng`, a counter-based splitmix64 stream,
  so a fixed seed yields the same values on every platform and run.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import ShapeError

RNG_ALGORITHM = "splitmix64"

_MASK64 = (1 << 64) - 1
_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_U53 = 2.0 ** -53


class Rng:
    """splitmix64 stream with an explicit draw counter.

    Output i is a pure function of (seed, i), which lets whole blocks of the
    stream be produced with vectorized uint64 arithmetic while staying
    bit-identical to the scalar reference algorithm.
    """

    algorithm = RNG_ALGORITHM

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK64
        self._counter = 0

    def raw(self, n: int) -> np.ndarray:
        """Next ``n`` raw 64-bit outputs; advances the counter."""
        if n < 0:
            raise ValueError(f"draw count must be >= 0, got {n}")
        start = self._counter
        self._counter += n
        # state after k increments is seed + k*gamma; output = mix(state)
        idx = np.arange(start + 1, start + n + 1, dtype=np.uint64)
        z = np.uint64(self.seed) + idx * _GAMMA
        z = (z ^ (z >> _S30)) * _MIX1
        z = (z ^ (z >> _S27)) * _MIX2
        return z ^ (z >> _S31)

    def uniform(self, n: int) -> np.ndarray:
        """Next ``n`` doubles in [0, 1) with 53-bit resolution."""
        return (self.raw(n) >> _S11).astype(np.float64) * _U53

    def normal(self, n: int, mean: float = 0.0, std: float = 1.0) -> np.ndarray:
        """Next ``n`` Gaussian variates via the Box-Muller transform."""
        if std < 0:
            raise ValueError(f"std must be >= 0, got {std}")
        pairs = (n + 1) // 2
        u = self.uniform(2 * pairs)
        r = np.sqrt(-2.0 * np.log(1.0 - u[0::2]))  # 1-u keeps log away from 0
        theta = (2.0 * np.pi) * u[1::2]
        z = np.empty(2 * pairs)
        z[0::2] = r * np.cos(theta)
        z[1::2] = r * np.sin(theta)
        return mean + std * z[:n]

    def permutation(self, n: int) -> np.ndarray:
        """Deterministic random permutation of range(n)."""
        return np.argsort(self.uniform(n), kind="stable")


def rng_uniform(rng: Rng, n: int) -> np.ndarray:
    return rng.uniform(n)


def rng_normal(rng: Rng, n: int, mean: float = 0.0, std: float = 1.0) -> np.ndarray:
    return rng.normal(n, mean, std)


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce to a 2-D float64 array, rejecting higher ranks."""
    out = np.asarray(a, dtype=np.float64)
    if out.ndim == 1:
        out = out.reshape(1, -1)
    if out.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got ndim={out.ndim}")
    return np.ascontiguousarray(out)


def check_finite(a: np.ndarray, name: str = "matrix") -> np.ndarray:
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


def matmul(a, b) -> np.ndarray:
    """Standard matrix product with an explicit inner-dimension check."""
    a = as_matrix(a, "left operand")
    b = as_matrix(b, "right operand")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(
            f"cannot multiply {a.shape[0]}x{a.shape[1]} by {b.shape[0]}x{b.shape[1]}: "
            f"inner dimensions {a.shape[1]} and {b.shape[0]} differ"
        )
    return a @ b


def elementwise(op: str, a, b=None) -> np.ndarray:
    """Entrywise arithmetic: add/sub/mul (matrix), scale (scalar), map (callable)."""
    a = as_matrix(a, "left operand")
    if op in ("add", "sub", "mul"):
        b = as_matrix(b, "right operand")
        if a.shape != b.shape:
            raise ShapeError(f"elementwise {op}: shapes {a.shape} and {b.shape} differ")
        if op == "add":
            return a + b
        if op == "sub":
            return a - b
        return a * b
    if op == "scale":
        return a * float(b)
    if op == "map":
        if not isinstance(b, Callable):
            raise ValueError("map requires a callable")
        return np.vectorize(b, otypes=[np.float64])(a)
    raise ValueError(f"unknown elementwise op {op!r}")

"""Dense matrix helpers and the deterministic PRNG used by every other module.

A "dense matrix" throughout this package is a 2-D, C-contiguous (row-major)
``numpy.ndarray`` of float64. ``dense()`` is the checked constructor; the
arithmetic itself is delegated to numpy, but every public operation keeps the
dtype/layout convention and raises package errors on contract violations.

Randomness comes exclusively from :class:`SeededRng`, a from-scratch
xoshiro256++ generator seeded through splitmix64. Runs are therefore
bit-reproducible for a given 64-bit seed, independent of numpy's own RNG.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import NumericError, ShapeError

DenseMatrix = np.ndarray

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def dense(values: Union[Iterable, np.ndarray]) -> DenseMatrix:
    """Build a float64, row-major 2-D matrix from nested sequences or an array.

    1-D input becomes a single-row matrix. Non-finite entries are rejected.
    """
    arr = np.ascontiguousarray(values, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise ShapeError(f"expected at most 2 dimensions, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NumericError("matrix contains non-finite entries")
    return arr


def matmul(a: DenseMatrix, b: DenseMatrix) -> DenseMatrix:
    """Standard matrix product ``a @ b``.

    Raises :class:`ShapeError` naming both operand shapes when the inner
    dimensions disagree.
    """
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul needs 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape[0]}x{a.shape[1]} by {b.shape[0]}x{b.shape[1]}")
    return a @ b


def l2_norm(v: DenseMatrix) -> float:
    """Euclidean norm over all entries; 0.0 for an all-zero or empty matrix."""
    flat = np.asarray(v, dtype=np.float64).ravel()
    return math.sqrt(float(np.dot(flat, flat)))


def _splitmix64(x: int) -> tuple[int, int]:
    """One splitmix64 step: returns (new state, output)."""
    x = (x + _GOLDEN) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x, z ^ (z >> 31)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK64


class SeededRng:
    """xoshiro256++ generator with splitmix64 state initialization.

    The four 64-bit state words are the first four outputs of splitmix64
    applied to ``seed``, so equal seeds yield identical sequences on every
    platform. All derived draws (floats, bounded ints, shuffles) are defined
    in terms of the raw 64-bit stream and are part of the reproducibility
    contract.
    """

    def __init__(self, seed: int):
        self.seed = seed & _MASK64
        x = self.seed
        state = []
        for _ in range(4):
            x, out = _splitmix64(x)
            state.append(out)
        self._s = state

    def next_u64(self) -> int:
        s = self._s
        result = (_rotl((s[0] + s[3]) & _MASK64, 23) + s[0]) & _MASK64
        t = (s[1] << 17) & _MASK64
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def next_float(self) -> float:
        """Uniform double in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def below(self, n: int) -> int:
        """Unbiased integer in [0, n) via rejection sampling."""
        if n <= 0:
            raise ValueError(f"below() needs n >= 1, got {n}")
        limit = ((1 << 64) // n) * n
        while True:
            draw = self.next_u64()
            if draw < limit:
                return draw % n

    def uniform(self, low: float, high: float, shape: Sequence[int]) -> DenseMatrix:
        """Matrix of uniform draws in [low, high), filled in row-major order."""
        count = int(np.prod(shape)) if len(shape) else 1
        span = high - low
        out = np.empty(count, dtype=np.float64)
        for i in range(count):
            out[i] = low + span * self.next_float()
        return np.ascontiguousarray(out.reshape(shape))


def rng_shuffle(rng: SeededRng, n: int) -> np.ndarray:
    """Fisher-Yates permutation of 0..n-1, deterministic for a given stream."""
    if n < 0:
        raise ValueError(f"cannot shuffle {n} items")
    perm = np.arange(n, dtype=np.int64)
    for i in range(n - 1, 0, -1):
        j = rng.below(i + 1)
        perm[i], perm[j] = perm[j], perm[i]
    return perm

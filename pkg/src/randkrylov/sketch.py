"""Subsampled randomized Hadamard transform (SRHT).

``Theta = sqrt(N / s) * P * (H / sqrt(N)) * D`` where ``N`` is the input
dimension padded to a power of two, ``D`` a random sign diagonal, ``H`` the
(unnormalized) Walsh-Hadamard matrix and ``P`` selects ``s`` distinct rows
uniformly at random. The scaling makes ``E ||Theta x||^2 = ||x||^2`` and
``Theta`` orthogonal when ``s = N``.

Randomness comes from numpy's counter-based Philox bit generator, so a seed
reproduces the same operator on every platform.
"""

from dataclasses import dataclass
import math

import numpy as np

from .counters import tally
from .errors import DimensionMismatch, InvalidSketchSize

__all__ = ["SketchOperator", "build_srht", "apply_sketch", "fwht", "next_pow2", "make_rng"]


def make_rng(seed):
    """Philox-backed generator; ``seed`` may be an int or a SeedSequence."""
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(seed))


def next_pow2(n):
    return 1 << max(0, int(n) - 1).bit_length()


def fwht(x):
    """In-place unnormalized fast Walsh-Hadamard transform along axis 0.

    ``x`` must have a power-of-two leading dimension; trailing axes are
    transformed independently.
    """
    N = x.shape[0]
    if N & (N - 1):
        raise ValueError("fwht needs a power-of-two length")
    tail = x.shape[1:]
    h = 1
    while h < N:
        y = x.reshape((N // (2 * h), 2, h) + tail)
        a = y[:, 0].copy()
        y[:, 0] += y[:, 1]
        y[:, 1] *= -1.0
        y[:, 1] += a
        h *= 2
    return x


@dataclass(frozen=True, eq=False)
class SketchOperator:
    n_input: int
    n_padded: int
    s: int
    signs: np.ndarray
    selected_rows: np.ndarray
    seed: object
    scale: float

    @property
    def shape(self):
        return (self.s, self.n_input)

    def __matmul__(self, x):
        return apply_sketch(self, x)


def build_srht(n, s, seed):
    """Draw an ``s x n`` SRHT.

    Raises
    ------
    InvalidSketchSize
        Unless ``1 <= s <= next_pow2(n)``.
    """
    n = int(n)
    s = int(s)
    N = next_pow2(n)
    if n < 1 or not 1 <= s <= N:
        raise InvalidSketchSize(f"need 1 <= s <= {N} for n = {n}, got s = {s}")
    rng = make_rng(seed)
    signs = rng.integers(0, 2, size=N).astype(np.float64) * 2.0 - 1.0
    rows = np.sort(rng.choice(N, size=s, replace=False))
    signs.setflags(write=False)
    rows.setflags(write=False)
    return SketchOperator(n, N, s, signs, rows, seed, 1.0 / math.sqrt(s))


def apply_sketch(theta, x):
    """Apply ``theta`` to a vector or to each column of a matrix."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != theta.n_input or x.ndim > 2:
        raise DimensionMismatch(
            f"sketch expects leading dimension {theta.n_input}, got shape {x.shape}"
        )
    N = theta.n_padded
    work = np.zeros((N,) + x.shape[1:], dtype=np.float64)
    if x.ndim == 1:
        work[: theta.n_input] = theta.signs[: theta.n_input] * x
    else:
        work[: theta.n_input] = theta.signs[: theta.n_input, None] * x
    fwht(work)
    ncols = 1 if x.ndim == 1 else x.shape[1]
    tally(sketch_flops=ncols * N * int(math.log2(N)))
    return theta.scale * work[theta.selected_rows]

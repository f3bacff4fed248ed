"""Seeded excess-phase sequences for jitter injection.

Random kinds draw from xoshiro256** seeded through SplitMix64; Gaussian
variates come from the Box-Muller transform applied to consecutive raw
words (both outputs of each pair are used, cosine branch first). The
sequence therefore depends only on the seed and the sample index, never
on a library's default generator.
"""

from __future__ import annotations

import numpy as np

from . import _kernels as K
from .core import JitterKind, JitterSpec
from .errors import InvalidInputError

# Relative deviation tolerated between steps of a "uniform" grid.
GRID_RTOL = 1e-9


class Xoshiro256:
    """xoshiro256** with SplitMix64 state expansion."""

    def __init__(self, seed: int):
        self.state = K.splitmix64_seed(int(seed))

    def raw(self, n: int) -> np.ndarray:
        out = np.empty(n, dtype=np.uint64)
        K.fill_raw(self.state, out)
        return out


class GaussianStream:
    """Standard normal variates drawn sequentially from a seed.

    Successive ``take`` calls continue the same sequence, so chunked draws
    match a single large draw exactly.
    """

    def __init__(self, seed: int):
        self._rng = Xoshiro256(seed)
        self._spare = None

    def take(self, n: int) -> np.ndarray:
        out = np.empty(n)
        i = 0
        if n and self._spare is not None:
            out[0] = self._spare
            self._spare = None
            i = 1
        rest = n - i
        pairs = np.empty(rest + (rest & 1))
        if pairs.size:
            K.fill_normal_pairs(self._rng.state, pairs)
        out[i:] = pairs[:rest]
        if rest & 1:
            self._spare = pairs[-1]
        return out


class JitterSource:
    """Chunked generator for one ``JitterSpec``.

    ``take(t)`` returns the samples for the next ``len(t)`` grid points.
    """

    def __init__(self, spec: JitterSpec):
        self.spec = spec
        self._gauss = None
        self._walk = 0.0
        if spec.kind is not JitterKind.SINUSOIDAL:
            self._gauss = GaussianStream(spec.seed)

    def take(self, t: np.ndarray) -> np.ndarray:
        spec = self.spec
        if spec.kind is JitterKind.SINUSOIDAL:
            return spec.amplitude * np.sin(K.TWO_PI * spec.freq * t)
        white = spec.amplitude * self._gauss.take(len(t))
        if spec.kind is JitterKind.WHITE_PHASE:
            return white
        if len(white):
            white[0] += self._walk
            walk = np.cumsum(white)
            self._walk = walk[-1]
            return walk
        return white


def check_uniform_grid(t_grid) -> np.ndarray:
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1:
        raise InvalidInputError("t_grid: must be one-dimensional")
    if not np.all(np.isfinite(t)):
        raise InvalidInputError("t_grid: must be finite")
    if t.size > 1:
        steps = np.diff(t)
        h = (t[-1] - t[0]) / (t.size - 1)
        if h <= 0 or np.any(steps <= 0):
            raise InvalidInputError("t_grid: must be strictly increasing")
        scale = max(abs(t[0]), abs(t[-1]), h)
        if np.max(np.abs(steps - h)) > GRID_RTOL * scale + 1e-6 * h:
            raise InvalidInputError("t_grid: step is not uniform")
    return t


def gen_jitter(spec: JitterSpec, t_grid) -> np.ndarray:
    """Excess phase in radians on ``t_grid`` (uniformly spaced).

    Sinusoidal: ``amplitude * sin(2*pi*freq*t)``. WhitePhase: i.i.d.
    N(0, amplitude**2). RandomWalk: running sum of the WhitePhase sequence
    of the same seed.
    """
    t = check_uniform_grid(t_grid)
    return JitterSource(spec).take(t)

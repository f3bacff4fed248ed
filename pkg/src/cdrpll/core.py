"""Value types shared by the loop blocks, the analyzer and the engine.

Frequencies are stored in hertz and converted to rad/s where they are used.
All types validate on construction and are immutable afterwards.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import InvalidInputError

# Largest magnitude the engine lets a phase accumulator reach.
PHASE_OVERFLOW_GUARD = 1e15


def _finite(name: str, value) -> float:
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise InvalidInputError(f"{name}: expected a number, got {value!r}") from None
    if not math.isfinite(v):
        raise InvalidInputError(f"{name}: must be finite, got {value!r}")
    return v


def _set(obj, name, value):
    object.__setattr__(obj, name, value)


@dataclass(frozen=True)
class LoopParams:
    """Loop constants of the PD / filter / VCO / divider chain.

    Attributes:
        k_pd: phase detector gain, V/rad.
        k_vco: VCO gain, rad/s per V.
        n_div: feedback divider ratio.
        f_in: reference frequency, Hz.
        f_free: VCO free-running frequency, Hz. Defaults to ``n_div * f_in``.
    """

    k_pd: float = 1.0
    k_vco: float = 2.0e9
    n_div: int = 100
    f_in: float = 50e6
    f_free: float | None = None

    def __post_init__(self):
        _set(self, "k_pd", _finite("k_pd", self.k_pd))
        _set(self, "k_vco", _finite("k_vco", self.k_vco))
        _set(self, "f_in", _finite("f_in", self.f_in))
        if isinstance(self.n_div, bool) or int(self.n_div) != self.n_div:
            raise InvalidInputError(f"n_div: must be an integer, got {self.n_div!r}")
        _set(self, "n_div", int(self.n_div))
        if self.k_pd <= 0:
            raise InvalidInputError("k_pd: must be > 0")
        if self.k_vco <= 0:
            raise InvalidInputError("k_vco: must be > 0")
        if self.n_div < 1:
            raise InvalidInputError("n_div: must be >= 1")
        if self.f_in <= 0:
            raise InvalidInputError("f_in: must be > 0")
        if not math.isfinite(2.0 * math.pi * self.n_div * self.f_in):
            raise InvalidInputError("n_div * f_in overflows as an angular frequency")
        f_free = self.n_div * self.f_in if self.f_free is None else self.f_free
        f_free = _finite("f_free", f_free)
        if f_free <= 0:
            raise InvalidInputError("f_free: must be > 0")
        _set(self, "f_free", f_free)

    @property
    def f_target(self) -> float:
        """Nominal lock frequency ``n_div * f_in`` in Hz."""
        return self.n_div * self.f_in

    @property
    def loop_gain(self) -> float:
        """Velocity constant ``k_pd * k_vco / n_div`` in rad/s."""
        return self.k_pd * self.k_vco / self.n_div


@dataclass(frozen=True)
class RlcFilter:
    """Series-R, series-L, shunt-C low-pass filter.

    Defaults give poles at about -2.5e7 +/- j1.0e9 rad/s.
    """

    r: float = 50.0
    l: float = 1e-6
    c: float = 1e-12

    def __post_init__(self):
        for name in ("r", "l", "c"):
            _set(self, name, _finite(name, getattr(self, name)))
        if self.r < 0:
            raise InvalidInputError("r: must be >= 0")
        if self.l <= 0:
            raise InvalidInputError("l: must be > 0")
        if self.c <= 0:
            raise InvalidInputError("c: must be > 0")
        if self.l * self.c == 0 or not math.isfinite(self.a1):
            raise InvalidInputError("1/(l*c) is not a finite positive number")
        if not math.isfinite(self.a2):
            raise InvalidInputError("r/l is not finite")

    @property
    def a1(self) -> float:
        return 1.0 / (self.l * self.c)

    @property
    def a2(self) -> float:
        return self.r / self.l

    @property
    def critical_r(self) -> float:
        """Resistance at which the discriminant ``a2**2 - 4*a1`` vanishes."""
        return 2.0 * math.sqrt(self.l / self.c)


def _coeffs(name: str, values) -> tuple[float, ...]:
    arr = np.atleast_1d(np.asarray(values, dtype=float))
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidInputError(f"{name}: expected a non-empty 1-D coefficient list")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name}: coefficients must be finite")
    return tuple(float(v) for v in arr)


def _degree(coeffs: tuple[float, ...]) -> int:
    nz = [i for i, v in enumerate(coeffs) if v != 0.0]
    return nz[-1] if nz else -1


@dataclass(frozen=True)
class RationalTf:
    """Rational transfer function ``num(s) / den(s)``.

    Coefficients are in ascending powers of s: ``[c0, c1, c2]`` is
    ``c0 + c1*s + c2*s**2``.
    """

    num: tuple[float, ...]
    den: tuple[float, ...]

    def __post_init__(self):
        _set(self, "num", _coeffs("num", self.num))
        _set(self, "den", _coeffs("den", self.den))
        if _degree(self.den) < 0:
            raise InvalidInputError("den: needs at least one nonzero coefficient")

    @property
    def num_degree(self) -> int:
        return _degree(self.num)

    @property
    def den_degree(self) -> int:
        return _degree(self.den)

    @property
    def is_proper(self) -> bool:
        return self.num_degree <= self.den_degree

    @cached_property
    def poles(self) -> np.ndarray:
        from .analysis import poly_roots

        return poly_roots(self.den)

    @cached_property
    def zeros(self) -> np.ndarray:
        from .analysis import poly_roots

        if self.num_degree < 1:
            return np.empty(0, dtype=complex)
        return poly_roots(self.num)


@dataclass(frozen=True)
class PolePair:
    """The two roots of ``s**2 + a2*s + a1``."""

    s1: complex
    s2: complex

    def __post_init__(self):
        for name in ("s1", "s2"):
            v = complex(getattr(self, name))
            if not (math.isfinite(v.real) and math.isfinite(v.imag)):
                raise InvalidInputError(f"{name}: must be finite")
            _set(self, name, v)

    def __iter__(self):
        yield self.s1
        yield self.s2


class Injection(enum.Enum):
    PD_INPUT = "pd_input"
    VCO = "vco"


class JitterKind(enum.Enum):
    SINUSOIDAL = "sinusoidal"
    RANDOM_WALK = "random_walk"
    WHITE_PHASE = "white_phase"


@dataclass(frozen=True)
class JitterSpec:
    """Excess-phase waveform injected at the PD input or at the VCO.

    ``amplitude`` is the peak (sinusoidal) or the per-sample standard
    deviation (random kinds), in radians. ``freq`` only applies to the
    sinusoid, ``seed`` only to the random kinds.
    """

    injection: Injection
    kind: JitterKind
    amplitude: float
    freq: float = 0.0
    seed: int = 0

    def __post_init__(self):
        _set(self, "injection", Injection(self.injection))
        _set(self, "kind", JitterKind(self.kind))
        _set(self, "amplitude", _finite("amplitude", self.amplitude))
        _set(self, "freq", _finite("freq", self.freq))
        if self.amplitude < 0:
            raise InvalidInputError("amplitude: must be >= 0")
        if self.kind is JitterKind.SINUSOIDAL and self.freq <= 0:
            raise InvalidInputError("freq: must be > 0 for sinusoidal jitter")
        if isinstance(self.seed, bool) or int(self.seed) != self.seed:
            raise InvalidInputError(f"seed: must be an integer, got {self.seed!r}")
        seed = int(self.seed)
        if not 0 <= seed < 2**64:
            raise InvalidInputError("seed: must fit in an unsigned 64-bit integer")
        _set(self, "seed", seed)


class SimMode(enum.Enum):
    PHASE_DOMAIN = "phase_domain"
    FULL_WAVE = "full_wave"


@dataclass(frozen=True)
class SimConfig:
    """Fixed-step engine settings. FullWave sampling density is checked by the engine."""

    mode: SimMode = SimMode.PHASE_DOMAIN
    dt: float = 1e-10
    duration: float = 200e-6
    lock_freq_tol: float = 1e-4
    lock_window: float = 2e-6
    decimation: int = 10

    def __post_init__(self):
        _set(self, "mode", SimMode(self.mode))
        for name in ("dt", "duration", "lock_freq_tol", "lock_window"):
            _set(self, name, _finite(name, getattr(self, name)))
        if self.dt <= 0:
            raise InvalidInputError("dt: must be > 0")
        if self.duration <= self.dt:
            raise InvalidInputError("duration: must exceed dt")
        if not 0 < self.lock_freq_tol < 1:
            raise InvalidInputError("lock_freq_tol: must lie in (0, 1)")
        if self.lock_window <= 0:
            raise InvalidInputError("lock_window: must be > 0")
        if isinstance(self.decimation, bool) or int(self.decimation) != self.decimation:
            raise InvalidInputError("decimation: must be an integer")
        _set(self, "decimation", int(self.decimation))
        if self.decimation < 1:
            raise InvalidInputError("decimation: must be >= 1")

    @property
    def n_steps(self) -> int:
        """Number of engine steps; sample k sits at ``k * dt``."""
        return int(math.floor(self.duration / self.dt * (1 + 1e-12)))


def _frozen_array(name, values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != 1:
        raise InvalidInputError(f"{name}: must be one-dimensional")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name}: must be finite")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class SimTrace:
    """Decimated time series recorded by the engine.

    ``phase_ref`` and the carrier arrays are extras: the reference phase is
    always kept, carriers only in FullWave mode.
    """

    t: np.ndarray
    v_pd: np.ndarray
    v_cont: np.ndarray
    phase_out: np.ndarray
    freq_out: np.ndarray
    lock_time: float | None = None
    final_phase_err: float | None = None
    phase_ref: np.ndarray | None = None
    carrier_out: np.ndarray | None = field(default=None, repr=False)
    carrier_ref: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        names = ["t", "v_pd", "v_cont", "phase_out", "freq_out"]
        names += [n for n in ("phase_ref", "carrier_out", "carrier_ref")
                  if getattr(self, n) is not None]
        for name in names:
            _set(self, name, _frozen_array(name, getattr(self, name)))
        n = len(self.t)
        if any(len(getattr(self, name)) != n for name in names):
            raise InvalidInputError("all series must share one length")
        if n > 1 and not np.all(np.diff(self.t) > 0):
            raise InvalidInputError("t: must be strictly increasing")
        for name in ("lock_time", "final_phase_err"):
            v = getattr(self, name)
            if v is not None:
                _set(self, name, _finite(name, v))

    def __len__(self):
        return len(self.t)

"""Models of the four loop blocks: phase detector, RLC filter, VCO, divider."""

from __future__ import annotations

import math

import numpy as np
from numpy.polynomial import polynomial as P

from . import _kernels as K
from .core import PolePair, RationalTf, RlcFilter
from .errors import DiscretizationError, InvalidInputError, PoleEvaluationError

# Relative distance to a pole inside which evaluation is refused.
POLE_GUARD = 1e-6


def _check_finite(**values):
    for name, v in values.items():
        if not math.isfinite(v):
            raise InvalidInputError(f"{name}: must be finite, got {v!r}")


def pd_output(k_pd: float, phi_ref: float, phi_fb: float) -> float:
    """Linear phase detector, ``k_pd * (phi_fb - phi_ref)``.

    No saturation and no wrapping; the caller decides how phases accumulate.
    """
    _check_finite(k_pd=k_pd, phi_ref=phi_ref, phi_fb=phi_fb)
    if k_pd <= 0:
        raise InvalidInputError("k_pd: must be > 0")
    return K.pd_core(float(k_pd), float(phi_ref), float(phi_fb))


def reactances(filt: RlcFilter, f: float) -> tuple[float, float, float]:
    """Reactance magnitudes of L and C at ``f`` and the combined impedance.

    Returns ``(x_l, x_c, z_mag)`` in ohms with
    ``z_mag = sqrt((x_l - x_c)**2 + r**2)``.
    """
    _check_finite(f=f)
    if f <= 0:
        raise InvalidInputError("f: must be > 0")
    w = 2.0 * math.pi * f
    x_l = w * filt.l
    x_c = 1.0 / (w * filt.c)
    return x_l, x_c, math.hypot(x_l - x_c, filt.r)


def filter_tf(filt: RlcFilter) -> RationalTf:
    """``a1 / (s**2 + a2*s + a1)`` with unit DC gain."""
    a1, a2 = filt.a1, filt.a2
    return RationalTf((a1,), (a1, a2, 1.0))


def filter_poles(filt: RlcFilter) -> PolePair:
    """Roots of ``s**2 + a2*s + a1`` from the quadratic formula.

    s1 takes the ``+sqrt`` branch, s2 the ``-sqrt`` branch. For a real
    discriminant s2 is recovered as ``a1 / s1`` so the small root keeps full
    relative precision; the value is the same root.
    """
    a1, a2 = filt.a1, filt.a2
    disc = a2 * a2 - 4.0 * a1
    if disc < 0:
        root = 1j * math.sqrt(-disc)
        s1 = -(a2 + root) / 2.0
        s2 = -(a2 - root) / 2.0
    else:
        s1 = complex(-(a2 + math.sqrt(disc)) / 2.0)
        s2 = complex(a1 / s1.real) if s1 != 0 else 0j
    return PolePair(s1, s2)


def factored_filter_eval(filt: RlcFilter, s) -> complex:
    """Evaluate the filter in pole-factored form.

    ``(a1 / (s1*s2)) / ((1 - s/s1) * (1 - s/s2))``; mathematically equal to
    ``eval_tf(filter_tf(filt), s)``.
    """
    s1, s2 = filter_poles(filt)
    s = complex(s)
    _guard_poles(s, (s1, s2))
    return (filt.a1 / (s1 * s2)) / ((1.0 - s / s1) * (1.0 - s / s2))


def _guard_poles(s, poles):
    for p in poles:
        if abs(s - p) <= POLE_GUARD * abs(p) or s == p:
            raise PoleEvaluationError(f"evaluation at s={s} is on the pole {p}")


def eval_tf(tf: RationalTf, s):
    """Evaluate ``num(s) / den(s)`` at a complex point or an array of points.

    Raises:
        PoleEvaluationError: if any point lies within a relative distance of
            1e-6 from a pole, or the denominator vanishes there.
    """
    scalar = np.ndim(s) == 0
    s_arr = np.atleast_1d(np.asarray(s, dtype=complex))
    poles = tf.poles
    if poles.size:
        dist = np.abs(s_arr[:, None] - poles[None, :])
        bad = (dist <= POLE_GUARD * np.abs(poles)[None, :]) | (dist == 0)
        if np.any(bad):
            i, j = np.argwhere(bad)[0]
            raise PoleEvaluationError(
                f"evaluation at s={s_arr[i]} is on the pole {poles[j]}")
    num = P.polyval(s_arr, tf.num)
    den = P.polyval(s_arr, tf.den)
    if np.any(den == 0):
        raise PoleEvaluationError("denominator vanishes at the evaluation point")
    out = num / den
    # real points in real arithmetic: complex division does not give a/a == 1
    real = s_arr.imag == 0
    if np.any(real):
        out[real] = (P.polyval(s_arr.real[real], tf.num)
                     / P.polyval(s_arr.real[real], tf.den))
    return complex(out[0]) if scalar else out


def bilinear(tf: RationalTf, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Trapezoidal (Tustin) map ``s -> (2/dt)(1 - z^-1)/(1 + z^-1)``.

    Returns ``(b, a)`` in powers of ``z^-1`` with ``a[0] == 1``.
    """
    if not tf.is_proper:
        raise InvalidInputError("bilinear: transfer function must be proper")
    n = tf.den_degree
    k = 2.0 / dt
    minus = np.array([1.0, -1.0])  # 1 - z^-1
    plus = np.array([1.0, 1.0])    # 1 + z^-1
    b = np.zeros(n + 1)
    a = np.zeros(n + 1)
    for i in range(n + 1):
        term = P.polymul(P.polypow(minus, i), P.polypow(plus, n - i)) * k**i
        term = np.pad(term, (0, n + 1 - term.size))
        if i < len(tf.num):
            b += tf.num[i] * term
        a += tf.den[i] * term
    return b / a[0], a / a[0]


class FilterStepper:
    """Stateful difference-equation realisation of a discretised filter."""

    def __init__(self, b, a):
        self.b = np.ascontiguousarray(b, dtype=float)
        self.a = np.ascontiguousarray(a, dtype=float)
        order = len(self.a) - 1
        self.xh = np.zeros(order)
        self.yh = np.zeros(order)

    @property
    def order(self) -> int:
        return len(self.xh)

    @property
    def dc_gain(self) -> float:
        return float(np.sum(self.b) / np.sum(self.a))

    def step(self, u: float) -> float:
        return K.filter_core(self.b, self.a, self.xh, self.yh, float(u))

    def reset(self):
        self.xh[:] = 0.0
        self.yh[:] = 0.0

    def preload(self, u: float):
        """Put the state at the equilibrium for a constant input ``u``."""
        self.xh[:] = u
        self.yh[:] = self.dc_gain * u

    def poles(self) -> np.ndarray:
        """Discrete poles (roots in z)."""
        if self.order == 0:
            return np.empty(0, dtype=complex)
        return np.roots(self.a)


def discretize_filter(tf: RationalTf, dt: float) -> FilterStepper:
    """Bilinear discretisation of ``tf`` at step ``dt``.

    Raises:
        DiscretizationError: a stable continuous filter mapped to a discrete
            filter with poles on or outside the unit circle.
    """
    _check_finite(dt=dt)
    if dt <= 0:
        raise InvalidInputError("dt: must be > 0")
    b, a = bilinear(tf, dt)
    stepper = FilterStepper(b, a)
    if tf.den_degree > 0 and np.all(tf.poles.real < 0):
        z = stepper.poles()
        if np.any(np.abs(z) >= 1.0):
            raise DiscretizationError(
                f"bilinear map at dt={dt} gave unstable poles {z}")
    return stepper


def vco_advance(phase: float, f_free: float, k_vco: float, v_cont: float,
                dt: float) -> float:
    """Advance VCO phase by ``(2*pi*f_free + k_vco*v_cont) * dt``."""
    _check_finite(phase=phase, f_free=f_free, k_vco=k_vco, v_cont=v_cont, dt=dt)
    if dt <= 0:
        raise InvalidInputError("dt: must be > 0")
    return K.vco_core(float(phase), K.TWO_PI * f_free, float(k_vco),
                      float(v_cont), float(dt))


def divide_phase(phase: float, n_div: int) -> float:
    if n_div < 1:
        raise InvalidInputError("n_div: must be >= 1")
    return K.divide_core(float(phase), float(n_div))

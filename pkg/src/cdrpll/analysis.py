"""s-domain analysis of the closed loop.

Closed-loop functions are built by exact polynomial algebra so their poles
stay available for the stability check.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as P

from .blocks import eval_tf, filter_tf
from .core import LoopParams, RationalTf, RlcFilter
from .errors import InvalidInputError

# Poles closer than this to the imaginary axis are called marginal (rad/s).
STABILITY_EPS = 1e-3


class Stability(enum.Enum):
    STABLE = "stable"
    MARGINAL = "marginal"
    UNSTABLE = "unstable"


@dataclass(frozen=True, eq=False)
class BodeTable:
    freqs: np.ndarray
    mag_db: np.ndarray
    phase_deg: np.ndarray

    def __post_init__(self):
        n = len(self.freqs)
        if len(self.mag_db) != n or len(self.phase_deg) != n:
            raise InvalidInputError("bode arrays must share one length")
        if n > 1 and not np.all(np.diff(self.freqs) > 0):
            raise InvalidInputError("freqs must be strictly increasing")


def _trim(coeffs) -> np.ndarray:
    c = np.asarray(coeffs, dtype=float)
    nz = np.flatnonzero(c)
    return c[: nz[-1] + 1] if nz.size else c[:1]


def poly_roots(coeffs, polish_steps: int = 3) -> np.ndarray:
    """Roots of an ascending-order real polynomial.

    Eigenvalues of the companion matrix, then a few Newton steps per root to
    recover relative accuracy on small roots next to large ones.
    """
    c = _trim(coeffs)
    deg = len(c) - 1
    if deg < 1:
        return np.empty(0, dtype=complex)
    # leading zeros of the ascending list are roots at the origin
    n_zero = int(np.flatnonzero(c)[0])
    c_red = c[n_zero:]
    deg_red = len(c_red) - 1
    roots = np.zeros(n_zero, dtype=complex)
    if deg_red == 0:
        return roots
    monic = c_red / c_red[-1]
    comp = np.zeros((deg_red, deg_red))
    comp[1:, :-1] = np.eye(deg_red - 1)
    comp[:, -1] = -monic[:-1]
    r = np.linalg.eigvals(comp).astype(complex)
    dc = P.polyder(c_red)
    for _ in range(polish_steps):
        f = P.polyval(r, c_red)
        fp = P.polyval(r, dc)
        ok = fp != 0
        step = np.zeros_like(r)
        step[ok] = f[ok] / fp[ok]
        cand = r - step
        # accept only steps that do not increase the residual
        better = np.abs(P.polyval(cand, c_red)) <= np.abs(f)
        r = np.where(better, cand, r)
    # snap conjugate pairs exactly
    real = np.abs(r.imag) <= 1e-14 * np.maximum(np.abs(r), 1e-300)
    r = np.where(real, r.real + 0j, r)
    return np.concatenate([roots, np.sort_complex(r)])


def open_loop_tf(params: LoopParams, filt: RlcFilter) -> RationalTf:
    """Loop gain ``k_pd * G(s) * (k_vco / s) / n_div``."""
    g = filter_tf(filt)
    gain = params.k_pd * params.k_vco / params.n_div
    num = np.asarray(g.num) * gain
    den = P.polymul(g.den, [0.0, 1.0])
    return RationalTf(num, den)


def _closed_loop_den(params, filt) -> np.ndarray:
    ol = open_loop_tf(params, filt)
    return P.polyadd(ol.den, ol.num)


def input_jitter_tf(params: LoopParams, filt: RlcFilter) -> RationalTf:
    """Output phase per unit of reference excess phase; DC value ``n_div``."""
    ol = open_loop_tf(params, filt)
    return RationalTf(np.asarray(ol.num) * params.n_div,
                      _closed_loop_den(params, filt))


def vco_jitter_tf(params: LoopParams, filt: RlcFilter) -> RationalTf:
    """Output phase per unit of VCO excess phase, ``1 / (1 + L(s))``."""
    ol = open_loop_tf(params, filt)
    return RationalTf(ol.den, _closed_loop_den(params, filt))


def complementarity_residual(params: LoopParams, filt: RlcFilter) -> float:
    """Largest coefficient mismatch of ``H_in/N + H_vco - 1``.

    Both closed-loop functions share one denominator, so the identity holds
    when ``num_in/N + num_vco == den``; normalised by the largest coefficient.
    """
    h_in = input_jitter_tf(params, filt)
    h_vco = vco_jitter_tf(params, filt)
    if h_in.den != h_vco.den:
        raise AssertionError("closed-loop functions do not share a denominator")
    lhs = P.polyadd(np.asarray(h_in.num) / params.n_div, h_vco.num)
    den = np.asarray(h_in.den)
    diff = P.polysub(lhs, den)
    return float(np.max(np.abs(diff)) / np.max(np.abs(den)))


def _unwrap_deg(phase: np.ndarray) -> np.ndarray:
    out = phase.copy()
    for i in range(1, len(out)):
        out[i] = phase[i] + 360.0 * np.round((out[i - 1] - phase[i]) / 360.0)
    return out


def bode(tf: RationalTf, f_lo: float, f_hi: float, n_points: int) -> BodeTable:
    """Magnitude (dB) and unwrapped phase (deg) on a log grid from f_lo to f_hi."""
    if not (0 < f_lo < f_hi) or not (math.isfinite(f_lo) and math.isfinite(f_hi)):
        raise InvalidInputError("bode: need 0 < f_lo < f_hi")
    if n_points < 2:
        raise InvalidInputError("bode: n_points must be >= 2")
    freqs = np.logspace(math.log10(f_lo), math.log10(f_hi), int(n_points))
    h = eval_tf(tf, 2j * np.pi * freqs)
    with np.errstate(divide="ignore"):
        mag_db = 20.0 * np.log10(np.abs(h))
    phase = _unwrap_deg(np.degrees(np.angle(h)))
    return BodeTable(freqs, mag_db, phase)


def stability(tf: RationalTf) -> Stability:
    if tf.den_degree < 1:
        raise InvalidInputError("stability: denominator has degree 0")
    re = tf.poles.real
    if np.any(np.abs(re) <= STABILITY_EPS):
        return Stability.MARGINAL
    if np.all(re < -STABILITY_EPS):
        return Stability.STABLE
    return Stability.UNSTABLE


def crossover_frequency(tf: RationalTf, f_lo: float = 1.0, f_hi: float = 1e12,
                        n_scan: int = 2000, rtol: float = 1e-12) -> float | None:
    """Lowest frequency (Hz) where ``|tf(j2*pi*f)|`` falls through 1.

    A log-grid scan brackets the first crossing, then bisection in log f.
    Returns ``None`` when the grid shows no crossing.
    """
    def excess(f):
        return abs(eval_tf(tf, 2j * math.pi * f)) - 1.0

    grid = np.logspace(math.log10(f_lo), math.log10(f_hi), n_scan)
    vals = np.abs(eval_tf(tf, 2j * np.pi * grid)) - 1.0
    idx = np.flatnonzero((vals[:-1] > 0) & (vals[1:] <= 0))
    if idx.size == 0:
        return None
    lo, hi = math.log(grid[idx[0]]), math.log(grid[idx[0] + 1])
    while hi - lo > rtol:
        mid = 0.5 * (lo + hi)
        if excess(math.exp(mid)) > 0:
            lo = mid
        else:
            hi = mid
    return math.exp(0.5 * (lo + hi))


def peak_gain(tf: RationalTf, f_lo: float, f_hi: float,
              n_points: int = 4001) -> tuple[float, float]:
    """Largest magnitude on a dense log grid: ``(freq_hz, mag_db)``."""
    table = bode(tf, f_lo, f_hi, n_points)
    i = int(np.argmax(table.mag_db))
    return float(table.freqs[i]), float(table.mag_db[i])

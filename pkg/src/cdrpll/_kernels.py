"""Compiled scalar cores and inner loops.

The public functions in ``blocks`` and ``jitter`` call the same cores the
engine loop calls, so the Python path and the compiled loop produce
bitwise-identical arithmetic.
"""

import math

import numpy as np
from numba import njit

TWO_PI = 2.0 * math.pi

# SplitMix64 and xoshiro256** constants (Steele/Lea/Flood; Blackman/Vigna).
SPLITMIX_GAMMA = 0x9E3779B97F4A7C15
SPLITMIX_MUL1 = 0xBF58476D1CE4E5B9
SPLITMIX_MUL2 = 0x94D049BB133111EB
_MASK64 = (1 << 64) - 1


@njit(cache=True)
def pd_core(k_pd, phi_a, phi_b):
    return k_pd * (phi_b - phi_a)


@njit(cache=True)
def vco_core(phase, w_free, k_vco, v_cont, dt):
    return phase + (w_free + k_vco * v_cont) * dt


@njit(cache=True)
def divide_core(phase, n_div):
    return phase / n_div


@njit(cache=True)
def filter_core(b, a, xh, yh, u):
    """Direct form I step; ``a[0]`` is normalised to 1.

    ``xh``/``yh`` hold past inputs/outputs, most recent first.
    """
    order = xh.shape[0]
    acc = b[0] * u
    for i in range(order):
        acc += b[i + 1] * xh[i]
    for i in range(order):
        acc -= a[i + 1] * yh[i]
    for i in range(order - 1, 0, -1):
        xh[i] = xh[i - 1]
        yh[i] = yh[i - 1]
    if order > 0:
        xh[0] = u
        yh[0] = acc
    return acc


# ---------------------------------------------------------------- PRNG ----

def splitmix64_seed(seed):
    """Expand a 64-bit seed into a xoshiro256** state (4 words)."""
    state = np.empty(4, dtype=np.uint64)
    x = seed & _MASK64
    for i in range(4):
        x = (x + SPLITMIX_GAMMA) & _MASK64
        z = x
        z = ((z ^ (z >> 30)) * SPLITMIX_MUL1) & _MASK64
        z = ((z ^ (z >> 27)) * SPLITMIX_MUL2) & _MASK64
        state[i] = z ^ (z >> 31)
    return state


@njit(cache=True)
def _rotl(x, k):
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


@njit(cache=True)
def xoshiro_next(s):
    result = _rotl(s[1] * np.uint64(5), 7) * np.uint64(9)
    t = s[1] << np.uint64(17)
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], 45)
    return result


@njit(cache=True)
def fill_raw(s, out):
    for i in range(out.shape[0]):
        out[i] = xoshiro_next(s)


@njit(cache=True)
def fill_normal_pairs(s, out):
    """Fill ``out`` (even length) with standard normals, Box-Muller pairs.

    Each pair consumes two raw words: u1 in (0, 1], u2 in [0, 1).
    """
    scale = 1.0 / 9007199254740992.0  # 2**-53
    for i in range(0, out.shape[0], 2):
        x1 = xoshiro_next(s)
        x2 = xoshiro_next(s)
        u1 = (float(x1 >> np.uint64(11)) + 1.0) * scale
        u2 = float(x2 >> np.uint64(11)) * scale
        r = math.sqrt(-2.0 * math.log(u1))
        theta = TWO_PI * u2
        out[i] = r * math.cos(theta)
        out[i + 1] = r * math.sin(theta)


# -------------------------------------------------------------- engine ----

@njit(cache=True)
def run_chunk(k0, n, dt, w_in, w_free, k_vco, k_pd, n_div, b, a, xh, yh,
              state, jit_in, jit_vco, dec, rec_t, rec_vpd, rec_vcont,
              rec_phase, rec_ref, guard):
    """Advance the loop ``n`` steps from global step ``k0``.

    ``state`` = [vco phase, previous VCO-jitter sample]. Samples whose global
    index is a multiple of ``dec`` go to ``rec_*`` at index ``k // dec``.
    Returns -1 on success, else the global step at which the phase left the
    guarded range.
    """
    phi = state[0]
    jprev = state[1]
    for i in range(n):
        k = k0 + i
        t = k * dt
        phi_ref = w_in * t + jit_in[i]
        phi_fb = divide_core(phi, n_div)
        # reference on the leading port: v_pd grows when the VCO lags
        v_pd = pd_core(k_pd, phi_fb, phi_ref)
        v_cont = filter_core(b, a, xh, yh, v_pd)
        if k % dec == 0:
            j = k // dec
            rec_t[j] = t
            rec_vpd[j] = v_pd
            rec_vcont[j] = v_cont
            rec_phase[j] = phi
            rec_ref[j] = phi_ref
        jv = jit_vco[i]
        phi = vco_core(phi, w_free, k_vco, v_cont, dt) + (jv - jprev)
        jprev = jv
        if not (abs(phi) <= guard):
            state[0] = phi
            state[1] = jprev
            return k
    state[0] = phi
    state[1] = jprev
    return -1

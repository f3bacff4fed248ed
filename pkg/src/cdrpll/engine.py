"""Fixed-step closed-loop simulation of the PD -> filter -> VCO -> divider loop."""

from __future__ import annotations

import math
from typing import Callable, Iterable

import numpy as np

from . import _kernels as K
from .blocks import discretize_filter, filter_tf
from .core import (PHASE_OVERFLOW_GUARD, Injection, JitterSpec, LoopParams,
                   RlcFilter, SimConfig, SimMode, SimTrace)
from .errors import ConfigError, InvalidInputError, SimulationCancelled, SimulationDiverged
from .jitter import JitterSource

CHUNK_STEPS = 1 << 16
FULL_WAVE_SAMPLES_PER_PERIOD = 20


def steady_state_phase_error(params: LoopParams) -> float:
    """Static phase error needed to hold the VCO at ``n_div * f_in``.

    ``(w_target - w_free) / (k_pd * k_vco)`` in radians at the PD.
    """
    dw = K.TWO_PI * params.f_target - K.TWO_PI * params.f_free
    return dw / (params.k_pd * params.k_vco)


def equilibrium_v_cont(params: LoopParams) -> float:
    """Control voltage that puts the VCO exactly on ``n_div * f_in``."""
    return (K.TWO_PI * params.f_target - K.TWO_PI * params.f_free) / params.k_vco


def detect_lock(t: np.ndarray, freq_out: np.ndarray, params: LoopParams,
                cfg: SimConfig) -> float | None:
    """Time at which the output has sat within tolerance for a full window.

    Returns ``t_start + lock_window`` for the earliest run of in-tolerance
    samples starting at ``t_start`` that lasts at least ``lock_window``;
    ``None`` if no run does.
    """
    t = np.asarray(t, dtype=float)
    f = np.asarray(freq_out, dtype=float)
    if t.size == 0:
        return None
    target = params.f_target
    ok = np.abs(f - target) <= cfg.lock_freq_tol * target
    # run starts and the index just past each run
    edges = np.diff(np.concatenate(([False], ok, [False])).astype(np.int8))
    starts = np.flatnonzero(edges == 1)
    stops = np.flatnonzero(edges == -1)
    slack = 1e-9 * cfg.dt
    for a, b in zip(starts, stops):
        if t[b - 1] - t[a] >= cfg.lock_window - slack:
            return float(t[a] + cfg.lock_window)
    return None


def _split_jitters(jitters: Iterable[JitterSpec]):
    by_point = {}
    for spec in jitters:
        if spec.injection in by_point:
            raise InvalidInputError(
                f"more than one jitter spec at injection point {spec.injection.value}")
        by_point[spec.injection] = JitterSource(spec)
    return by_point.get(Injection.PD_INPUT), by_point.get(Injection.VCO)


def simulate(params: LoopParams, filt: RlcFilter, cfg: SimConfig,
             jitters: Iterable[JitterSpec] = (), *, start_locked: bool = False,
             open_loop: bool = False,
             should_cancel: Callable[[], bool] | None = None) -> SimTrace:
    """Run the loop for ``cfg.duration`` and return the decimated trace.

    Each step: reference phase (plus input jitter), divided VCO phase, PD,
    filter, then the VCO phase advance plus the VCO-jitter increment.

    Args:
        start_locked: preload the filter and VCO phase at the static
            equilibrium instead of the zero state.
        open_loop: run with the control path cut (the VCO ignores
            ``v_cont``); used as the no-feedback reference.
        should_cancel: polled between chunks of steps; returning True raises
            ``SimulationCancelled``.

    Raises:
        ConfigError: FullWave mode with fewer than 20 samples per output
            carrier period.
        SimulationDiverged: the VCO phase left the finite guarded range.
    """
    if cfg.mode is SimMode.FULL_WAVE:
        dt_max = 1.0 / (FULL_WAVE_SAMPLES_PER_PERIOD * params.f_target)
        if cfg.dt > dt_max * (1 + 1e-12):
            raise ConfigError(
                f"FullWave needs dt <= {dt_max:.6g} s for "
                f"{FULL_WAVE_SAMPLES_PER_PERIOD} samples per output period",
                key="dt_s")
    src_in, src_vco = _split_jitters(jitters)

    stepper = discretize_filter(filter_tf(filt), cfg.dt)
    phi0 = 0.0
    if start_locked:
        v_eq = equilibrium_v_cont(params)
        stepper.preload(v_eq)
        phi0 = -params.n_div * v_eq / params.k_pd

    n_steps = cfg.n_steps
    dec = cfg.decimation
    n_rec = (n_steps + dec - 1) // dec
    rec = [np.empty(n_rec) for _ in range(5)]
    state = np.array([phi0, 0.0])
    w_in = K.TWO_PI * params.f_in
    w_free = K.TWO_PI * params.f_free
    k_vco = 0.0 if open_loop else float(params.k_vco)
    zeros = np.zeros(min(CHUNK_STEPS, n_steps))

    for k0 in range(0, n_steps, CHUNK_STEPS):
        if should_cancel is not None and should_cancel():
            raise SimulationCancelled(f"cancelled at step {k0}")
        n = min(CHUNK_STEPS, n_steps - k0)
        t_chunk = np.arange(k0, k0 + n) * cfg.dt
        j_in = src_in.take(t_chunk) if src_in else zeros[:n]
        j_vco = src_vco.take(t_chunk) if src_vco else zeros[:n]
        bad = K.run_chunk(k0, n, cfg.dt, w_in, w_free, k_vco, float(params.k_pd),
                          float(params.n_div), stepper.b, stepper.a, stepper.xh,
                          stepper.yh, state, j_in, j_vco, dec, *rec,
                          PHASE_OVERFLOW_GUARD)
        if bad >= 0:
            raise SimulationDiverged(
                f"VCO phase reached {float(state[0])!r} rad at t={bad * cfg.dt:.6g} s")

    t, v_pd, v_cont, phase_out, phase_ref = rec
    freq_out = np.empty(n_rec)
    freq_out[0] = (w_free + k_vco * v_cont[0]) / K.TWO_PI
    freq_out[1:] = np.diff(phase_out) / (K.TWO_PI * np.diff(t))

    lock_time = detect_lock(t, freq_out, params, cfg)
    final_err = None
    if lock_time is not None:
        tail = t >= t[-1] - cfg.lock_window
        final_err = float(np.mean(v_pd[tail]) / params.k_pd)

    carriers = {}
    if cfg.mode is SimMode.FULL_WAVE:
        carriers = {"carrier_out": np.sin(phase_out), "carrier_ref": np.sin(phase_ref)}
    return SimTrace(t=t, v_pd=v_pd, v_cont=v_cont, phase_out=phase_out,
                    freq_out=freq_out, lock_time=lock_time,
                    final_phase_err=final_err, phase_ref=phase_ref, **carriers)


def excess_phase(trace: SimTrace, params: LoopParams) -> np.ndarray:
    """Output phase minus the ideal ramp ``2*pi*n_div*f_in*t``."""
    return trace.phase_out - K.TWO_PI * params.f_target * trace.t


def tone_amplitude(t: np.ndarray, x: np.ndarray, freq: float) -> tuple[float, float]:
    """Least-squares fit of ``A*sin(2*pi*f*t + phi) + c0 + c1*t``.

    Returns ``(A, phi)``. The linear term absorbs residual drift.
    """
    t = np.asarray(t, dtype=float)
    w = K.TWO_PI * freq
    tc = t - t.mean()
    cols = np.column_stack([np.sin(w * t), np.cos(w * t), np.ones_like(t), tc])
    coef, *_ = np.linalg.lstsq(cols, np.asarray(x, dtype=float), rcond=None)
    return float(math.hypot(coef[0], coef[1])), float(math.atan2(coef[1], coef[0]))


def summary_metrics(trace: SimTrace, params: LoopParams, cfg: SimConfig) -> dict:
    """Scalar results reported for one run.

    ``mean_v_cont_v`` averages the last ``lock_window`` of the run.
    """
    tail = trace.t >= trace.t[-1] - cfg.lock_window
    target = params.f_target
    return {
        "lock_time_s": trace.lock_time,
        "final_phase_err_rad": trace.final_phase_err,
        "mean_v_cont_v": float(np.mean(trace.v_cont[tail])),
        "freq_err_rel_final": float((trace.freq_out[-1] - target) / target),
    }

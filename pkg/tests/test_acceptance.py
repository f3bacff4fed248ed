"""End-to-end acceptance checks, one test per criterion.

Run with ``pytest tests/test_acceptance.py -s`` to see the PASS/FAIL lines.
"""

import math
import time

import mpmath
import numpy as np
import pytest

from cdrpll.analysis import (complementarity_residual, crossover_frequency,
                             input_jitter_tf, open_loop_tf, vco_jitter_tf)
from cdrpll.blocks import (discretize_filter, eval_tf, factored_filter_eval, filter_poles,
                           filter_tf)
from cdrpll.cli import main as cli_main
from cdrpll.core import (Injection, JitterKind, JitterSpec, LoopParams, RlcFilter,
                         SimConfig, SimMode)
from cdrpll.engine import excess_phase, simulate, steady_state_phase_error, tone_amplitude
from cdrpll.jitter import gen_jitter

from conftest import random_filters
from make_golden import CASES, TRACE_CONFIG, TRACE_GOLDEN, golden_path, grid, spec_for

pytestmark = pytest.mark.acceptance

SETTLE = 10e-6
AMP = 0.05


def verdict(number, title, ok, detail):
    print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {title} ({detail})")
    assert ok, detail


@pytest.fixture(scope="module")
def loop():
    p, f = LoopParams(), RlcFilter()
    return p, f, crossover_frequency(open_loop_tf(p, f))


def measured_ripple(params, injection, fj, amp=AMP, open_loop=False, periods=8):
    cfg = SimConfig(duration=SETTLE + max(periods / fj, 2e-6), decimation=1)
    spec = JitterSpec(injection, JitterKind.SINUSOIDAL, amp, freq=fj)
    tr = simulate(params, RlcFilter(), cfg, [spec], open_loop=open_loop)
    keep = tr.t >= SETTLE
    return tone_amplitude(tr.t[keep], excess_phase(tr, params)[keep], fj)[0]


def test_operating_point_locks():
    p, f, cfg = LoopParams(f_in=50e6, n_div=100), RlcFilter(), SimConfig()
    assert cfg.mode is SimMode.PHASE_DOMAIN
    simulate(p, f, SimConfig(duration=1e-8))  # compile outside the timed run
    t0 = time.perf_counter()
    tr = simulate(p, f, cfg)
    elapsed = time.perf_counter() - t0
    rel = abs(tr.freq_out[-1] - 5e9) / 5e9
    ok = tr.lock_time is not None and rel <= 1e-4 and elapsed < 10.0
    verdict(1, "5 GHz operating point", ok,
            f"lock_time={tr.lock_time}, final rel err={rel:.3g}, runtime={elapsed:.2f}s")


def test_pole_oracle():
    mpmath.mp.dps = 50
    worst_root = worst_vieta = 0.0
    for f in random_filters(1000, seed=2024):
        s1, s2 = filter_poles(f)
        ref = [complex(z) for z in mpmath.polyroots([1, f.a2, f.a1], extraprec=200)]
        for s in (s1, s2):
            worst_root = max(worst_root, min(abs(s - z) for z in ref) / abs(s))
        worst_vieta = max(worst_vieta, abs((s1 + s2) + f.a2) / f.a2 if f.a2 else 0.0,
                          abs(s1 * s2 - f.a1) / f.a1)
    ok = worst_root <= 1e-9 and worst_vieta <= 1e-9
    verdict(2, "closed-form poles vs independent root finder", ok,
            f"max root rel err={worst_root:.3g}, max Vieta rel err={worst_vieta:.3g}")


def test_factored_equals_expanded():
    rng = np.random.default_rng(77)
    worst = 0.0
    for f in random_filters(100, seed=99):
        scale = abs(filter_poles(f).s1)
        mag = scale * 10 ** rng.uniform(-2, 2, 100)
        s = mag * np.exp(1j * rng.uniform(0, 2 * np.pi, 100))
        expanded = eval_tf(filter_tf(f), s)
        factored = np.array([factored_filter_eval(f, z) for z in s])
        worst = max(worst, float(np.max(np.abs(expanded - factored) / np.abs(factored))))
    verdict(3, "factored vs expanded filter evaluation", worst <= 1e-9,
            f"max rel diff={worst:.3g} over 100x100 points")


def test_discretization_step_response():
    f = RlcFilter()
    s1 = filter_poles(f).s1
    t_pole = 1 / abs(s1)
    dt = t_pole / 100
    n = int(round(10 * t_pole / dt)) + 1
    stepper = discretize_filter(filter_tf(f), dt)
    u = np.ones(n)
    u[0] = 0.5  # the step edge sits on sample 0
    y = np.array([stepper.step(x) for x in u])
    t = np.arange(n) * dt
    alpha, wd = -s1.real, abs(s1.imag)
    ref = 1 - np.exp(-alpha * t) * (np.cos(wd * t) + alpha / wd * np.sin(wd * t))
    err = float(np.max(np.abs(y - ref)))
    verdict(4, "bilinear step response vs closed form", err <= 1e-4,
            f"dt={dt:.3g}s, {n} samples, max abs err={err:.3g}")


def test_input_jitter_tracks_linear_model(loop):
    p, f, fc = loop
    h_in = input_jitter_tf(p, f)
    worst, parts = 0.0, []
    for x in (0.1, 1.0, 10.0):
        fj = x * fc
        got = measured_ripple(p, Injection.PD_INPUT, fj)
        pred = abs(eval_tf(h_in, 2j * math.pi * fj)) * AMP
        worst = max(worst, abs(got / pred - 1))
        parts.append(f"{x:g}x: {got:.5g} vs {pred:.5g}")
    verdict(5, "input jitter ripple matches |H_in|", worst <= 0.10,
            "; ".join(parts) + f"; worst rel err={worst:.3g}")


def test_fast_input_jitter_rejected(loop):
    p, _, fc = loop
    fj = 100 * fc
    got = measured_ripple(p, Injection.PD_INPUT, fj, periods=100)
    atten_db = 20 * math.log10(got / p.n_div / AMP)
    verdict(6, "input jitter at 100x crossover", atten_db <= -20,
            f"normalized ripple {atten_db:.2f} dB")


def test_vco_jitter_high_pass(loop):
    p, _, fc = loop
    slow = fc / 100
    closed = measured_ripple(p, Injection.VCO, slow, periods=5)
    opened = measured_ripple(p, Injection.VCO, slow, periods=5, open_loop=True)
    slow_db = 20 * math.log10(closed / opened)
    fast = 100 * fc
    h_fast = measured_ripple(p, Injection.VCO, fast, periods=100) / AMP
    ok = slow_db <= -20 and abs(h_fast - 1) <= 0.10
    verdict(7, "VCO jitter rejection / transparency", ok,
            f"crossover/100: {slow_db:.2f} dB vs open loop; 100x crossover: |H_vco|={h_fast:.4f}")


def test_static_phase_error():
    f, cfg = RlcFilter(), SimConfig(duration=40e-6)
    results = []
    for k_vco in (1e9, 2e9):
        p = LoopParams(k_vco=k_vco, f_free=5e9 - 1e6)  # dw = 2*pi*1e6 rad/s
        tr = simulate(p, f, cfg)
        tail = tr.t >= tr.t[-1] - cfg.lock_window
        measured = float(np.mean(tr.v_cont[tail])) / p.k_pd
        results.append((measured, steady_state_phase_error(p), tr.lock_time))
    match = max(abs(m / e - 1) for m, e, _ in results)
    halving = abs(results[1][0] / results[0][0] - 0.5) / 0.5
    ok = all(lt is not None for *_, lt in results) and match <= 0.01 and halving <= 0.01
    verdict(8, "static phase error", ok,
            f"measured {results[0][0]:.6g}/{results[1][0]:.6g} rad, "
            f"predicted {results[0][1]:.6g}/{results[1][1]:.6g}, "
            f"max rel err={match:.3g}, halving err={halving:.3g}")


def test_determinism_and_golden_files(tmp_path):
    same = True
    for run in ("a", "b"):
        assert cli_main(["simulate", str(TRACE_CONFIG), "--out-dir", str(tmp_path / run)]) == 0
        same &= (tmp_path / run / "trace.csv").read_bytes() == TRACE_GOLDEN.read_bytes()
    vectors = 0
    for kind, seed in CASES:
        stored = np.array([float(v) for v in golden_path(kind, seed).read_text().split()])
        vectors += np.array_equal(gen_jitter(spec_for(kind, seed), grid()), stored)
    ok = same and vectors == len(CASES)
    verdict(9, "determinism and golden files", ok,
            f"trace CSV identical across 2 runs: {same}; jitter vectors {vectors}/{len(CASES)}")


def test_complementarity():
    p = LoopParams()
    worst = max(complementarity_residual(p, f) for f in [RlcFilter()] + random_filters(200))
    pts = 2j * np.pi * np.logspace(0, 11, 200)
    h_in, h_vco = input_jitter_tf(p, RlcFilter()), vco_jitter_tf(p, RlcFilter())
    pointwise = float(np.max(np.abs(eval_tf(h_in, pts) / p.n_div + eval_tf(h_vco, pts) - 1)))
    verdict(10, "H_in/N + H_vco = 1", worst <= 1e-9,
            f"coefficient residual={worst:.3g}, pointwise={pointwise:.3g}")

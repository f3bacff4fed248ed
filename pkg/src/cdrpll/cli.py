"""Command-line front end.

Exit codes: 0 success, 1 configuration error, 2 simulation diverged,
3 I/O error. Every failure prints one diagnostic line on stderr.
"""

from __future__ import annotations

import argparse
import itertools
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import analysis, blocks, engine
from .config import INT_KEYS, TOP_KEYS, Config, read_entries, resolve
from .errors import ConfigError, DiscretizationError, InvalidInputError, SimulationDiverged
from .io import format_report, write_bode_csv, write_trace_csv, write_vcd

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED, EXIT_IO = 0, 1, 2, 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _load(path) -> tuple[Config, dict]:
    text = Path(path).read_text()
    entries = read_entries(text)
    return resolve(entries), entries


def _fmt_complex(z: complex) -> str:
    return f"{z.real:.6g}{z.imag:+.6g}j"


def _pole_lines(filt) -> list[str]:
    s1, s2 = blocks.filter_poles(filt)
    lines = [f"a1={filt.a1!r}", f"a2={filt.a2!r}",
             f"discriminant={filt.a2**2 - 4 * filt.a1!r}",
             f"s1={_fmt_complex(s1)}", f"s2={_fmt_complex(s2)}"]
    if s1.imag != 0:
        lines.append(f"s1,2 = {s1.real:.6g} ± j{abs(s1.imag):.6g} rad/s")
    return lines


def cmd_poles(args) -> int:
    cfg, _ = _load(args.config)
    print("\n".join(_pole_lines(cfg.filter)))
    return EXIT_OK


def cmd_analyze(args) -> int:
    cfg, _ = _load(args.config)
    p, f = cfg.params, cfg.filter
    tfs = {
        "filter": blocks.filter_tf(f),
        "open_loop": analysis.open_loop_tf(p, f),
        "h_in": analysis.input_jitter_tf(p, f),
        "h_vco": analysis.vco_jitter_tf(p, f),
    }
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, tf in tfs.items():
        table = analysis.bode(tf, args.f_lo, args.f_hi, args.points)
        write_bode_csv(out_dir / f"bode_{name}.csv", table)
    crossover = analysis.crossover_frequency(tfs["open_loop"])
    peak_f, peak_db = analysis.peak_gain(tfs["h_in"], args.f_lo, args.f_hi)
    lines = _pole_lines(f)
    lines += [
        f"filter_stability={analysis.stability(tfs['filter']).value}",
        "closed_loop_poles=" + ",".join(_fmt_complex(z) for z in tfs["h_in"].poles),
        f"closed_loop_stability={analysis.stability(tfs['h_in']).value}",
        f"crossover_hz={crossover!r}" if crossover else "crossover_hz=none",
        f"h_in_peak_hz={peak_f!r}",
        f"h_in_peak_db={peak_db!r}",
        f"static_phase_err_rad={engine.steady_state_phase_error(p)!r}",
    ]
    print("\n".join(lines))
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg, _ = _load(args.config)
    if args.vcd and cfg.sim.mode.value != "full_wave":
        raise ConfigError("--vcd needs mode=full_wave", key="mode")
    trace = engine.simulate(cfg.params, cfg.filter, cfg.sim, cfg.jitters)
    metrics = engine.summary_metrics(trace, cfg.params, cfg.sim)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_trace_csv(out_dir / "trace.csv", trace)
    report = format_report(cfg, metrics)
    (out_dir / "metrics.txt").write_text(report)
    if args.vcd:
        write_vcd(args.vcd, trace)
    sys.stdout.write(report)
    return EXIT_OK


def _grid_values(spec: str) -> list[float]:
    if spec.startswith(("lin:", "log:")):
        kind, a, b, n = spec.split(":")
        a, b, n = float(a), float(b), int(n)
        if kind == "lin":
            return list(np.linspace(a, b, n))
        return list(np.logspace(math.log10(a), math.log10(b), n))
    return [float(v) for v in spec.split(",") if v.strip()]


def _parse_sweep_params(items) -> list[tuple[str, list[float]]]:
    if not items or len(items) > 2:
        raise ConfigError("sweep takes one or two --param KEY=VALUES")
    axes = []
    for item in items:
        key, sep, spec = item.partition("=")
        key = key.strip()
        if not sep or key not in TOP_KEYS or key == "mode":
            raise ConfigError("not a sweepable numeric key", key=key)
        try:
            values = _grid_values(spec)
        except ValueError:
            raise ConfigError(f"bad value list {spec!r}", key=key) from None
        if not values:
            raise ConfigError("empty value list", key=key)
        axes.append((key, values))
    return axes


def _fmt_value(key, v):
    return str(int(v)) if key in INT_KEYS else repr(float(v))


def _sweep_point(cfg: Config):
    try:
        trace = engine.simulate(cfg.params, cfg.filter, cfg.sim, cfg.jitters)
    except SimulationDiverged:
        return "diverged", "diverged"
    return trace.lock_time, trace.final_phase_err


def cmd_sweep(args) -> int:
    _, entries = _load(args.config)
    axes = _parse_sweep_params(args.param)
    keys = [k for k, _ in axes]
    points, configs = [], []
    for combo in itertools.product(*(vals for _, vals in axes)):
        overridden = dict(entries)
        for key, v in zip(keys, combo):
            overridden[key] = (_fmt_value(key, v), None)
        configs.append(resolve(overridden))
        points.append(combo)
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_point, configs))
    else:
        results = [_sweep_point(c) for c in configs]
    rows = [",".join(keys + ["lock_time_s", "final_phase_err_rad"])]
    diverged = False
    for combo, (lock, err) in zip(points, results):
        diverged |= lock == "diverged"
        cells = [_fmt_value(k, v) for k, v in zip(keys, combo)]
        cells += ["none" if x is None else (x if isinstance(x, str) else repr(x))
                  for x in (lock, err)]
        rows.append(",".join(cells))
    text = "\n".join(rows) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_DIVERGED if diverged else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cdrpll", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="run the time-domain loop")
    p.add_argument("config")
    p.add_argument("--out-dir", default=".")
    p.add_argument("--vcd", default=None, help="write FullWave clocks as VCD")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="Bode tables, poles and stability")
    p.add_argument("config")
    p.add_argument("--out-dir", default=".")
    p.add_argument("--f-lo", type=float, default=1.0)
    p.add_argument("--f-hi", type=float, default=1e10)
    p.add_argument("--points", type=int, default=401)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("poles", help="print the loop filter poles")
    p.add_argument("config")
    p.set_defaults(func=cmd_poles)

    p = sub.add_parser("sweep", help="lock time / phase error over a parameter grid")
    p.add_argument("config")
    p.add_argument("--param", action="append",
                   help="KEY=v1,v2,... or KEY=lin:a:b:n or KEY=log:a:b:n")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except (_UsageError, ConfigError, InvalidInputError, DiscretizationError) as exc:
        print(f"cdrpll: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationDiverged as exc:
        print(f"cdrpll: simulation diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except OSError as exc:
        print(f"cdrpll: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


run_cli = main

if __name__ == "__main__":
    sys.exit(main())

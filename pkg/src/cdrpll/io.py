"""Trace, Bode and report serialization."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .analysis import BodeTable
from .config import Config, format_config
from .core import SimTrace

TRACE_HEADER = "t_s,v_pd_v,v_cont_v,phase_out_rad,freq_out_hz"
BODE_HEADER = "freq_hz,mag_db,phase_deg"
METRICS_MARKER = "# metrics"
CONFIG_MARKER = "# resolved config"
FMT = "%.17g"


def _write_columns(path, header, columns):
    data = np.column_stack(columns)
    with open(path, "w", newline="\n") as fh:
        np.savetxt(fh, data, fmt=FMT, delimiter=",", header=header, comments="")


def write_trace_csv(path, trace: SimTrace):
    _write_columns(path, TRACE_HEADER, [trace.t, trace.v_pd, trace.v_cont,
                                        trace.phase_out, trace.freq_out])


def read_trace_csv(path) -> dict[str, np.ndarray]:
    with open(path) as fh:
        header = fh.readline().strip()
    if header != TRACE_HEADER:
        raise ValueError(f"{path}: unexpected trace header {header!r}")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return {name: data[:, i] for i, name in enumerate(header.split(","))}


def write_bode_csv(path, table: BodeTable):
    _write_columns(path, BODE_HEADER, [table.freqs, table.mag_db, table.phase_deg])


def _fmt(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, float):
        return repr(value) if math.isfinite(value) else str(value)
    return str(value)


def format_metrics(metrics: dict) -> str:
    return "".join(f"{k}={_fmt(v)}\n" for k, v in metrics.items())


def format_report(cfg: Config, metrics: dict) -> str:
    """Resolved config echo followed by the metrics block."""
    return (f"{CONFIG_MARKER}\n{format_config(cfg)}"
            f"{METRICS_MARKER}\n{format_metrics(metrics)}")


def split_report(text: str) -> tuple[str, dict[str, str]]:
    """Inverse of ``format_report``: (config text, raw metric strings)."""
    head, _, tail = text.partition(METRICS_MARKER + "\n")
    metrics = {}
    for line in tail.splitlines():
        if line.strip():
            k, _, v = line.partition("=")
            metrics[k.strip()] = v.strip()
    return head, metrics


def write_vcd(path, trace: SimTrace, timescale_s: float = 1e-15):
    """Square-rendered reference and output clocks as a VCD file.

    A clock is high while the sine of its phase is non-negative. Needs the
    carrier series that only FullWave runs record.
    """
    if trace.carrier_out is None or trace.carrier_ref is None:
        raise ValueError("VCD export needs a FullWave trace")
    ticks = np.rint(trace.t / timescale_s).astype(np.int64)
    ref = (trace.carrier_ref >= 0).astype(np.int8)
    out = (trace.carrier_out >= 0).astype(np.int8)
    unit = {1e-15: "1 fs", 1e-12: "1 ps", 1e-9: "1 ns"}[timescale_s]
    lines = [
        "$timescale " + unit + " $end",
        "$scope module pll $end",
        "$var wire 1 r ref_clk $end",
        "$var wire 1 o out_clk $end",
        "$upscope $end",
        "$enddefinitions $end",
        "#0",
        "$dumpvars",
        f"{ref[0]}r",
        f"{out[0]}o",
        "$end",
    ]
    change = np.flatnonzero((np.diff(ref) != 0) | (np.diff(out) != 0)) + 1
    for i in change:
        lines.append(f"#{ticks[i]}")
        if ref[i] != ref[i - 1]:
            lines.append(f"{ref[i]}r")
        if out[i] != out[i - 1]:
            lines.append(f"{out[i]}o")
    Path(path).write_text("\n".join(lines) + "\n")

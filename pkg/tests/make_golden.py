"""Regenerate the frozen jitter vectors and the golden trace under tests/data.

Run only when the generator is changed on purpose; the tests compare
against these files exactly.
"""

from pathlib import Path

import numpy as np

from cdrpll.cli import main as cli_main
from cdrpll.core import Injection, JitterSpec
from cdrpll.jitter import gen_jitter

DATA = Path(__file__).parent / "data"
OUT = DATA / "jitter"
TRACE_CONFIG = DATA / "golden.cfg"
TRACE_GOLDEN = DATA / "golden_trace.csv"
N = 64
DT = 1e-10
CASES = [("white_phase", s) for s in (0, 1, 42, 2**64 - 1)]
CASES += [("random_walk", s) for s in (0, 1, 42, 2**64 - 1)]
CASES += [("sinusoidal", 0)]


def spec_for(kind, seed):
    return JitterSpec(Injection.PD_INPUT, kind, 0.05, freq=1e8, seed=seed)


def golden_path(kind, seed):
    return OUT / f"{kind}_seed{seed}.txt"


def grid():
    return np.arange(N) * DT


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for kind, seed in CASES:
        x = gen_jitter(spec_for(kind, seed), grid())
        golden_path(kind, seed).write_text("".join(f"{v:.17g}\n" for v in x))
    cli_main(["simulate", str(TRACE_CONFIG), "--out-dir", str(DATA)])
    (DATA / "trace.csv").replace(TRACE_GOLDEN)
    (DATA / "metrics.txt").unlink()


if __name__ == "__main__":
    main()

"""Flat ``key=value`` configuration files.

One key per line, ``#`` starts a comment. Only ``f_in_hz`` and ``n_div``
are required; every other key falls back to the default listed in
``DEFAULTS``. Jitter sources are numbered blocks::

    jitter.0.injection = vco
    jitter.0.kind = random_walk
    jitter.0.amplitude_rad = 1e-4
    jitter.0.seed = 7
"""

from __future__ import annotations

import math
import re
from typing import NamedTuple

from .core import (Injection, JitterKind, JitterSpec, LoopParams, RlcFilter,
                   SimConfig, SimMode)
from .errors import ConfigError, InvalidInputError

REQUIRED = ("f_in_hz", "n_div")

DEFAULTS = {
    "f_free_hz": None,  # n_div * f_in_hz
    "k_pd_v_per_rad": 1.0,
    "k_vco_rad_per_s_per_v": 2.0e9,
    "r_ohm": 50.0,
    "l_h": 1e-6,
    "c_f": 1e-12,
    "mode": "phase_domain",
    "dt_s": 1e-10,
    "duration_s": 200e-6,
    "lock_freq_tol": 1e-4,
    "lock_window_s": 2e-6,
    "decimation": 10,
}

JITTER_DEFAULTS = {
    "kind": "sinusoidal",
    "amplitude_rad": 0.05,
    "freq_hz": 1e6,
    "seed": 0,
}

INT_KEYS = {"n_div", "decimation"}
TOP_KEYS = set(REQUIRED) | set(DEFAULTS)
JITTER_FIELDS = {"injection"} | set(JITTER_DEFAULTS)

# type field name -> config key
_FIELD_KEYS = {
    "k_pd": "k_pd_v_per_rad", "k_vco": "k_vco_rad_per_s_per_v", "n_div": "n_div",
    "f_in": "f_in_hz", "f_free": "f_free_hz", "r": "r_ohm", "l": "l_h", "c": "c_f",
    "mode": "mode", "dt": "dt_s", "duration": "duration_s",
    "lock_freq_tol": "lock_freq_tol", "lock_window": "lock_window_s",
    "decimation": "decimation",
}
_JITTER_FIELD_KEYS = {"injection": "injection", "kind": "kind",
                      "amplitude": "amplitude_rad", "freq": "freq_hz", "seed": "seed"}

_JITTER_KEY = re.compile(r"^jitter\.(\d+)\.([a-z_]+)$")


class Config(NamedTuple):
    params: LoopParams
    filter: RlcFilter
    sim: SimConfig
    jitters: tuple[JitterSpec, ...]


def _norm(word: str) -> str:
    return word.strip().lower().replace("_", "").replace("-", "")


_MODES = {_norm(m.value): m for m in SimMode}
_INJECTIONS = {_norm(m.value): m for m in Injection}
_KINDS = {_norm(m.value): m for m in JitterKind}


def read_entries(text: str) -> dict[str, tuple[str, int | None]]:
    """Split config text into ``{key: (raw value, line number)}``."""
    entries = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected key=value", line=lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError("empty key", line=lineno)
        m = _JITTER_KEY.match(key)
        if m:
            if m.group(2) not in JITTER_FIELDS:
                raise ConfigError("unknown jitter field", key=key, line=lineno)
        elif key not in TOP_KEYS:
            raise ConfigError("unknown key", key=key, line=lineno)
        if key in entries:
            raise ConfigError(f"duplicate key (first on line {entries[key][1]})",
                              key=key, line=lineno)
        if not value:
            raise ConfigError("missing value", key=key, line=lineno)
        entries[key] = (value, lineno)
    return entries


def _number(key, value, line) -> float:
    try:
        v = float(value)
    except ValueError:
        raise ConfigError(f"cannot parse number {value!r}", key=key, line=line) from None
    if not math.isfinite(v):
        raise ConfigError(f"value must be finite, got {value!r}", key=key, line=line)
    return v


def _integer(key, value, line) -> int:
    try:
        return int(value)
    except ValueError:
        pass
    v = _number(key, value, line)
    if v != int(v) or abs(v) > 2**53:
        raise ConfigError(f"expected an integer, got {value!r}", key=key, line=line)
    return int(v)


def _choice(key, value, line, table):
    try:
        return table[_norm(value)]
    except KeyError:
        allowed = ", ".join(sorted(m.value for m in table.values()))
        raise ConfigError(f"expected one of {allowed}, got {value!r}",
                          key=key, line=line) from None


def _build(cls, kwargs, keymap, lines):
    try:
        return cls(**kwargs)
    except InvalidInputError as exc:
        field = str(exc).split(":", 1)[0]
        key = keymap.get(field)
        raise ConfigError(str(exc).split(":", 1)[-1].strip(), key=key,
                          line=lines.get(key)) from None


def resolve(entries: dict[str, tuple[str, int | None]]) -> Config:
    """Turn raw entries into validated value objects."""
    for key in REQUIRED:
        if key not in entries:
            raise ConfigError("missing required key", key=key)
    vals, lines = {}, {}
    for key in TOP_KEYS:
        if key in entries:
            raw, line = entries[key]
            lines[key] = line
            if key == "mode":
                vals[key] = _choice(key, raw, line, _MODES)
            elif key in INT_KEYS:
                vals[key] = _integer(key, raw, line)
            else:
                vals[key] = _number(key, raw, line)
        else:
            vals[key] = DEFAULTS[key]

    params = _build(LoopParams, dict(
        k_pd=vals["k_pd_v_per_rad"], k_vco=vals["k_vco_rad_per_s_per_v"],
        n_div=vals["n_div"], f_in=vals["f_in_hz"], f_free=vals["f_free_hz"]),
        _FIELD_KEYS, lines)
    filt = _build(RlcFilter, dict(r=vals["r_ohm"], l=vals["l_h"], c=vals["c_f"]),
                  _FIELD_KEYS, lines)
    sim = _build(SimConfig, dict(
        mode=vals["mode"], dt=vals["dt_s"], duration=vals["duration_s"],
        lock_freq_tol=vals["lock_freq_tol"], lock_window=vals["lock_window_s"],
        decimation=vals["decimation"]), _FIELD_KEYS, lines)
    return Config(params, filt, sim, _resolve_jitters(entries))


def _resolve_jitters(entries) -> tuple[JitterSpec, ...]:
    blocks: dict[int, dict[str, tuple[str, int | None]]] = {}
    for key, item in entries.items():
        m = _JITTER_KEY.match(key)
        if m:
            blocks.setdefault(int(m.group(1)), {})[m.group(2)] = item
    specs = []
    for idx in sorted(blocks):
        block = blocks[idx]
        prefix = f"jitter.{idx}."
        if "injection" not in block:
            raise ConfigError("missing required key", key=prefix + "injection")

        def get(name, conv, _block=block, _prefix=prefix):
            if name in _block:
                raw, line = _block[name]
                return conv(_prefix + name, raw, line)
            return conv(_prefix + name, str(JITTER_DEFAULTS[name]), None)

        injection = get("injection", lambda k, v, ln: _choice(k, v, ln, _INJECTIONS))
        kind = get("kind", lambda k, v, ln: _choice(k, v, ln, _KINDS))
        kwargs = dict(injection=injection, kind=kind,
                      amplitude=get("amplitude_rad", _number),
                      freq=get("freq_hz", _number), seed=get("seed", _integer))
        keymap = {f: prefix + k for f, k in _JITTER_FIELD_KEYS.items()}
        lines = {prefix + k: v[1] for k, v in block.items()}
        specs.append(_build(JitterSpec, kwargs, keymap, lines))
    seen = set()
    for spec in specs:
        if spec.injection in seen:
            raise ConfigError(f"two jitter blocks inject at {spec.injection.value}")
        seen.add(spec.injection)
    return tuple(specs)


def parse_config(text: str) -> Config:
    """Parse config text; raises ``ConfigError`` naming the key and line."""
    return resolve(read_entries(text))


def format_config(cfg: Config) -> str:
    """Resolved configuration as config text that parses back to ``cfg``."""
    p, f, s = cfg.params, cfg.filter, cfg.sim
    lines = [
        f"f_in_hz={p.f_in!r}",
        f"n_div={p.n_div}",
        f"f_free_hz={p.f_free!r}",
        f"k_pd_v_per_rad={p.k_pd!r}",
        f"k_vco_rad_per_s_per_v={p.k_vco!r}",
        f"r_ohm={f.r!r}",
        f"l_h={f.l!r}",
        f"c_f={f.c!r}",
        f"mode={s.mode.value}",
        f"dt_s={s.dt!r}",
        f"duration_s={s.duration!r}",
        f"lock_freq_tol={s.lock_freq_tol!r}",
        f"lock_window_s={s.lock_window!r}",
        f"decimation={s.decimation}",
    ]
    for i, j in enumerate(cfg.jitters):
        lines += [
            f"jitter.{i}.injection={j.injection.value}",
            f"jitter.{i}.kind={j.kind.value}",
            f"jitter.{i}.amplitude_rad={j.amplitude!r}",
            f"jitter.{i}.freq_hz={j.freq!r}",
            f"jitter.{i}.seed={j.seed}",
        ]
    return "\n".join(lines) + "\n"

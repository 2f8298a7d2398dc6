"""Plain ``key = value`` experiment configuration.

Lines before the first ``[scenario.NAME]`` header set defaults shared by all
scenarios (and the global ``snr_grid``); each header opens a scenario block.
An empty file yields one default scenario, ``amac_ftn``. Example::

    n = 16
    seeds = 0..19
    snr_grid = -10..30 step 5

    [scenario.amac_ftn]
    delta = 0.8
    beta = 0.25

    [scenario.amac]
    ftn = false
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .region import ScenarioConfig, default_alpha_grid

__all__ = ["ConfigError", "ExperimentConfig", "parse_config", "DEFAULT_SNR_GRID"]

DEFAULT_SNR_GRID = tuple(float(s) for s in range(-10, 31, 5))

_HEADER = re.compile(r"^\[scenario\.([A-Za-z0-9_\-]+)\]$")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    scenarios: list
    snr_grid: tuple = DEFAULT_SNR_GRID
    defaults: dict = field(default_factory=dict)


def _bool(text):
    low = text.lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _int_list(text):
    text = text.strip()
    m = re.fullmatch(r"(-?\d+)\s*\.\.\s*(-?\d+)", text)
    if m:
        lo, hi = int(m.group(1)), int(m.group(2))
        if hi < lo:
            raise ValueError(f"empty range {text!r}")
        return tuple(range(lo, hi + 1))
    return tuple(int(t) for t in text.split(",") if t.strip())


def _float_list(text):
    text = text.strip()
    m = re.fullmatch(r"(\S+)\s*\.\.\s*(\S+?)(?:\s+step\s+(\S+))?", text)
    if m and m.group(1) and not text.startswith(","):
        try:
            lo, hi = float(m.group(1)), float(m.group(2))
            step = float(m.group(3)) if m.group(3) else 1.0
        except ValueError:
            pass
        else:
            if step <= 0 or hi < lo:
                raise ValueError(f"bad range {text!r}")
            count = int(np.floor((hi - lo) / step + 1e-9)) + 1
            return tuple(float(lo + i * step) for i in range(count))
    return tuple(float(t) for t in text.split(",") if t.strip())


# key -> (ScenarioConfig field, converter)
_SCENARIO_KEYS = {
    "m": ("m", int),
    "l": ("l", int),
    "n": ("n", int),
    "delta": ("delta", float),
    "beta": ("beta", float),
    "t_sym": ("t_sym", float),
    "T": ("t_sym", float),
    "tau_frac": ("tau_frac", float),
    "snr_db_1": ("snr_db_1", float),
    "snr_db_2": ("snr_db_2", float),
    "sigma0_sq": ("sigma0_sq", float),
    "seeds": ("seeds", _int_list),
    "alpha_grid": ("alpha_grid", _float_list),
    "alpha_points": ("alpha_grid", lambda t: default_alpha_grid(int(t))),
    "ftn": ("ftn", _bool),
    "async": ("asynchronous", _bool),
    "asynchronous": ("asynchronous", _bool),
    "spatial_waterfill": ("spatial_waterfill", _bool),
    "temporal_precoding": ("temporal_precoding", _bool),
}


def parse_config(text: str) -> ExperimentConfig:
    """Parse configuration text into scenario configs.

    Raises
    ------
    ConfigError
        On malformed lines, unknown keys or invalid parameter values; the
        message carries the line number.
    """
    defaults: dict = {}
    snr_grid = DEFAULT_SNR_GRID
    blocks: list[tuple[str, int, dict]] = []
    current = defaults
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        header = _HEADER.match(line)
        if header:
            name = header.group(1)
            if any(b[0] == name for b in blocks):
                raise ConfigError(f"line {lineno}: duplicate scenario {name!r}")
            current = {}
            blocks.append((name, lineno, current))
            continue
        if line.startswith("["):
            raise ConfigError(f"line {lineno}: malformed header {line!r}; expected [scenario.NAME]")
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key == "snr_db":
            targets = [("snr_db_1", float), ("snr_db_2", float)]
        elif key == "snr_grid":
            if current is not defaults:
                raise ConfigError(f"line {lineno}: snr_grid is a global key; set it before any scenario")
            try:
                snr_grid = _float_list(value)
            except ValueError as exc:
                raise ConfigError(f"line {lineno}: {exc}") from None
            if not snr_grid:
                raise ConfigError(f"line {lineno}: snr_grid is empty")
            continue
        elif key in _SCENARIO_KEYS:
            targets = [_SCENARIO_KEYS[key]]
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        for fname, conv in targets:
            try:
                current[fname] = conv(value)
            except ValueError as exc:
                raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from None

    if not blocks:
        blocks = [("amac_ftn", 0, {})]
    scenarios = []
    for name, lineno, values in blocks:
        try:
            scenarios.append(ScenarioConfig(name=name, **{**defaults, **values}))
        except (ValueError, TypeError) as exc:
            where = f"scenario {name!r} (line {lineno})" if lineno else "default scenario"
            raise ConfigError(f"{where}: {exc}") from None
    return ExperimentConfig(scenarios=scenarios, snr_grid=tuple(snr_grid), defaults=defaults)

"""Run configuration: synthesis ranges plus metric and execution options.

The on-disk format is a flat key=value file ('#' starts a comment). Keys
mirror the SynthConfig fields plus the metric options; unknown keys are
rejected so typos fail loudly. Example::

    seed = 7
    gamma_range = 1.8,2.2
    blur_kernel_range = 5,21
    gain_range = 0.8,1.0
    flare_count = 4
    offset_fraction = 0.3
    lightsource_count_weights = 11,4,1
    color_jitter_palette = 0.6,0.8,1.2;1.2,1.1,0.7;1,1,1
    light_threshold = 0.99
    se_radius = 1
    psnr_cap = 100
    threads = 0
"""

import os
from dataclasses import dataclass, field

from flarebench.errors import ParameterError
from flarebench.synth import SynthConfig


@dataclass
class RunConfig:
    synth: SynthConfig = field(default_factory=SynthConfig)
    light_threshold: float = 0.99
    se_radius: int = 1
    psnr_cap: float = 100.0
    threads: int = 0  # 0 = one worker per core

    def __post_init__(self):
        if not 0.0 < self.light_threshold <= 1.0:
            raise ParameterError(
                f"light_threshold must be in (0, 1], got {self.light_threshold}"
            )
        if self.se_radius < 0:
            raise ParameterError(f"se_radius must be >= 0, got {self.se_radius}")
        if self.psnr_cap <= 0:
            raise ParameterError(f"psnr_cap must be positive, got {self.psnr_cap}")
        if self.threads < 0:
            raise ParameterError(f"threads must be >= 0, got {self.threads}")


def parse_kv_file(path) -> dict:
    """Read a flat key=value file into a dict of raw strings."""
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ParameterError(f"{path}: line {lineno}: expected key = value")
            key, _, value = text.partition("=")
            values[key.strip()] = value.strip()
    return values


def _parse_pair(text, cast):
    parts = [p for p in text.split(",") if p.strip()]
    if len(parts) != 2:
        raise ParameterError(f"expected 'lo,hi', got {text!r}")
    return (cast(parts[0]), cast(parts[1]))


def _parse_weights(text):
    if text.lower() in ("none", "off"):
        return None
    return tuple(float(p) for p in text.split(",") if p.strip())


def _parse_palette(text):
    triples = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if chunk:
            triples.append(tuple(float(p) for p in chunk.split(",")))
    return tuple(triples)


_SYNTH_PARSERS = {
    "seed": int,
    "gamma_range": lambda t: _parse_pair(t, float),
    "blur_kernel_range": lambda t: _parse_pair(t, int),
    "gain_range": lambda t: _parse_pair(t, float),
    "flare_count": int,
    "offset_fraction": float,
    "lightsource_count_weights": _parse_weights,
    "color_jitter_palette": _parse_palette,
}

_RUN_PARSERS = {
    "light_threshold": float,
    "se_radius": int,
    "psnr_cap": float,
    "threads": int,
}


def run_config_from_values(values: dict) -> RunConfig:
    """Build a RunConfig from raw key=value strings, validating everything."""
    synth_kwargs = {}
    run_kwargs = {}
    for key, raw in values.items():
        if key in _SYNTH_PARSERS:
            try:
                synth_kwargs[key] = _SYNTH_PARSERS[key](raw)
            except (TypeError, ValueError) as exc:
                raise ParameterError(f"bad value for {key}: {raw!r} ({exc})")
        elif key in _RUN_PARSERS:
            try:
                run_kwargs[key] = _RUN_PARSERS[key](raw)
            except (TypeError, ValueError) as exc:
                raise ParameterError(f"bad value for {key}: {raw!r} ({exc})")
        else:
            known = sorted(set(_SYNTH_PARSERS) | set(_RUN_PARSERS))
            raise ParameterError(f"unknown config key {key!r}; known keys: {known}")
    return RunConfig(synth=SynthConfig(**synth_kwargs), **run_kwargs)


def load_run_config(path) -> RunConfig:
    return run_config_from_values(parse_kv_file(path))


def resolve_threads(explicit: int | None, config_threads: int = 0) -> int:
    """Worker count: CLI flag beats FLAREBENCH_THREADS beats the config file."""
    if explicit is not None and explicit > 0:
        return explicit
    env = os.environ.get("FLAREBENCH_THREADS", "").strip()
    if env:
        try:
            value = int(env)
        except ValueError:
            raise ParameterError(f"FLAREBENCH_THREADS must be an integer, got {env!r}")
        if value > 0:
            return value
    if config_threads and config_threads > 0:
        return config_threads
    return os.cpu_count() or 1

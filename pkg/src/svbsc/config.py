"""Experiment configuration: dataclasses plus a flat ``section.key = value`` text format.

Lists are comma separated; ``a:b:step`` expands to an inclusive range.
``none`` clears an optional field.  Example::

    seed = 7
    sweep.snr_db = -5:30:1
    target.epsilon = 0.01, 0.05, 0.1
"""

from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


def _floats(text: str) -> tuple[float, ...]:
    out: list[float] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ":" in part:
            a, b, step = (float(x) for x in part.split(":"))
            if step <= 0:
                raise ValueError(f"range step must be positive: {part!r}")
            n = int(np.floor((b - a) / step + 1e-9)) + 1
            out.extend(float(np.round(a + i * step, 9)) for i in range(n))
        else:
            out.append(float(part))
    return tuple(out)


def _ints(text: str) -> tuple[int, ...]:
    vals = _floats(text)
    if any(v != int(v) for v in vals):
        raise ValueError(f"expected integers: {text!r}")
    return tuple(int(v) for v in vals)


def _strs(text: str) -> tuple[str, ...]:
    return tuple(p.strip() for p in text.split(",") if p.strip())


def _paths(text: str) -> tuple[str, ...]:
    return () if text.strip().lower() == "none" else _strs(text)


def _opt(conv):
    return lambda text: None if text.strip().lower() in ("", "none") else conv(text)


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _p(conv):
    return {"parse": conv}


@dataclass
class ChannelConfig:
    k_factor_db: float = field(default=20.0, metadata=_p(float))
    n_pilots: int = field(default=10, metadata=_p(int))
    csi_mode: tuple[str, ...] = field(default=("perfect", "imperfect"), metadata=_p(_strs))


@dataclass
class BudgetConfig:
    channel_uses: int = field(default=128, metadata=_p(int))
    power_limit: float = field(default=128.0, metadata=_p(float))


@dataclass
class TargetConfig:
    q0: float = field(default=0.05, metadata=_p(float))
    epsilon: tuple[float, ...] = field(default=(0.01, 0.05, 0.1), metadata=_p(_floats))
    l_max: int = field(default=1152, metadata=_p(int))
    l_avg_cap: float | None = field(default=None, metadata=_p(_opt(float)))


@dataclass
class SweepConfig:
    # inf in the SNR list means a noiseless link
    snr_db: tuple[float, ...] = field(default=_floats("-5:30:1"), metadata=_p(_floats))
    frames: int = field(default=2000, metadata=_p(int))
    cdf_samples: int = field(default=200_000, metadata=_p(int))


@dataclass
class BerMapConfig:
    path: str = field(default="bermap.csv", metadata=_p(str))
    snr_db: tuple[float, ...] = field(default=_floats("-10:40:0.5"), metadata=_p(_floats))
    bits_per_point: int = field(default=10**6, metadata=_p(int))


@dataclass
class CodecConfig:
    preset: str = field(default="code3", metadata=_p(str))
    breakpoints: tuple[int, ...] | None = field(default=None, metadata=_p(_opt(_ints)))
    variant: str = field(default="ladder", metadata=_p(str))
    model_path: str = field(default="model.rljc", metadata=_p(str))
    label: str | None = field(default=None, metadata=_p(_opt(str)))

    @property
    def name(self) -> str:
        return self.label or f"{self.preset}-{self.variant}"


@dataclass
class DatasetConfig:
    """Either CIFAR-10 binary batches (``path``) or a synthetic Gaussian set."""

    path: tuple[str, ...] = field(default=(), metadata=_p(_paths))
    n_source: int = field(default=3072, metadata=_p(int))
    synthetic_count: int = field(default=6500, metadata=_p(int))
    synthetic_first: float = field(default=0.01, metadata=_p(float))
    synthetic_ratio: float = field(default=0.985, metadata=_p(float))
    synthetic_length: int = field(default=768, metadata=_p(int))
    synthetic_seed: int = field(default=0, metadata=_p(int))
    train_fraction: float = field(default=12 / 13, metadata=_p(float))
    split_seed: int = field(default=0, metadata=_p(int))
    test_limit: int | None = field(default=None, metadata=_p(_opt(int)))


@dataclass
class OutputConfig:
    results: str = field(default="results.csv", metadata=_p(str))
    report_dir: str = field(default="report", metadata=_p(str))


SECTIONS = {
    "channel": ChannelConfig,
    "budget": BudgetConfig,
    "target": TargetConfig,
    "sweep": SweepConfig,
    "bermap": BerMapConfig,
    "codec": CodecConfig,
    "dataset": DatasetConfig,
    "output": OutputConfig,
}

# Sections that only say where files go; they do not change any number.
_UNHASHED = ("output",)


@dataclass
class ExperimentConfig:
    seed: int = 0
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    budget: BudgetConfig = field(default_factory=BudgetConfig)
    target: TargetConfig = field(default_factory=TargetConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    bermap: BerMapConfig = field(default_factory=BerMapConfig)
    codec: CodecConfig = field(default_factory=CodecConfig)
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def __post_init__(self):
        if self.seed < 0 or self.seed >= 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.codec.variant not in ("ladder", "baseline"):
            raise ValueError(f"unknown codec variant {self.codec.variant!r}")
        for mode in self.channel.csi_mode:
            if mode not in ("perfect", "imperfect"):
                raise ValueError(f"unknown csi mode {mode!r}")
        if self.sweep.frames <= 0:
            raise ValueError("sweep.frames must be positive")

    def items(self, include_output: bool = True):
        yield "seed", str(self.seed)
        for name in SECTIONS:
            if not include_output and name in _UNHASHED:
                continue
            section = getattr(self, name)
            for f in dataclasses.fields(section):
                yield f"{name}.{f.name}", _format(getattr(section, f.name))

    def to_text(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in self.items())

    def hash(self) -> str:
        canon = "".join(f"{k}={v}\n" for k, v in self.items(include_output=False))
        return hashlib.sha256(canon.encode()).hexdigest()[:12]

    def replace(self, **overrides) -> "ExperimentConfig":
        """Copy with ``section.key``-style overrides given as ``section__key``."""
        cfg = parse_config(self.to_text())
        for k, v in overrides.items():
            _assign(cfg, k.replace("__", "."), v)
        cfg.__post_init__()
        return cfg


def _format(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, tuple):
        return ", ".join(_format(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _assign(cfg: ExperimentConfig, key: str, value) -> None:
    if key == "seed":
        cfg.seed = int(value)
        return
    section, _, name = key.partition(".")
    if section not in SECTIONS:
        raise KeyError(f"unknown config section {section!r}")
    target = getattr(cfg, section)
    fields = {f.name: f for f in dataclasses.fields(target)}
    if name not in fields:
        raise KeyError(f"unknown config key {key!r}")
    if isinstance(value, str):
        value = fields[name].metadata["parse"](value)
    setattr(target, name, value)


def parse_config(text: str) -> ExperimentConfig:
    cfg = ExperimentConfig()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        try:
            _assign(cfg, key, value)
        except (KeyError, ValueError) as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    cfg.__post_init__()
    return cfg


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())

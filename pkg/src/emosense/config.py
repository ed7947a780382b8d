"""Pipeline configuration: every DSP knob, classifier hyperparameters, eval mode."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .dsp import DEFAULT_BANDS, BandSpec


@dataclass(frozen=True)
class DSPConfig:
    bands: tuple[BandSpec, ...] = DEFAULT_BANDS
    stft_window_s: float = 1.0
    stft_overlap: float = 0.5
    emg_low_hz: float = 20.0
    emg_high_hz: float = 125.0
    filter_order: int = 4
    tonic_cutoff_hz: float = 0.05
    wavelet: str = "db4"
    wavelet_levels: int = 5
    peak_prominence_factor: float = 0.5
    peak_min_prominence: float = 0.01  # uS, smallest response counted as an SCR
    emg_window_s: float = 0.1
    feature_offset_s: float = 30.0
    feature_length_s: float = 30.0

    def __post_init__(self):
        if self.filter_order not in (2, 4):
            raise ValueError("filter_order must be 2 or 4")
        if not 0 < self.emg_low_hz < self.emg_high_hz:
            raise ValueError("EMG band edges must satisfy 0 < low < high")
        if not 0 < self.tonic_cutoff_hz < 1:
            raise ValueError("tonic_cutoff_hz must lie in (0, 1)")
        if not 1 <= self.wavelet_levels <= 10:
            raise ValueError("wavelet_levels must be in 1..10")
        if self.peak_prominence_factor <= 0:
            raise ValueError("peak_prominence_factor must be positive")
        if self.peak_min_prominence < 0:
            raise ValueError("peak_min_prominence must be non-negative")
        if not 0 < self.emg_window_s <= 1:
            raise ValueError("emg_window_s must lie in (0, 1] s")
        if not 0 <= self.stft_overlap < 1 or self.stft_window_s <= 0:
            raise ValueError("bad STFT parameters")
        if self.feature_offset_s < 0 or self.feature_length_s <= 0:
            raise ValueError("bad feature window")


@dataclass(frozen=True)
class PipelineConfig:
    dsp: DSPConfig = field(default_factory=DSPConfig)
    classifiers: dict = field(default_factory=lambda: {"nb": {}, "tree": {}, "svm": {}})
    loo: str = "instance"
    seed: int = 0

    def __post_init__(self):
        if self.loo not in ("instance", "subject"):
            raise ValueError("loo must be 'instance' or 'subject'")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["dsp"]["bands"] = {b.name: [b.low_hz, b.high_hz] for b in self.dsp.bands}
        return d


def _dsp_from_dict(d: dict) -> DSPConfig:
    known = {f.name for f in fields(DSPConfig)}
    unknown = set(d) - known
    if unknown:
        raise ValueError(f"unknown dsp option(s): {sorted(unknown)}")
    d = dict(d)
    if "bands" in d:
        d["bands"] = tuple(BandSpec(name, float(lo), float(hi)) for name, (lo, hi) in d["bands"].items())
    return DSPConfig(**d)


def config_from_dict(d: dict) -> PipelineConfig:
    unknown = set(d) - {"dsp", "classifiers", "loo", "seed"}
    if unknown:
        raise ValueError(f"unknown config key(s): {sorted(unknown)}")
    base = PipelineConfig()
    classifiers = dict(base.classifiers)
    for name, params in d.get("classifiers", {}).items():
        if name not in classifiers:
            raise ValueError(f"unknown classifier {name!r}")
        classifiers[name] = dict(params)
    return PipelineConfig(
        dsp=_dsp_from_dict(d.get("dsp", {})),
        classifiers=classifiers,
        loo=d.get("loo", base.loo),
        seed=int(d.get("seed", base.seed)),
    )


def load_config(path) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    return config_from_dict(json.loads(Path(path).read_text()))


def override(cfg: PipelineConfig, **kwargs) -> PipelineConfig:
    """Return ``cfg`` with non-None keyword values replaced (flags win)."""
    return replace(cfg, **{k: v for k, v in kwargs.items() if v is not None})

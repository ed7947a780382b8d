"""Seeded synthetic sessions with label-dependent modulation.

Signals are plausible in shape and scale, not biophysically validated. With
every gain at zero the traces carry no information about the labels.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np
from scipy import fft as sp_fft

from .core import (
    DEFAULT_LABELS,
    EXPECTED_RATES,
    Label,
    ProtocolTimeline,
    RawTrace,
    SensorKind,
    SessionManifest,
    VideoLabelTable,
    expected_sample_count,
    segment_session,
    serialize_manifest,
    write_trace,
)

# per-band EEG amplitudes (uV, RMS) before subject scaling
EEG_BAND_RMS = {"delta": (0.5, 4.0, 12.0), "theta": (4.0, 7.5, 6.0), "alpha": (8.0, 12.5, 5.0),
                "beta": (13.0, 30.0, 3.0), "gamma": (30.0, 100.0, 1.0)}

SCR_RISE_S = 1.0
SCR_DECAY_S = 3.0
BASE_SCR_PER_MIN = 2.0
EMG_BURSTS_PER_MIN = 3.0


@dataclass(frozen=True)
class ModulationSpec:
    arousal_gsr_gain: float = 0.0  # extra SCR pulses/min in High-arousal videos
    arousal_emg_gain: float = 0.0  # burst amplitude x (1 + gain) in High-arousal videos
    valence_alpha_gain: float = 0.0  # alpha amplitude x (1 + gain) in High-valence videos
    noise_level: float = 1.0
    seed: int = 0

    def __post_init__(self):
        for name in ("arousal_gsr_gain", "arousal_emg_gain", "valence_alpha_gain", "noise_level"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.arousal_gsr_gain < 0 or self.arousal_emg_gain < 0:
            raise ValueError("arousal gains must be non-negative")
        if self.valence_alpha_gain <= -1:
            raise ValueError("valence_alpha_gain must exceed -1")
        if self.noise_level <= 0:
            raise ValueError("noise_level must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


def scr_pulse(t: np.ndarray, amplitude: float = 1.0, rise_s: float = SCR_RISE_S, decay_s: float = SCR_DECAY_S) -> np.ndarray:
    """Bi-exponential SCR shape scaled so its maximum equals ``amplitude``."""
    t = np.asarray(t, dtype=float)
    t_peak = np.log(decay_s / rise_s) * rise_s * decay_s / (decay_s - rise_s)
    peak = np.exp(-t_peak / decay_s) - np.exp(-t_peak / rise_s)
    out = np.where(t > 0, np.exp(-np.maximum(t, 0) / decay_s) - np.exp(-np.maximum(t, 0) / rise_s), 0.0)
    return amplitude * out / peak


def _subject_rng(seed: int, subject_id: str) -> np.random.Generator:
    return np.random.default_rng([int(seed), zlib.crc32(subject_id.encode())])


def _rms_from_rfft(spec, n):
    # Parseval for a one-sided spectrum (DC and Nyquist counted once)
    w = np.full(len(spec), 2.0)
    w[0] = 1.0
    if n % 2 == 0:
        w[-1] = 1.0
    return np.sqrt(np.sum(w * np.abs(spec) ** 2)) / n


def _band_noise(rng, n, rate, lo, hi, rms):
    """Gaussian noise limited to [lo, hi) Hz with the given RMS."""
    return _multiband_noise(rng, n, rate, [(lo, hi, rms)])


def _multiband_noise(rng, n, rate, bands):
    """Sum of independent band-limited noises; ``bands`` holds (lo, hi, rms).

    Disjoint bins of one white-noise spectrum are independent, so a single
    transform pair serves every band.
    """
    white = sp_fft.rfft(rng.standard_normal(n))
    f = sp_fft.rfftfreq(n, 1.0 / rate)
    spec = np.zeros_like(white)
    for lo, hi, rms in bands:
        sel = (f >= lo) & (f < hi)
        part = white[sel]
        cur = _rms_from_rfft(np.where(sel, white, 0), n)
        spec[sel] = part * (rms / cur) if cur > 0 else part
    return sp_fft.irfft(spec, n)


def _window_gain(n, rate, windows, gain):
    """1 everywhere, ``1 + gain`` inside the listed (start, end) windows."""
    g = np.ones(n)
    for start, end in windows:
        g[int(round(start * rate)):int(round(end * rate))] = 1.0 + gain
    return g


def _video_windows(timeline, table, target, label):
    out = []
    for seg in segment_session(timeline):
        for vid, start, end in seg.video_windows:
            if getattr(table[vid], target) is label:
                out.append((start, end))
    return out


def _poisson_times(rng, rate_per_s, start, end):
    count = rng.poisson(rate_per_s * (end - start))
    return np.sort(rng.uniform(start, end, count))


def _random_walk(rng, n, step=3.0, lo=0.0, hi=100.0, pull=0.05):
    """Mean-reverting walk around the midpoint, reflected at the bounds."""
    x = np.empty(n)
    centre = 0.5 * (lo + hi)
    v = centre + rng.normal(0, step / np.sqrt(2 * pull))
    for i in range(n):
        v += pull * (centre - v) + rng.normal(0, step)
        if v < lo:
            v = 2 * lo - v
        if v > hi:
            v = 2 * hi - v
        x[i] = min(max(v, lo), hi)
    return x


def generate_session(
    subject_id: str,
    timeline: ProtocolTimeline = ProtocolTimeline(),
    table: VideoLabelTable = DEFAULT_LABELS,
    spec: ModulationSpec = ModulationSpec(),
) -> dict[SensorKind, RawTrace]:
    timeline.check_videos(table)
    rng = _subject_rng(spec.seed, subject_id)
    duration = timeline.total_duration_s
    high_arousal = _video_windows(timeline, table, "arousal", Label.HIGH)
    high_valence = _video_windows(timeline, table, "valence", Label.HIGH)
    traces = {}

    # EEG: band-limited components, alpha scaled inside High-valence videos
    rate = EXPECTED_RATES[SensorKind.EEG_RAW]
    n = expected_sample_count(duration, rate)
    subject_scale = rng.lognormal(0.0, 0.2)
    lo, hi, rms = EEG_BAND_RMS["alpha"]
    alpha = _band_noise(rng, n, rate, lo, hi, rms * subject_scale)
    if spec.valence_alpha_gain:
        alpha = alpha * _window_gain(n, rate, high_valence, spec.valence_alpha_gain)
    others = [(lo, hi, rms * subject_scale) for band, (lo, hi, rms) in EEG_BAND_RMS.items() if band != "alpha"]
    eeg = alpha + _multiband_noise(rng, n, rate, others)
    eeg += rng.normal(0, 2.0 * spec.noise_level, n)
    traces[SensorKind.EEG_RAW] = RawTrace(SensorKind.EEG_RAW, rate, eeg)

    for kind in (SensorKind.EEG_ATTENTION, SensorKind.EEG_MEDITATION):
        r = EXPECTED_RATES[kind]
        traces[kind] = RawTrace(kind, r, _random_walk(rng, expected_sample_count(duration, r)))

    # GSR: tonic level + slow drift + SCR pulses (Poisson), extra pulses when aroused
    rate = EXPECTED_RATES[SensorKind.GSR]
    n = expected_sample_count(duration, rate)
    t = np.arange(n) / rate
    level = rng.uniform(2.0, 10.0)
    drift = _band_noise(rng, n, rate, 1e-6, 0.01, 0.3 * level / 5)
    onsets = list(_poisson_times(rng, BASE_SCR_PER_MIN / 60, 0.0, duration))
    if spec.arousal_gsr_gain > 0:
        for start, end in high_arousal:
            onsets.extend(_poisson_times(rng, spec.arousal_gsr_gain / 60, start, end))
    gsr = level + drift
    amp_scale = rng.lognormal(0.0, 0.2)
    span = int(30 * SCR_DECAY_S * rate)
    for onset in sorted(onsets):
        i0 = int(np.ceil(onset * rate))
        seg = slice(i0, min(n, i0 + span))
        gsr[seg] += scr_pulse(t[seg] - onset, amp_scale * rng.lognormal(np.log(0.4), 0.3))
    gsr += rng.normal(0, 0.005 * spec.noise_level, n)
    traces[SensorKind.GSR] = RawTrace(SensorKind.GSR, rate, np.maximum(gsr, 0.01))

    # EMG: 20-125 Hz carrier under a background + burst envelope
    rate = EXPECTED_RATES[SensorKind.EMG_CH1]
    n = expected_sample_count(duration, rate)
    for kind in (SensorKind.EMG_CH1, SensorKind.EMG_CH2):
        env = np.full(n, 0.01)
        burst_gain = _window_gain(n, rate, high_arousal, spec.arousal_emg_gain)
        for onset in _poisson_times(rng, EMG_BURSTS_PER_MIN / 60, 0.0, duration):
            length = rng.uniform(0.5, 1.5)
            i0, i1 = int(onset * rate), min(n, int((onset + length) * rate))
            if i1 > i0:
                env[i0:i1] += 0.05 * rng.lognormal(0, 0.3) * np.hanning(i1 - i0) * burst_gain[i0:i1]
        carrier = _band_noise(rng, n, rate, 20.0, 125.0, 1.0)
        emg = env * carrier + rng.normal(0, 0.002 * spec.noise_level, n)
        traces[kind] = RawTrace(kind, rate, emg)
    return traces


def write_session(
    out_dir,
    subject_id: str,
    traces: dict[SensorKind, RawTrace],
    timeline: ProtocolTimeline,
    session_start: datetime | None = None,
) -> Path:
    """Write six trace CSVs plus a manifest; return the manifest path."""
    out_dir = Path(out_dir)
    sub_dir = out_dir / subject_id
    sub_dir.mkdir(parents=True, exist_ok=True)
    channels = {}
    for kind, trace in traces.items():
        name = f"{kind.value}.csv"
        write_trace(sub_dir / name, trace)
        channels[kind] = Path(subject_id) / name
    manifest = SessionManifest(subject_id, channels, timeline, session_start)
    path = out_dir / f"{subject_id}.json"
    path.write_text(serialize_manifest(manifest) + "\n")
    return path


def synth_cohort(out_dir, n_subjects: int, spec: ModulationSpec, timeline: ProtocolTimeline = ProtocolTimeline(),
                 table: VideoLabelTable = DEFAULT_LABELS) -> list[Path]:
    base = datetime(2017, 3, 1, 9, 0, 0)
    paths = []
    for k in range(n_subjects):
        sid = f"S{k + 1:02d}"
        traces = generate_session(sid, timeline, table, spec)
        paths.append(write_session(out_dir, sid, traces, timeline, base + timedelta(minutes=45 * k)))
    return paths

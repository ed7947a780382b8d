"""Raw traces -> derived series -> per-video feature rows for one session."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from . import dsp
from .config import DSPConfig
from .core import (
    DEFAULT_LABELS,
    ProtocolTimeline,
    RawTrace,
    SensorKind,
    TrialSegment,
    VideoLabelTable,
    segment_session,
)
from .errors import MissingChannel
from .features import FEATURE_NAMES, eeg_features, emg_features, gsr_features


@dataclass(frozen=True)
class DerivedSession:
    """Uncorrected derived series for a whole session."""

    eeg: dict[str, dsp.DerivedSeries]  # 5 bands + attention + meditation
    gsr_tonic: dsp.DerivedSeries
    gsr_phasic: dsp.DerivedSeries
    gsr_denoised: dsp.DerivedSeries
    emg: dict[str, dsp.DerivedSeries]  # ch1, ch2 envelopes

    def all_series(self):
        yield from self.eeg.values()
        yield self.gsr_phasic
        yield self.gsr_denoised
        yield from self.emg.values()


@dataclass(frozen=True)
class SessionFeatures:
    subject_id: str
    rows: tuple  # (video_id, features[58], valence, arousal)
    segments: tuple[TrialSegment, ...]


def derive_series(traces: Mapping[SensorKind, RawTrace], cfg: DSPConfig = DSPConfig()) -> DerivedSession:
    missing = [k.value for k in SensorKind if k not in traces]
    if missing:
        raise MissingChannel(f"missing trace(s): {', '.join(missing)}")
    eeg = dsp.band_power_all(traces[SensorKind.EEG_RAW], cfg.bands, cfg.stft_window_s, cfg.stft_overlap)
    eeg["attention"] = dsp.as_series(traces[SensorKind.EEG_ATTENTION])
    eeg["meditation"] = dsp.as_series(traces[SensorKind.EEG_MEDITATION])

    tonic, phasic = dsp.gsr_decompose(traces[SensorKind.GSR], cfg.tonic_cutoff_hz)
    denoised = dsp.wavelet_denoise(phasic, cfg.wavelet, cfg.wavelet_levels)

    emg = {}
    for ch, kind in (("ch1", SensorKind.EMG_CH1), ("ch2", SensorKind.EMG_CH2)):
        filt = dsp.bandpass_filter(traces[kind], cfg.emg_low_hz, cfg.emg_high_hz, cfg.filter_order)
        emg[ch] = dsp.emg_envelope(filt, cfg.emg_window_s)
    return DerivedSession(eeg, tonic, phasic, denoised, emg)


def _corrected_window(series: dsp.DerivedSeries, baseline, window) -> dsp.DerivedSeries:
    # only the feature window is needed after correction
    return dsp.baseline_correct(series, baseline).slice(*window)


def trial_features(derived: DerivedSession, segment: TrialSegment, cfg: DSPConfig = DSPConfig()) -> dict[int, np.ndarray]:
    """58 features for each video of one trial, over its feature window."""
    base = segment.baseline_window
    out = {}
    for vid, start, _end in segment.video_windows:
        win = (start + cfg.feature_offset_s, start + cfg.feature_offset_s + cfg.feature_length_s)
        eeg = {k: _corrected_window(s, base, win) for k, s in derived.eeg.items()}
        phasic = _corrected_window(derived.gsr_phasic, base, win)
        denoised = _corrected_window(derived.gsr_denoised, base, win)
        peaks = dsp.detect_peaks(denoised, cfg.peak_prominence_factor, cfg.peak_min_prominence)
        env1 = _corrected_window(derived.emg["ch1"], base, win)
        env2 = _corrected_window(derived.emg["ch2"], base, win)
        vec = np.concatenate(
            [eeg_features(eeg, win), gsr_features(phasic, denoised, peaks, win), emg_features(env1, env2, win)]
        )
        assert len(vec) == len(FEATURE_NAMES)
        out[vid] = vec
    return out


def extract_session(
    subject_id: str,
    traces: Mapping[SensorKind, RawTrace],
    timeline: ProtocolTimeline,
    table: VideoLabelTable = DEFAULT_LABELS,
    cfg: DSPConfig = DSPConfig(),
) -> SessionFeatures:
    timeline.check_videos(table)
    derived = derive_series(traces, cfg)
    segments = tuple(segment_session(timeline))
    rows = []
    for seg in segments:
        for vid, vec in trial_features(derived, seg, cfg).items():
            valence, arousal = table.labels(vid)
            rows.append((vid, vec, valence, arousal))
    return SessionFeatures(subject_id, tuple(rows), segments)

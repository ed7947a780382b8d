"""Signal conditioning for the EEG, GSR and EMG channels.

All transforms are offline and zero-phase. Derived series carry their own
rate and time anchor so they can be windowed on the session clock.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal as sps

from . import wavelet as wv
from .core import RawTrace, SensorKind
from .errors import BadBand, NonFinite, TooShort, WindowOutOfRange


@dataclass(frozen=True)
class BandSpec:
    name: str
    low_hz: float
    high_hz: float

    def check(self, rate_hz: float) -> None:
        if not (0 < self.low_hz < self.high_hz < rate_hz / 2):
            raise BadBand(
                f"band {self.name} [{self.low_hz}, {self.high_hz}) Hz invalid for "
                f"rate {rate_hz} Hz (Nyquist {rate_hz / 2})"
            )


# Alpha starts at 8 Hz so it does not overlap theta; delta/gamma are bounded.
DEFAULT_BANDS = (
    BandSpec("alpha", 8.0, 12.5),
    BandSpec("beta", 13.0, 30.0),
    BandSpec("gamma", 30.0, 100.0),
    BandSpec("delta", 0.5, 4.0),
    BandSpec("theta", 4.0, 7.5),
)


@dataclass(frozen=True, eq=False)
class DerivedSeries:
    """A processed, uniformly sampled series on the session clock."""

    kind: str
    rate_hz: float
    values: np.ndarray
    start_offset_s: float = 0.0

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if not np.all(np.isfinite(vals)):
            raise NonFinite(f"{self.kind}: non-finite values")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return len(self.values)

    @property
    def times(self) -> np.ndarray:
        return self.start_offset_s + np.arange(len(self.values)) / self.rate_hz

    @property
    def end_s(self) -> float:
        return self.start_offset_s + len(self.values) / self.rate_hz

    def index_range(self, start_s: float, end_s: float) -> tuple[int, int]:
        """Sample indices whose time lies in ``[start_s, end_s)``."""
        # small epsilon keeps exact grid times on the right side of the edge
        lo = int(np.ceil((start_s - self.start_offset_s) * self.rate_hz - 1e-9))
        hi = int(np.ceil((end_s - self.start_offset_s) * self.rate_hz - 1e-9))
        return max(lo, 0), min(hi, len(self.values))

    def window(self, start_s: float, end_s: float) -> np.ndarray:
        lo, hi = self.index_range(start_s, end_s)
        return self.values[lo:hi] if hi > lo else self.values[:0]

    def slice(self, start_s: float, end_s: float) -> "DerivedSeries":
        lo, hi = self.index_range(start_s, end_s)
        hi = max(hi, lo)
        return DerivedSeries(
            self.kind, self.rate_hz, self.values[lo:hi], self.start_offset_s + lo / self.rate_hz
        )

    def with_values(self, values, kind: str | None = None) -> "DerivedSeries":
        return DerivedSeries(kind or self.kind, self.rate_hz, values, self.start_offset_s)


def as_series(trace: RawTrace, kind: str | None = None) -> DerivedSeries:
    name = kind or {
        SensorKind.EEG_ATTENTION: "attention",
        SensorKind.EEG_MEDITATION: "meditation",
    }.get(trace.sensor_kind, trace.sensor_kind.value)
    return DerivedSeries(name, trace.sampling_rate_hz, trace.samples, trace.start_offset_s)


# --------------------------------------------------------------------------
# filtering


def bandpass_filter(trace: RawTrace, low_hz: float = 20.0, high_hz: float = 125.0, order: int = 4) -> RawTrace:
    """Zero-phase Butterworth band-pass, reflect-padded at both ends."""
    rate = trace.sampling_rate_hz
    if order not in (2, 4):
        raise ValueError(f"order must be 2 or 4, got {order}")
    if not (0 < low_hz < high_hz < rate / 2):
        raise BadBand(f"band [{low_hz}, {high_hz}] Hz invalid at {rate} Hz")
    # band-pass design doubles the order; pad by three times that
    padlen = 6 * order
    if len(trace) <= padlen:
        raise TooShort(f"{trace.sensor_kind}: need more than {padlen} samples, got {len(trace)}")
    sos = sps.butter(order, [low_hz, high_hz], btype="bandpass", fs=rate, output="sos")
    out = sps.sosfiltfilt(sos, trace.samples, padtype="even", padlen=padlen)
    return trace.replace_samples(out)


def _lowpass(x: np.ndarray, cutoff_hz: float, rate: float, order: int = 2) -> np.ndarray:
    sos = sps.butter(order, cutoff_hz, btype="lowpass", fs=rate, output="sos")
    padlen = min(len(x) - 1, int(round(rate / cutoff_hz)))
    return sps.sosfiltfilt(sos, x, padtype="even", padlen=padlen)


# --------------------------------------------------------------------------
# EEG


def _stft_power(x: np.ndarray, rate: float, window_s: float = 1.0, overlap: float = 0.5):
    nwin = int(round(window_s * rate))
    if len(x) < nwin:
        raise TooShort(f"need at least {window_s} s of EEG, got {len(x) / rate:.3f} s")
    hop = max(1, int(round(nwin * (1 - overlap))))
    frames = np.lib.stride_tricks.sliding_window_view(x, nwin)[::hop]
    win = np.hamming(nwin)
    spec = np.fft.rfft(frames * win, axis=1)
    # one-sided power spectrum; a sine of amplitude A sums to about A**2 / 2
    power = np.abs(spec) ** 2 / win.sum() ** 2
    power[:, 1:] *= 2.0
    if nwin % 2 == 0:
        power[:, -1] /= 2.0
    freqs = np.fft.rfftfreq(nwin, 1.0 / rate)
    return freqs, power, hop, nwin


def band_power_all(eeg: RawTrace, bands=DEFAULT_BANDS, window_s: float = 1.0, overlap: float = 0.5) -> dict[str, DerivedSeries]:
    """Band-power series for several bands from one short-time transform."""
    if eeg.sensor_kind is not SensorKind.EEG_RAW:
        raise ValueError(f"band power needs EEG_raw, got {eeg.sensor_kind}")
    rate = eeg.sampling_rate_hz
    for b in bands:
        b.check(rate)
    freqs, power, hop, nwin = _stft_power(eeg.samples, rate, window_s, overlap)
    out_rate = rate / hop
    anchor = eeg.start_offset_s + nwin / (2 * rate)
    out = {}
    for b in bands:
        sel = (freqs >= b.low_hz) & (freqs < b.high_hz)
        out[b.name] = DerivedSeries(f"band_power({b.name})", out_rate, power[:, sel].sum(axis=1), anchor)
    return out


def band_power_series(eeg: RawTrace, band: BandSpec, window_s: float = 1.0, overlap: float = 0.5) -> DerivedSeries:
    """Short-time band power: 1 s Hamming frames, 50% overlap (2 Hz output).

    Each value is the periodogram power summed over bins in ``[low, high)``,
    stamped at the centre of its frame.
    """
    return band_power_all(eeg, (band,), window_s, overlap)[band.name]


# --------------------------------------------------------------------------
# GSR


def gsr_decompose(gsr: RawTrace, cutoff_hz: float = 0.05) -> tuple[DerivedSeries, DerivedSeries]:
    """Split skin conductance into tonic (low-passed) and phasic (residual) parts."""
    if gsr.sensor_kind is not SensorKind.GSR:
        raise ValueError(f"expected a GSR trace, got {gsr.sensor_kind}")
    rate = gsr.sampling_rate_hz
    if len(gsr) < 16:
        raise TooShort(f"GSR trace too short ({len(gsr)} samples)")
    if not (0 < cutoff_hz < rate / 2):
        raise BadBand(f"tonic cutoff {cutoff_hz} Hz invalid at {rate} Hz")
    x = gsr.samples
    tonic = _lowpass(x, cutoff_hz, rate)
    phasic = x - tonic
    # anchor the tonic so tonic + phasic rounds back to the input
    tonic = x - phasic
    t0 = gsr.start_offset_s
    return DerivedSeries("gsr_tonic", rate, tonic, t0), DerivedSeries("gsr_phasic", rate, phasic, t0)


def universal_threshold(finest_detail: np.ndarray, n: int) -> float:
    sigma = np.median(np.abs(finest_detail)) / 0.6745
    return float(sigma * np.sqrt(2.0 * np.log(n)))


def wavelet_denoise(phasic: DerivedSeries, wavelet: str = "db4", levels: int = 5, threshold: float | None = None) -> DerivedSeries:
    """Soft-threshold the detail coefficients of a multi-level DWT.

    ``threshold=None`` uses the universal threshold with the noise level
    estimated from the finest details. Input is symmetrically extended to a
    multiple of ``2**levels`` and cropped back afterwards.
    """
    x = phasic.values
    n = len(x)
    block = 2**levels
    if n < block:
        raise TooShort(f"need at least {block} samples for {levels} levels, got {n}")
    padded_len = -(-n // block) * block
    xp = np.pad(x, (0, padded_len - n), mode="symmetric")
    coeffs = wv.wavedec(xp, wavelet, levels)
    thr = universal_threshold(coeffs[-1], n) if threshold is None else float(threshold)
    if thr > 0:
        coeffs = [coeffs[0]] + [wv.soft_threshold(d, thr) for d in coeffs[1:]]
    rec = wv.waverec(coeffs, wavelet)[:n]
    return phasic.with_values(rec, kind="gsr_phasic_denoised")


@dataclass(frozen=True, eq=False)
class PeakSet:
    times: np.ndarray
    amplitudes: np.ndarray
    widths: np.ndarray

    def __len__(self):
        return len(self.times)

    @classmethod
    def empty(cls) -> "PeakSet":
        z = np.zeros(0)
        return cls(z, z, z)


def detect_peaks(series: DerivedSeries, prominence_factor: float = 0.5, min_prominence: float = 0.0) -> PeakSet:
    """Local maxima whose prominence reaches ``prominence_factor`` x series std.

    ``min_prominence`` adds an absolute floor in series units, which keeps
    residual noise in response-free windows from counting as peaks.
    Amplitude is the peak prominence; width is measured at half prominence.
    """
    x = series.values
    if len(x) < 3:
        return PeakSet.empty()
    sd = float(np.std(x))
    if sd == 0.0:
        return PeakSet.empty()
    idx, props = sps.find_peaks(x, prominence=max(prominence_factor * sd, min_prominence))
    if len(idx) == 0:
        return PeakSet.empty()
    widths = sps.peak_widths(x, idx, rel_height=0.5, prominence_data=(
        props["prominences"], props["left_bases"], props["right_bases"]))[0]
    keep = (props["prominences"] > 0) & (widths > 0)
    idx = idx[keep]
    return PeakSet(
        series.start_offset_s + idx / series.rate_hz,
        props["prominences"][keep],
        widths[keep] / series.rate_hz,
    )


# --------------------------------------------------------------------------
# EMG


def emg_envelope(emg: RawTrace, window_s: float = 0.1) -> DerivedSeries:
    """Full-wave rectify, then a centred moving average truncated at the edges."""
    if emg.sensor_kind not in (SensorKind.EMG_CH1, SensorKind.EMG_CH2):
        raise ValueError(f"expected an EMG channel, got {emg.sensor_kind}")
    rate = emg.sampling_rate_hz
    half = max(1, int(round(window_s * rate)) // 2)
    n = len(emg)
    if n < 2 * half + 1:
        raise TooShort(f"{emg.sensor_kind}: need at least {2 * half + 1} samples, got {n}")
    rect = np.abs(emg.samples)
    cs = np.concatenate(([0.0], np.cumsum(rect)))
    i = np.arange(n)
    lo = np.maximum(i - half, 0)
    hi = np.minimum(i + half + 1, n)
    env = (cs[hi] - cs[lo]) / (hi - lo)
    kind = f"emg_envelope({emg.sensor_kind.value})"
    return DerivedSeries(kind, rate, np.maximum(env, 0.0), emg.start_offset_s)


# --------------------------------------------------------------------------
# baseline


def baseline_correct(series: DerivedSeries, baseline_window: tuple[float, float]) -> DerivedSeries:
    start, end = baseline_window
    if start < series.start_offset_s - 1e-9 or end > series.end_s + 1e-9:
        raise WindowOutOfRange(
            f"{series.kind}: baseline [{start}, {end}) outside series extent "
            f"[{series.start_offset_s}, {series.end_s})"
        )
    ref = series.window(start, end)
    if ref.size == 0:
        raise WindowOutOfRange(f"{series.kind}: baseline [{start}, {end}) holds no samples")
    return series.with_values(series.values - ref.mean())

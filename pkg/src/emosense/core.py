"""Domain types, trace/manifest ingestion, protocol segmentation and labels.

Times are session-relative seconds throughout. A trace sample ``i`` sits at
``start_offset_s + i / sampling_rate_hz``.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    MalformedManifest,
    MalformedTrace,
    MissingChannel,
    NonFinite,
    OutOfRange,
    RateMismatch,
    UnknownVideo,
)


class SensorKind(str, enum.Enum):
    EEG_RAW = "EEG_raw"
    EEG_ATTENTION = "EEG_attention"
    EEG_MEDITATION = "EEG_meditation"
    GSR = "GSR"
    EMG_CH1 = "EMG_ch1"
    EMG_CH2 = "EMG_ch2"

    def __str__(self):
        return self.value


#: nominal device rates (Hz) for each channel
EXPECTED_RATES = {
    SensorKind.EEG_RAW: 512.0,
    SensorKind.EEG_ATTENTION: 1.0,
    SensorKind.EEG_MEDITATION: 1.0,
    SensorKind.GSR: 128.0,
    SensorKind.EMG_CH1: 512.0,
    SensorKind.EMG_CH2: 512.0,
}

UNITS = {
    SensorKind.EEG_RAW: "uV",
    SensorKind.EEG_ATTENTION: "",
    SensorKind.EEG_MEDITATION: "",
    SensorKind.GSR: "uS",
    SensorKind.EMG_CH1: "mV",
    SensorKind.EMG_CH2: "mV",
}


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class RawTrace:
    """One uniformly sampled sensor channel."""

    sensor_kind: SensorKind
    sampling_rate_hz: float
    samples: np.ndarray
    start_offset_s: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "sensor_kind", SensorKind(self.sensor_kind))
        if not self.sampling_rate_hz > 0:
            raise ValueError(f"sampling rate must be positive, got {self.sampling_rate_hz}")
        if self.start_offset_s < 0:
            raise ValueError("start offset must be non-negative")
        samples = _frozen_array(self.samples)
        if samples.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if not np.all(np.isfinite(samples)):
            raise NonFinite(f"{self.sensor_kind}: trace contains NaN or Inf samples")
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return len(self.samples)

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sampling_rate_hz

    @property
    def units(self) -> str:
        return UNITS[self.sensor_kind]

    def replace_samples(self, samples) -> "RawTrace":
        return RawTrace(self.sensor_kind, self.sampling_rate_hz, samples, self.start_offset_s)


# --------------------------------------------------------------------------
# labels


class Label(str, enum.Enum):
    LOW = "Low"
    HIGH = "High"
    UNASSIGNED = "Unassigned"

    def __str__(self):
        return self.value


LOW_THRESHOLD = 4.5
HIGH_THRESHOLD = 6.0


def discretize_score(score: float) -> Label:
    """Map a 1-9 rating to Low (<= 4.5), High (>= 6) or Unassigned."""
    if not (1.0 <= score <= 9.0):
        raise OutOfRange(f"score {score} outside [1, 9]")
    if score <= LOW_THRESHOLD:
        return Label.LOW
    if score >= HIGH_THRESHOLD:
        return Label.HIGH
    return Label.UNASSIGNED


#: (arousal range, valence range) per emotion class, as printed for the stimulus set
CLASS_RANGES = {
    "LAHV": ((3.86, 4.21), (6.57, 7.13)),
    "LALV": ((2.75, 2.93), (3.25, 3.33)),
    "HAHV": ((6.40, 7.33), (7.07, 7.20)),
    "HALV": ((6.13, 6.33), (3.53, 3.93)),
}

CLASS_VIDEOS = {
    "LAHV": (24, 80),
    "LALV": (41, 96),
    "HAHV": (63, 88),
    "HALV": (56, 111),
}


@dataclass(frozen=True)
class VideoEntry:
    arousal_score: float
    valence_score: float
    emotion_class: str

    def __post_init__(self):
        if self.emotion_class not in CLASS_RANGES:
            raise ValueError(f"unknown emotion class {self.emotion_class!r}")
        (a_lo, a_hi), (v_lo, v_hi) = CLASS_RANGES[self.emotion_class]
        if not (a_lo <= self.arousal_score <= a_hi and v_lo <= self.valence_score <= v_hi):
            raise OutOfRange(
                f"scores ({self.arousal_score}, {self.valence_score}) outside the "
                f"{self.emotion_class} ranges"
            )

    @property
    def arousal(self) -> Label:
        return discretize_score(self.arousal_score)

    @property
    def valence(self) -> Label:
        return discretize_score(self.valence_score)


@dataclass(frozen=True)
class VideoLabelTable:
    entries: Mapping[int, VideoEntry]

    def __contains__(self, video_id):
        return video_id in self.entries

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, video_id) -> VideoEntry:
        try:
            return self.entries[video_id]
        except KeyError:
            raise UnknownVideo(f"video {video_id} not in label table") from None

    def labels(self, video_id) -> tuple[Label, Label]:
        entry = self[video_id]
        return entry.valence, entry.arousal

    @classmethod
    def default(cls) -> "VideoLabelTable":
        # only class ranges are known; each video gets its class midpoint
        entries = {}
        for name, videos in CLASS_VIDEOS.items():
            (a_lo, a_hi), (v_lo, v_hi) = CLASS_RANGES[name]
            for vid in videos:
                entries[vid] = VideoEntry((a_lo + a_hi) / 2, (v_lo + v_hi) / 2, name)
        return cls(entries)


DEFAULT_LABELS = VideoLabelTable.default()


def lookup_video_labels(video_id: int, table: VideoLabelTable = DEFAULT_LABELS) -> tuple[Label, Label]:
    """Return ``(valence, arousal)`` labels for a stimulus video."""
    return table.labels(video_id)


def default_video_order(table: VideoLabelTable = DEFAULT_LABELS) -> tuple[int, ...]:
    """Videos sorted by increasing arousal score (ties by id)."""
    return tuple(sorted(table, key=lambda v: (table[v].arousal_score, v)))


# --------------------------------------------------------------------------
# protocol timeline


@dataclass(frozen=True)
class ProtocolTimeline:
    """Trial layout: number screen, baseline clip, then the trial's videos."""

    trial_count: int = 4
    video_order: tuple[int, ...] = field(default_factory=default_video_order)
    trial_screen_s: float = 3.0
    baseline_s: float = 30.0
    video_s: float = 60.0
    videos_per_trial: int = 2

    def __post_init__(self):
        object.__setattr__(self, "video_order", tuple(int(v) for v in self.video_order))
        if self.trial_count < 1 or self.videos_per_trial < 1:
            raise ValueError("trial_count and videos_per_trial must be positive")
        if min(self.baseline_s, self.video_s) <= 0 or self.trial_screen_s < 0:
            raise ValueError("durations must be positive")
        if len(self.video_order) != self.trial_count * self.videos_per_trial:
            raise ValueError(
                f"video_order has {len(self.video_order)} entries, expected "
                f"{self.trial_count * self.videos_per_trial}"
            )
        if len(set(self.video_order)) != len(self.video_order):
            raise ValueError("video_order entries must be unique")

    @property
    def trial_duration_s(self) -> float:
        return self.trial_screen_s + self.baseline_s + self.videos_per_trial * self.video_s

    @property
    def total_duration_s(self) -> float:
        return self.trial_count * self.trial_duration_s

    def check_videos(self, table: VideoLabelTable) -> None:
        for vid in self.video_order:
            if vid not in table:
                raise UnknownVideo(f"video {vid} in video_order is not in the label table")


@dataclass(frozen=True)
class TrialSegment:
    trial_index: int
    baseline_window: tuple[float, float]
    video_windows: tuple[tuple[int, float, float], ...]

    def video_window(self, video_id: int) -> tuple[float, float]:
        for vid, start, end in self.video_windows:
            if vid == video_id:
                return start, end
        raise UnknownVideo(f"video {video_id} not in trial {self.trial_index}")


def segment_session(timeline: ProtocolTimeline) -> list[TrialSegment]:
    segments = []
    order = iter(timeline.video_order)
    # one running clock, so adjacent windows share bit-identical edges
    t = 0.0
    for k in range(timeline.trial_count):
        b0 = t + timeline.trial_screen_s
        b1 = b0 + timeline.baseline_s
        windows = []
        t = b1
        for _ in range(timeline.videos_per_trial):
            windows.append((next(order), t, t + timeline.video_s))
            t += timeline.video_s
        segments.append(TrialSegment(k + 1, (b0, b1), tuple(windows)))
    return segments


# --------------------------------------------------------------------------
# trace CSV


def _parse_header(line: str, path) -> dict[str, str]:
    if not line.startswith("#"):
        raise MalformedTrace(f"{path}: missing '# kind=... rate_hz=...' header")
    fields = {}
    for token in line[1:].split():
        key, sep, value = token.partition("=")
        if not sep:
            raise MalformedTrace(f"{path}: bad header token {token!r}")
        fields[key] = value
    if "kind" not in fields or "rate_hz" not in fields:
        raise MalformedTrace(f"{path}: header needs kind and rate_hz")
    return fields


def load_trace(path, sensor_kind) -> RawTrace:
    """Read a single-channel trace CSV and check it against ``sensor_kind``."""
    kind = SensorKind(sensor_kind)
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise MalformedTrace(f"{path} ({kind}): {exc}") from exc
    lines = text.splitlines()
    if not lines:
        raise MalformedTrace(f"{path} ({kind}): empty file")
    header = _parse_header(lines[0].strip(), path)
    if header["kind"] != kind.value:
        raise MalformedTrace(f"{path}: header kind {header['kind']!r} but expected {kind}")
    try:
        rate = float(header["rate_hz"])
    except ValueError:
        raise MalformedTrace(f"{path} ({kind}): bad rate {header['rate_hz']!r}") from None
    expected = EXPECTED_RATES[kind]
    if rate != expected:
        raise RateMismatch(f"{path} ({kind}): header rate {rate:g} Hz, expected {expected:g} Hz")
    body = [ln.strip() for ln in lines[1:] if ln.strip()]
    try:
        samples = np.array([float(v) for v in body], dtype=float)
    except ValueError as exc:
        raise MalformedTrace(f"{path} ({kind}): {exc}") from None
    if samples.size == 0:
        raise MalformedTrace(f"{path} ({kind}): no samples")
    if not np.all(np.isfinite(samples)):
        bad = int(np.flatnonzero(~np.isfinite(samples))[0]) + 2
        raise NonFinite(f"{path} ({kind}): non-finite sample on line {bad}")
    return RawTrace(kind, rate, samples)


def write_trace(path, trace: RawTrace, fmt: str = "%.9g") -> None:
    path = Path(path)
    header = f"kind={trace.sensor_kind.value} rate_hz={trace.sampling_rate_hz:g}"
    np.savetxt(path, trace.samples, fmt=fmt, header=header, comments="# ")


# --------------------------------------------------------------------------
# manifest


@dataclass(frozen=True)
class SessionManifest:
    subject_id: str
    channels: Mapping[SensorKind, Path]
    timeline: ProtocolTimeline
    session_start: datetime | None = None

    def load_traces(self, base_dir=None) -> dict[SensorKind, RawTrace]:
        base = Path(base_dir) if base_dir is not None else Path(".")
        out = {}
        for kind in SensorKind:
            p = self.channels[kind]
            out[kind] = load_trace(p if p.is_absolute() else base / p, kind)
        return out


def parse_manifest(text: str, table: VideoLabelTable = DEFAULT_LABELS) -> SessionManifest:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedManifest(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise MalformedManifest("manifest must be a JSON object")
    for key in ("subject_id", "channels", "timeline"):
        if key not in doc:
            raise MalformedManifest(f"missing key {key!r}")
    if not isinstance(doc["channels"], dict):
        raise MalformedManifest("'channels' must map sensor kind to path")

    channels = {}
    for name, p in doc["channels"].items():
        try:
            kind = SensorKind(name)
        except ValueError:
            raise MalformedManifest(f"unknown sensor kind {name!r}") from None
        if not isinstance(p, str):
            raise MalformedManifest(f"path for {name} must be a string")
        channels[kind] = Path(p)
    missing = [k.value for k in SensorKind if k not in channels]
    if missing:
        raise MissingChannel(f"manifest lacks channel(s): {', '.join(missing)}")

    tl = doc["timeline"]
    if not isinstance(tl, dict) or "trial_count" not in tl or "video_order" not in tl:
        raise MalformedManifest("timeline needs trial_count and video_order")
    extra = {k: tl[k] for k in ("trial_screen_s", "baseline_s", "video_s", "videos_per_trial") if k in tl}
    try:
        timeline = ProtocolTimeline(
            trial_count=int(tl["trial_count"]), video_order=tuple(tl["video_order"]), **extra
        )
    except (TypeError, ValueError) as exc:
        raise MalformedManifest(f"bad timeline: {exc}") from None
    timeline.check_videos(table)

    start = doc.get("session_start")
    if start is not None:
        try:
            start = datetime.fromisoformat(start)
        except (TypeError, ValueError):
            raise MalformedManifest(f"session_start {start!r} is not ISO-8601") from None
    return SessionManifest(str(doc["subject_id"]), channels, timeline, start)


def serialize_manifest(manifest: SessionManifest) -> str:
    tl = manifest.timeline
    timeline = {"trial_count": tl.trial_count, "video_order": list(tl.video_order)}
    defaults = ProtocolTimeline(trial_count=1, video_order=tl.video_order[: tl.videos_per_trial])
    for key in ("trial_screen_s", "baseline_s", "video_s", "videos_per_trial"):
        if getattr(tl, key) != getattr(defaults, key):
            timeline[key] = getattr(tl, key)
    doc = {
        "subject_id": manifest.subject_id,
        "channels": {k.value: manifest.channels[k].as_posix() for k in SensorKind},
        "timeline": timeline,
        "session_start": manifest.session_start.isoformat() if manifest.session_start else None,
    }
    return json.dumps(doc, indent=2)


def load_manifest(path, table: VideoLabelTable = DEFAULT_LABELS) -> SessionManifest:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise MalformedManifest(f"{path}: {exc}") from None
    return parse_manifest(text, table)


def expected_sample_count(duration_s: float, rate_hz: float) -> int:
    return int(math.floor(duration_s * rate_hz + 1e-9))

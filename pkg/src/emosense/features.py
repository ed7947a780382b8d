"""The 58-feature vector (35 EEG / 13 GSR / 10 EMG) and labelled datasets."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import Label
from .dsp import DerivedSeries, PeakSet
from .errors import DuplicateInstance, EmptyMask, EmptyWindow, MissingSeries

STAT_NAMES = ("mean", "min", "max", "var", "std")
EEG_SERIES = ("alpha", "beta", "gamma", "delta", "theta", "attention", "meditation")
EMG_CHANNELS = ("ch1", "ch2")

EEG_FEATURES = tuple(f"eeg_{s}_{st}" for s in EEG_SERIES for st in STAT_NAMES)
GSR_FEATURES = tuple(f"gsr_phasic_{st}" for st in STAT_NAMES) + (
    "gsr_deriv_mean",
    "gsr_deriv_neg_mean",
    "gsr_deriv_neg_frac",
    "gsr_peak_width_mean",
    "gsr_peak_width_min",
    "gsr_peak_width_max",
    "gsr_peak_count_per_min_width",
    "gsr_peak_amp_sum_per_min_width",
)
EMG_FEATURES = tuple(f"emg_{ch}_{st}" for ch in EMG_CHANNELS for st in STAT_NAMES)

BLOCKS = ("EEG", "GSR", "EMG")
BLOCK_FEATURES = {"EEG": EEG_FEATURES, "GSR": GSR_FEATURES, "EMG": EMG_FEATURES}
FEATURE_NAMES = EEG_FEATURES + GSR_FEATURES + EMG_FEATURES
META_COLUMNS = ("subject_id", "video_id", "valence", "arousal")


def summary_stats(values) -> tuple[float, float, float, float, float]:
    """(mean, min, max, population variance, std)."""
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        raise EmptyWindow("cannot summarise an empty window")
    mean = float(x.mean())
    var = float(np.mean((x - mean) ** 2))
    return mean, float(x.min()), float(x.max()), var, float(np.sqrt(var))


def _window_values(series: DerivedSeries, window) -> np.ndarray:
    vals = series.window(*window)
    if vals.size == 0:
        raise EmptyWindow(f"{series.kind}: no samples in [{window[0]}, {window[1]})")
    return vals


def eeg_features(series: Mapping[str, DerivedSeries], window: tuple[float, float]) -> np.ndarray:
    out = []
    for name in EEG_SERIES:
        if name not in series:
            raise MissingSeries(f"EEG series {name!r} missing")
        out.extend(summary_stats(_window_values(series[name], window)))
    return np.array(out)


def derivative_features(values: np.ndarray, rate_hz: float) -> tuple[float, float, float]:
    """Mean derivative, mean of negative derivatives, fraction negative."""
    d = np.diff(values) * rate_hz
    if d.size == 0:
        return 0.0, 0.0, 0.0
    neg = d[d < 0]
    return float(d.mean()), float(neg.mean()) if neg.size else 0.0, neg.size / d.size


def peak_features(peaks: PeakSet) -> tuple[float, float, float, float, float]:
    if len(peaks) == 0:
        return 0.0, 0.0, 0.0, 0.0, 0.0
    w = peaks.widths
    wmin = float(w.min())
    return float(w.mean()), wmin, float(w.max()), len(w) / wmin, float(peaks.amplitudes.sum()) / wmin


def gsr_features(phasic: DerivedSeries, denoised: DerivedSeries, peaks: PeakSet, window: tuple[float, float]) -> np.ndarray:
    """13 GSR features. ``peaks`` is filtered to those timed inside ``window``."""
    if phasic is None or denoised is None:
        raise MissingSeries("GSR phasic and denoised series are both required")
    stats = summary_stats(_window_values(phasic, window))
    deriv = derivative_features(_window_values(denoised, window), denoised.rate_hz)
    inside = (peaks.times >= window[0]) & (peaks.times < window[1])
    sub = PeakSet(peaks.times[inside], peaks.amplitudes[inside], peaks.widths[inside])
    return np.array(stats + deriv + peak_features(sub))


def emg_features(env_ch1: DerivedSeries, env_ch2: DerivedSeries, window: tuple[float, float]) -> np.ndarray:
    if env_ch1 is None or env_ch2 is None:
        raise MissingSeries("both EMG envelopes are required")
    return np.array(
        summary_stats(_window_values(env_ch1, window)) + summary_stats(_window_values(env_ch2, window))
    )


# --------------------------------------------------------------------------
# datasets


def normalize_mask(mask) -> tuple[str, ...]:
    """Canonical block tuple from a set, a tuple or an ``EEG+GSR`` string."""
    if isinstance(mask, str):
        mask = [m for m in mask.replace(",", "+").split("+") if m]
        if len(mask) == 1 and mask[0].lower() == "all":
            mask = list(BLOCKS)
    blocks = {m.upper() for m in mask}
    unknown = blocks - set(BLOCKS)
    if unknown:
        raise ValueError(f"unknown sensor block(s) {sorted(unknown)}")
    if not blocks:
        raise EmptyMask("sensor mask must not be empty")
    return tuple(b for b in BLOCKS if b in blocks)


def mask_name(mask) -> str:
    return "+".join(normalize_mask(mask))


def mask_dimension(mask) -> int:
    return sum(len(BLOCK_FEATURES[b]) for b in normalize_mask(mask))


#: the seven non-empty sensor combinations, in reporting order
ALL_MASKS = (
    ("EEG",),
    ("GSR",),
    ("EMG",),
    ("EEG", "GSR"),
    ("GSR", "EMG"),
    ("EEG", "EMG"),
    ("EEG", "GSR", "EMG"),
)


@dataclass(frozen=True, eq=False)
class LabeledInstance:
    subject_id: str
    video_id: int
    features: np.ndarray
    valence: Label
    arousal: Label

    def __post_init__(self):
        if Label.UNASSIGNED in (self.valence, self.arousal):
            raise ValueError("instances with an Unassigned label cannot enter a dataset")
        f = np.array(self.features, dtype=float)
        if not np.all(np.isfinite(f)):
            raise ValueError(f"{self.instance_id}: non-finite feature values")
        f.setflags(write=False)
        object.__setattr__(self, "features", f)

    @property
    def instance_id(self) -> str:
        return f"{self.subject_id}:{self.video_id}"

    def label(self, target: str) -> Label:
        if target not in ("valence", "arousal"):
            raise ValueError(f"target must be 'valence' or 'arousal', got {target!r}")
        return getattr(self, target)


@dataclass(frozen=True, eq=False)
class Dataset:
    instances: tuple[LabeledInstance, ...]
    mask: tuple[str, ...] = BLOCKS

    def __post_init__(self):
        object.__setattr__(self, "instances", tuple(self.instances))
        object.__setattr__(self, "mask", normalize_mask(self.mask))
        dim = mask_dimension(self.mask)
        seen = set()
        for inst in self.instances:
            if len(inst.features) != dim:
                raise ValueError(
                    f"{inst.instance_id}: {len(inst.features)} features, mask {mask_name(self.mask)} needs {dim}"
                )
            if inst.instance_id in seen:
                raise DuplicateInstance(f"instance {inst.instance_id} appears twice")
            seen.add(inst.instance_id)

    def __len__(self):
        return len(self.instances)

    @property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(n for b in self.mask for n in BLOCK_FEATURES[b])

    @cached_property
    def X(self) -> np.ndarray:
        if not self.instances:
            return np.zeros((0, mask_dimension(self.mask)))
        X = np.vstack([i.features for i in self.instances])
        X.setflags(write=False)
        return X

    @cached_property
    def ids(self) -> tuple[str, ...]:
        return tuple(i.instance_id for i in self.instances)

    @property
    def subjects(self) -> tuple[str, ...]:
        return tuple(i.subject_id for i in self.instances)

    def labels(self, target: str) -> list[Label]:
        return [i.label(target) for i in self.instances]

    def y(self, target: str) -> np.ndarray:
        """1 for High, 0 for Low."""
        return np.array([lab is Label.HIGH for lab in self.labels(target)], dtype=np.int64)

    def subset(self, indices: Iterable[int]) -> "Dataset":
        idx = [int(i) for i in indices]
        if len(set(idx)) != len(idx):
            raise DuplicateInstance("subset indices repeat")
        # rows of a validated dataset need no re-validation
        sub = object.__new__(Dataset)
        object.__setattr__(sub, "instances", tuple(self.instances[i] for i in idx))
        object.__setattr__(sub, "mask", self.mask)
        X = self.X[idx] if idx else np.zeros((0, self.X.shape[1]))
        X.setflags(write=False)
        sub.__dict__["X"] = X
        return sub


def build_dataset(sessions, mask=BLOCKS) -> Dataset:
    """Flatten per-session feature rows into a dataset.

    ``sessions`` yields objects with ``subject_id`` and ``rows``: a sequence of
    ``(video_id, features, valence, arousal)``. Rows with an Unassigned label
    are dropped.
    """
    instances = []
    seen = set()
    for sess in sessions:
        for video_id, feats, valence, arousal in sess.rows:
            key = (sess.subject_id, video_id)
            if key in seen:
                raise DuplicateInstance(f"subject {sess.subject_id} video {video_id} twice")
            seen.add(key)
            if Label.UNASSIGNED in (valence, arousal):
                continue
            instances.append(LabeledInstance(sess.subject_id, video_id, feats, valence, arousal))
    return project_sensors(Dataset(tuple(instances), BLOCKS), mask)


def _block_columns(source_mask: Sequence[str], target_mask: Sequence[str]) -> np.ndarray:
    cols, offset = [], 0
    for b in source_mask:
        n = len(BLOCK_FEATURES[b])
        if b in target_mask:
            cols.extend(range(offset, offset + n))
        offset += n
    return np.array(cols, dtype=int)


def project_sensors(dataset: Dataset, mask) -> Dataset:
    target = normalize_mask(mask)
    missing = set(target) - set(dataset.mask)
    if missing:
        raise ValueError(f"mask {mask_name(target)} not contained in dataset mask {mask_name(dataset.mask)}")
    if target == dataset.mask:
        return dataset
    cols = _block_columns(dataset.mask, target)
    insts = tuple(
        LabeledInstance(i.subject_id, i.video_id, i.features[cols], i.valence, i.arousal)
        for i in dataset.instances
    )
    return Dataset(insts, target)


# --------------------------------------------------------------------------
# CSV export


def _fmt(v: float) -> str:
    return repr(float(v))


def write_feature_csv(path, dataset: Dataset) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(dataset.feature_names) + list(META_COLUMNS))
        for inst in dataset.instances:
            w.writerow([_fmt(v) for v in inst.features] + [inst.subject_id, inst.video_id, inst.valence.value, inst.arousal.value])


def read_feature_csv(path) -> Dataset:
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty feature file")
    header = rows[0]
    if tuple(header[-4:]) != META_COLUMNS:
        raise ValueError(f"{path}: last columns must be {', '.join(META_COLUMNS)}")
    names = tuple(header[:-4])
    blocks = tuple(b for b in BLOCKS if set(BLOCK_FEATURES[b]) & set(names))
    mask = normalize_mask(blocks)
    expected = tuple(n for b in mask for n in BLOCK_FEATURES[b])
    if names != expected:
        raise ValueError(f"{path}: feature columns are not in canonical order")
    insts = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ValueError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        feats = [float(v) for v in row[:-4]]
        sid, vid, val, aro = row[-4:]
        insts.append(LabeledInstance(sid, int(vid), feats, Label(val), Label(aro)))
    return Dataset(tuple(insts), mask)

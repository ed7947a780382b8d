"""Emotion recognition from wearable EEG, GSR and EMG signals.

Raw traces are cleaned and decomposed (``dsp``), summarised into a 58-feature
vector per video (``features``), and classified as Low/High valence and
arousal by naive Bayes, a C4.5-style tree or an SMO-trained SVM
(``classify``), evaluated leave-one-out (``evaluate``).
"""

from .core import Label, ProtocolTimeline, RawTrace, SensorKind, VideoLabelTable
from .errors import EmosenseError
from .features import FEATURE_NAMES, Dataset, build_dataset, project_sensors
from .pipeline import extract_session

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "EmosenseError",
    "FEATURE_NAMES",
    "Label",
    "ProtocolTimeline",
    "RawTrace",
    "SensorKind",
    "VideoLabelTable",
    "build_dataset",
    "extract_session",
    "project_sensors",
]

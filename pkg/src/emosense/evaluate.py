"""Leave-one-out evaluation, macro-averaged metrics and McNemar comparisons."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import stats

from .classify import ClassifierSpec, Model, train
from .core import Label
from .errors import EmptyDataset, InstanceMismatch
from .features import ALL_MASKS, Dataset, mask_name, project_sensors

TARGETS = ("valence", "arousal")


@dataclass(frozen=True)
class FoldPrediction:
    instance_id: str
    gold: Label
    predicted: Label
    score: float
    tie: bool = False


@dataclass(frozen=True)
class FoldPredictions:
    records: tuple[FoldPrediction, ...]

    def __post_init__(self):
        ids = [r.instance_id for r in self.records]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate instance ids in fold predictions")

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __add__(self, other: "FoldPredictions") -> "FoldPredictions":
        return FoldPredictions(self.records + other.records)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(r.instance_id for r in self.records)

    def correct(self) -> dict[str, bool]:
        return {r.instance_id: r.gold == r.predicted for r in self.records}


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class EvaluationReport:
    confusion: np.ndarray  # rows gold, cols predicted, order (Low, High)
    per_class: dict[str, ClassMetrics]
    precision: float
    recall: float
    f1: float
    predictions: FoldPredictions | None = None

    @property
    def accuracy(self) -> float:
        return float(np.trace(self.confusion) / self.confusion.sum())

    def to_dict(self) -> dict:
        return {
            "confusion": self.confusion.tolist(),
            "per_class": {k: vars(v) for k, v in self.per_class.items()},
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
        }


_ORDER = (Label.LOW, Label.HIGH)


def confusion_matrix(predictions: Iterable[FoldPrediction]) -> np.ndarray:
    cm = np.zeros((2, 2), dtype=int)
    for r in predictions:
        cm[_ORDER.index(r.gold), _ORDER.index(r.predicted)] += 1
    return cm


def _ratio(num, den):
    return num / den if den else 0.0


def metrics_from_confusion(cm, predictions: FoldPredictions | None = None) -> EvaluationReport:
    """Per-class and macro P/R/F1. Zero denominators give 0."""
    cm = np.asarray(cm, dtype=int)
    per_class = {}
    for k, label in enumerate(_ORDER):
        tp = cm[k, k]
        p = _ratio(tp, cm[:, k].sum())
        r = _ratio(tp, cm[k, :].sum())
        f = _ratio(2 * p * r, p + r)
        per_class[label.value] = ClassMetrics(float(p), float(r), float(f))
    vals = list(per_class.values())
    return EvaluationReport(
        cm,
        per_class,
        float(np.mean([m.precision for m in vals])),
        float(np.mean([m.recall for m in vals])),
        float(np.mean([m.f1 for m in vals])),
        predictions,
    )


def macro_metrics(predictions: FoldPredictions) -> EvaluationReport:
    if len(predictions) == 0:
        raise EmptyDataset("no predictions to score")
    return metrics_from_confusion(confusion_matrix(predictions), predictions)


# --------------------------------------------------------------------------
# leave-one-out


def loo_folds(dataset: Dataset, mode: str = "instance") -> list[np.ndarray]:
    """Held-out index sets: one per instance, or one per subject."""
    n = len(dataset)
    if mode == "instance":
        return [np.array([i]) for i in range(n)]
    if mode == "subject":
        subjects = dataset.subjects
        order = list(dict.fromkeys(subjects))
        return [np.array([i for i, s in enumerate(subjects) if s == sub]) for sub in order]
    raise ValueError(f"unknown LOO mode {mode!r}")


FoldHook = Callable[[np.ndarray, Dataset, Model], None]


def loo_predictions(
    spec: ClassifierSpec,
    dataset: Dataset,
    target: str,
    mode: str = "instance",
    on_fold: FoldHook | None = None,
) -> FoldPredictions:
    """Train on all-but-the-fold, predict the held-out rows.

    ``on_fold(test_idx, train_set, model)`` is called after each fold, which
    lets callers audit exactly what each model saw.
    """
    if len(dataset) < 2:
        raise EmptyDataset(f"leave-one-out needs at least 2 instances, got {len(dataset)}")
    folds = loo_folds(dataset, mode)
    gold = dataset.labels(target)
    X = dataset.X
    out: dict[int, FoldPrediction] = {}
    everything = np.arange(len(dataset))
    for test in folds:
        keep = np.setdiff1d(everything, test)
        train_set = dataset.subset(keep)
        model = train(spec, train_set, target)
        if on_fold is not None:
            on_fold(test, train_set, model)
        high, score, tie = model.decide(X[test])
        for j, i in enumerate(test):
            out[int(i)] = FoldPrediction(
                dataset.ids[i], gold[i], Label.HIGH if high[j] else Label.LOW, float(score[j]), bool(tie[j])
            )
    return FoldPredictions(tuple(out[i] for i in range(len(dataset))))


def loo_evaluate(spec: ClassifierSpec, dataset: Dataset, target: str, mode: str = "instance", on_fold: FoldHook | None = None) -> EvaluationReport:
    return macro_metrics(loo_predictions(spec, dataset, target, mode, on_fold))


# --------------------------------------------------------------------------
# McNemar


@dataclass(frozen=True)
class McNemarResult:
    b: int  # A correct, B wrong
    c: int  # A wrong, B correct
    statistic: float
    p_value: float
    method: str  # "chi_square_cc" or "exact_binomial"


def mcnemar_counts(b: int, c: int, method: str | None = None) -> McNemarResult:
    """McNemar test from discordant counts.

    ``statistic`` is always the continuity-corrected chi-square value; the
    p-value comes from ``method``, which defaults to the exact binomial test
    when ``b + c < 25``.
    """
    if b < 0 or c < 0:
        raise ValueError("discordant counts must be non-negative")
    n = b + c
    if method is None:
        method = "chi_square_cc" if n >= 25 else "exact_binomial"
    if method not in ("chi_square_cc", "exact_binomial"):
        raise ValueError(f"unknown McNemar method {method!r}")
    if n == 0:
        return McNemarResult(b, c, 0.0, 1.0, method)
    statistic = max(abs(b - c) - 1, 0) ** 2 / n
    if method == "chi_square_cc":
        p = float(stats.chi2.sf(statistic, 1))
    else:
        p = float(min(1.0, 2.0 * stats.binom.cdf(min(b, c), n, 0.5)))
    return McNemarResult(b, c, float(statistic), p, method)


def mcnemar_test(preds_a: FoldPredictions, preds_b: FoldPredictions, method: str | None = None) -> McNemarResult:
    gold_a = {r.instance_id: r.gold for r in preds_a}
    gold_b = {r.instance_id: r.gold for r in preds_b}
    if gold_a != gold_b:
        raise InstanceMismatch("prediction sets cover different instances or gold labels")
    ca, cb = preds_a.correct(), preds_b.correct()
    b = sum(ca[i] and not cb[i] for i in ca)
    c = sum(cb[i] and not ca[i] for i in ca)
    return mcnemar_counts(b, c, method)


# --------------------------------------------------------------------------
# comparison grid

#: published (precision, recall, F1) of the best learner per setting
REFERENCE_RESULTS = {
    ("EEG", "arousal"): (("svm",), (0.605, 0.605, 0.605)),
    ("GSR", "arousal"): (("tree",), (0.671, 0.645, 0.630)),
    ("EMG", "arousal"): (("nb",), (0.315, 0.316, 0.315)),
    ("EEG+GSR", "arousal"): (("svm",), (0.639, 0.638, 0.638)),
    ("GSR+EMG", "arousal"): (("tree",), (0.653, 0.618, 0.596)),
    ("EEG+EMG", "arousal"): (("svm", "tree"), (0.619, 0.618, 0.618)),
    ("EEG+GSR+EMG", "arousal"): (("svm",), (0.606, 0.605, 0.605)),
    ("EEG", "valence"): (("svm",), (0.567, 0.566, 0.563)),
    ("GSR", "valence"): (("nb",), (0.585, 0.507, 0.359)),
    ("EMG", "valence"): (("tree",), (0.748, 0.599, 0.527)),
    ("EEG+GSR", "valence"): (("svm",), (0.553, 0.553, 0.551)),
    ("GSR+EMG", "valence"): (("tree",), (0.540, 0.539, 0.539)),
    ("EEG+EMG", "valence"): (("svm",), (0.559, 0.559, 0.559)),
    ("EEG+GSR+EMG", "valence"): (("svm",), (0.586, 0.586, 0.585)),
}

#: significance statements reported alongside the published grid (not recomputable)
REFERENCE_NOTES = (
    "arousal: GSR vs EEG, McNemar p = 0.001",
    "arousal: EEG+GSR vs GSR, McNemar p = 0.001",
    "valence: EEG+GSR+EMG vs EEG, McNemar p = 0.42",
)

#: earlier per-subject benchmark vs this pipeline's published cross-subject F1
HISTORICAL_CONTEXT = (
    {"signals": "EEG", "study": "cross-subject (this pipeline)", "arousal": ("SVM", 0.605), "valence": ("SMO", 0.563)},
    {"signals": "EEG", "study": "per-subject DEAP", "arousal": ("NB", 0.583), "valence": ("NB", 0.563)},
    {"signals": "GSR+EMG", "study": "cross-subject (this pipeline)", "arousal": ("J48", 0.596), "valence": ("J48", 0.539)},
    {"signals": "GSR+EMG+resp+BP+EOG", "study": "per-subject DEAP", "arousal": ("NB", 0.553), "valence": ("NB", 0.608)},
)


def reference_f1(mask, algorithm: str, target: str) -> float | None:
    entry = REFERENCE_RESULTS.get((mask_name(mask), target))
    if entry is None or algorithm not in entry[0]:
        return None
    return entry[1][2]


@dataclass
class GridCell:
    mask: str
    classifier: str
    target: str
    report: EvaluationReport
    reference_f1: float | None
    best: bool = False
    mcnemar_vs_best: McNemarResult | None = None

    def row(self) -> dict:
        m = self.mcnemar_vs_best
        return {
            "mask": self.mask,
            "classifier": self.classifier,
            "target": self.target,
            "precision": self.report.precision,
            "recall": self.report.recall,
            "f1": self.report.f1,
            "reference_f1": self.reference_f1,
            "best": self.best,
            "mcnemar_b": m.b if m else None,
            "mcnemar_c": m.c if m else None,
            "mcnemar_p": m.p_value if m else None,
        }


@dataclass
class ComparisonGrid:
    cells: list[GridCell]
    mode: str = "instance"
    config: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.cells)

    def best(self, target: str) -> GridCell:
        for c in self.cells:
            if c.target == target and c.best:
                return c
        raise KeyError(f"no cells for target {target!r}")

    def cell(self, mask, classifier: str, target: str) -> GridCell:
        name = mask_name(mask)
        for c in self.cells:
            if (c.mask, c.classifier, c.target) == (name, classifier, target):
                return c
        raise KeyError((name, classifier, target))

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "config": self.config,
            "cells": [
                {**c.row(), "confusion": c.report.confusion.tolist(),
                 "per_class": {k: vars(v) for k, v in c.report.per_class.items()},
                 "mcnemar_method": c.mcnemar_vs_best.method if c.mcnemar_vs_best else None,
                 "mcnemar_statistic": c.mcnemar_vs_best.statistic if c.mcnemar_vs_best else None}
                for c in self.cells
            ],
            "reference": {
                "table": [
                    {"mask": m, "target": t, "classifiers": list(cl), "precision": p, "recall": r, "f1": f}
                    for (m, t), (cl, (p, r, f)) in REFERENCE_RESULTS.items()
                ],
                "notes": list(REFERENCE_NOTES),
                "historical": [
                    {**h, "arousal": list(h["arousal"]), "valence": list(h["valence"])} for h in HISTORICAL_CONTEXT
                ],
            },
        }

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def write_csv(self, path) -> None:
        cols = ["mask", "classifier", "target", "precision", "recall", "f1", "reference_f1", "best", "mcnemar_b", "mcnemar_c", "mcnemar_p"]
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=cols)
            w.writeheader()
            for c in self.cells:
                w.writerow({k: ("" if v is None else v) for k, v in c.row().items()})


def run_comparison(
    dataset: Dataset,
    targets: Sequence[str] = TARGETS,
    specs: Sequence[ClassifierSpec] | None = None,
    masks=ALL_MASKS,
    mode: str = "instance",
    config: dict | None = None,
) -> ComparisonGrid:
    """LOO every mask x classifier x target; flag the best F1 per target and
    test it against every other setting with McNemar."""
    if specs is None:
        specs = [ClassifierSpec(a) for a in ("nb", "tree", "svm")]
    cells, preds = [], {}
    for target in targets:
        for mask in masks:
            sub = project_sensors(dataset, mask)
            for spec in specs:
                fp = loo_predictions(spec, sub, target, mode)
                cell = GridCell(mask_name(mask), spec.algorithm, target, macro_metrics(fp),
                                reference_f1(mask, spec.algorithm, target))
                cells.append(cell)
                preds[id(cell)] = fp
    for target in targets:
        group = [c for c in cells if c.target == target]
        # first cell in canonical order wins ties
        best = max(group, key=lambda c: (c.report.f1, -group.index(c)))
        best.best = True
        for c in group:
            if c is not best:
                c.mcnemar_vs_best = mcnemar_test(preds[id(best)], preds[id(c)])
    return ComparisonGrid(cells, mode, config or {})

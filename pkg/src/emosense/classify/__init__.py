"""Uniform train/predict interface over naive Bayes, C4.5 tree and SMO-SVM."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import DimensionMismatch, EmptyDataset, SingleClass
from ..features import Dataset, mask_dimension, normalize_mask
from .base import CLASSES, Model, Prediction
from .nb import NBModel, fit_nb
from .spec import ALGORITHMS, DEFAULT_PARAMS, DISPLAY_NAMES, ClassifierSpec, canonical_algorithm
from .svm import Normalizer, SVMModel, fit_svm, kkt_violations
from .tree import TreeModel, fit_tree

__all__ = [
    "ALGORITHMS",
    "CLASSES",
    "ClassifierSpec",
    "DEFAULT_PARAMS",
    "DISPLAY_NAMES",
    "Model",
    "NBModel",
    "Prediction",
    "SVMModel",
    "TreeModel",
    "canonical_algorithm",
    "kkt_violations",
    "load_model",
    "model_from_dict",
    "model_to_dict",
    "predict",
    "save_model",
    "train",
]


def train(spec: ClassifierSpec, dataset: Dataset, target: str) -> Model:
    """Fit ``spec`` on ``dataset`` to predict ``target`` (valence or arousal)."""
    if len(dataset) == 0:
        raise EmptyDataset("cannot train on an empty dataset")
    X = np.asarray(dataset.X, dtype=float)
    y = dataset.y(target)
    common = dict(spec=spec, target=target, mask=dataset.mask, instance_ids=dataset.ids)
    p = spec.params
    if spec.algorithm == "nb":
        priors, means, variances = fit_nb(X, y, p["variance_floor"])
        return NBModel(**common, priors=priors, means=means, variances=variances)
    if spec.algorithm == "tree":
        feature, threshold, left, right, counts = fit_tree(X, y, p["min_leaf"], p["confidence"], p["pruning"])
        return TreeModel(**common, feature=feature, threshold=threshold, left=left, right=right,
                         counts=counts, dim=X.shape[1])
    if len(np.unique(y)) < 2:
        raise SingleClass(f"SVM needs both classes for target {target}")
    norm, Z, ys, alpha, bias, converged, _ = fit_svm(
        X, y, p["C"], p["kernel_exponent"], p["tolerance"], p["max_steps"]
    )
    sv = alpha > 0
    return SVMModel(**common, support_vectors=Z[sv], coef=alpha[sv] * ys[sv], alphas=alpha[sv],
                    labels=ys[sv], bias=float(bias), normalizer=norm, converged=bool(converged))


def predict(model: Model, features) -> Prediction:
    x = np.asarray(features, dtype=float)
    if x.ndim != 1:
        raise DimensionMismatch("predict takes a single feature vector")
    return model.predict(x)


# --------------------------------------------------------------------------
# JSON serialisation


def model_to_dict(model: Model) -> dict:
    d = {
        "algorithm": model.spec.algorithm,
        "hyperparameters": dict(model.spec.params),
        "target": model.target,
        "mask": list(model.mask),
        "training_instances": list(model.instance_ids),
    }
    if isinstance(model, NBModel):
        d["parameters"] = {
            "priors": model.priors.tolist(),
            "means": model.means.tolist(),
            "variances": model.variances.tolist(),
        }
    elif isinstance(model, TreeModel):
        d["parameters"] = {
            "n_features": model.dim,
            "feature": model.feature.tolist(),
            "threshold": model.threshold.tolist(),
            "left": model.left.tolist(),
            "right": model.right.tolist(),
            "counts": model.counts.tolist(),
        }
    else:
        d["parameters"] = {
            "support_vectors": model.support_vectors.tolist(),
            "alphas": model.alphas.tolist(),
            "labels": model.labels.tolist(),
            "bias": model.bias,
            "normalization": {"min": model.normalizer.minimum.tolist(), "scale": model.normalizer.scale.tolist()},
            "converged": model.converged,
        }
    return d


def model_from_dict(d: dict) -> Model:
    spec = ClassifierSpec(d["algorithm"], d["hyperparameters"])
    common = dict(spec=spec, target=d["target"], mask=normalize_mask(d["mask"]),
                  instance_ids=tuple(d.get("training_instances", ())))
    p = d["parameters"]
    if spec.algorithm == "nb":
        return NBModel(**common, priors=np.array(p["priors"]), means=np.array(p["means"], dtype=float),
                       variances=np.array(p["variances"], dtype=float))
    if spec.algorithm == "tree":
        return TreeModel(**common, feature=np.array(p["feature"], dtype=int),
                         threshold=np.array(p["threshold"], dtype=float), left=np.array(p["left"], dtype=int),
                         right=np.array(p["right"], dtype=int), counts=np.array(p["counts"], dtype=int).reshape(-1, 2),
                         dim=int(p["n_features"]))
    dim = mask_dimension(common["mask"])
    alphas = np.array(p["alphas"], dtype=float)
    labels = np.array(p["labels"], dtype=float)
    norm = Normalizer(np.array(p["normalization"]["min"], dtype=float), np.array(p["normalization"]["scale"], dtype=float))
    return SVMModel(**common, support_vectors=np.array(p["support_vectors"], dtype=float).reshape(-1, dim),
                    coef=alphas * labels, alphas=alphas, labels=labels, bias=float(p["bias"]),
                    normalizer=norm, converged=bool(p.get("converged", True)))


def save_model(model: Model, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=1))


def load_model(path) -> Model:
    return model_from_dict(json.loads(Path(path).read_text()))

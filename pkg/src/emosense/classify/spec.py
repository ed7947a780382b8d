from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping

ALGORITHMS = ("nb", "tree", "svm")

_ALIASES = {"nb": "nb", "naivebayes": "nb", "tree": "tree", "j48": "tree", "svm": "svm", "smo": "svm"}

DEFAULT_PARAMS = {
    "nb": {"variance_floor": 1e-9},
    "tree": {"confidence": 0.25, "min_leaf": 2, "pruning": True},
    "svm": {"C": 1.0, "kernel_exponent": 1.0, "tolerance": 1e-3, "max_steps": 1_000_000},
}

#: how each algorithm is labelled in reports
DISPLAY_NAMES = {"nb": "NB", "tree": "J48", "svm": "SVM"}


def canonical_algorithm(name: str) -> str:
    try:
        return _ALIASES[name.lower()]
    except KeyError:
        raise ValueError(f"unknown classifier {name!r}; choose nb, tree or svm") from None


@dataclass(frozen=True)
class ClassifierSpec:
    algorithm: str
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        algo = canonical_algorithm(self.algorithm)
        defaults = DEFAULT_PARAMS[algo]
        unknown = set(self.params) - set(defaults)
        if unknown:
            raise ValueError(f"unknown {algo} hyperparameter(s): {sorted(unknown)}")
        merged = {**defaults, **self.params}
        _check(algo, merged)
        object.__setattr__(self, "algorithm", algo)
        object.__setattr__(self, "params", merged)

    def __getitem__(self, key):
        return self.params[key]

    @property
    def display_name(self) -> str:
        return DISPLAY_NAMES[self.algorithm]

    def to_dict(self) -> dict:
        return {"algorithm": self.algorithm, "params": dict(self.params)}


def _check(algo: str, p: dict) -> None:
    if algo == "nb":
        if not p["variance_floor"] > 0:
            raise ValueError("variance_floor must be positive")
    elif algo == "tree":
        if not 0 < p["confidence"] <= 0.5:
            raise ValueError("confidence must lie in (0, 0.5]")
        if int(p["min_leaf"]) != p["min_leaf"] or p["min_leaf"] < 1:
            raise ValueError("min_leaf must be a positive integer")
        p["min_leaf"] = int(p["min_leaf"])
        p["pruning"] = bool(p["pruning"])
    else:
        for key in ("C", "kernel_exponent", "tolerance"):
            if not p[key] > 0:
                raise ValueError(f"{key} must be positive")
        if p["max_steps"] < 1:
            raise ValueError("max_steps must be positive")

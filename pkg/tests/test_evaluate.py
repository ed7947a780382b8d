import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from emosense.classify import ClassifierSpec
from emosense.core import Label, lookup_video_labels
from emosense.errors import EmptyDataset, InstanceMismatch
from emosense.evaluate import (
    REFERENCE_RESULTS,
    FoldPrediction,
    FoldPredictions,
    confusion_matrix,
    loo_folds,
    loo_predictions,
    macro_metrics,
    mcnemar_counts,
    mcnemar_test,
    metrics_from_confusion,
    reference_f1,
    run_comparison,
)
from emosense.features import ALL_MASKS, Dataset, LabeledInstance, build_dataset, project_sensors

L, H = Label.LOW, Label.HIGH
VIDEOS = (24, 80, 41, 96, 63, 88, 56, 111)


class Sess:
    def __init__(self, sid, rng):
        self.subject_id = sid
        self.rows = tuple((v, rng.normal(size=58), *lookup_video_labels(v)) for v in VIDEOS)


def random_dataset(subjects=4, seed=0):
    rng = np.random.default_rng(seed)
    return build_dataset([Sess(f"S{k:02d}", rng) for k in range(subjects)])


def preds_from_cm(cm, prefix="i"):
    recs, k = [], 0
    for gi, g in enumerate((L, H)):
        for pi, p in enumerate((L, H)):
            for _ in range(cm[gi][pi]):
                recs.append(FoldPrediction(f"{prefix}{k}", g, p, 1.0))
                k += 1
    return FoldPredictions(tuple(recs))


# --------------------------------------------------------------------------
# metrics


def test_hand_confusion_metrics():
    rep = macro_metrics(preds_from_cm([[40, 10], [20, 30]]))
    np.testing.assert_array_equal(rep.confusion, [[40, 10], [20, 30]])
    # Low: P 40/60, R 40/50; High: P 30/40, R 30/50
    p_low, r_low, p_high, r_high = 40 / 60, 40 / 50, 30 / 40, 30 / 50
    f_low = 2 * p_low * r_low / (p_low + r_low)
    f_high = 2 * p_high * r_high / (p_high + r_high)
    assert rep.precision == pytest.approx((p_low + p_high) / 2, abs=1e-12)
    assert rep.recall == pytest.approx(0.7, abs=1e-12)
    assert rep.f1 == pytest.approx((f_low + f_high) / 2, abs=1e-12)
    assert rep.precision == pytest.approx(0.7083, abs=1e-4)
    assert rep.f1 == pytest.approx(0.6970, abs=1e-4)
    assert rep.accuracy == pytest.approx(0.7)


def test_zero_denominators():
    rep = metrics_from_confusion([[5, 0], [5, 0]])
    assert rep.per_class["High"].precision == 0.0 and rep.per_class["High"].f1 == 0.0
    assert rep.recall == pytest.approx(0.5)


def test_empty_predictions():
    with pytest.raises(EmptyDataset):
        macro_metrics(FoldPredictions(()))


cms = st.lists(st.integers(0, 50), min_size=4, max_size=4).filter(lambda v: sum(v) > 0)


@given(cms, cms)
def test_concatenation_sums_confusions(a, b):
    pa = preds_from_cm([a[:2], a[2:]], "a")
    pb = preds_from_cm([b[:2], b[2:]], "b")
    np.testing.assert_array_equal(macro_metrics(pa + pb).confusion, np.add([a[:2], a[2:]], [b[:2], b[2:]]))


@given(cms)
def test_label_swap_keeps_macro(v):
    cm = np.array([v[:2], v[2:]])
    swapped = cm[::-1, ::-1]
    a, b = metrics_from_confusion(cm), metrics_from_confusion(swapped)
    assert (a.precision, a.recall, a.f1) == pytest.approx((b.precision, b.recall, b.f1), abs=1e-12)
    assert 0 <= a.f1 <= 1


def test_duplicate_prediction_ids():
    r = FoldPrediction("x", L, L, 1.0)
    with pytest.raises(ValueError):
        FoldPredictions((r, r))


# --------------------------------------------------------------------------
# McNemar


def exact_two_sided(b, c):
    n = b + c
    return min(1.0, 2 * sum(math.comb(n, k) for k in range(min(b, c) + 1)) / 2**n)


def test_mcnemar_5_15():
    res = mcnemar_counts(5, 15)
    assert res.statistic == 4.05
    assert res.method == "exact_binomial"
    assert res.p_value == pytest.approx(exact_two_sided(5, 15), rel=1e-12)
    cc = mcnemar_counts(5, 15, method="chi_square_cc")
    assert cc.statistic == 4.05
    assert cc.p_value == pytest.approx(math.erfc(math.sqrt(4.05 / 2)), rel=1e-9)


def test_mcnemar_0_30():
    res = mcnemar_counts(0, 30)
    assert res.statistic == pytest.approx(29**2 / 30)
    assert res.statistic == pytest.approx(28.03, abs=5e-3)
    assert res.method == "chi_square_cc" and res.p_value < 0.001


def test_mcnemar_no_discordance():
    assert mcnemar_counts(0, 0).p_value == 1.0
    assert mcnemar_counts(0, 0, method="chi_square_cc").p_value == 1.0


@given(st.integers(0, 200), st.integers(0, 200))
def test_mcnemar_symmetric(b, c):
    x, y = mcnemar_counts(b, c), mcnemar_counts(c, b)
    assert x.statistic == y.statistic and x.p_value == pytest.approx(y.p_value, rel=1e-12)
    assert 0 <= x.p_value <= 1


def test_mcnemar_from_predictions():
    gold = [L, H, L, H, L, H]
    a = FoldPredictions(tuple(FoldPrediction(f"i{k}", g, g, 1.0) for k, g in enumerate(gold)))
    flip = {L: H, H: L}
    b = FoldPredictions(tuple(FoldPrediction(f"i{k}", g, flip[g] if k < 4 else g, 1.0) for k, g in enumerate(gold)))
    res = mcnemar_test(a, b)
    assert (res.b, res.c) == (4, 0)
    with pytest.raises(InstanceMismatch):
        mcnemar_test(a, FoldPredictions(a.records[:5]))


# --------------------------------------------------------------------------
# leave-one-out


def test_loo_fold_counts():
    ds = random_dataset(3)
    folds = loo_folds(ds)
    assert len(folds) == 24 and sorted(int(f[0]) for f in folds) == list(range(24))
    by_subject = loo_folds(ds, "subject")
    assert len(by_subject) == 3 and all(len(f) == 8 for f in by_subject)
    with pytest.raises(ValueError):
        loo_folds(ds, "kfold")


@pytest.mark.parametrize("mode", ["instance", "subject"])
def test_every_instance_predicted_once(mode):
    ds = project_sensors(random_dataset(3), "GSR")
    preds = loo_predictions(ClassifierSpec("nb"), ds, "arousal", mode)
    assert preds.ids == ds.ids
    assert [r.gold for r in preds] == list(ds.labels("arousal"))


def test_majority_class_is_always_wrong():
    # constant features: NB falls back on the prior, which the held-out row tips
    insts = [LabeledInstance(f"S{k:03d}", 24, np.zeros(10), L, L if k % 2 else H) for k in range(152)]
    ds = Dataset(tuple(insts), ("EMG",))
    rep = macro_metrics(loo_predictions(ClassifierSpec("nb"), ds, "arousal"))
    assert rep.accuracy == 0.0


@pytest.mark.parametrize("algo", ["nb", "tree", "svm"])
def test_no_leakage(algo):
    ds = project_sensors(random_dataset(2, seed=3), "EMG")
    seen = []

    def audit(test, train_set, model):
        held = {ds.ids[i] for i in test}
        assert held.isdisjoint(model.instance_ids)
        assert held.isdisjoint(train_set.ids)
        assert len(model.instance_ids) == len(ds) - len(test)
        if algo == "svm":
            np.testing.assert_array_equal(model.normalizer.minimum, train_set.X.min(axis=0))
            span = train_set.X.max(axis=0) - train_set.X.min(axis=0)
            np.testing.assert_allclose(model.normalizer.scale, 1 / span)
        seen.extend(int(i) for i in test)

    loo_predictions(ClassifierSpec(algo), ds, "valence", on_fold=audit)
    assert sorted(seen) == list(range(len(ds)))


def test_normaliser_differs_from_full_data():
    # the held-out extreme row must not shape the scaling
    ds = project_sensors(random_dataset(2, seed=5), "EMG")
    extreme = int(np.argmax(ds.X[:, 0]))
    maxima = {}

    def audit(test, train_set, model):
        maxima[int(test[0])] = model.normalizer.minimum[0] + 1 / model.normalizer.scale[0]

    loo_predictions(ClassifierSpec("svm"), ds, "arousal", on_fold=audit)
    assert maxima[extreme] < ds.X[extreme, 0]


def test_loo_too_small():
    ds = project_sensors(random_dataset(1), "EMG").subset([0])
    with pytest.raises(EmptyDataset):
        loo_predictions(ClassifierSpec("nb"), ds, "arousal")


# --------------------------------------------------------------------------
# comparison grid


def test_reference_constants():
    assert reference_f1("EEG+GSR", "svm", "arousal") == 0.638
    assert reference_f1("GSR", "tree", "arousal") == 0.630
    assert reference_f1(("EEG", "GSR", "EMG"), "svm", "valence") == 0.585
    assert reference_f1("GSR", "svm", "arousal") is None
    assert len(REFERENCE_RESULTS) == 14


def test_full_grid_structure():
    grid = run_comparison(random_dataset(2, seed=1))
    assert len(grid) == 42
    keys = {(c.mask, c.classifier, c.target) for c in grid.cells}
    assert len(keys) == 42
    for target in ("valence", "arousal"):
        best = grid.best(target)
        assert sum(c.best for c in grid.cells if c.target == target) == 1
        assert best.report.f1 == max(c.report.f1 for c in grid.cells if c.target == target)
        assert all(c.mcnemar_vs_best is not None for c in grid.cells if c.target == target and not c.best)
    assert grid.cell("EEG+GSR", "svm", "arousal").reference_f1 == 0.638
    assert grid.cell("GSR", "tree", "arousal").reference_f1 == 0.630
    assert grid.cell("EEG+GSR+EMG", "svm", "valence").reference_f1 == 0.585
    assert {c.mask for c in grid.cells} == {"+".join(m) for m in ALL_MASKS}


def test_grid_outputs(tmp_path):
    grid = run_comparison(random_dataset(2, seed=2), ["arousal"], [ClassifierSpec("tree")], ["GSR", "EEG"])
    grid.write_json(tmp_path / "r.json")
    grid.write_csv(tmp_path / "r.csv")
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert len(lines) == 3 and lines[0].startswith("mask,classifier,target")
    assert "0.63" in lines[1]


def test_confusion_matrix_order():
    recs = [FoldPrediction("a", L, H, 1.0), FoldPrediction("b", H, H, 1.0)]
    np.testing.assert_array_equal(confusion_matrix(recs), [[0, 1], [0, 1]])

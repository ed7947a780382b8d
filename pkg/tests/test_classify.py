import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from emosense.classify import (
    ClassifierSpec,
    NBModel,
    SVMModel,
    TreeModel,
    canonical_algorithm,
    kkt_violations,
    load_model,
    model_to_dict,
    predict,
    save_model,
    train,
)
from emosense.classify.nb import fit_nb
from emosense.classify.svm import fit_svm
from emosense.classify.tree import LEAF, added_errors, fit_tree
from emosense.core import Label
from emosense.errors import DimensionMismatch, EmptyDataset, SingleClass
from emosense.features import Dataset, LabeledInstance

L, H = Label.LOW, Label.HIGH


def make_ds(X, labels, target="arousal", width=10):
    """EMG-masked dataset (10 columns); unused columns are zero."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    pad = np.zeros((len(X), width))
    pad[:, : X.shape[1]] = X
    other = L
    insts = []
    for k, (row, lab) in enumerate(zip(pad, labels)):
        val, aro = (lab, other) if target == "valence" else (other, lab)
        insts.append(LabeledInstance(f"S{k:03d}", 24, row, val, aro))
    return Dataset(tuple(insts), ("EMG",))


def gauss_pdf(x, mu, var):
    return math.exp(-((x - mu) ** 2) / (2 * var)) / math.sqrt(2 * math.pi * var)


# --------------------------------------------------------------------------
# naive Bayes


HAND_X = [1.0, 2.0, 4.0, 5.0]
HAND_Y = [L, L, H, H]


def test_nb_hand_parameters():
    priors, means, variances = fit_nb(np.array(HAND_X)[:, None], np.array([0, 0, 1, 1]), 1e-9)
    np.testing.assert_allclose(priors, [0.5, 0.5], atol=1e-12)
    np.testing.assert_allclose(means[:, 0], [1.5, 4.5], atol=1e-12)
    np.testing.assert_allclose(variances[:, 0], [0.25, 0.25], atol=1e-12)


@pytest.mark.parametrize("x", [1.5, 2.9, 3.0, 3.2, 4.5, 0.0])
def test_nb_hand_posterior(x):
    model = train(ClassifierSpec("nb"), make_ds(HAND_X, HAND_Y), "arousal")
    lo = 0.5 * gauss_pdf(x, 1.5, 0.25)
    hi = 0.5 * gauss_pdf(x, 4.5, 0.25)
    expected_high = hi / (lo + hi)
    row = np.zeros(10)
    row[0] = x
    post = model.posteriors(row)[0]
    assert post[1] == pytest.approx(expected_high, abs=1e-9)
    assert post.sum() == pytest.approx(1.0, abs=1e-12)
    if x != 3.0:
        assert predict(model, row).label is (H if expected_high > 0.5 else L)


def test_nb_low_at_class_mean():
    model = train(ClassifierSpec("nb"), make_ds(HAND_X, HAND_Y), "arousal")
    row = np.zeros(10)
    row[0] = 1.5
    pred = predict(model, row)
    assert pred.label is L and pred.score > 0.5


def test_nb_equal_likelihood_follows_prior():
    # midpoint between equal-variance classes: likelihoods tie, prior decides
    ds = make_ds([1.0, 2.0, 4.0, 5.0, 4.5, 4.5], [L, L, H, H, H, H])
    priors, means, variances = fit_nb(ds.X, ds.y("arousal"), 1e-9)
    model = NBModel(ClassifierSpec("nb"), "arousal", ("EMG",), ds.ids, priors,
                    np.array([[1.5] + [0] * 9, [4.5] + [0] * 9], dtype=float), np.full((2, 10), 0.25))
    row = np.zeros(10)
    row[0] = 3.0
    assert model.posteriors(row)[0][1] == pytest.approx(priors[1], abs=1e-12)
    assert priors[1] == pytest.approx(4 / 6)


@settings(max_examples=30, deadline=None)
@given(arrays(float, (12, 3), elements=st.floats(-50, 50)), st.floats(0.01, 100), st.floats(-100, 100))
def test_nb_posteriors_and_rescaling(X, scale, shift):
    y = [L, H] * 6
    base = train(ClassifierSpec("nb"), make_ds(X, y), "arousal")
    moved = train(ClassifierSpec("nb"), make_ds(X * scale + shift, y), "arousal")
    Q = np.zeros((4, 10))
    Q[:, :3] = X[:4]
    Qm = Q.copy()
    Qm[:, :3] = X[:4] * scale + shift
    p = base.posteriors(Q)
    np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-12)
    # rescaling is exact only while no variance sits on the floor
    if np.all(base.variances[:, :3] > 1e-6) and np.all(moved.variances[:, :3] > 1e-6):
        np.testing.assert_allclose(moved.posteriors(Qm), p, atol=1e-6)


def test_nb_single_class_predicts_it():
    model = train(ClassifierSpec("nb"), make_ds([1.0, 2.0, 3.0], [H, H, H]), "arousal")
    assert predict(model, np.zeros(10)).label is H


# --------------------------------------------------------------------------
# C4.5 tree


def entropy(counts):
    n = sum(counts)
    return -sum(c / n * math.log2(c / n) for c in counts if c)


def brute_force_root(X, y, min_leaf=2):
    """Every (feature, midpoint) split scored directly from the definition.

    Returns the set of (feature, threshold) pairs tied for the best gain ratio
    among features whose best gain reaches the average, or an empty set.
    """
    n, d = X.shape
    parent = entropy([np.sum(y == 0), np.sum(y == 1)])
    best = {}
    for f in range(d):
        vals = np.unique(X[:, f])
        for a, b in zip(vals[:-1], vals[1:]):
            t = (a + b) / 2
            left = X[:, f] <= t
            nl = int(left.sum())
            if nl < min_leaf or n - nl < min_leaf:
                continue
            children = (nl / n) * entropy([np.sum(y[left] == 0), np.sum(y[left] == 1)]) + \
                ((n - nl) / n) * entropy([np.sum(y[~left] == 0), np.sum(y[~left] == 1)])
            gain = parent - children
            # the first threshold reaching the best gain represents the feature
            if f not in best or gain > best[f][0] + 1e-12:
                best[f] = (gain, gain / entropy([nl, n - nl]), t)
    if not best:
        return set()
    avg = np.mean([g for g, _, _ in best.values()])
    eligible = {f: (r, t) for f, (g, r, t) in best.items() if g >= avg - 1e-3 and r > 0}
    if not eligible:
        return set()
    top = max(r for r, _ in eligible.values())
    return {(f, t) for f, (r, t) in eligible.items() if r >= top - 1e-9}


def test_tree_hand_root_split():
    feature, threshold, left, right, counts = fit_tree(np.array(HAND_X)[:, None], np.array([0, 0, 1, 1]), pruning=False)
    assert feature[0] == 0 and threshold[0] == 3.0
    assert list(counts[left[0]]) == [2, 0] and list(counts[right[0]]) == [0, 2]


@settings(max_examples=60, deadline=None)
@given(st.integers(6, 30).flatmap(lambda n: st.tuples(
    arrays(float, (n, 4), elements=st.integers(0, 6).map(float)),
    arrays(np.int64, n, elements=st.integers(0, 1)),
)))
def test_tree_root_matches_brute_force(data):
    X, y = data
    oracle = brute_force_root(X, y)
    feature, threshold, *_ = fit_tree(X, y, pruning=False)
    if not oracle:
        assert feature[0] == LEAF
    else:
        assert (int(feature[0]), float(threshold[0])) in oracle


def test_tree_pure_leaf_score():
    model = train(ClassifierSpec("tree"), make_ds(HAND_X, HAND_Y), "arousal")
    row = np.zeros(10)
    pred = predict(model, row)
    assert pred.label is L and pred.score == 1.0 and not pred.tie
    row[0] = 10.0
    assert predict(model, row).label is H


def test_tree_pure_dataset_is_one_leaf():
    model = train(ClassifierSpec("tree"), make_ds([1.0, 2.0, 3.0, 4.0], [H] * 4), "arousal")
    assert model.n_leaves == 1 and model.depth == 0
    pred = predict(model, np.zeros(10))
    assert pred.label is H and pred.score == 1.0


def test_tree_training_rows_reach_leaves():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(60, 5))
    y = [H if a + b > 0 else L for a, b in X[:, :2]]
    model = train(ClassifierSpec("tree", {"pruning": False}), make_ds(X, y), "arousal")
    leaves = [model.leaf_index(x) for x in model_rows(X)]
    assert all(model.feature[k] == LEAF for k in leaves)
    # leaf counts add up to the training set
    assert model.counts[0].sum() == 60
    tally = np.zeros(len(model.feature), dtype=int)
    for k in leaves:
        tally[k] += 1
    np.testing.assert_array_equal(tally[model.feature == LEAF], model.counts[model.feature == LEAF].sum(axis=1))


def model_rows(X):
    Z = np.zeros((len(X), 10))
    Z[:, : X.shape[1]] = X
    return Z


def test_tree_pruning_shrinks():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(80, 6))
    y = list(rng.choice([L, H], size=80))
    full = train(ClassifierSpec("tree", {"pruning": False}), make_ds(X, y), "arousal")
    pruned = train(ClassifierSpec("tree"), make_ds(X, y), "arousal")
    assert pruned.n_leaves <= full.n_leaves


def test_added_errors_known_values():
    # zero observed errors: n * (1 - cf ** (1/n))
    assert added_errors(6, 0, 0.25) == pytest.approx(6 * (1 - 0.25 ** (1 / 6)))
    assert added_errors(1, 0, 0.25) == pytest.approx(0.75)
    # monotone in the error count
    vals = [added_errors(20, e, 0.25) + e for e in range(0, 10)]
    assert all(a < b for a, b in zip(vals, vals[1:]))


# --------------------------------------------------------------------------
# SMO SVM


def separable(seed=0, n=40):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1, 1, size=(n, 2))
    keep = np.abs(X[:, 0] + 0.5 * X[:, 1]) > 0.2
    X = X[keep]
    y = (X[:, 0] + 0.5 * X[:, 1] > 0).astype(np.int64)
    return X, y


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_svm_separable_kkt(seed):
    X, y = separable(seed)
    C = 100.0
    norm, Z, ys, alpha, bias, converged, K = fit_svm(X, y, C=C)
    assert converged
    f = K @ (alpha * ys) + bias
    assert np.all(np.sign(f) == ys)
    assert np.max(kkt_violations(alpha, ys, K, bias, C)) <= 1e-3
    assert abs(np.sum(alpha * ys)) <= 1e-6
    assert np.all(alpha >= 0) and np.all(alpha <= C)


def test_svm_model_training_accuracy():
    X, y = separable(3)
    labels = [H if v else L for v in y]
    ds = make_ds(X, labels)
    model = train(ClassifierSpec("svm", {"C": 100.0}), ds, "arousal")
    assert isinstance(model, SVMModel)
    high, _, _ = model.decide(ds.X)
    np.testing.assert_array_equal(high, y == 1)


def test_svm_affine_invariance():
    X, y = separable(6)
    labels = [H if v else L for v in y]
    rng = np.random.default_rng(0)
    Q = rng.uniform(-1.2, 1.2, size=(25, 2))
    a = train(ClassifierSpec("svm"), make_ds(X, labels), "arousal")
    b = train(ClassifierSpec("svm"), make_ds(X * [3.0, 0.5] + [10.0, -4.0], labels), "arousal")
    fa = a.decision_function(model_rows(Q))
    fb = b.decision_function(model_rows(Q * [3.0, 0.5] + [10.0, -4.0]))
    np.testing.assert_allclose(fa, fb, atol=1e-9)


def test_svm_test_inputs_clipped():
    X, y = separable(1)
    labels = [H if v else L for v in y]
    model = train(ClassifierSpec("svm"), make_ds(X, labels), "arousal")
    far = model_rows(np.array([[1e6, 0.0]]))
    edge = model_rows(np.array([[X[:, 0].min() + 1.05 * np.ptp(X[:, 0]), 0.0]]))
    assert model.decision_function(far) == pytest.approx(model.decision_function(edge))


def test_svm_single_class():
    with pytest.raises(SingleClass):
        train(ClassifierSpec("svm"), make_ds([1.0, 2.0], [H, H]), "arousal")


def test_svm_constant_feature_is_ignored():
    X, y = separable(2)
    labels = [H if v else L for v in y]
    model = train(ClassifierSpec("svm"), make_ds(X, labels), "arousal")
    assert np.all(model.normalizer.scale[2:] == 0)


# --------------------------------------------------------------------------
# shared interface


@pytest.mark.parametrize("algo", ["nb", "tree", "svm"])
def test_deterministic(algo):
    X, y = separable(7)
    ds = make_ds(X, [H if v else L for v in y])
    assert model_to_dict(train(ClassifierSpec(algo), ds, "arousal")) == model_to_dict(train(ClassifierSpec(algo), ds, "arousal"))


@pytest.mark.parametrize("algo", ["nb", "tree", "svm"])
def test_json_roundtrip(tmp_path, algo):
    X, y = separable(8)
    ds = make_ds(X, [H if v else L for v in y], target="valence")
    model = train(ClassifierSpec(algo), ds, "valence")
    save_model(model, tmp_path / "m.json")
    back = load_model(tmp_path / "m.json")
    assert type(back) is type(model) and back.target == "valence" and back.instance_ids == ds.ids
    Q = model_rows(np.random.default_rng(1).uniform(-1, 1, size=(30, 2)))
    for a, b in zip(model.decide(Q), back.decide(Q)):
        np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize("algo", ["nb", "tree", "svm"])
def test_dimension_mismatch(algo):
    X, y = separable(9)
    model = train(ClassifierSpec(algo), make_ds(X, [H if v else L for v in y]), "arousal")
    with pytest.raises(DimensionMismatch):
        predict(model, np.zeros(9))
    with pytest.raises(DimensionMismatch):
        predict(model, np.zeros((2, 10)))


def test_empty_dataset():
    with pytest.raises(EmptyDataset):
        train(ClassifierSpec("nb"), Dataset((), ("EMG",)), "arousal")


def test_spec_validation():
    assert canonical_algorithm("J48") == "tree" and canonical_algorithm("SMO") == "svm"
    assert ClassifierSpec("svm")["C"] == 1.0
    with pytest.raises(ValueError):
        ClassifierSpec("knn")
    with pytest.raises(ValueError):
        ClassifierSpec("tree", {"confidence": 0.7})
    with pytest.raises(ValueError):
        ClassifierSpec("svm", {"gamma": 1.0})


def test_model_types():
    ds = make_ds(HAND_X, HAND_Y)
    assert isinstance(train(ClassifierSpec("nb"), ds, "arousal"), NBModel)
    assert isinstance(train(ClassifierSpec("j48"), ds, "arousal"), TreeModel)

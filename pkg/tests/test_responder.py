import math
from datetime import date

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from phn import responder
from phn.errors import InsufficientDataError, OutOfModelRangeError
from phn.ingest import WeeklyFeatures


# ---------------------------------------------------------------------------
# exercise groups
# ---------------------------------------------------------------------------


def week(count, minutes, hr):
    return WeeklyFeatures(
        week_start=date(2021, 3, 1),
        week_index=0,
        exercise_count=count,
        avg_exercise_min=minutes,
        avg_exercise_hr=hr,
        avg_active_min=30.0,
        avg_sleep_score=80.0,
        avg_sleep_min=None,
        avg_wakeups=1.0,
        weekly_resting_hr=60.0,
    )


def test_categorize_high_high_high(profile):
    weeks = [week(5, 45.0, 0.80 * profile.max_hr)] * 4
    group = responder.categorize(weeks, profile)
    assert group.label == "high-high-high"


def test_categorize_high_high_low(profile):
    weeks = [week(6, 40.0, 0.70 * profile.max_hr)] * 4
    assert responder.categorize(weeks, profile).label == "high-high-low"


def test_categorize_low_low_low(profile):
    weeks = [week(1, 20.0, 0.60 * profile.max_hr)] * 4
    assert responder.categorize(weeks, profile).label == "low-low-low"


def test_categorize_amount_boundary_30_is_high(profile):
    weeks = [week(3, 30.0, 0.60 * profile.max_hr)] * 4
    assert responder.categorize(weeks, profile).amount == "high"


def test_categorize_insufficient_exercise(profile):
    with pytest.raises(InsufficientDataError):
        responder.categorize([week(0, None, None)] * 4, profile)


def test_categorize_over_seven_per_week_uncovered(profile):
    with pytest.raises(OutOfModelRangeError):
        responder.categorize([week(9, 30.0, 100.0)] * 4, profile)


def test_categorize_needs_four_weeks(profile):
    with pytest.raises(InsufficientDataError):
        responder.categorize([week(3, 30.0, 100.0)] * 3, profile)


# ---------------------------------------------------------------------------
# trend slope and labels
# ---------------------------------------------------------------------------


def ols_slope_oracle(y):
    """Brute-force least squares via the normal equations."""
    t = len(y)
    X = np.column_stack([np.ones(t), np.arange(1, t + 1, dtype=float)])
    beta, *_ = np.linalg.lstsq(X, np.asarray(y, dtype=float), rcond=None)
    return float(beta[1])


def test_vrhr_exact_descending_series():
    assert responder.vrhr([60, 59, 58, 57]) == -1.0


def test_vrhr_constant_series():
    assert responder.vrhr([60, 60, 60, 60]) == 0.0


def test_vrhr_reversal_negates():
    assert responder.vrhr([57, 58, 59, 60]) == 1.0


def test_vrhr_matches_lstsq_oracle():
    rng = np.random.default_rng(12)
    for _ in range(300):
        t = int(rng.integers(2, 53))
        y = rng.uniform(40, 90, t)
        assert responder.vrhr(y) == pytest.approx(ols_slope_oracle(y), abs=1e-9)


def test_vrhr_needs_two_points():
    with pytest.raises(InsufficientDataError):
        responder.vrhr([60])


@given(
    st.lists(st.floats(min_value=40, max_value=100), min_size=2, max_size=30),
    st.floats(min_value=-50, max_value=50, allow_nan=False),
)
def test_vrhr_translation_invariant(y, c):
    base = responder.vrhr(y)
    shifted = responder.vrhr([v + c for v in y])
    assert shifted == pytest.approx(base, abs=1e-9)


@given(st.lists(st.floats(min_value=40, max_value=100), min_size=2, max_size=30))
def test_vrhr_antisymmetric_under_reversal(y):
    assert responder.vrhr(y[::-1]) == pytest.approx(-responder.vrhr(y), abs=1e-9)


def test_label_boundaries():
    assert responder.label(-0.6) == "positive"
    assert responder.label(-0.5) == "neutral"
    assert responder.label(0.5) == "neutral"
    assert responder.label(0.7) == "negative"


@given(st.floats(min_value=-10, max_value=10, allow_nan=False))
def test_label_total(v):
    assert responder.label(v) in responder.RESPONDER_CLASSES


# ---------------------------------------------------------------------------
# splitting
# ---------------------------------------------------------------------------


def _labels(counts):
    return np.concatenate([np.full(n, c) for c, n in enumerate(counts)])


def test_split_stratified_counts():
    y = _labels([60, 30, 10])
    train, test = responder.split(y, train_frac=0.75, seed=3)
    assert len(train) + len(test) == 100
    assert len(train) == 75
    for c, n in enumerate([60, 30, 10]):
        got = int(np.sum(y[train] == c))
        assert abs(got - 0.75 * n) <= 1


def test_split_deterministic_and_disjoint():
    y = _labels([40, 40, 20])
    a = responder.split(y, seed=5)
    b = responder.split(y, seed=5)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    assert not set(a[0]) & set(a[1])
    assert len(a[0]) + len(a[1]) == len(y)


def test_split_full_train_fraction():
    y = _labels([10, 10])
    train, test = responder.split(y, train_frac=1.0, seed=0)
    assert len(test) == 0 and len(train) == 20


def test_split_tiny_class_kept_in_train():
    y = _labels([50, 1])
    with pytest.warns(UserWarning):
        train, test = responder.split(y, seed=0)
    assert np.sum(y[train] == 1) == 1


# ---------------------------------------------------------------------------
# k-fold
# ---------------------------------------------------------------------------


def test_kfold_even_partition():
    y = _labels([100])
    folds = responder.stratified_kfold(y, k=10, repeats=1, seed=0)
    sizes = [int(np.sum(folds[0] == f)) for f in range(10)]
    assert sizes == [10] * 10


def test_kfold_proportional_class_allocation():
    y = _labels([70, 20, 10])
    folds = responder.stratified_kfold(y, k=10, repeats=1, seed=1)
    for f in range(10):
        mask = folds[0] == f
        assert int(np.sum(y[mask] == 0)) == 7
        assert int(np.sum(y[mask] == 1)) == 2
        assert int(np.sum(y[mask] == 2)) == 1


def test_kfold_repeats_differ_and_are_reproducible():
    y = _labels([50, 50])
    a = responder.stratified_kfold(y, k=5, repeats=3, seed=2)
    b = responder.stratified_kfold(y, k=5, repeats=3, seed=2)
    assert np.array_equal(a, b)
    assert a.shape == (3, 100)
    assert not np.array_equal(a[0], a[1])


def test_kfold_rejects_k_over_n():
    with pytest.raises(ValueError):
        responder.stratified_kfold(_labels([5]), k=10)


def test_kfold_within_one_of_proportionality_property():
    rng = np.random.default_rng(8)
    for _ in range(20):
        counts = rng.integers(15, 60, size=3)
        y = _labels(list(counts))
        k = 10
        folds = responder.stratified_kfold(y, k=k, repeats=2, seed=int(rng.integers(1000)))
        for r in range(2):
            for f in range(k):
                mask = folds[r] == f
                for c, n in enumerate(counts):
                    got = int(np.sum(y[mask] == c))
                    assert math.floor(n / k) <= got <= math.ceil(n / k)


# ---------------------------------------------------------------------------
# logistic regression
# ---------------------------------------------------------------------------


def test_gradient_matches_central_differences():
    rng = np.random.default_rng(21)
    for _ in range(10):
        n, d, c = 12, 4, 3
        X = rng.normal(size=(n, d))
        y = rng.integers(0, c, size=n)
        W = rng.normal(scale=0.5, size=(c, d))
        b = rng.normal(scale=0.5, size=c)
        l2 = 0.05
        _, gW, gb = responder.loss_and_grad(W, b, X, y, l2)
        eps = 1e-6
        for idx in np.ndindex(c, d):
            Wp, Wm = W.copy(), W.copy()
            Wp[idx] += eps
            Wm[idx] -= eps
            lp = responder.loss_and_grad(Wp, b, X, y, l2)[0]
            lm = responder.loss_and_grad(Wm, b, X, y, l2)[0]
            num = (lp - lm) / (2 * eps)
            assert gW[idx] == pytest.approx(num, rel=1e-5, abs=1e-8)
        for j in range(c):
            bp, bm = b.copy(), b.copy()
            bp[j] += eps
            bm[j] -= eps
            num = (responder.loss_and_grad(W, bp, X, y, l2)[0] - responder.loss_and_grad(W, bm, X, y, l2)[0]) / (2 * eps)
            assert gb[j] == pytest.approx(num, rel=1e-5, abs=1e-8)


def test_linearly_separable_toy_set_trains_to_high_accuracy():
    rng = np.random.default_rng(5)
    X0 = rng.normal((-3, -3), 0.3, size=(40, 2))
    X1 = rng.normal((3, 3), 0.3, size=(40, 2))
    X = np.vstack([X0, X1])
    y = np.array([0] * 40 + [1] * 40)
    model = responder.train_logreg(X, y, 2, responder.Hyper(learning_rate=0.5, epochs=500))
    acc = float(np.mean(model.predict(X) == y))
    assert acc >= 0.99


def test_zero_features_predict_class_prior():
    X = np.zeros((90, 3))
    y = np.array([0] * 60 + [1] * 20 + [2] * 10)
    model = responder.train_logreg(X, y, 3, responder.Hyper(learning_rate=0.5, epochs=3000))
    probs = model.predict_proba(X[:1])[0]
    assert probs == pytest.approx([6 / 9, 2 / 9, 1 / 9], abs=1e-3)


def test_softmax_rows_sum_to_one():
    rng = np.random.default_rng(33)
    z = rng.normal(scale=30, size=(200, 5))
    p = responder.softmax(z)
    assert np.max(np.abs(p.sum(axis=1) - 1.0)) < 1e-12


def test_training_deterministic():
    ds = responder.make_synthetic_dataset(n=120, seed=4)
    m1 = responder.train_logreg(ds.X, ds.y, 3, responder.Hyper(epochs=50))
    m2 = responder.train_logreg(ds.X, ds.y, 3, responder.Hyper(epochs=50))
    assert np.array_equal(m1.W, m2.W) and np.array_equal(m1.b, m2.b)


def test_nan_features_are_imputed():
    ds = responder.make_synthetic_dataset(n=100, seed=6)
    X = ds.X.copy()
    X[::7, 2] = np.nan
    model = responder.train_logreg(X, ds.y, 3, responder.Hyper(epochs=100))
    preds = model.predict(X)
    assert len(preds) == 100  # no NaN propagation
    assert np.isfinite(model.final_loss)


# ---------------------------------------------------------------------------
# evaluation metrics
# ---------------------------------------------------------------------------


def test_perfect_predictions_score_one():
    ds = responder.make_synthetic_dataset(n=90, seed=7, separation=8.0)
    model = responder.train_logreg(ds.X, ds.y, 3, responder.Hyper(learning_rate=0.5, epochs=2000))
    report = responder.evaluate(model, ds.X, ds.y, ds.classes)
    if np.all(model.predict(ds.X) == ds.y):
        assert report.weighted_f1 == 1.0
        assert report.weighted_precision == 1.0


def test_constant_predictor_weighted_recall_is_majority_share():
    # a model that always answers class 0 (zero weights, prior-free bias)
    X = np.zeros((10, 2))
    model = responder.LogregModel(
        W=np.zeros((2, 2)),
        b=np.array([1.0, 0.0]),
        impute_means=np.zeros(2),
        mu=np.zeros(2),
        sigma=np.ones(2),
        classes=("a", "b"),
        final_loss=0.0,
        epochs_run=0,
    )
    y = np.array([0] * 7 + [1] * 3)
    report = responder.evaluate(model, X, y, ("a", "b"))
    assert report.weighted_recall == pytest.approx(0.7)


def test_metrics_agree_with_sklearn_oracle():
    from sklearn.metrics import precision_recall_fscore_support

    rng = np.random.default_rng(13)
    y_true = rng.integers(0, 3, 200)
    y_pred = rng.integers(0, 3, 200)
    cm = np.zeros((3, 3), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        cm[t, p] += 1
    report = responder.metrics_from_confusion(cm, ("a", "b", "c"))
    p, r, f, _ = precision_recall_fscore_support(
        y_true, y_pred, average="weighted", zero_division=0
    )
    assert report.weighted_precision == pytest.approx(p, abs=1e-12)
    assert report.weighted_recall == pytest.approx(r, abs=1e-12)
    assert report.weighted_f1 == pytest.approx(f, abs=1e-12)


def test_confusion_rows_sum_to_supports():
    ds = responder.make_synthetic_dataset(n=120, seed=9)
    model = responder.train_logreg(ds.X, ds.y, 3, responder.Hyper(epochs=200))
    report = responder.evaluate(model, ds.X, ds.y, ds.classes)
    for i, name in enumerate(ds.classes):
        assert report.confusion[i].sum() == report.per_class[name].support


# ---------------------------------------------------------------------------
# cross-validation pipeline
# ---------------------------------------------------------------------------


def test_cross_validate_synthetic_scores_high():
    ds = responder.make_synthetic_dataset(n=300, seed=10)
    report = responder.cross_validate(ds.X, ds.y, ds.classes, k=5, repeats=1)
    assert report.weighted_f1 > 0.9
    assert len(report.fold_reports) == 5


def test_cross_validate_repeats_multiply_folds():
    ds = responder.make_synthetic_dataset(n=100, seed=11)
    report = responder.cross_validate(ds.X, ds.y, ds.classes, k=5, repeats=3)
    assert len(report.fold_reports) == 15


def test_tune_picks_from_grid():
    ds = responder.make_synthetic_dataset(n=120, seed=14)
    grid = (responder.Hyper(learning_rate=0.1, l2=0.0, epochs=100),
            responder.Hyper(learning_rate=0.01, l2=0.1, epochs=100))
    hyper, report = responder.tune_logreg(ds.X, ds.y, ds.classes, grid=grid, k=4)
    assert hyper in grid
    assert 0 <= report.weighted_f1 <= 1


def test_dataset_jsonl_roundtrip(tmp_path):
    path = tmp_path / "users.jsonl"
    rows = [
        {"user_id": "u1", "label": "positive",
         "features": {"age": 28, "sex": "female", "weight_kg": 61.0, "height_cm": 166.0}},
        {"user_id": "u2", "label": "neutral",
         "features": {"age": 33, "sex": "male", "weight_kg": 80.0, "height_cm": 180.0}},
        {"user_id": "u3", "label": "negative",
         "features": {"age": 41, "sex": "male", "weight_kg": None, "height_cm": 175.0}},
    ]
    import json

    path.write_text("\n".join(json.dumps(r) for r in rows), encoding="utf-8")
    ds = responder.load_dataset(path, mode="basic")
    assert ds.X.shape == (3, 4)
    assert list(ds.y) == [0, 1, 2]
    assert np.isnan(ds.X[2, 2])


def test_report_text_has_table_columns():
    ds = responder.make_synthetic_dataset(n=90, seed=15)
    model = responder.train_logreg(ds.X, ds.y, 3, responder.Hyper(epochs=100))
    text = responder.evaluate(model, ds.X, ds.y, ds.classes).to_text()
    for col in ("Label", "Precision", "Recall", "F1", "Support", "weighted"):
        assert col in text

"""Exercise-response variability pipeline.

Categorizes users into frequency/amount/intensity exercise groups,
labels their cardiovascular response from the weekly resting-HR trend
(the OLS slope against week index), and trains a from-scratch
multinomial logistic regression to predict the label from basic or
first-week features. Evaluation uses repeated stratified k-fold
cross-validation with support-weighted metrics.

Note on the trend slope: the velocity is the ordinary least-squares
slope computed with the mean of the week indices and of the weekly
resting HRs. Sums in place of means would not produce a slope.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import InsufficientDataError, OutOfModelRangeError, PhnError

FEATURES_BASIC = ("age", "sex", "weight_kg", "height_cm")
FEATURES_WEEK1 = FEATURES_BASIC + (
    "exercise_count",
    "avg_exercise_min",
    "avg_exercise_hr",
    "avg_active_min",
    "avg_sleep_score",
    "avg_sleep_light_min",
    "avg_sleep_deep_min",
    "avg_sleep_rem_min",
    "avg_sleep_awake_min",
    "avg_wakeups",
)

RESPONDER_CLASSES = ("positive", "neutral", "negative")


# ---------------------------------------------------------------------------
# exercise groups and responder labels
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExerciseGroup:
    frequency: str  # low | mid | high
    amount: str  # low | high
    intensity: str  # low | high

    @property
    def label(self) -> str:
        return f"{self.frequency}-{self.amount}-{self.intensity}"


def categorize(weekly_features: Sequence, profile) -> ExerciseGroup:
    """Exercise group over an observation window of weekly features.

    Frequency: mean sessions/week (low < 2, mid < 5, high <= 7).
    Amount: mean minutes per session, 30 and above is high.
    Intensity: mean session HR against 75% of max HR.
    """
    if len(weekly_features) < 4:
        raise InsufficientDataError("need at least 4 weeks of features to categorize")
    freq = sum(w.exercise_count for w in weekly_features) / len(weekly_features)
    if freq < 1.0:
        raise InsufficientDataError(f"insufficient exercise: {freq:.2f} sessions/week")
    if freq > 7.0:
        raise OutOfModelRangeError(f"{freq:.2f} sessions/week exceeds group coverage")
    mins = [w.avg_exercise_min for w in weekly_features if w.avg_exercise_min is not None]
    hrs = [w.avg_exercise_hr for w in weekly_features if w.avg_exercise_hr is not None]
    if not mins or not hrs:
        raise InsufficientDataError("no exercise sessions with duration and HR")
    amount = sum(mins) / len(mins)
    intensity_hr = sum(hrs) / len(hrs)

    frequency = "low" if freq < 2.0 else ("mid" if freq < 5.0 else "high")
    return ExerciseGroup(
        frequency=frequency,
        amount="high" if amount >= 30.0 else "low",
        intensity="high" if intensity_hr >= 0.75 * profile.max_hr else "low",
    )


def vrhr(weekly_resting_hr: Sequence[float]) -> float:
    """Velocity of the resting-HR trend: OLS slope against week index."""
    t = len(weekly_resting_hr)
    if t < 2:
        raise InsufficientDataError("need at least 2 weekly resting HRs for a trend")
    y = [float(v) for v in weekly_resting_hr]
    if any(not math.isfinite(v) for v in y):
        raise ValueError("weekly resting HRs must be finite")
    xbar = (t + 1) / 2.0
    ybar = math.fsum(y) / t
    num = math.fsum((i + 1 - xbar) * (y[i] - ybar) for i in range(t))
    den = math.fsum((i + 1 - xbar) ** 2 for i in range(t))
    return num / den


def label(v: float) -> str:
    """Responder label from the trend slope; the +-0.5 boundaries are neutral."""
    if not math.isfinite(v):
        raise ValueError(f"slope must be finite, got {v}")
    if v < -0.5:
        return "positive"
    if v <= 0.5:
        return "neutral"
    return "negative"


# ---------------------------------------------------------------------------
# dataset handling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray  # (n, d) float64, NaN = missing
    y: np.ndarray  # (n,) int class ids
    classes: tuple[str, ...]
    feature_names: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.y)


def _encode_feature(name: str, value) -> float:
    if value is None:
        return math.nan
    if name == "sex":
        if value in ("female", 0, 0.0):
            return 0.0
        if value in ("male", 1, 1.0):
            return 1.0
        raise ValueError(f"bad sex value {value!r}")
    return float(value)


def load_dataset(path: str | Path, mode: str = "basic") -> Dataset:
    """Read a JSONL dataset: one user per line with features and label."""
    names = feature_names(mode)
    rows, labels = [], []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            doc = json.loads(line)
            if doc["label"] not in RESPONDER_CLASSES:
                raise ValueError(f"line {line_no}: unknown label {doc['label']!r}")
            feats = doc["features"]
            rows.append([_encode_feature(n, feats.get(n)) for n in names])
            labels.append(RESPONDER_CLASSES.index(doc["label"]))
    if not rows:
        raise ValueError(f"dataset {path} is empty")
    return Dataset(
        X=np.asarray(rows, dtype=np.float64),
        y=np.asarray(labels, dtype=np.int64),
        classes=RESPONDER_CLASSES,
        feature_names=names,
    )


def feature_names(mode: str) -> tuple[str, ...]:
    if mode == "basic":
        return FEATURES_BASIC
    if mode == "week1":
        return FEATURES_WEEK1
    raise ValueError(f"mode must be 'basic' or 'week1', got {mode!r}")


def make_synthetic_dataset(
    n: int = 600,
    seed: int = 0,
    class_fractions: Sequence[float] = (0.45, 0.35, 0.20),
    separation: float = 3.0,
    n_features: int = 4,
) -> Dataset:
    """Gaussian blobs with class-separated means, for harness checks."""
    rng = np.random.default_rng(seed)
    counts = [int(round(f * n)) for f in class_fractions]
    counts[-1] = n - sum(counts[:-1])
    X_parts, y_parts = [], []
    for c, count in enumerate(counts):
        mean = np.zeros(n_features)
        mean[c % n_features] = separation * (1 + c)
        X_parts.append(rng.normal(mean, 1.0, size=(count, n_features)))
        y_parts.append(np.full(count, c, dtype=np.int64))
    X = np.vstack(X_parts)
    y = np.concatenate(y_parts)
    order = rng.permutation(n)
    return Dataset(
        X=X[order],
        y=y[order],
        classes=RESPONDER_CLASSES,
        feature_names=tuple(f"f{i}" for i in range(n_features)),
    )


# ---------------------------------------------------------------------------
# splitting and folding
# ---------------------------------------------------------------------------


def split(
    y: Sequence[int], train_frac: float = 0.75, seed: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    """Stratified train/test index split, deterministic for a seed.

    Per-class train counts are the rounded proportion. Classes with
    fewer than two members stay whole in the train set (with a warning).
    """
    if len(y) == 0:
        raise ValueError("dataset is empty")
    if not 0.0 < train_frac <= 1.0:
        raise ValueError(f"train_frac must be in (0, 1], got {train_frac}")
    y = np.asarray(y)
    rng = np.random.default_rng(seed)
    train, test = [], []
    for c in np.unique(y):
        idx = np.flatnonzero(y == c)
        idx = idx[rng.permutation(len(idx))]
        if len(idx) < 2:
            warnings.warn(f"class {c} has {len(idx)} member(s); keeping it whole in train")
            train.extend(idx)
            continue
        n_train = int(round(train_frac * len(idx)))
        train.extend(idx[:n_train])
        test.extend(idx[n_train:])
    return np.sort(np.asarray(train, dtype=np.int64)), np.sort(np.asarray(test, dtype=np.int64))


def stratified_kfold(
    y: Sequence[int], k: int = 10, repeats: int = 1, seed: int = 0
) -> np.ndarray:
    """Fold ids of shape (repeats, n); per-fold class counts stay within
    one of exact proportionality."""
    y = np.asarray(y)
    n = len(y)
    if k > n:
        raise ValueError(f"k={k} exceeds dataset size {n}")
    if k < 2:
        raise ValueError("k must be >= 2")
    folds = np.empty((repeats, n), dtype=np.int64)
    for r in range(repeats):
        rng = np.random.default_rng([seed, r])
        for c in np.unique(y):
            idx = np.flatnonzero(y == c)
            idx = idx[rng.permutation(len(idx))]
            for j, i in enumerate(idx):
                folds[r, i] = j % k
    return folds


# ---------------------------------------------------------------------------
# multinomial logistic regression
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Hyper:
    learning_rate: float = 0.1
    l2: float = 0.0
    epochs: int = 2000
    tol: float = 1e-7


DEFAULT_GRID = tuple(
    Hyper(learning_rate=lr, l2=l2)
    for lr in (0.01, 0.1)
    for l2 in (0.0, 0.01, 0.1)
)


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - np.max(z, axis=1, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=1, keepdims=True)


def loss_and_grad(
    W: np.ndarray,
    b: np.ndarray,
    X: np.ndarray,
    y: np.ndarray,
    l2: float,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean cross-entropy with L2 on weights, plus analytic gradients."""
    n = len(y)
    P = softmax(X @ W.T + b)
    eps = 1e-15
    loss = -float(np.mean(np.log(P[np.arange(n), y] + eps)))
    loss += 0.5 * l2 * float(np.sum(W * W))
    Y = np.zeros_like(P)
    Y[np.arange(n), y] = 1.0
    D = P - Y
    grad_W = D.T @ X / n + l2 * W
    grad_b = np.mean(D, axis=0)
    return loss, grad_W, grad_b


@dataclass(frozen=True)
class LogregModel:
    W: np.ndarray
    b: np.ndarray
    impute_means: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray
    classes: tuple[str, ...]
    final_loss: float
    epochs_run: int

    def _prepare(self, X: np.ndarray) -> np.ndarray:
        X = np.array(X, dtype=np.float64, copy=True)
        nan = np.isnan(X)
        if nan.any():
            X[nan] = np.broadcast_to(self.impute_means, X.shape)[nan]
        return (X - self.mu) / self.sigma

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return softmax(self._prepare(X) @ self.W.T + self.b)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)


def train_logreg(
    X: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    hyper: Hyper = Hyper(),
) -> LogregModel:
    """Fit a softmax classifier by full-batch gradient descent.

    Missing values are imputed with train-set column means, features
    are z-scored on train statistics, and the fit is deterministic
    (zero init, fixed order).
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n, d = X.shape

    impute = np.zeros(d)
    for j in range(d):
        col = X[:, j]
        good = col[~np.isnan(col)]
        impute[j] = float(np.mean(good)) if len(good) else 0.0
    Xi = np.where(np.isnan(X), impute, X)

    mu = np.mean(Xi, axis=0)
    sigma = np.std(Xi, axis=0)
    sigma[sigma == 0.0] = 1.0
    Xs = (Xi - mu) / sigma

    W = np.zeros((n_classes, d))
    b = np.zeros(n_classes)
    loss = math.inf
    epochs_run = 0
    for epoch in range(hyper.epochs):
        loss, grad_W, grad_b = loss_and_grad(W, b, Xs, y, hyper.l2)
        if not math.isfinite(loss):
            raise PhnError(
                f"non-finite loss at epoch {epoch} "
                f"(lr={hyper.learning_rate}, l2={hyper.l2})"
            )
        W = W - hyper.learning_rate * grad_W
        b = b - hyper.learning_rate * grad_b
        epochs_run = epoch + 1
        if max(float(np.max(np.abs(grad_W))), float(np.max(np.abs(grad_b)))) < hyper.tol:
            break
    return LogregModel(
        W=W,
        b=b,
        impute_means=impute,
        mu=mu,
        sigma=sigma,
        classes=tuple(f"class_{i}" for i in range(n_classes)),
        final_loss=loss,
        epochs_run=epochs_run,
    )


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class EvalReport:
    classes: tuple[str, ...]
    per_class: dict[str, ClassMetrics]
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    confusion: np.ndarray  # rows true, cols predicted

    def to_text(self) -> str:
        lines = [f"{'Label':>12} {'Precision':>10} {'Recall':>10} {'F1':>10} {'Support':>8}"]
        for name in self.classes:
            m = self.per_class[name]
            lines.append(
                f"{name:>12} {m.precision:>10.4f} {m.recall:>10.4f} "
                f"{m.f1:>10.4f} {m.support:>8d}"
            )
        total = sum(m.support for m in self.per_class.values())
        lines.append(
            f"{'weighted':>12} {self.weighted_precision:>10.4f} "
            f"{self.weighted_recall:>10.4f} {self.weighted_f1:>10.4f} {total:>8d}"
        )
        return "\n".join(lines)


def metrics_from_confusion(
    confusion: np.ndarray, classes: Sequence[str]
) -> EvalReport:
    cm = np.asarray(confusion, dtype=np.float64)
    supports = cm.sum(axis=1)
    predicted = cm.sum(axis=0)
    per_class = {}
    for i, name in enumerate(classes):
        tp = cm[i, i]
        precision = tp / predicted[i] if predicted[i] > 0 else 0.0
        recall = tp / supports[i] if supports[i] > 0 else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        per_class[name] = ClassMetrics(
            precision=float(precision),
            recall=float(recall),
            f1=float(f1),
            support=int(supports[i]),
        )
    total = float(supports.sum())

    def weighted(attr: str) -> float:
        if total == 0:
            return 0.0
        return sum(getattr(per_class[c], attr) * per_class[c].support for c in classes) / total

    return EvalReport(
        classes=tuple(classes),
        per_class=per_class,
        weighted_precision=weighted("precision"),
        weighted_recall=weighted("recall"),
        weighted_f1=weighted("f1"),
        confusion=np.asarray(confusion),
    )


def evaluate(model: LogregModel, X: np.ndarray, y: np.ndarray, classes: Sequence[str]) -> EvalReport:
    """Confusion matrix and per-class / support-weighted metrics."""
    if len(y) == 0:
        raise ValueError("test set is empty")
    preds = model.predict(X)
    n_classes = len(classes)
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    for t, p in zip(y, preds):
        cm[t, p] += 1
    return metrics_from_confusion(cm, classes)


@dataclass(frozen=True)
class CVReport:
    classes: tuple[str, ...]
    fold_reports: tuple[EvalReport, ...]
    weighted_precision: float  # means over folds
    weighted_recall: float
    weighted_f1: float
    pooled: EvalReport
    hyper: Hyper

    def to_text(self) -> str:
        head = (
            f"repeated stratified {len(self.fold_reports)}-fold evaluation "
            f"(lr={self.hyper.learning_rate}, l2={self.hyper.l2})\n"
            f"mean weighted: precision {self.weighted_precision:.4f}  "
            f"recall {self.weighted_recall:.4f}  f1 {self.weighted_f1:.4f}\n"
        )
        return head + "pooled confusion metrics:\n" + self.pooled.to_text()


def cross_validate(
    X: np.ndarray,
    y: np.ndarray,
    classes: Sequence[str],
    k: int = 10,
    repeats: int = 1,
    hyper: Hyper = Hyper(),
    seed: int = 0,
) -> CVReport:
    """Repeated stratified k-fold evaluation of the softmax classifier."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    folds = stratified_kfold(y, k=k, repeats=repeats, seed=seed)
    reports = []
    pooled = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for r in range(repeats):
        for f in range(k):
            test_mask = folds[r] == f
            model = train_logreg(X[~test_mask], y[~test_mask], len(classes), hyper)
            rep = evaluate(model, X[test_mask], y[test_mask], classes)
            reports.append(rep)
            pooled += rep.confusion
    return CVReport(
        classes=tuple(classes),
        fold_reports=tuple(reports),
        weighted_precision=float(np.mean([r.weighted_precision for r in reports])),
        weighted_recall=float(np.mean([r.weighted_recall for r in reports])),
        weighted_f1=float(np.mean([r.weighted_f1 for r in reports])),
        pooled=metrics_from_confusion(pooled, classes),
        hyper=hyper,
    )


def tune_logreg(
    X: np.ndarray,
    y: np.ndarray,
    classes: Sequence[str],
    grid: Iterable[Hyper] = DEFAULT_GRID,
    k: int = 10,
    repeats: int = 1,
    seed: int = 0,
) -> tuple[Hyper, CVReport]:
    """Pick the grid point with the best mean weighted F1 under CV."""
    best: Optional[tuple[Hyper, CVReport]] = None
    for hyper in grid:
        report = cross_validate(X, y, classes, k=k, repeats=repeats, hyper=hyper, seed=seed)
        if best is None or report.weighted_f1 > best[1].weighted_f1:
            best = (hyper, report)
    assert best is not None, "empty hyperparameter grid"
    return best

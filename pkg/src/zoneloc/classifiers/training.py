"""Training harness: balancing, holdout confusion, nested CV, likelihood rows."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..model import Fingerprint, LabeledDataset
from .learners import ClassifierKind, LearnerModel, fit_learner


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts with rows = true zone, columns = predicted zone."""

    counts: np.ndarray

    def __post_init__(self) -> None:
        c = np.asarray(self.counts)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ValueError(f"confusion matrix must be square, got shape {c.shape}")
        if (c < 0).any():
            raise ValueError("confusion matrix has negative counts")
        object.__setattr__(self, "counts", c.astype(np.int64))

    @property
    def n(self) -> int:
        return self.counts.shape[0]

    @classmethod
    def from_predictions(cls, truth: np.ndarray, predicted: np.ndarray, n: int) -> "ConfusionMatrix":
        counts = np.zeros((n, n), dtype=np.int64)
        np.add.at(counts, (np.asarray(truth), np.asarray(predicted)), 1)
        return cls(counts)


@dataclass(frozen=True)
class TrainedClassifier:
    """One fitted base learner plus its held-out confusion matrix."""

    params: ClassifierKind
    model: LearnerModel
    norm_mean: np.ndarray
    norm_std: np.ndarray
    holdout_confusion: ConfusionMatrix
    n_zones: int
    feature_count: int

    def predict_features(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.feature_count:
            raise ValueError(
                f"dimension mismatch: got {x.shape[1]} features, trained on {self.feature_count}"
            )
        return self.model.predict((x - self.norm_mean) / self.norm_std)


def balance_dataset(data: LabeledDataset, seed: int) -> LabeledDataset:
    """Subsample every zone down to the minority-class count, then shuffle.

    Uniform subsampling without replacement, fully determined by ``seed``.
    """
    counts = data.class_counts()
    for zone_id, c in sorted(counts.items()):
        if c == 0:
            label = data.plan.zones[zone_id].label
            raise ValueError(f"zone {zone_id} ({label}) has no samples")
    target = min(counts.values())
    rng = np.random.default_rng(seed)
    labels = data.labels_array()
    keep: list[int] = []
    for zone_id in sorted(counts):
        idx = np.flatnonzero(labels == zone_id)
        chosen = rng.choice(idx, size=target, replace=False)
        keep.extend(int(i) for i in chosen)
    order = rng.permutation(len(keep))
    samples = [data.samples[keep[i]] for i in order]
    return data.with_samples(samples)


def _stratified_split(labels: np.ndarray, holdout_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    train_idx: list[int] = []
    hold_idx: list[int] = []
    for zone_id in np.unique(labels):
        idx = np.flatnonzero(labels == zone_id)
        idx = idx[rng.permutation(len(idx))]
        n_hold = max(1, int(round(holdout_fraction * len(idx))))
        if len(idx) - n_hold < 2:
            raise ValueError(f"zone {zone_id}: fewer than 2 samples per zone after split")
        hold_idx.extend(int(i) for i in idx[:n_hold])
        train_idx.extend(int(i) for i in idx[n_hold:])
    return np.asarray(sorted(train_idx)), np.asarray(sorted(hold_idx))


def train(
    params: ClassifierKind,
    data: LabeledDataset,
    holdout_fraction: float = 0.3,
    seed: int = 0,
) -> TrainedClassifier:
    """Balance, split off a stratified holdout, fit, and extract the confusion.

    Features are z-scored with statistics from the fitting split only.
    """
    if not (0.0 < holdout_fraction <= 0.5):
        raise ValueError(f"holdout_fraction must be in (0, 0.5], got {holdout_fraction}")
    balanced = balance_dataset(data, seed)
    x = balanced.features_matrix()
    y = balanced.labels_array()
    n = balanced.n_zones
    fit_idx, hold_idx = _stratified_split(y, holdout_fraction, seed)
    mean = x[fit_idx].mean(axis=0)
    std = x[fit_idx].std(axis=0)
    std = np.where(std == 0.0, 1.0, std)
    model = fit_learner(params, (x[fit_idx] - mean) / std, y[fit_idx], n)
    hold_pred = model.predict((x[hold_idx] - mean) / std)
    cm = ConfusionMatrix.from_predictions(y[hold_idx], hold_pred, n)
    return TrainedClassifier(
        params=params,
        model=model,
        norm_mean=mean,
        norm_std=std,
        holdout_confusion=cm,
        n_zones=n,
        feature_count=x.shape[1],
    )


def predict(clf: TrainedClassifier, fingerprint: Fingerprint) -> int:
    """Zone prediction for one fingerprint; lowest zone id on ties."""
    return int(clf.predict_features(fingerprint.features()[None, :])[0])


def _stratified_folds(labels: np.ndarray, k: int, seed: int) -> list[np.ndarray]:
    """Deal each zone's shuffled samples round-robin into k folds."""
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    for zone_id in np.unique(labels):
        idx = np.flatnonzero(labels == zone_id)
        idx = idx[rng.permutation(len(idx))]
        for j, i in enumerate(idx):
            folds[j % k].append(int(i))
    return [np.asarray(sorted(f)) for f in folds]


def _fit_and_score(params: ClassifierKind, x: np.ndarray, y: np.ndarray,
                   fit_idx: np.ndarray, test_idx: np.ndarray, n: int) -> float:
    mean = x[fit_idx].mean(axis=0)
    std = x[fit_idx].std(axis=0)
    std = np.where(std == 0.0, 1.0, std)
    model = fit_learner(params, (x[fit_idx] - mean) / std, y[fit_idx], n)
    pred = model.predict((x[test_idx] - mean) / std)
    return float((pred == y[test_idx]).mean())


def nested_cv(
    data: LabeledDataset,
    grid: list[ClassifierKind],
    k_outer: int = 10,
    k_inner: int = 10,
    seed: int = 0,
) -> tuple[ClassifierKind, float]:
    """Inner folds pick the grid setting, outer folds estimate generalization.

    Returns the setting chosen most often across outer folds (ties fall back
    to grid order) and the mean outer-fold accuracy of the per-fold winners.
    """
    if not grid:
        raise ValueError("hyperparameter grid is empty")
    if k_outer < 2 or k_inner < 2:
        raise ValueError("k_outer and k_inner must be >= 2")
    x = data.features_matrix()
    y = data.labels_array()
    n = data.n_zones
    for zone_id, c in sorted(data.class_counts().items()):
        if c < k_outer:
            raise ValueError(f"zone {zone_id} has {c} samples, fewer than k_outer={k_outer}")
    outer = _stratified_folds(y, k_outer, seed)
    all_idx = np.arange(len(y))
    chosen_per_fold: list[int] = []
    outer_scores: list[float] = []
    for fold_no, test_idx in enumerate(outer):
        train_mask = np.ones(len(y), dtype=bool)
        train_mask[test_idx] = False
        train_idx = all_idx[train_mask]
        if len(grid) == 1:
            best_g = 0
        else:
            inner = _stratified_folds(y[train_idx], k_inner, seed + 1 + fold_no)
            best_g, best_acc = 0, -1.0
            for g, params in enumerate(grid):
                accs = []
                for inner_test in inner:
                    inner_mask = np.ones(len(train_idx), dtype=bool)
                    inner_mask[inner_test] = False
                    accs.append(_fit_and_score(
                        params, x[train_idx], y[train_idx],
                        np.flatnonzero(inner_mask), inner_test, n,
                    ))
                mean_acc = float(np.mean(accs))
                if mean_acc > best_acc + 1e-12:
                    best_acc = mean_acc
                    best_g = g
        chosen_per_fold.append(best_g)
        outer_scores.append(_fit_and_score(grid[best_g], x, y, train_idx, test_idx, n))
    tallies = np.bincount(chosen_per_fold, minlength=len(grid))
    winner = int(tallies.argmax())
    return grid[winner], float(np.mean(outer_scores))


def likelihood_rows(cm: ConfusionMatrix, smoothing_alpha: float = 1.0) -> np.ndarray:
    """Row-normalized confusion with additive smoothing.

    Entry (i, j) estimates the probability that the classifier predicts zone j
    when the true zone is i; the diagonal is the per-zone sensitivity.
    """
    if smoothing_alpha < 0:
        raise ValueError(f"smoothing_alpha must be >= 0, got {smoothing_alpha}")
    counts = cm.counts.astype(np.float64)
    rowsums = counts.sum(axis=1)
    if smoothing_alpha == 0.0:
        for i, s in enumerate(rowsums):
            if s == 0:
                raise ValueError(f"no holdout samples for zone {i}")
    denom = rowsums + smoothing_alpha * cm.n
    return (counts + smoothing_alpha) / denom[:, None]

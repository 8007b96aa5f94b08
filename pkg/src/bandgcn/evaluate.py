"""Binary classification metrics, ROC/PR curves, and the CV harness.

The positive class is seizure (label 1) throughout.  Any 0/0 metric
resolves to 0 and the affected metric name is recorded on the report's
``degenerate`` tuple.  ROC ties earn half credit (trapezoidal area over
tie blocks equals the Mann-Whitney statistic); PR area uses the step-wise,
right-continuous rule.  F1 is evaluated as 2*TP / (2*TP + FP + FN), the
integer-ratio reduction of 2*(precision*recall)/(precision+recall).
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from .balance import FeatureDataset, smote
from .gcn import GcnConfig, GcnParams, forward, train
from .graphs import EegGraph

logger = logging.getLogger(__name__)

METRIC_COLUMNS = ("accuracy", "sensitivity", "specificity", "precision",
                  "f1", "roc_auc", "pr_auc")


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fn: int
    fp: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fn + self.fp + self.tn


@dataclass
class MetricsReport:
    accuracy: float
    sensitivity: float
    specificity: float
    precision: float
    f1: float
    roc_auc: float | None = None
    pr_auc: float | None = None
    band: str = ""
    fold: int = -1
    degenerate: tuple[str, ...] = ()

    def as_dict(self) -> dict[str, float | None]:
        return {name: getattr(self, name) for name in METRIC_COLUMNS}


def _as_binary(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=int)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D")
    if not np.isin(arr, (0, 1)).all():
        raise ValueError(f"{name} must contain only 0/1")
    return arr


def confusion(predictions, truth) -> ConfusionMatrix:
    """Tally a confusion matrix; positive class = seizure = 1."""
    predictions = _as_binary(predictions, "predictions")
    truth = _as_binary(truth, "truth")
    if len(predictions) != len(truth):
        raise ValueError("predictions and truth lengths differ")
    return ConfusionMatrix(
        tp=int(((predictions == 1) & (truth == 1)).sum()),
        fn=int(((predictions == 0) & (truth == 1)).sum()),
        fp=int(((predictions == 1) & (truth == 0)).sum()),
        tn=int(((predictions == 0) & (truth == 0)).sum()))


def metrics(cm: ConfusionMatrix) -> MetricsReport:
    """Accuracy, sensitivity, specificity, precision, and F1 from counts."""
    if cm.total == 0:
        raise ValueError("empty confusion matrix")
    degenerate = []

    def ratio(numerator: int, denominator: int, name: str) -> float:
        if denominator == 0:
            degenerate.append(name)
            return 0.0
        return numerator / denominator

    accuracy = (cm.tp + cm.tn) / cm.total
    sensitivity = ratio(cm.tp, cm.tp + cm.fn, "sensitivity")
    specificity = ratio(cm.tn, cm.tn + cm.fp, "specificity")
    precision = ratio(cm.tp, cm.tp + cm.fp, "precision")
    # precision + recall == 0 exactly when tp == 0.
    f1 = ratio(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn, "f1") if cm.tp else 0.0
    if cm.tp == 0:
        degenerate.append("f1")
    return MetricsReport(accuracy=accuracy, sensitivity=sensitivity,
                         specificity=specificity, precision=precision, f1=f1,
                         degenerate=tuple(degenerate))


def _threshold_counts(scores: np.ndarray, truth: np.ndarray
                      ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_truth = truth[order]
    # one point per distinct score, at the end of each tie block
    boundary = np.append(np.nonzero(np.diff(sorted_scores))[0],
                         len(sorted_scores) - 1)
    tps = np.cumsum(sorted_truth)[boundary]
    fps = (boundary + 1) - tps
    return tps, fps, sorted_scores[boundary]


def roc_auc(scores, truth) -> tuple[np.ndarray, float]:
    """ROC curve points (fpr, tpr, threshold) and trapezoidal area.

    The trapezoid over each tie block credits ties with 1/2, so the area
    equals the pairwise Mann-Whitney statistic.
    """
    scores = np.asarray(scores, dtype=np.float64)
    truth = _as_binary(truth, "truth")
    if len(scores) != len(truth):
        raise ValueError("scores and truth lengths differ")
    n_pos = int(truth.sum())
    n_neg = len(truth) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC needs both classes present")
    tps, fps, thresholds = _threshold_counts(scores, truth)
    tpr = np.concatenate([[0.0], tps / n_pos])
    fpr = np.concatenate([[0.0], fps / n_neg])
    area = float(np.sum((fpr[1:] - fpr[:-1]) * (tpr[1:] + tpr[:-1]) / 2.0))
    curve = np.column_stack([fpr, tpr, np.concatenate([[np.inf], thresholds])])
    return curve, area


def pr_auc(scores, truth) -> tuple[np.ndarray, float]:
    """Precision-recall points (recall, precision, threshold) and step area.

    Area = sum over thresholds of (R_i - R_{i-1}) * P_i with R_0 = 0, the
    right-continuous step rule; all-tied scores give exactly the positive
    prevalence.
    """
    scores = np.asarray(scores, dtype=np.float64)
    truth = _as_binary(truth, "truth")
    if len(scores) != len(truth):
        raise ValueError("scores and truth lengths differ")
    n_pos = int(truth.sum())
    if n_pos == 0:
        raise ValueError("PR needs at least one positive")
    tps, fps, thresholds = _threshold_counts(scores, truth)
    precision = tps / (tps + fps)
    recall = tps / n_pos
    area = float(np.sum(np.diff(np.concatenate([[0.0], recall])) * precision))
    curve = np.column_stack([recall, precision, thresholds])
    return curve, area


@dataclass
class CvPlan:
    """Per-sample fold assignment for k-fold cross-validation."""

    fold_of: np.ndarray
    k: int
    seed: int
    stratified: bool

    def test_indices(self, fold: int) -> np.ndarray:
        return np.nonzero(self.fold_of == fold)[0]

    def train_indices(self, fold: int) -> np.ndarray:
        return np.nonzero(self.fold_of != fold)[0]


def kfold_split(n: int, labels, k: int = 5, seed: int = 0) -> CvPlan:
    """Stratified fold assignment, a pure function of (n, labels, k, seed).

    Each class is shuffled and dealt round-robin with a counter that runs
    on across classes, so fold sizes differ by at most one overall and
    per-class counts are within one of n_class/k.  A class with fewer than
    k members triggers an unstratified fallback with a warning.
    """
    labels = _as_binary(labels, "labels")
    if n != len(labels):
        raise ValueError("n does not match the label count")
    if n < k:
        raise ValueError(f"cannot split {n} samples into {k} folds")
    rng = np.random.default_rng(seed)
    fold_of = np.empty(n, dtype=int)
    class_values, class_counts = np.unique(labels, return_counts=True)
    stratified = bool((class_counts >= k).all())
    if not stratified:
        logger.warning("class counts %s have fewer than %d members; falling "
                       "back to an unstratified split",
                       dict(zip(class_values.tolist(), class_counts.tolist())), k)
        shuffled = rng.permutation(n)
        fold_of[shuffled] = np.arange(n) % k
    else:
        counter = 0
        for cls in class_values:
            indices = np.nonzero(labels == cls)[0]
            rng.shuffle(indices)
            for row in indices:
                fold_of[row] = counter % k
                counter += 1
    return CvPlan(fold_of=fold_of, k=k, seed=seed, stratified=stratified)


@dataclass
class CvResult:
    band: str
    reports: list[MetricsReport]
    mean: dict[str, float]
    std: dict[str, float]
    fold_scores: list[tuple[np.ndarray, np.ndarray]]  # (truth, p_seizure)
    fold_params: list[GcnParams | None]


def _aggregate(reports: list[MetricsReport]) -> tuple[dict, dict]:
    mean, std = {}, {}
    for name in METRIC_COLUMNS:
        values = [getattr(r, name) for r in reports if getattr(r, name) is not None]
        if not values:
            mean[name] = std[name] = None
            continue
        mean[name] = float(np.mean(values))
        std[name] = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
    return mean, std


def cross_validate(dataset: FeatureDataset, graph: EegGraph, config: GcnConfig,
                   plan: CvPlan, smote_k: int = 5, band: str = "",
                   train_fn: Callable = train,
                   score_fn: Callable | None = None) -> CvResult:
    """Train and evaluate once per fold.

    Each fold balances its training portion with SMOTE (seeded
    config.seed + fold; held-out rows are never resampled), trains, and
    scores the held-out fold.  train_fn/score_fn are injection points for
    harness tests.
    """
    X, y = dataset.X, dataset.y
    if len(plan.fold_of) != len(X):
        raise ValueError("plan does not match the dataset size")
    nodes = graph.S.shape[0]
    d0 = config.layer_dims[0]
    if X.shape[1] != nodes * d0:
        raise ValueError(f"flattened rows of width {X.shape[1]} do not match "
                         f"{nodes} nodes x {d0} features")

    reports, fold_scores, fold_params = [], [], []
    for fold in range(plan.k):
        train_rows = plan.train_indices(fold)
        test_rows = plan.test_indices(fold)
        balanced = smote(FeatureDataset(X=X[train_rows], y=y[train_rows],
                                        provenance=dataset.provenance[train_rows]),
                         k=smote_k, seed=config.seed + fold)
        X_train = balanced.X.reshape(len(balanced.X), nodes, d0)
        params = train_fn((X_train, balanced.y), graph, config)
        if isinstance(params, tuple):  # train returns (params, history)
            params = params[0]
        X_test = X[test_rows].reshape(len(test_rows), nodes, d0)
        if score_fn is None:
            probabilities, _ = forward(params, graph.S, X_test)
            scores = probabilities[:, 1]
        else:
            scores = np.asarray(score_fn(params, graph, X_test), dtype=np.float64)
        predictions = (scores > 0.5).astype(int)
        report = metrics(confusion(predictions, y[test_rows]))
        truth = y[test_rows]
        if len(np.unique(truth)) == 2:
            _, report.roc_auc = roc_auc(scores, truth)
            _, report.pr_auc = pr_auc(scores, truth)
        else:
            report.degenerate = report.degenerate + ("roc_auc", "pr_auc")
        report.band = band
        report.fold = fold
        reports.append(report)
        fold_scores.append((truth.copy(), scores.copy()))
        fold_params.append(params)

    mean, std = _aggregate(reports)
    return CvResult(band=band, reports=reports, mean=mean, std=std,
                    fold_scores=fold_scores, fold_params=fold_params)


@dataclass
class RepeatReport:
    seeds: list[int]
    rows: list[dict[str, float]]
    mean: dict[str, float]
    std: dict[str, float]
    min: dict[str, float]
    max: dict[str, float]


def repeat_runs(experiment: Callable[[int], Mapping[str, float]],
                times: int = 10, base_seed: int = 0) -> RepeatReport:
    """Run a seed-parameterized experiment with seeds base..base+times-1.

    Reports per-run metric rows plus mean, sample (n-1) standard deviation,
    min, and max per metric.
    """
    if times < 1:
        raise ValueError("times must be >= 1")
    seeds = [base_seed + i for i in range(times)]
    rows = []
    for seed in seeds:
        row = dict(experiment(seed))
        if rows and set(row) != set(rows[0]):
            raise ValueError("experiment returned inconsistent metric keys")
        rows.append(row)
    keys = list(rows[0])
    values = {key: np.array([row[key] for row in rows], dtype=np.float64)
              for key in keys}
    return RepeatReport(
        seeds=seeds, rows=rows,
        mean={k: float(v.mean()) for k, v in values.items()},
        std={k: float(v.std(ddof=1)) if times > 1 else 0.0
             for k, v in values.items()},
        min={k: float(v.min()) for k, v in values.items()},
        max={k: float(v.max()) for k, v in values.items()})


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_metrics_csv(path: str | Path, reports: Sequence[MetricsReport]) -> None:
    """Rows of band,fold followed by the seven metric columns."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["band", "fold", *METRIC_COLUMNS])
        for report in reports:
            writer.writerow([report.band, report.fold]
                            + [_cell(getattr(report, name))
                               for name in METRIC_COLUMNS])


def write_comparison_csv(path: str | Path, results: Sequence[CvResult]) -> None:
    """One row per band with mean/std of every metric across folds."""
    header = ["band"]
    for name in METRIC_COLUMNS:
        header += [f"mean_{name}", f"std_{name}"]
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for result in results:
            row = [result.band]
            for name in METRIC_COLUMNS:
                row += [_cell(result.mean[name]), _cell(result.std[name])]
            writer.writerow(row)


def write_curve_csv(path: str | Path, curve: np.ndarray, kind: str) -> None:
    headers = {"roc": ["fpr", "tpr", "threshold"],
               "pr": ["recall", "precision", "threshold"]}
    if kind not in headers:
        raise ValueError(f"kind must be one of {sorted(headers)}")
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(headers[kind])
        for row in curve:
            writer.writerow([_cell(v) for v in row])


def write_confusion_csv(path: str | Path, cm: ConfusionMatrix) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["", "pred_0", "pred_1"])
        writer.writerow(["true_0", cm.tn, cm.fp])
        writer.writerow(["true_1", cm.fn, cm.tp])


def write_repeats_csv(path: str | Path, report: RepeatReport) -> None:
    keys = list(report.rows[0])
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["run", "seed", *keys])
        for run, (seed, row) in enumerate(zip(report.seeds, report.rows)):
            writer.writerow([run, seed] + [_cell(row[k]) for k in keys])
        for label, values in (("mean", report.mean), ("std", report.std),
                              ("min", report.min), ("max", report.max)):
            writer.writerow([label, ""] + [_cell(values[k]) for k in keys])

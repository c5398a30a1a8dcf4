"""Stratified holdout split and the five evaluation metrics.

Class metrics threshold predicted probability at 0.5; precision, recall and
F1 are support-weighted averages over both classes (which makes weighted
recall equal accuracy by construction). AUC is the Mann-Whitney rank
statistic with ties credited 0.5.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import TrainingDataError


@dataclass(frozen=True)
class SplitIndices:
    """Disjoint row-index sets for one seeded 80/10/10 holdout."""

    train: np.ndarray
    validation: np.ndarray
    test: np.ndarray
    seed: int

    @property
    def trainval(self) -> np.ndarray:
        return np.concatenate([self.train, self.validation])

    def assert_disjoint(self):
        parts = [self.train, self.validation, self.test]
        total = sum(len(p) for p in parts)
        if len(np.unique(np.concatenate(parts))) != total:
            raise AssertionError("split partitions overlap")


def stratified_split(labels, fractions=(0.8, 0.1, 0.1), seed: int = 0) -> SplitIndices:
    """Split row indices into train/validation/test, stratified per class.

    Within each class the seeded permutation is cut at the cumulative-floor
    boundaries floor(0.8*n) and floor(0.9*n), so leftover fractional samples
    land in the test partition (272 rows at 100/172 gives 217/27/28).
    """
    labels = np.asarray(labels)
    fractions = np.asarray(fractions, dtype=float)
    if fractions.size != 3 or np.any(fractions < 0) or abs(fractions.sum() - 1.0) > 1e-9:
        raise ValueError(f"fractions must be three nonnegative values summing to 1, got {fractions}")
    rng = np.random.default_rng(seed)
    parts: list[list[np.ndarray]] = [[], [], []]
    classes = np.unique(labels)
    for cls in classes:
        idx = np.flatnonzero(labels == cls)
        if idx.size < 3:
            raise TrainingDataError(
                f"class {cls!r} has only {idx.size} members; need at least 3 to stratify"
            )
        perm = rng.permutation(idx)
        bounds = np.floor(np.cumsum(fractions)[:2] * idx.size).astype(int)
        parts[0].append(perm[: bounds[0]])
        parts[1].append(perm[bounds[0] : bounds[1]])
        parts[2].append(perm[bounds[1] :])
    train, val, test = (np.sort(np.concatenate(p)).astype(np.intp) for p in parts)
    return SplitIndices(train=train, validation=val, test=test, seed=seed)


@dataclass
class MetricsReport:
    """The five reported measures plus the confusion counts behind them."""

    model_id: str
    partition: str
    n: int
    accuracy: float
    precision: float
    recall: float
    f1: float
    auc: float | None  # None when the partition is single-class
    tp: int
    tn: int
    fp: int
    fn: int
    extra: dict = field(default_factory=dict)

    def row(self) -> dict:
        """Results-table layout (Model, F1-Score, AUC, Accuracy, Precision, Recall)."""
        return {
            "Model": self.model_id,
            "F1-Score": self.f1,
            "AUC": self.auc,
            "Accuracy": self.accuracy,
            "Precision": self.precision,
            "Recall": self.recall,
        }


def confusion_counts(y_true, y_pred) -> tuple[int, int, int, int]:
    y_true = np.asarray(y_true).astype(int)
    y_pred = np.asarray(y_pred).astype(int)
    tp = int(np.sum((y_true == 1) & (y_pred == 1)))
    tn = int(np.sum((y_true == 0) & (y_pred == 0)))
    fp = int(np.sum((y_true == 0) & (y_pred == 1)))
    fn = int(np.sum((y_true == 1) & (y_pred == 0)))
    return tp, tn, fp, fn


def _per_class(tp, tn, fp, fn):
    # (precision, recall, f1, support) for class 1 and class 0
    out = []
    for tpc, fpc, fnc, support in ((tp, fp, fn, tp + fn), (tn, fn, fp, tn + fp)):
        prec = tpc / (tpc + fpc) if tpc + fpc else 0.0
        rec = tpc / support if support else 0.0
        f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
        out.append((prec, rec, f1, support))
    return out


def weighted_metrics(y_true, y_pred) -> dict[str, float]:
    tp, tn, fp, fn = confusion_counts(y_true, y_pred)
    n = tp + tn + fp + fn
    stats = _per_class(tp, tn, fp, fn)
    weighted = {}
    for i, name in enumerate(("precision", "recall", "f1")):
        weighted[name] = sum(s[i] * s[3] for s in stats) / n
    weighted["accuracy"] = (tp + tn) / n
    weighted.update(tp=tp, tn=tn, fp=fp, fn=fn)
    return weighted


def auc_score(y_true, scores) -> float | None:
    """Rank-based AUC; tied scores credit 0.5 per pair. None if single-class."""
    y_true = np.asarray(y_true).astype(int)
    scores = np.asarray(scores, dtype=float)
    n_pos = int(y_true.sum())
    n_neg = y_true.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(scores.size, dtype=float)
    sorted_scores = scores[order]
    i = 0
    rank = 1.0
    while i < scores.size:
        j = i
        while j + 1 < scores.size and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = (rank + rank + (j - i)) / 2.0  # average rank over the tie run
        rank += j - i + 1
        i = j + 1
    rank_sum = ranks[y_true == 1].sum()
    return float((rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def metrics_report(y_true, probabilities, model_id="model", partition="test",
                   threshold=0.5) -> MetricsReport:
    y_true = np.asarray(y_true).astype(int)
    probabilities = np.asarray(probabilities, dtype=float)
    y_pred = (probabilities >= threshold).astype(int)
    w = weighted_metrics(y_true, y_pred)
    return MetricsReport(
        model_id=model_id,
        partition=partition,
        n=y_true.size,
        accuracy=w["accuracy"],
        precision=w["precision"],
        recall=w["recall"],
        f1=w["f1"],
        auc=auc_score(y_true, probabilities),
        tp=w["tp"],
        tn=w["tn"],
        fp=w["fp"],
        fn=w["fn"],
    )

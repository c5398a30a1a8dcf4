"""Additive gradient-boosting classifier over binned features.

The model is a sum of per-feature score tables ("terms") plus an intercept in
logit space. Training runs cyclic boosting inside each of several outer bags:
every round visits the features in fixed order, fits a depth-limited
regression split (at most `max_leaves` contiguous leaves over the feature's
bins) to the current logistic-loss residuals, and adds `learning_rate` times
the leaf means into the term. Each bag early-stops on its own held-out slice;
the final model averages the bags, then re-centers every term to zero
training-weighted mean, folding the removed means into the intercept.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np
import pandas as pd
from numba import njit

from .binning import FeatureSchema, bin_fit, bin_record, bin_table, MISSING_BIN
from .errors import TrainingDataError, UnknownFeatureError

LOGIT_CLAMP = 30.0


@dataclass(frozen=True)
class EbmConfig:
    learning_rate: float = 0.01
    max_leaves: int = 3
    outer_bags: int = 8
    max_rounds: int = 5000
    patience: int = 50
    validation_fraction: float = 0.15
    early_stop_tolerance: float = 1e-3
    leaf_smoothing: float = 5.0
    min_samples_leaf: int = 4
    max_bins: int = 256
    seed: int = 0

    def __post_init__(self):
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")
        if not (0 < self.validation_fraction < 1):
            raise ValueError("validation_fraction must be in (0, 1)")


@dataclass
class TermFunction:
    """One feature's additive contribution, indexed by bin."""

    feature: str
    scores: np.ndarray


@njit(cache=True)
def _fit_leaf_deltas(grad, cnt, max_leaves, smoothing, min_leaf, out):
    """Greedy contiguous segmentation of bins [1, B) into <= max_leaves
    leaves by squared-error gain on the residual sums; writes each bin's
    ridge-smoothed leaf mean (sum / (count + smoothing)) into `out`. Bin 0
    (missing) never participates and gets 0.
    """
    B = grad.shape[0]
    out[0] = 0.0
    if B <= 1:
        return
    starts = np.empty(max_leaves, np.int64)
    ends = np.empty(max_leaves, np.int64)
    starts[0] = 1
    ends[0] = B
    n_leaves = 1
    while n_leaves < max_leaves:
        best_gain = 0.0
        best_leaf = -1
        best_split = -1
        for li in range(n_leaves):
            s = starts[li]
            e = ends[li]
            tot_g = 0.0
            tot_c = 0.0
            for b in range(s, e):
                tot_g += grad[b]
                tot_c += cnt[b]
            if tot_c <= 0.0:
                continue
            base = tot_g * tot_g / tot_c
            left_g = 0.0
            left_c = 0.0
            for split in range(s + 1, e):
                left_g += grad[split - 1]
                left_c += cnt[split - 1]
                right_c = tot_c - left_c
                if left_c < min_leaf or right_c < min_leaf:
                    continue
                right_g = tot_g - left_g
                gain = left_g * left_g / left_c + right_g * right_g / right_c - base
                if gain > best_gain + 1e-15:
                    best_gain = gain
                    best_leaf = li
                    best_split = split
        if best_leaf < 0:
            break
        # split best_leaf at best_split
        e_old = ends[best_leaf]
        ends[best_leaf] = best_split
        starts[n_leaves] = best_split
        ends[n_leaves] = e_old
        n_leaves += 1
    for li in range(n_leaves):
        g = 0.0
        c = 0.0
        for b in range(starts[li], ends[li]):
            g += grad[b]
            c += cnt[b]
        value = g / (c + smoothing) if c > 0.0 else 0.0
        for b in range(starts[li], ends[li]):
            out[b] = value


@njit(cache=True)
def _boost_bag(xb, y, boost_idx, val_idx, n_bins, lr, max_leaves, max_rounds,
               patience, tolerance, smoothing, min_leaf, intercept):
    """Boost one bag; returns (best-round scores, best_round, rounds_run)."""
    n, n_feat = xb.shape
    max_b = 0
    for f in range(n_feat):
        if n_bins[f] > max_b:
            max_b = n_bins[f]
    scores = np.zeros((n_feat, max_b))
    best = np.zeros((n_feat, max_b))
    logit = np.full(n, intercept)
    cnt = np.zeros((n_feat, max_b))
    for f in range(n_feat):
        for k in range(boost_idx.shape[0]):
            cnt[f, xb[boost_idx[k], f]] += 1.0
    grad = np.zeros(max_b)
    delta = np.zeros(max_b)

    # intercept-only validation loss is the early-stopping baseline
    best_val = 0.0
    for k in range(val_idx.shape[0]):
        z = logit[val_idx[k]]
        if y[val_idx[k]] == 1.0:
            best_val += np.log1p(np.exp(-z)) if z > 0.0 else -z + np.log1p(np.exp(z))
        else:
            best_val += np.log1p(np.exp(z)) if z < 0.0 else z + np.log1p(np.exp(-z))
    best_val /= val_idx.shape[0]
    best_round = 0
    since = 0
    rounds_run = 0

    for rnd in range(max_rounds):
        for f in range(n_feat):
            b_count = n_bins[f]
            for b in range(b_count):
                grad[b] = 0.0
            for k in range(boost_idx.shape[0]):
                i = boost_idx[k]
                p = 1.0 / (1.0 + np.exp(-logit[i]))
                grad[xb[i, f]] += y[i] - p
            _fit_leaf_deltas(grad[:b_count], cnt[f, :b_count], max_leaves, smoothing,
                             min_leaf, delta[:b_count])
            changed = False
            for b in range(b_count):
                d = lr * delta[b]
                delta[b] = d
                if d != 0.0:
                    changed = True
            if changed:
                for i in range(n):
                    logit[i] += delta[xb[i, f]]
                for b in range(b_count):
                    scores[f, b] += delta[b]
        loss = 0.0
        for k in range(val_idx.shape[0]):
            z = logit[val_idx[k]]
            if y[val_idx[k]] == 1.0:
                loss += np.log1p(np.exp(-z)) if z > 0.0 else -z + np.log1p(np.exp(z))
            else:
                loss += np.log1p(np.exp(z)) if z < 0.0 else z + np.log1p(np.exp(-z))
        loss /= val_idx.shape[0]
        rounds_run = rnd + 1
        if loss < best_val - tolerance:
            best_val = loss
            best_round = rnd + 1
            for f in range(n_feat):
                for b in range(max_b):
                    best[f, b] = scores[f, b]
            since = 0
        else:
            since += 1
            if since >= patience:
                break
    return best, best_round, rounds_run


@dataclass
class EbmModel:
    """Immutable trained model; prediction is a pure function of it."""

    schemas: list[FeatureSchema]
    terms: list[TermFunction]
    intercept: float
    importances: np.ndarray
    bin_counts: list[np.ndarray]
    meta: dict = field(default_factory=dict)

    @property
    def feature_names(self) -> list[str]:
        return [s.name for s in self.schemas]

    def term_for(self, feature: str) -> TermFunction:
        for term in self.terms:
            if term.feature == feature:
                return term
        raise UnknownFeatureError(f"model has no term for feature {feature!r}")

    def bin_matrix(self, table: pd.DataFrame) -> np.ndarray:
        return bin_table(table, self.schemas, strict=False)

    def _accumulate(self, bins: np.ndarray):
        """Intercept-first, schema-order summation; the one mandated order."""
        logit = np.full(bins.shape[0], self.intercept)
        for j, term in enumerate(self.terms):
            logit += term.scores[bins[:, j]]
        return logit

    def predict_logit(self, table: pd.DataFrame) -> np.ndarray:
        return self._accumulate(self.bin_matrix(table))

    def predict_logit_record(self, record: dict) -> float:
        bins = bin_record(record, self.schemas)
        logit = self.intercept
        for j, term in enumerate(self.terms):
            logit += term.scores[bins[j]]
        return float(logit)

    def predict_proba(self, table: pd.DataFrame) -> np.ndarray:
        return sigmoid(self.predict_logit(table))

    def predict_proba_record(self, record: dict) -> float:
        return float(sigmoid(np.asarray(self.predict_logit_record(record))))


def sigmoid(logit):
    """Logistic link with the +/-30 clamp, keeping output inside (0, 1)."""
    z = np.clip(logit, -LOGIT_CLAMP, LOGIT_CLAMP)
    return 1.0 / (1.0 + np.exp(-z))


def _validate_labels(labels) -> np.ndarray:
    y = np.asarray(labels)
    uniq = np.unique(y)
    if not np.isin(uniq, (0, 1)).all():
        raise TrainingDataError(f"labels must be coded 0/1, got values {uniq[:6]}")
    if uniq.size < 2:
        raise TrainingDataError("training labels are single-class")
    return y.astype(np.float64)


def train_binned(xb: np.ndarray, labels, schemas: list[FeatureSchema],
                 config: EbmConfig | None = None, sample_ids=None,
                 meta_extra: dict | None = None) -> EbmModel:
    """Train on an already-binned int matrix (column order = schema order)."""
    config = config or EbmConfig()
    y = _validate_labels(labels)
    n = xb.shape[0]
    if sample_ids is not None:
        order = np.argsort(np.asarray(sample_ids, dtype=str), kind="stable")
        xb = xb[order]
        y = y[order]
    n_bins = np.array([s.n_bins for s in schemas], dtype=np.int64)
    max_b = int(n_bins.max())

    full_counts = [
        np.bincount(xb[:, j], minlength=int(n_bins[j])).astype(float)
        for j in range(len(schemas))
    ]

    score_sum = np.zeros((len(schemas), max_b))
    intercept_sum = 0.0
    bag_rounds = []
    bag_best = []
    for bag in range(config.outer_bags):
        rng = np.random.default_rng(np.random.SeedSequence([config.seed, bag]))
        perm = rng.permutation(n)
        n_val = max(1, int(round(config.validation_fraction * n)))
        if n_val >= n:
            raise TrainingDataError("too few rows for an internal validation slice")
        val_idx = perm[:n_val]
        pool = perm[n_val:]
        boost_idx = pool[rng.integers(0, pool.size, size=pool.size)]
        pos = float(y[boost_idx].sum())
        tot = float(boost_idx.size)
        if pos == 0.0 or pos == tot:  # degenerate bootstrap: soften the rate
            rate = (pos + 0.5) / (tot + 1.0)
        else:
            rate = pos / tot
        intercept = float(np.log(rate / (1.0 - rate)))
        best, best_round, rounds_run = _boost_bag(
            xb, y, boost_idx.astype(np.int64), val_idx.astype(np.int64), n_bins,
            config.learning_rate, config.max_leaves, config.max_rounds,
            config.patience, config.early_stop_tolerance, config.leaf_smoothing,
            float(config.min_samples_leaf), intercept,
        )
        score_sum += best
        intercept_sum += intercept
        bag_rounds.append(int(rounds_run))
        bag_best.append(int(best_round))

    scores = score_sum / config.outer_bags
    intercept = intercept_sum / config.outer_bags

    # center each term to zero training-weighted mean; missing slot (never
    # populated by strict training data) is pinned to an exactly-neutral 0
    terms = []
    for j, schema in enumerate(schemas):
        term_scores = scores[j, : int(n_bins[j])].copy()
        weights = full_counts[j]
        mean = float(np.dot(weights, term_scores) / weights.sum())
        term_scores -= mean
        intercept += mean
        if weights[MISSING_BIN] == 0.0:
            term_scores[MISSING_BIN] = 0.0
        terms.append(TermFunction(feature=schema.name, scores=term_scores))

    importances = np.array([
        float(np.dot(full_counts[j], np.abs(terms[j].scores)) / full_counts[j].sum())
        for j in range(len(schemas))
    ])

    pos_count = int(y.sum())
    meta = {
        "config": asdict(config),
        "seed": config.seed,
        "positive_class": "living",
        "class_counts": {"positive": pos_count, "negative": int(y.size - pos_count)},
        "trained_rows": int(n),
        "bag_rounds": bag_rounds,
        "bag_best_rounds": bag_best,
        "early_stop": "best-validation-round snapshot",
        "importance_basis": "training bin counts",
    }
    if meta_extra:
        meta.update(meta_extra)
    return EbmModel(
        schemas=list(schemas),
        terms=terms,
        intercept=float(intercept),
        importances=importances,
        bin_counts=full_counts,
        meta=meta,
    )


def train(table: pd.DataFrame, labels, config: EbmConfig | None = None,
          sample_ids=None, kinds: dict[str, str] | None = None,
          schemas: list[FeatureSchema] | None = None,
          meta_extra: dict | None = None) -> EbmModel:
    """Bin a raw training table (strict: non-finite cells are fatal) and train."""
    config = config or EbmConfig()
    if schemas is None:
        schemas = bin_fit(table, kinds=kinds, max_bins=config.max_bins)
    xb = bin_table(table, schemas, strict=True)
    return train_binned(xb, labels, schemas, config=config,
                        sample_ids=sample_ids, meta_extra=meta_extra)

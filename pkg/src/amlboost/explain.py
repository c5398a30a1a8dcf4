"""Local (per-prediction) and global (per-model) additive explanations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from .binning import bin_record
from .ebm import EbmModel, sigmoid
from .errors import UnknownFeatureError

DEFAULT_TOP_K = 15


@dataclass(frozen=True)
class Contribution:
    feature: str
    value: object          # raw input value (None when absent)
    bin_label: str
    score: float           # additive logit contribution
    term_index: int        # position in schema order, for exact re-summation


@dataclass
class LocalExplanation:
    """Decomposition of one prediction into intercept + per-feature parts.

    `contributions` holds every term sorted by |score| descending (feature
    name breaking ties); displays truncate to `top(k)` without affecting the
    prediction.
    """

    intercept: float
    contributions: list[Contribution]
    logit: float
    probability: float
    predicted_class: str

    def top(self, k: int = DEFAULT_TOP_K) -> list[Contribution]:
        return self.contributions[:k]

    def logit_from_parts(self) -> float:
        """Re-sum in the mandated order: intercept first, then schema order."""
        ordered = sorted(self.contributions, key=lambda c: c.term_index)
        logit = self.intercept
        for c in ordered:
            logit += c.score
        return logit


@dataclass
class GlobalImportance:
    """Training-sample-weighted mean |contribution| per feature."""

    importances: dict[str, float]
    ranking: list[str]          # descending importance, name breaking ties

    def top(self, k: int = DEFAULT_TOP_K) -> list[tuple[str, float]]:
        return [(name, self.importances[name]) for name in self.ranking[:k]]


def explain_local(model: EbmModel, record: dict, top_k: int = DEFAULT_TOP_K) -> LocalExplanation:
    """All per-feature contributions for one record; additivity is exact over
    the full list. `top_k` only controls the default display slice.
    """
    bins = bin_record(record, model.schemas)
    logit = model.intercept
    contributions = []
    for j, (schema, term) in enumerate(zip(model.schemas, model.terms)):
        score = float(term.scores[bins[j]])
        logit += score
        contributions.append(Contribution(
            feature=schema.name,
            value=record.get(schema.name),
            bin_label=schema.bin_label(int(bins[j])),
            score=score,
            term_index=j,
        ))
    contributions.sort(key=lambda c: (-abs(c.score), c.feature))
    probability = float(sigmoid(np.asarray(logit)))
    positive = model.meta.get("positive_class", "positive")
    negative = "deceased" if positive == "living" else f"not-{positive}"
    return LocalExplanation(
        intercept=model.intercept,
        contributions=contributions,
        logit=float(logit),
        probability=probability,
        predicted_class=positive if probability >= 0.5 else negative,
    )


def explain_global(model: EbmModel, training_table: pd.DataFrame | None = None) -> GlobalImportance:
    """importance_f = sum_bins count(bin) * |score(bin)| / sum_bins count(bin).

    Uses the bin counts stored at training time unless a table is supplied,
    in which case occupancy is recomputed from it.
    """
    if training_table is None:
        counts = model.bin_counts
    else:
        bins = model.bin_matrix(training_table)
        counts = [
            np.bincount(bins[:, j], minlength=schema.n_bins).astype(float)
            for j, schema in enumerate(model.schemas)
        ]
    importances = {}
    for j, (schema, term) in enumerate(zip(model.schemas, model.terms)):
        weight = counts[j]
        total = weight.sum()
        importances[schema.name] = (
            float(np.dot(weight, np.abs(term.scores)) / total) if total > 0 else 0.0
        )
    ranking = sorted(importances, key=lambda name: (-importances[name], name))
    return GlobalImportance(importances=importances, ranking=ranking)


def term_curve(model: EbmModel, feature: str) -> list[tuple[str, float]]:
    """(bin label, score) pairs for one term, missing slot first."""
    for schema, term in zip(model.schemas, model.terms):
        if schema.name == feature:
            return [
                (schema.bin_label(i), float(term.scores[i]))
                for i in range(schema.n_bins)
            ]
    raise UnknownFeatureError(f"model has no feature {feature!r}")

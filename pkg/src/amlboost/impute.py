"""k-nearest-neighbor imputation of missing clinical cells.

Distances mix z-scored continuous fields (squared difference) with 0/1
categorical mismatch, restricted to fields observed in both rows and averaged
over however many such fields exist. Every fill is computed from the original
(pre-imputation) values, so record order cannot influence the result, and
non-missing cells are never altered. The survival label never participates.
"""

from __future__ import annotations

import logging
from dataclasses import replace

import numpy as np

from .cohort import PatientRecord
from .config import CLINICAL_CATEGORICAL, CLINICAL_CONTINUOUS, CLINICAL_PREDICTORS
from .errors import ImputationError

log = logging.getLogger(__name__)


def _encode(records: list[PatientRecord]):
    """(z-scored continuous matrix, categorical code matrix, code tables)."""
    n = len(records)
    cont = np.full((n, len(CLINICAL_CONTINUOUS)), np.nan)
    for j, name in enumerate(CLINICAL_CONTINUOUS):
        for i, r in enumerate(records):
            v = getattr(r, name)
            if v is not None:
                cont[i, j] = float(v)
    mean = np.nanmean(cont, axis=0)
    std = np.nanstd(cont, axis=0)
    std[~np.isfinite(std)] = 1.0
    std[std == 0.0] = 1.0
    zs = (cont - mean) / std

    codes = np.full((n, len(CLINICAL_CATEGORICAL)), -1, dtype=np.int64)
    categories = []
    for j, name in enumerate(CLINICAL_CATEGORICAL):
        observed = sorted({getattr(r, name) for r in records if getattr(r, name) is not None})
        table = {v: k for k, v in enumerate(observed)}
        categories.append(observed)
        for i, r in enumerate(records):
            v = getattr(r, name)
            if v is not None:
                codes[i, j] = table[v]
    return zs, codes, categories


def impute_knn(records: list[PatientRecord], k: int = 3) -> list[PatientRecord]:
    """Fill every missing clinical cell from the k nearest neighbors.

    Continuous fills are the neighbor mean; categorical fills are the
    neighbor mode with ties going to the lowest category code. Neighbor ties
    at the k-th distance break on sample_id lexicographic order.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    zs, codes, categories = _encode(records)
    n = len(records)
    n_cont = len(CLINICAL_CONTINUOUS)
    sample_ids = [r.sample_id for r in records]

    def distance(i: int, j: int, skip_field: str) -> float | None:
        total = 0.0
        count = 0
        for f, name in enumerate(CLINICAL_CONTINUOUS):
            if name == skip_field:
                continue
            a, b = zs[i, f], zs[j, f]
            if np.isnan(a) or np.isnan(b):
                continue
            total += (a - b) ** 2
            count += 1
        for f, name in enumerate(CLINICAL_CATEGORICAL):
            if name == skip_field:
                continue
            a, b = codes[i, f], codes[j, f]
            if a < 0 or b < 0:
                continue
            total += 0.0 if a == b else 1.0
            count += 1
        if count == 0:
            return None
        return total / count

    fills: dict[tuple[int, str], object] = {}
    for i, record in enumerate(records):
        missing = [name for name in CLINICAL_PREDICTORS if getattr(record, name) is None]
        if not missing:
            continue
        if len(missing) == len(CLINICAL_PREDICTORS):
            raise ImputationError(
                f"record {record.sample_id!r} is missing every clinical field"
            )
        for name in missing:
            candidates = []
            for j, other in enumerate(records):
                if j == i or getattr(other, name) is None:
                    continue
                d = distance(i, j, skip_field=name)
                if d is not None:
                    candidates.append((d, sample_ids[j], j))
            if not candidates:
                raise ImputationError(
                    f"record {record.sample_id!r}: no neighbor observes {name!r}"
                )
            candidates.sort()
            if len(candidates) < k:
                log.warning("record %s: only %d donors for %s (wanted %d)",
                            record.sample_id, len(candidates), name, k)
            nearest = candidates[:k]
            if name in CLINICAL_CONTINUOUS:
                fills[(i, name)] = float(
                    np.mean([getattr(records[j], name) for _, _, j in nearest])
                )
            else:
                field_idx = CLINICAL_CATEGORICAL.index(name)
                votes = np.zeros(len(categories[field_idx]), dtype=int)
                for _, _, j in nearest:
                    votes[codes[j, field_idx]] += 1
                winner = int(np.argmax(votes))  # argmax takes the lowest code on ties
                fills[(i, name)] = categories[field_idx][winner]

    out = []
    for i, record in enumerate(records):
        updates = {name: value for (idx, name), value in fills.items() if idx == i}
        out.append(replace(record, **updates) if updates else record)
    return out

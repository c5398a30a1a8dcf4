"""Feature discretization for the additive boosting engine.

Every feature maps onto integer bin indices with slot 0 reserved for
missing/unseen values. Continuous features get equal-frequency bins (at most
`max_bins`, duplicate cut points collapsed); categorical and binary features
get one bin per observed category, coded in sorted key order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .errors import BinningError, TrainingDataError

MISSING_BIN = 0
DEFAULT_MAX_BINS = 256

KIND_CONTINUOUS = "continuous"
KIND_CATEGORICAL = "categorical"
KIND_BINARY = "binary"
_KINDS = (KIND_CONTINUOUS, KIND_CATEGORICAL, KIND_BINARY)


def canon_category(value) -> str:
    """Canonical key for a categorical value.

    Integral floats collapse onto their integer spelling so CSV/JSON round
    trips ("1", 1, 1.0) hit the same bin.
    """
    if isinstance(value, str):
        return value.strip()
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        if np.isnan(value):
            raise ValueError("missing value has no category key")
        if float(value).is_integer():
            return str(int(value))
        return repr(float(value))
    return str(value)


def _is_missing(value) -> bool:
    if value is None:
        return True
    if isinstance(value, (float, np.floating)) and np.isnan(value):
        return True
    return False


@dataclass(frozen=True)
class FeatureSchema:
    """Bin layout of one feature; index 0 is the missing/unseen slot."""

    name: str
    kind: str
    bin_edges: tuple[float, ...] = ()       # interior cut points, ascending
    categories: tuple[str, ...] = ()        # sorted category keys
    category_index: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise BinningError(f"{self.name}: unknown feature kind {self.kind!r}")
        if self.kind == KIND_CONTINUOUS:
            edges = np.asarray(self.bin_edges, dtype=float)
            if edges.size and not np.all(np.diff(edges) > 0):
                raise BinningError(f"{self.name}: bin edges must be strictly ascending")
        object.__setattr__(
            self, "category_index", {c: i + 1 for i, c in enumerate(self.categories)}
        )

    @property
    def n_bins(self) -> int:
        """Total bins including the missing slot."""
        if self.kind == KIND_CONTINUOUS:
            return len(self.bin_edges) + 2
        return len(self.categories) + 1

    def bin_value(self, value, strict: bool = False) -> int:
        """Bin index for one raw value; missing/unseen go to bin 0."""
        if _is_missing(value):
            if strict:
                raise TrainingDataError(f"feature {self.name!r}: missing value in training data")
            return MISSING_BIN
        if self.kind == KIND_CONTINUOUS:
            v = float(value)
            if not np.isfinite(v):
                if strict:
                    raise TrainingDataError(f"feature {self.name!r}: non-finite value {value!r}")
                return MISSING_BIN
            return 1 + int(np.searchsorted(np.asarray(self.bin_edges), v, side="right"))
        key = canon_category(value)
        idx = self.category_index.get(key)
        if idx is None:
            if strict:
                raise TrainingDataError(
                    f"feature {self.name!r}: unseen category {key!r} in training data"
                )
            return MISSING_BIN
        return idx

    def bin_column(self, values, strict: bool = False) -> np.ndarray:
        """Vectorized `bin_value` over a column."""
        out = np.empty(len(values), dtype=np.int32)
        if self.kind == KIND_CONTINUOUS:
            v = pd.to_numeric(pd.Series(values), errors="coerce").to_numpy(dtype=float)
            finite = np.isfinite(v)
            if strict and not finite.all():
                bad = int(np.flatnonzero(~finite)[0])
                raise TrainingDataError(
                    f"feature {self.name!r}: missing or non-finite value at row {bad}"
                )
            out[:] = MISSING_BIN
            edges = np.asarray(self.bin_edges, dtype=float)
            out[finite] = 1 + np.searchsorted(edges, v[finite], side="right").astype(np.int32)
            return out
        for i, value in enumerate(values):
            out[i] = self.bin_value(value, strict=strict)
        return out

    def bin_label(self, index: int) -> str:
        """Human-readable label: interval string or category name."""
        if index == MISSING_BIN:
            return "missing"
        if self.kind != KIND_CONTINUOUS:
            return self.categories[index - 1]
        edges = self.bin_edges
        lo = "-inf" if index == 1 else f"{edges[index - 2]:.4g}"
        hi = "inf" if index == len(edges) + 1 else f"{edges[index - 1]:.4g}"
        return f"[{lo}, {hi})"

    def labels(self) -> list[str]:
        return [self.bin_label(i) for i in range(self.n_bins)]


MIN_BIN_SAMPLES = 4


def _continuous_edges(values: np.ndarray, max_bins: int) -> tuple[float, ...]:
    uniq = np.unique(values)
    if uniq.size <= 1:
        return ()
    # cap granularity so each bin can hold a few training rows
    occupancy_cap = max(2, values.size // MIN_BIN_SAMPLES)
    n_bins = min(max_bins, occupancy_cap, uniq.size)
    qs = np.linspace(0.0, 1.0, n_bins + 1)[1:-1]
    edges = np.unique(np.quantile(values, qs))
    # interior cuts only: an edge at the max would leave the last bin empty
    return tuple(float(e) for e in edges if uniq[0] < e <= uniq[-1])


def infer_kind(values: pd.Series) -> str:
    numeric = pd.to_numeric(values, errors="coerce")
    observed = values[values.notna()]
    if numeric.notna().sum() == observed.size:
        present = numeric.dropna().unique()
        if np.isin(present, (0.0, 1.0)).all():
            return KIND_BINARY
        return KIND_CONTINUOUS
    return KIND_CATEGORICAL


def bin_fit(table: pd.DataFrame, kinds: dict[str, str] | None = None,
            max_bins: int = DEFAULT_MAX_BINS) -> list[FeatureSchema]:
    """Fit one FeatureSchema per column of a training table."""
    kinds = kinds or {}
    schemas = []
    for name in table.columns:
        col = table[name]
        kind = kinds.get(name) or infer_kind(col)
        observed = col[col.notna()]
        if observed.empty:
            raise BinningError(f"feature {name!r}: every training value is missing")
        if kind == KIND_CONTINUOUS:
            values = pd.to_numeric(observed, errors="coerce").to_numpy(dtype=float)
            values = values[np.isfinite(values)]
            if values.size == 0:
                raise BinningError(f"feature {name!r}: no finite values to bin")
            schemas.append(FeatureSchema(name=name, kind=kind,
                                         bin_edges=_continuous_edges(values, max_bins)))
        else:
            cats = sorted({canon_category(v) for v in observed})
            schemas.append(FeatureSchema(name=name, kind=kind, categories=tuple(cats)))
    return schemas


def bin_table(table: pd.DataFrame, schemas: list[FeatureSchema],
              strict: bool = False) -> np.ndarray:
    """(n_rows, n_features) int32 bin matrix in schema order."""
    out = np.empty((len(table), len(schemas)), dtype=np.int32)
    for j, schema in enumerate(schemas):
        if schema.name not in table.columns:
            raise BinningError(f"feature {schema.name!r} absent from the table")
        out[:, j] = schema.bin_column(table[schema.name].to_list(), strict=strict)
    return out


def bin_record(record: dict, schemas: list[FeatureSchema]) -> np.ndarray:
    """Bin one feature->value mapping; absent keys route to the missing bin."""
    out = np.empty(len(schemas), dtype=np.int32)
    for j, schema in enumerate(schemas):
        out[j] = schema.bin_value(record.get(schema.name), strict=False)
    return out

"""The seven-model experiment grid over multiple stratified holdout seeds.

Each seed re-runs feature selection on its own train+validation rows (the
test partition is never read before final evaluation), trains one model per
feature-set combination on the training rows, and evaluates on the held-out
test rows. Because the original single split is not reproducible, results
are reported per seed plus as medians over seeds.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .binning import KIND_BINARY, KIND_CATEGORICAL, KIND_CONTINUOUS
from .cohort import PatientRecord, records_to_frames
from .config import CLINICAL_CATEGORICAL, CLINICAL_CONTINUOUS, CLINICAL_PREDICTORS, LABEL_LIVING
from .ebm import EbmConfig, EbmModel, train
from .errors import TrainingDataError
from .featsel import chi2_select, l1_select, literature_genes
from .metrics import MetricsReport, metrics_report, stratified_split

log = logging.getLogger(__name__)

MODEL_IDS = ("CLIN", "MUT", "EXP", "CLIN+MUT", "CLIN+EXP", "MUT+EXP", "CLIN+MUT+EXP")
TABLE_COLUMNS = ("Model", "F1-Score", "AUC", "Accuracy", "Precision", "Recall")


@dataclass
class GridConfig:
    seeds: tuple = tuple(range(20))
    fractions: tuple = (0.8, 0.1, 0.1)
    alpha: float = 0.05
    exp_target_count: int = 22
    literature_only: bool = False    # comparison arm: literature genes only
    ebm: EbmConfig = field(default_factory=EbmConfig)


@dataclass
class SeedSelection:
    seed: int
    mut_features: list[str]
    exp_features: list[str]
    chi2_selected: list[str]


@dataclass
class GridResult:
    reports: list[MetricsReport]            # one per (model, seed)
    selections: list[SeedSelection]
    config: GridConfig

    def per_seed_frame(self) -> pd.DataFrame:
        rows = []
        for r in self.reports:
            row = r.row()
            row["Seed"] = r.extra["seed"]
            rows.append(row)
        return pd.DataFrame(rows, columns=("Seed",) + TABLE_COLUMNS)

    def median_frame(self) -> pd.DataFrame:
        """Median-over-seeds table in the published layout."""
        rows = []
        for model_id in MODEL_IDS:
            subset = [r for r in self.reports if r.model_id == model_id]
            if not subset:
                continue
            entry = {"Model": model_id}
            for column, attr in (("F1-Score", "f1"), ("AUC", "auc"),
                                 ("Accuracy", "accuracy"), ("Precision", "precision"),
                                 ("Recall", "recall")):
                values = [getattr(r, attr) for r in subset if getattr(r, attr) is not None]
                entry[column] = float(np.median(values)) if values else float("nan")
            rows.append(entry)
        return pd.DataFrame(rows, columns=TABLE_COLUMNS)

    def median_text(self) -> str:
        frame = self.median_frame()
        widths = {c: max(len(c), 12) for c in frame.columns}
        head = "  ".join(c.ljust(widths[c]) for c in frame.columns)
        lines = [head, "-" * len(head)]
        for _, row in frame.iterrows():
            cells = [str(row["Model"]).ljust(widths["Model"])]
            for c in frame.columns[1:]:
                cells.append(f"{row[c]:.2f}".ljust(widths[c]))
            lines.append("  ".join(cells))
        return "\n".join(lines)


def clinical_kinds() -> dict[str, str]:
    kinds = {name: KIND_CONTINUOUS for name in CLINICAL_CONTINUOUS}
    kinds.update({name: KIND_CATEGORICAL for name in CLINICAL_CATEGORICAL})
    return kinds


def _dataset(model_id: str, clin: pd.DataFrame, mut: pd.DataFrame, exp: pd.DataFrame,
             mut_features: list[str], exp_features: list[str]):
    """Column-union table plus per-column kinds for one grid cell.

    A gene can be selected as both a mutation flag and an expression level;
    the expression column then gets an `_expr` suffix so the union table
    keeps unique names.
    """
    pieces = []
    kinds: dict[str, str] = {}
    parts = model_id.split("+")
    if "CLIN" in parts:
        pieces.append(clin[list(CLINICAL_PREDICTORS)])
        kinds.update(clinical_kinds())
    if "MUT" in parts:
        pieces.append(mut[mut_features])
        kinds.update({g: KIND_BINARY for g in mut_features})
    if "EXP" in parts:
        taken = set(kinds)
        renames = {g: f"{g}_expr" for g in exp_features if g in taken}
        piece = exp[exp_features].rename(columns=renames)
        pieces.append(piece)
        kinds.update({renames.get(g, g): KIND_CONTINUOUS for g in exp_features})
    table = pd.concat(pieces, axis=1)
    if "treatment_intensity" not in table.columns:  # meta column rides on every set
        table["treatment_intensity"] = clin["treatment_intensity"]
        kinds["treatment_intensity"] = KIND_CATEGORICAL
    return table, kinds


def select_features_for_seed(mut: pd.DataFrame, exp: pd.DataFrame, labels,
                             split, config: GridConfig) -> SeedSelection:
    """Re-run both selection procedures on this split's train+validation rows."""
    available_lit = [g for g in literature_genes() if g in mut.columns]
    if config.literature_only:
        exp_lit = [g for g in literature_genes() if g in exp.columns]
        return SeedSelection(seed=split.seed, mut_features=sorted(available_lit),
                             exp_features=sorted(exp_lit), chi2_selected=[])
    chi2 = chi2_select(mut.to_numpy(), labels, alpha=config.alpha,
                       feature_names=list(mut.columns),
                       rows=split.trainval, test_rows=split.test)
    chi2_hits = [r.feature for r in chi2 if r.selected]
    mut_features = sorted(set(chi2_hits) | set(available_lit))
    path = l1_select(exp.to_numpy(), labels, target_count=config.exp_target_count,
                     feature_names=list(exp.columns),
                     rows=split.trainval, test_rows=split.test)
    return SeedSelection(seed=split.seed, mut_features=mut_features,
                         exp_features=sorted(path.selected_features),
                         chi2_selected=chi2_hits)


def run_grid(records: list[PatientRecord], config: GridConfig | None = None,
             models: tuple = MODEL_IDS) -> GridResult:
    config = config or GridConfig()
    clin, mut, exp = records_to_frames(records)
    if not (clin.index.equals(mut.index) and clin.index.equals(exp.index)):
        raise TrainingDataError("cohort tables are misaligned by sample id")
    labels = (clin["survival_status"] == LABEL_LIVING).to_numpy().astype(int)
    sample_ids = clin.index.to_numpy()

    reports: list[MetricsReport] = []
    selections: list[SeedSelection] = []
    for seed in config.seeds:
        split = stratified_split(labels, config.fractions, seed=seed)
        split.assert_disjoint()
        selection = select_features_for_seed(mut, exp, labels, split, config)
        selections.append(selection)
        for model_id in models:
            table, kinds = _dataset(model_id, clin, mut, exp,
                                    selection.mut_features, selection.exp_features)
            ebm_config = EbmConfig(**{**vars(config.ebm), "seed": seed})
            model = train(table.iloc[split.train], labels[split.train],
                          config=ebm_config, sample_ids=sample_ids[split.train],
                          kinds=kinds,
                          meta_extra={"model_id": model_id, "split_seed": seed})
            probs = model.predict_proba(table.iloc[split.test])
            report = metrics_report(labels[split.test], probs,
                                    model_id=model_id, partition="test")
            report.extra["seed"] = seed
            reports.append(report)
        log.info("grid seed %d done", seed)
    return GridResult(reports=reports, selections=selections, config=config)


def train_full_model(records: list[PatientRecord], model_id: str,
                     mut_features: list[str], exp_features: list[str],
                     ebm_config: EbmConfig | None = None) -> EbmModel:
    """Train one deployable model on every record (no holdout)."""
    clin, mut, exp = records_to_frames(records)
    labels = (clin["survival_status"] == LABEL_LIVING).to_numpy().astype(int)
    table, kinds = _dataset(model_id, clin, mut, exp, mut_features, exp_features)
    return train(table, labels, config=ebm_config or EbmConfig(),
                 sample_ids=clin.index.to_numpy(), kinds=kinds,
                 meta_extra={"model_id": model_id, "holdout": "none"})

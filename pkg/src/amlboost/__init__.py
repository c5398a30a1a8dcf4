"""Explainable survival-outcome prediction and therapy-intensity decision
support for pooled AML cohorts."""

__version__ = "0.1.0"

from .binning import FeatureSchema, bin_fit, bin_table
from .cohort import (
    CleanReport, FinalTables, PatientRecord, RawCohort, categorize_treatment,
    clean, export_final, ingest, load_bundle, save_bundle,
)
from .config import (
    ColumnSpec, ServiceConfig, TREATMENT_CATEGORIES, TREATMENT_INTENSITY_ORDER,
    load_column_spec, load_service_config, load_treatment_map,
)
from .ebm import EbmConfig, EbmModel, TermFunction, train
from .errors import AmlboostError
from .explain import (
    GlobalImportance, LocalExplanation, explain_global, explain_local, term_curve,
)
from .featsel import Chi2Result, L1Path, chi2_select, chi2_sf, l1_select, literature_genes
from .grid import GridConfig, GridResult, run_grid, train_full_model
from .impute import impute_knn
from .metrics import MetricsReport, SplitIndices, auc_score, metrics_report, stratified_split
from .recommend import TherapyRecommendation, recommend
from .store import load_model, model_version_hash, save_model

__all__ = [
    "AmlboostError", "Chi2Result", "CleanReport", "ColumnSpec", "EbmConfig",
    "EbmModel", "FeatureSchema", "FinalTables", "GlobalImportance", "GridConfig",
    "GridResult", "L1Path", "LocalExplanation", "MetricsReport", "PatientRecord",
    "RawCohort", "ServiceConfig", "SplitIndices", "TermFunction",
    "TherapyRecommendation", "TREATMENT_CATEGORIES", "TREATMENT_INTENSITY_ORDER",
    "auc_score", "bin_fit", "bin_table", "categorize_treatment", "chi2_select",
    "chi2_sf", "clean", "explain_global", "explain_local", "export_final",
    "ingest", "impute_knn", "l1_select", "literature_genes", "load_bundle",
    "load_column_spec", "load_model", "load_service_config", "load_treatment_map",
    "metrics_report", "model_version_hash", "recommend", "run_grid",
    "save_bundle", "save_model", "stratified_split", "term_curve", "train",
    "train_full_model",
]

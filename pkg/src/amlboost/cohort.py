"""Cohort ingestion, cleaning, treatment categorization, and final exports.

The pipeline pools two cBioPortal-style cohort exports (clinical table plus
wide gene-by-sample mutation and expression matrices), applies the cleaning
rules (adult AML only, survival status present, duplicates dropped, features
restricted to those present in every cohort, mutation columns that are zero
across all retained samples removed), and emits aligned per-patient records.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import pandas as pd

from .config import (
    CLINICAL_CATEGORICAL,
    CLINICAL_CONTINUOUS,
    CLINICAL_PREDICTORS,
    LABEL_DECEASED,
    LABEL_FIELD,
    LABEL_LIVING,
    ColumnSpec,
    TREATMENT_CATEGORIES,
)
from .errors import CleanError, ExportError, IngestError, TreatmentMappingError

log = logging.getLogger(__name__)

MISSING_MARKERS = {"", "na", "nan"}


def is_missing_marker(raw: str) -> bool:
    return raw.strip().lower() in MISSING_MARKERS


@dataclass
class PatientRecord:
    """One patient's clinical values, gene flags/levels, and survival label.

    Clinical fields may be None until imputation; treatment_intensity may
    hold a raw therapy name until categorization.
    """

    sample_id: str
    source_id: str = ""
    diagnosis_age: float | None = None
    bm_blast_pct: float | None = None
    mutation_count: float | None = None
    pb_blast_pct: float | None = None
    wbc: float | None = None
    gender: str | None = None
    race: str | None = None
    cytogenetic_info: str | None = None
    eln_risk: str | None = None
    treatment_intensity: str | None = None
    survival_status: str | None = None
    mutations: dict = field(default_factory=dict)
    expressions: dict = field(default_factory=dict)

    def clinical(self) -> dict:
        return {name: getattr(self, name) for name in CLINICAL_PREDICTORS}

    def validate(self, require_complete: bool = True,
                 require_categorized: bool = True) -> list[str]:
        """Invariant violations (empty list when the record is sound)."""
        problems = []
        if self.diagnosis_age is not None and self.diagnosis_age < 18:
            problems.append(f"diagnosis_age {self.diagnosis_age} < 18")
        if self.bm_blast_pct is not None and not (20 <= self.bm_blast_pct <= 100):
            problems.append(f"bm_blast_pct {self.bm_blast_pct} outside [20, 100]")
        if self.pb_blast_pct is not None and not (0 <= self.pb_blast_pct <= 100):
            problems.append(f"pb_blast_pct {self.pb_blast_pct} outside [0, 100]")
        if self.wbc is not None and self.wbc <= 0:
            problems.append(f"wbc {self.wbc} not positive")
        if self.mutation_count is not None and self.mutation_count < 0:
            problems.append(f"mutation_count {self.mutation_count} negative")
        if self.survival_status not in (LABEL_LIVING, LABEL_DECEASED):
            problems.append(f"survival_status {self.survival_status!r} invalid")
        if require_categorized and self.treatment_intensity not in TREATMENT_CATEGORIES:
            problems.append(f"treatment_intensity {self.treatment_intensity!r} not categorized")
        if require_complete:
            for name in CLINICAL_PREDICTORS:
                if getattr(self, name) is None:
                    problems.append(f"{name} missing")
        return problems


@dataclass
class IngestLog:
    source_id: str
    clinical_rows: int = 0
    duplicate_clinical_rows: int = 0
    duplicate_gene_rows: dict = field(default_factory=dict)      # table -> count
    duplicate_sample_columns: dict = field(default_factory=dict)  # table -> count
    unjoined_sample_columns: dict = field(default_factory=dict)   # table -> count
    unparseable_cells: dict = field(default_factory=dict)         # column -> count


@dataclass
class RawCohort:
    """One cohort's typed tables; sample ids unique within each table."""

    source_id: str
    clinical: pd.DataFrame       # index: sample_id; columns: canonical fields
    mutations: pd.DataFrame      # index: sample_id; columns: genes; 0/1 ints
    expressions: pd.DataFrame    # index: sample_id; columns: genes; floats
    available_fields: tuple      # canonical clinical fields present in the export
    log: IngestLog


def _read_csv_checked(path: Path, what: str) -> pd.DataFrame:
    if not Path(path).is_file():
        raise IngestError(f"{what} file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        header = next(csv.reader(fh), None)
    if not header:
        raise IngestError(f"{what} file {path} is empty (no header row)")
    dupes = {h for h in header if header.count(h) > 1}
    if dupes:
        raise IngestError(f"{what} file {path} has duplicated header names: {sorted(dupes)}")
    return pd.read_csv(path, dtype=str, keep_default_na=False)


def _clean_cell(raw) -> str | None:
    raw = "" if raw is None else str(raw)
    return None if is_missing_marker(raw) else raw.strip()


def _coerce_float(raw: str | None):
    if raw is None:
        return None
    try:
        value = float(raw)
    except ValueError:
        return math.nan  # unparseable: becomes a missing marker, counted by caller
    return value if math.isfinite(value) else math.nan


def ingest(clinical_path, mutation_path, expression_path, source_id: str,
           spec: ColumnSpec) -> RawCohort:
    """Parse one cohort's three exports into typed, joined tables."""
    clin_raw = _read_csv_checked(Path(clinical_path), "clinical")
    if spec.sample_id not in clin_raw.columns:
        raise IngestError(
            f"clinical file {clinical_path} lacks the sample-id column {spec.sample_id!r}"
        )
    logbook = IngestLog(source_id=source_id)

    ids = clin_raw[spec.sample_id].map(lambda v: (_clean_cell(v) or ""))
    keep = ~ids.duplicated(keep="first") & (ids != "")
    logbook.duplicate_clinical_rows = int(ids.duplicated(keep="first").sum())
    clin_raw = clin_raw[keep]
    ids = ids[keep]

    available = []
    data = {"sample_id": ids.to_numpy()}
    for name in CLINICAL_PREDICTORS + (LABEL_FIELD,):
        raw_col = spec.clinical.get(name)
        if raw_col is None or raw_col not in clin_raw.columns:
            continue
        available.append(name)
        cells = [_clean_cell(v) for v in clin_raw[raw_col]]
        if name in CLINICAL_CONTINUOUS:
            values = [_coerce_float(v) for v in cells]
            bad = sum(1 for v in values if v is not None and isinstance(v, float) and math.isnan(v))
            if bad:
                logbook.unparseable_cells[name] = bad
                values = [None if (v is not None and math.isnan(v)) else v for v in values]
            data[name] = values
        elif name == LABEL_FIELD:
            normalized = []
            bad = 0
            for v in cells:
                if v is None:
                    normalized.append(None)
                    continue
                mapped = spec.survival_values.get(v, v).strip().lower()
                if mapped in (LABEL_LIVING, LABEL_DECEASED):
                    normalized.append(mapped)
                else:
                    normalized.append(None)
                    bad += 1
            if bad:
                logbook.unparseable_cells[name] = bad
            data[name] = normalized
        else:
            data[name] = cells
    clinical = pd.DataFrame(data).set_index("sample_id")
    logbook.clinical_rows = len(clinical)

    def read_gene_table(path, what, binarize):
        raw = _read_csv_checked(Path(path), what)
        gene_col = spec.gene_id_column or raw.columns[0]
        if gene_col not in raw.columns:
            raise IngestError(f"{what} file {path} lacks gene-id column {gene_col!r}")
        genes = raw[gene_col].map(lambda v: (_clean_cell(v) or ""))
        keep_rows = ~genes.duplicated(keep="first") & (genes != "")
        logbook.duplicate_gene_rows[what] = int((~keep_rows).sum())
        raw = raw[keep_rows]
        genes = genes[keep_rows]
        sample_cols = [c for c in raw.columns if c != gene_col]
        seen = set()
        joined, dup_cols, unjoined = [], 0, 0
        for c in sample_cols:
            if c in seen:
                dup_cols += 1
                continue
            seen.add(c)
            if c in clinical.index:
                joined.append(c)
            else:
                unjoined += 1
        logbook.duplicate_sample_columns[what] = dup_cols
        logbook.unjoined_sample_columns[what] = unjoined
        if unjoined:
            log.info("%s/%s: dropped %d sample columns with no clinical row",
                     source_id, what, unjoined)
        block = raw[joined].apply(pd.to_numeric, errors="coerce")
        table = block.T
        table.columns = genes.to_list()
        table.index.name = "sample_id"
        if binarize:
            missing = int(table.isna().sum().sum())
            if missing:
                logbook.unparseable_cells[f"{what} cells"] = missing
            return (table.fillna(0.0) > 0).astype(np.int8)
        return table.astype(float)

    mutations = read_gene_table(mutation_path, "mutations", binarize=True)
    expressions = read_gene_table(expression_path, "expressions", binarize=False)
    return RawCohort(
        source_id=source_id,
        clinical=clinical,
        mutations=mutations,
        expressions=expressions,
        available_fields=tuple(available),
        log=logbook,
    )


@dataclass
class CleanReport:
    """Audit trail of one clean() run; arithmetic must balance exactly."""

    input_samples: int
    removed_underage: int = 0
    removed_low_blast: int = 0
    removed_no_survival: int = 0
    removed_duplicates: int = 0
    removed_incomplete: int = 0   # present in clinical but absent from MUT/EXP
    dropped_features: list = field(default_factory=list)  # (name, reason)
    retained_samples: int = 0
    class_counts: dict = field(default_factory=dict)

    @property
    def total_removed(self) -> int:
        return (self.removed_underage + self.removed_low_blast
                + self.removed_no_survival + self.removed_duplicates
                + self.removed_incomplete)

    def check_balance(self):
        if self.input_samples != self.retained_samples + self.total_removed:
            raise AssertionError(
                f"clean report does not balance: {self.input_samples} input != "
                f"{self.retained_samples} retained + {self.total_removed} removed"
            )
        if sum(self.class_counts.values()) != self.retained_samples:
            raise AssertionError("class counts do not sum to retained samples")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_text(self) -> str:
        lines = [
            "Cohort cleaning report",
            "======================",
            f"input samples:        {self.input_samples}",
            f"removed underage:     {self.removed_underage}",
            f"removed low blast:    {self.removed_low_blast}",
            f"removed no survival:  {self.removed_no_survival}",
            f"removed duplicates:   {self.removed_duplicates}",
            f"removed incomplete:   {self.removed_incomplete}",
            f"retained samples:     {self.retained_samples}",
            "class counts:         "
            + ", ".join(f"{k}={v}" for k, v in sorted(self.class_counts.items())),
            f"dropped feature columns: {len(self.dropped_features)}",
        ]
        by_reason: dict[str, int] = {}
        for _, reason in self.dropped_features:
            by_reason[reason] = by_reason.get(reason, 0) + 1
        for reason, count in sorted(by_reason.items()):
            lines.append(f"  - {count} ({reason})")
        return "\n".join(lines)

    def save(self, directory: Path, stem: str = "clean_report"):
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        (directory / f"{stem}.txt").write_text(self.to_text() + "\n", encoding="utf-8")
        (directory / f"{stem}.json").write_text(
            json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8"
        )


def clean(cohorts: list[RawCohort]) -> tuple[list[PatientRecord], CleanReport]:
    """Apply the cleaning rules to pooled cohorts and build patient records."""
    if not cohorts:
        raise CleanError("no cohorts to clean")
    report = CleanReport(input_samples=sum(len(c.clinical) for c in cohorts))

    shared_fields = set(CLINICAL_PREDICTORS + (LABEL_FIELD,))
    shared_mut = None
    shared_exp = None
    for cohort in cohorts:
        shared_fields &= set(cohort.available_fields)
        mut_genes = set(cohort.mutations.columns)
        exp_genes = set(cohort.expressions.columns)
        shared_mut = mut_genes if shared_mut is None else shared_mut & mut_genes
        shared_exp = exp_genes if shared_exp is None else shared_exp & exp_genes
    for cohort in cohorts:
        for name in cohort.available_fields:
            if name not in shared_fields:
                report.dropped_features.append(
                    (name, f"clinical field absent from some cohort (present in {cohort.source_id})")
                )
        for gene in sorted(set(cohort.mutations.columns) - shared_mut):
            report.dropped_features.append(
                (gene, f"mutation gene absent from some cohort (present in {cohort.source_id})")
            )
        for gene in sorted(set(cohort.expressions.columns) - shared_exp):
            report.dropped_features.append(
                (gene, f"expression gene absent from some cohort (present in {cohort.source_id})")
            )
    mut_genes = sorted(shared_mut)
    exp_genes = sorted(shared_exp)

    records: list[PatientRecord] = []
    seen: set[str] = set()
    for cohort in cohorts:
        mut_block = cohort.mutations[mut_genes].to_numpy() if mut_genes else np.empty((len(cohort.mutations), 0))
        exp_block = cohort.expressions[exp_genes].to_numpy(dtype=float) if exp_genes else np.empty((len(cohort.expressions), 0))
        mut_pos = {sid: i for i, sid in enumerate(cohort.mutations.index)}
        exp_pos = {sid: i for i, sid in enumerate(cohort.expressions.index)}
        for sample_id, row in cohort.clinical.iterrows():
            if sample_id in seen:
                report.removed_duplicates += 1
                continue
            seen.add(sample_id)
            get = lambda name: row[name] if name in shared_fields and name in row.index else None
            age = get("diagnosis_age")
            blast = get("bm_blast_pct")
            survival = get(LABEL_FIELD)
            if age is not None and not (isinstance(age, float) and math.isnan(age)) and age < 18:
                report.removed_underage += 1
                continue
            if blast is not None and not (isinstance(blast, float) and math.isnan(blast)) and blast < 20:
                report.removed_low_blast += 1
                continue
            if survival is None or (isinstance(survival, float) and math.isnan(survival)):
                report.removed_no_survival += 1
                continue
            if sample_id not in mut_pos or sample_id not in exp_pos:
                report.removed_incomplete += 1
                continue

            def field_value(name):
                v = get(name)
                if v is None or (isinstance(v, float) and math.isnan(v)):
                    return None
                return v

            records.append(PatientRecord(
                sample_id=str(sample_id),
                source_id=cohort.source_id,
                diagnosis_age=field_value("diagnosis_age"),
                bm_blast_pct=field_value("bm_blast_pct"),
                mutation_count=field_value("mutation_count"),
                pb_blast_pct=field_value("pb_blast_pct"),
                wbc=field_value("wbc"),
                gender=field_value("gender"),
                race=field_value("race"),
                cytogenetic_info=field_value("cytogenetic_info"),
                eln_risk=field_value("eln_risk"),
                treatment_intensity=field_value("treatment_intensity"),
                survival_status=survival,
                mutations={g: int(v) for g, v in zip(mut_genes, mut_block[mut_pos[sample_id]])},
                expressions={g: float(v) for g, v in zip(exp_genes, exp_block[exp_pos[sample_id]])},
            ))

    # mutation columns that are zero across every retained sample
    if records:
        zero_genes = [
            g for g in mut_genes
            if not any(r.mutations[g] for r in records)
        ]
        for g in zero_genes:
            report.dropped_features.append((g, "no mutations among retained samples"))
        if zero_genes:
            zero = set(zero_genes)
            for r in records:
                r.mutations = {g: v for g, v in r.mutations.items() if g not in zero}

    report.retained_samples = len(records)
    report.class_counts = {
        LABEL_LIVING: sum(1 for r in records if r.survival_status == LABEL_LIVING),
        LABEL_DECEASED: sum(1 for r in records if r.survival_status == LABEL_DECEASED),
    }
    report.check_balance()
    if not records:
        raise CleanError("no samples survived cleaning", report=report)
    return records, report


def categorize_treatment(records: list[PatientRecord],
                         mapping: dict[str, str]) -> list[PatientRecord]:
    """Map raw therapy names onto the four intensity categories.

    Values already in a category pass through; every other non-missing value
    must have a mapping entry, otherwise all unmapped names are reported.
    """
    unmapped = []
    out = []
    for record in records:
        raw = record.treatment_intensity
        if raw is None or raw in TREATMENT_CATEGORIES:
            out.append(record)
            continue
        category = mapping.get(raw)
        if category is None:
            unmapped.append(raw)
            continue
        out.append(replace(record, treatment_intensity=category))
    if unmapped:
        raise TreatmentMappingError(unmapped)
    return out


@dataclass
class FinalTables:
    """The three aligned model-ready tables, keyed by sample_id."""

    clin: pd.DataFrame
    mut: pd.DataFrame
    exp: pd.DataFrame

    def save(self, directory: Path):
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        for name, frame in (("clin", self.clin), ("mut", self.mut), ("exp", self.exp)):
            frame.to_csv(directory / f"{name}.csv")


def export_final(records: list[PatientRecord], mut_genes: list[str],
                 exp_genes: list[str]) -> FinalTables:
    """Emit CLIN / MUT / EXP tables restricted to the selected gene lists."""
    if not records:
        raise ExportError("no records to export")
    for gene in mut_genes:
        if gene not in records[0].mutations:
            raise ExportError(f"requested mutation gene {gene!r} absent from the cohort")
    for gene in exp_genes:
        if gene not in records[0].expressions:
            raise ExportError(f"requested expression gene {gene!r} absent from the cohort")
    index = pd.Index([r.sample_id for r in records], name="sample_id")
    clin = pd.DataFrame(
        {name: [getattr(r, name) for r in records] for name in CLINICAL_PREDICTORS},
        index=index,
    )
    clin[LABEL_FIELD] = [r.survival_status for r in records]
    mut = pd.DataFrame(
        {g: [r.mutations[g] for r in records] for g in mut_genes}, index=index
    )
    exp = pd.DataFrame(
        {g: [r.expressions[g] for r in records] for g in exp_genes}, index=index
    )
    for frame in (mut, exp):
        frame["treatment_intensity"] = [r.treatment_intensity for r in records]
        frame[LABEL_FIELD] = [r.survival_status for r in records]
    return FinalTables(clin=clin, mut=mut, exp=exp)


def save_cohort(cohort: RawCohort, directory) -> Path:
    """Persist one ingested cohort in canonical form for later clean()."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    cohort.clinical.to_csv(directory / "clinical.csv")
    cohort.mutations.to_csv(directory / "mutations.csv")
    cohort.expressions.to_csv(directory / "expressions.csv")
    meta = {
        "source_id": cohort.source_id,
        "available_fields": list(cohort.available_fields),
        "ingest_log": dataclasses.asdict(cohort.log),
    }
    (directory / "cohort.json").write_text(json.dumps(meta, indent=2), encoding="utf-8")
    return directory


def load_cohort(directory) -> RawCohort:
    directory = Path(directory)
    meta_path = directory / "cohort.json"
    if not meta_path.is_file():
        raise IngestError(f"{directory} is not an ingested-cohort directory")
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    clinical = pd.read_csv(directory / "clinical.csv", index_col="sample_id",
                           dtype={"sample_id": str}, keep_default_na=False)
    for name in CLINICAL_CONTINUOUS:
        if name in clinical.columns:
            clinical[name] = pd.to_numeric(clinical[name], errors="coerce")
    for name in CLINICAL_CATEGORICAL + (LABEL_FIELD,):
        if name in clinical.columns:
            clinical[name] = [
                None if is_missing_marker(str(v)) else str(v).strip()
                for v in clinical[name]
            ]
    mutations = pd.read_csv(directory / "mutations.csv", index_col="sample_id").astype(np.int8)
    expressions = pd.read_csv(directory / "expressions.csv", index_col="sample_id").astype(float)
    mutations.index = mutations.index.astype(str)
    expressions.index = expressions.index.astype(str)
    log_data = meta.get("ingest_log", {})
    return RawCohort(
        source_id=meta["source_id"],
        clinical=clinical,
        mutations=mutations,
        expressions=expressions,
        available_fields=tuple(meta.get("available_fields", ())),
        log=IngestLog(**log_data) if log_data else IngestLog(source_id=meta["source_id"]),
    )


# --------------------------------------------------------------------------
# record bundle round-trip (the CLI's interchange format between stages)
# --------------------------------------------------------------------------

def records_to_frames(records: list[PatientRecord]):
    """(clin, mut, exp) frames over the full gene sets, aligned by sample."""
    index = pd.Index([r.sample_id for r in records], name="sample_id")
    clin = pd.DataFrame(
        {name: [getattr(r, name) for r in records] for name in CLINICAL_PREDICTORS},
        index=index,
    )
    clin["source_id"] = [r.source_id for r in records]
    clin[LABEL_FIELD] = [r.survival_status for r in records]
    mut_genes = sorted(records[0].mutations) if records else []
    exp_genes = sorted(records[0].expressions) if records else []
    mut = pd.DataFrame(
        {g: [r.mutations[g] for r in records] for g in mut_genes}, index=index
    )
    exp = pd.DataFrame(
        {g: [r.expressions[g] for r in records] for g in exp_genes}, index=index
    )
    return clin, mut, exp


def save_bundle(records: list[PatientRecord], directory) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    clin, mut, exp = records_to_frames(records)
    clin.to_csv(directory / "clin.csv")
    mut.to_csv(directory / "mut.csv")
    exp.to_csv(directory / "exp.csv")
    return directory


def load_bundle(directory) -> list[PatientRecord]:
    directory = Path(directory)
    clin = pd.read_csv(directory / "clin.csv", index_col="sample_id",
                       dtype={"sample_id": str}, keep_default_na=False)
    mut = pd.read_csv(directory / "mut.csv", index_col="sample_id")
    exp = pd.read_csv(directory / "exp.csv", index_col="sample_id")
    if not (mut.index.astype(str) == clin.index).all() or not (exp.index.astype(str) == clin.index).all():
        raise IngestError(f"bundle at {directory} has misaligned sample ids across tables")
    mut_genes = list(mut.columns)
    exp_genes = list(exp.columns)
    mut_block = mut.to_numpy()
    exp_block = exp.to_numpy(dtype=float)
    records = []
    for pos, sample_id in enumerate(clin.index):
        row = clin.loc[sample_id]

        def cell(name, numeric):
            v = row.get(name, "")
            v = _clean_cell(v)
            if v is None:
                return None
            return float(v) if numeric else v

        records.append(PatientRecord(
            sample_id=str(sample_id),
            source_id=str(row.get("source_id", "") or ""),
            diagnosis_age=cell("diagnosis_age", True),
            bm_blast_pct=cell("bm_blast_pct", True),
            mutation_count=cell("mutation_count", True),
            pb_blast_pct=cell("pb_blast_pct", True),
            wbc=cell("wbc", True),
            gender=cell("gender", False),
            race=cell("race", False),
            cytogenetic_info=cell("cytogenetic_info", False),
            eln_risk=cell("eln_risk", False),
            treatment_intensity=cell("treatment_intensity", False),
            survival_status=cell(LABEL_FIELD, False),
            mutations={g: int(v) for g, v in zip(mut_genes, mut_block[pos])},
            expressions={g: float(v) for g, v in zip(exp_genes, exp_block[pos])},
        ))
    return records

import numpy as np
import pandas as pd
import pytest

from amlboost.cohort import (
    CleanReport, IngestLog, PatientRecord, RawCohort, categorize_treatment, clean,
    export_final, ingest, load_bundle, records_to_frames, save_bundle,
)
from amlboost.config import ColumnSpec, load_column_spec
from amlboost.errors import (
    CleanError, ExportError, IngestError, TreatmentMappingError,
)

SPEC = ColumnSpec(
    sample_id="Sample ID",
    clinical={
        "diagnosis_age": "Age",
        "bm_blast_pct": "Blast",
        "survival_status": "Status",
        "gender": "Sex",
        "treatment_intensity": "Therapy",
    },
    survival_values={"Alive": "living", "Dead": "deceased"},
)


def write_cohort_files(tmp_path, clinical_rows, genes=("G1", "G2"), samples=None,
                       prefix="c"):
    """Small raw export triple; gene tables cover all clinical sample ids."""
    clin = tmp_path / f"{prefix}_clin.csv"
    header = "Sample ID,Age,Blast,Status,Sex,Therapy\n"
    clin.write_text(header + "\n".join(clinical_rows) + ("\n" if clinical_rows else ""))
    ids = samples or [row.split(",")[0] for row in clinical_rows]
    mut = tmp_path / f"{prefix}_mut.csv"
    rows = ["Hugo_Symbol," + ",".join(ids)]
    rng = np.random.default_rng(0)
    for g in genes:
        rows.append(g + "," + ",".join(str(int(rng.random() < 0.4)) for _ in ids))
    mut.write_text("\n".join(rows) + "\n")
    exp = tmp_path / f"{prefix}_exp.csv"
    rows = ["Hugo_Symbol," + ",".join(ids)]
    for g in genes:
        rows.append(g + "," + ",".join(f"{rng.normal(8, 2):.3f}" for _ in ids))
    exp.write_text("\n".join(rows) + "\n")
    return clin, mut, exp


def make_cohort(tmp_path, clinical_rows, source_id="T", **kw):
    clin, mut, exp = write_cohort_files(tmp_path, clinical_rows, prefix=source_id, **kw)
    return ingest(clin, mut, exp, source_id, SPEC)


class TestIngest:
    def test_row_counts_and_types(self, tmp_path):
        cohort = make_cohort(tmp_path, [
            "S1,63,45,Alive,F,Standard chemo",
            "S2,71,80,Dead,M,Palliative",
        ])
        assert len(cohort.clinical) == 2
        assert cohort.clinical.loc["S1", "diagnosis_age"] == 63.0
        assert cohort.clinical.loc["S2", "survival_status"] == "deceased"
        assert set(cohort.mutations.columns) == {"G1", "G2"}

    def test_empty_file_header_only(self, tmp_path):
        cohort = make_cohort(tmp_path, [], samples=[])
        assert len(cohort.clinical) == 0

    def test_unparseable_age_becomes_missing(self, tmp_path):
        cohort = make_cohort(tmp_path, [
            "S1,unknown,45,Alive,F,Standard chemo",
            "S2,70,80,Dead,M,Palliative",
        ])
        assert np.isnan(cohort.clinical.loc["S1", "diagnosis_age"])
        assert cohort.log.unparseable_cells.get("diagnosis_age") == 1
        assert len(cohort.clinical) == 2  # row retained

    def test_na_markers_case_insensitive(self, tmp_path):
        cohort = make_cohort(tmp_path, [
            "S1,NA,45,Alive,F,chemo",
            "S2,nan,50,Dead,,chemo",
            "S3,60,70,Alive,M,chemo",
        ])
        assert np.isnan(cohort.clinical.loc["S1", "diagnosis_age"])
        assert np.isnan(cohort.clinical.loc["S2", "diagnosis_age"])
        assert cohort.clinical.loc["S2", "gender"] is None

    def test_missing_sample_id_column_fatal(self, tmp_path):
        clin = tmp_path / "bad.csv"
        clin.write_text("Wrong,Age\nS1,60\n")
        _, mut, exp = write_cohort_files(tmp_path, ["S1,60,50,Alive,F,x"])
        with pytest.raises(IngestError, match="sample-id"):
            ingest(clin, mut, exp, "T", SPEC)

    def test_duplicate_headers_fatal(self, tmp_path):
        clin = tmp_path / "dup.csv"
        clin.write_text("Sample ID,Age,Age\nS1,60,61\n")
        _, mut, exp = write_cohort_files(tmp_path, ["S1,60,50,Alive,F,x"])
        with pytest.raises(IngestError, match="duplicated header"):
            ingest(clin, mut, exp, "T", SPEC)

    def test_within_table_duplicate_ids_keep_first(self, tmp_path):
        cohort = make_cohort(tmp_path, [
            "S1,60,50,Alive,F,chemo",
            "S1,65,55,Dead,M,chemo",
        ], samples=["S1"])
        assert len(cohort.clinical) == 1
        assert cohort.clinical.loc["S1", "diagnosis_age"] == 60.0
        assert cohort.log.duplicate_clinical_rows == 1

    def test_unjoined_gene_columns_dropped_and_logged(self, tmp_path):
        cohort = make_cohort(tmp_path, ["S1,60,50,Alive,F,chemo"],
                             samples=["S1", "GHOST"])
        assert list(cohort.mutations.index) == ["S1"]
        assert cohort.log.unjoined_sample_columns["mutations"] == 1


class TestClean:
    def rows(self):
        return [
            "S1,17,50,Alive,F,chemo",        # underage
            "S2,60,10,Dead,M,chemo",         # low blast
            "S3,60,50,NA,M,chemo",           # no survival
            "S4,60,50,Alive,F,chemo",        # keeper
            "S4,61,51,Dead,M,chemo",         # duplicate id (within table)
            "S5,75,80,Dead,M,palliative",    # keeper
            "S6,44,95,Dead,F,chemo",         # keeper
            "S7,51,62,Alive,F,chemo",        # keeper
        ]

    def test_rule_counting(self, tmp_path):
        cohort = make_cohort(tmp_path, self.rows(),
                             samples=[f"S{i}" for i in range(1, 8)])
        records, report = clean([cohort])
        assert report.input_samples == 7  # within-table dup removed at ingest
        assert report.removed_underage == 1
        assert report.removed_low_blast == 1
        assert report.removed_no_survival == 1
        assert report.removed_duplicates == 0
        assert report.retained_samples == 4
        assert {r.sample_id for r in records} == {"S4", "S5", "S6", "S7"}
        report.check_balance()

    def test_cross_cohort_duplicates(self, tmp_path):
        a = make_cohort(tmp_path, ["S1,60,50,Alive,F,chemo",
                                   "S2,61,55,Dead,M,chemo",
                                   "S3,62,60,Alive,F,chemo"], source_id="A")
        b = make_cohort(tmp_path, ["S2,70,70,Dead,M,palliative",
                                   "S9,55,45,Alive,F,chemo",
                                   "S8,58,48,Dead,F,chemo"], source_id="B")
        records, report = clean([a, b])
        assert report.removed_duplicates == 1
        s2 = next(r for r in records if r.sample_id == "S2")
        assert s2.source_id == "A"  # first occurrence kept

    def test_clean_already_clean_is_fixed_point(self, tmp_path):
        cohort = make_cohort(tmp_path, ["S1,60,50,Alive,F,chemo",
                                        "S2,61,55,Dead,M,chemo"])
        records, report = clean([cohort])
        assert report.total_removed == 0
        assert report.retained_samples == 2

    def test_idempotence_via_reconstruction(self, small_pipeline):
        _, records, _ = small_pipeline
        clin, mut, exp = records_to_frames(records)
        rebuilt = RawCohort(
            source_id="MERGED",
            clinical=clin.drop(columns=["source_id"]),
            mutations=mut.astype(np.int8),
            expressions=exp,
            available_fields=tuple(c for c in clin.columns if c != "source_id"),
            log=IngestLog(source_id="MERGED"),
        )
        records2, report2 = clean([rebuilt])
        assert report2.total_removed == 0
        assert report2.retained_samples == len(records)
        for a, b in zip(records, records2):
            assert a.sample_id == b.sample_id
            assert a.mutations == b.mutations
            assert a.survival_status == b.survival_status

    def test_feature_intersection_symmetric(self, tmp_path):
        a = make_cohort(tmp_path, ["A1,60,50,Alive,F,chemo",
                                   "A2,61,55,Dead,M,chemo"],
                        source_id="A", genes=("G1", "G2", "ONLY_A"))
        b = make_cohort(tmp_path, ["B1,62,60,Alive,F,chemo",
                                   "B2,63,65,Dead,M,chemo"],
                        source_id="B", genes=("G1", "G2", "ONLY_B"))
        rec_ab, _ = clean([a, b])
        rec_ba, _ = clean([b, a])
        genes_ab = set(rec_ab[0].mutations)
        genes_ba = set(rec_ba[0].mutations)
        assert genes_ab == genes_ba
        assert "ONLY_A" not in genes_ab and "ONLY_B" not in genes_ab

    def test_zero_mutation_genes_dropped(self, tmp_path):
        clin, _, exp = write_cohort_files(tmp_path, ["S1,60,50,Alive,F,x",
                                                     "S2,61,55,Dead,M,x"], prefix="z")
        mut = tmp_path / "z_mut2.csv"
        mut.write_text("Hugo_Symbol,S1,S2\nG1,1,0\nDEAD_GENE,0,0\n")
        cohort = ingest(clin, mut, exp, "Z", SPEC)
        records, report = clean([cohort])
        assert "DEAD_GENE" not in records[0].mutations
        assert ("DEAD_GENE", "no mutations among retained samples") in report.dropped_features

    def test_zero_survivors_fatal_with_report(self, tmp_path):
        cohort = make_cohort(tmp_path, ["S1,15,50,Alive,F,chemo"])
        with pytest.raises(CleanError) as err:
            clean([cohort])
        assert err.value.report is not None
        assert err.value.report.removed_underage == 1

    def test_retained_records_satisfy_invariants(self, small_pipeline):
        _, records, _ = small_pipeline
        for record in records:
            assert record.validate(require_complete=True, require_categorized=True) == []

    def test_missing_age_retained_for_imputation(self, tmp_path):
        cohort = make_cohort(tmp_path, ["S1,NA,50,Alive,F,chemo",
                                        "S2,61,55,Dead,M,chemo"])
        records, report = clean([cohort])
        assert report.retained_samples == 2
        assert next(r for r in records if r.sample_id == "S1").diagnosis_age is None


class TestCategorize:
    def records(self):
        return [
            PatientRecord(sample_id="S1", survival_status="living",
                          treatment_intensity="Standard chemo"),
            PatientRecord(sample_id="S2", survival_status="deceased",
                          treatment_intensity="low-intensity"),
        ]

    def test_mapping_and_identity(self):
        out = categorize_treatment(self.records(), {"Standard chemo": "regular"})
        assert out[0].treatment_intensity == "regular"
        assert out[1].treatment_intensity == "low-intensity"  # identity

    def test_unmapped_names_all_listed(self):
        records = self.records() + [
            PatientRecord(sample_id="S3", survival_status="living",
                          treatment_intensity="Mystery infusion"),
        ]
        with pytest.raises(TreatmentMappingError) as err:
            categorize_treatment(records, {})
        assert err.value.unmapped == ["Mystery infusion", "Standard chemo"]

    def test_hsct_maps_to_high_intensity(self):
        records = [PatientRecord(sample_id="S1", survival_status="living",
                                 treatment_intensity="chemo + allogeneic HSCT")]
        out = categorize_treatment(records, {"chemo + allogeneic HSCT": "high-intensity"})
        assert out[0].treatment_intensity == "high-intensity"


class TestExportFinal:
    def test_final_table_column_sets(self, small_pipeline):
        _, records, _ = small_pipeline
        mut_genes = sorted(list(records[0].mutations))[:16]
        exp_genes = sorted(list(records[0].expressions))[:22]
        tables = export_final(records, mut_genes, exp_genes)
        assert tables.clin.shape[1] == 11
        assert list(tables.clin.columns)[-1] == "survival_status"
        assert tables.mut.shape[1] == 18
        assert tables.exp.shape[1] == 24
        assert list(tables.mut.columns[-2:]) == ["treatment_intensity", "survival_status"]
        n = len(records)
        assert len(tables.clin) == len(tables.mut) == len(tables.exp) == n
        assert (tables.clin.index == tables.mut.index).all()

    def test_missing_feature_fatal(self, small_pipeline):
        _, records, _ = small_pipeline
        with pytest.raises(ExportError, match="NOPE"):
            export_final(records, ["NOPE"], [])

    def test_empty_feature_lists(self, small_pipeline):
        _, records, _ = small_pipeline
        tables = export_final(records, [], [])
        assert list(tables.mut.columns) == ["treatment_intensity", "survival_status"]
        assert list(tables.exp.columns) == ["treatment_intensity", "survival_status"]


class TestBundleRoundTrip:
    def test_save_load_identity(self, small_pipeline, tmp_path):
        _, records, _ = small_pipeline
        save_bundle(records, tmp_path / "bundle")
        loaded = load_bundle(tmp_path / "bundle")
        assert len(loaded) == len(records)
        for a, b in zip(records, loaded):
            assert a.sample_id == b.sample_id
            assert a.treatment_intensity == b.treatment_intensity
            assert a.mutations == b.mutations
            assert a.diagnosis_age == pytest.approx(b.diagnosis_age)
            assert a.expressions == pytest.approx(b.expressions)

    def test_missing_cells_round_trip(self, tmp_path):
        record = PatientRecord(sample_id="S1", survival_status="living",
                               diagnosis_age=None, gender=None,
                               mutations={"G1": 1}, expressions={"E1": 2.5},
                               treatment_intensity="regular")
        save_bundle([record], tmp_path / "b")
        loaded = load_bundle(tmp_path / "b")[0]
        assert loaded.diagnosis_age is None
        assert loaded.gender is None

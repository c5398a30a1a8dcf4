"""Synthetic two-cohort raw exports with known ground truth.

The published cohort exports cannot be redistributed, so this generator
produces structurally faithful stand-ins: two cBioPortal-style cohorts whose
pooled cleaning yields exactly 272 retained samples (100 living / 172
deceased), a shared mutation panel that shrinks to 281 genes after the
zero-mutation drop, TP53/PHF6 mutation signal detectable by the chi-squared
screen, a 22-gene expression signature recoverable by the L1 path, and
clinical features whose predictive power is deliberately weak, reproducing
the published model ordering (expression > mutation >= clinical).

Every artifact derives from one seed; regenerating with the same seed is
byte-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .featsel import LITERATURE_GENES

#: The 22 expression signature genes planted in the cohort.
SIGNATURE_GENES = (
    "CCDC144A", "CPNE8", "CYP2E1", "CYTL1", "HAS1", "KIAA0141", "KIAA1549",
    "LAMA2", "LTK", "MICALL2", "MX1", "PPM1H", "PTH2R", "PTP4A3", "RAD21",
    "RGS9BP", "SLC29A2", "TMED4", "TNFSF11", "TNK1", "TSKS", "XIST",
)

CHI2_GENES = ("PHF6", "TP53")

TCGA = "TCGA"
OHSU = "OHSU"

_TCGA_HEADERS = {
    "sample_id": "Sample ID",
    "diagnosis_age": "Diagnosis Age",
    "bm_blast_pct": "Bone Marrow Blast Percentage",
    "mutation_count": "Mutation Count",
    "pb_blast_pct": "PB Blast Percentage",
    "wbc": "WBC",
    "gender": "Sex",
    "race": "Race Category",
    "cytogenetic_info": "Cytogenetic Group",
    "eln_risk": "ELN Risk Classification",
    "treatment_intensity": "First Line Therapy",
    "survival_status": "Overall Survival Status",
}
_OHSU_HEADERS = {
    "sample_id": "SAMPLE_ID",
    "diagnosis_age": "Age at Diagnosis",
    "bm_blast_pct": "BM Blast %",
    "mutation_count": "Mutation Count",
    "pb_blast_pct": "Peripheral Blast %",
    "wbc": "WBC Count",
    "gender": "Gender",
    "race": "Race",
    "cytogenetic_info": "Cytogenetics Group",
    "eln_risk": "ELN Risk",
    "treatment_intensity": "Therapy Description",
    "survival_status": "Vital Status",
}
_TCGA_SURVIVAL = {"living": "0:LIVING", "deceased": "1:DECEASED"}
_OHSU_SURVIVAL = {"living": "Alive", "deceased": "Dead"}

#: Raw therapy names and the specialist categorization shipped alongside.
TREATMENT_MAP = {
    "FLT3 inhibitor trial": "target",
    "IDH2 inhibitor maintenance": "target",
    "Standard 7+3 induction": "regular",
    "Cytarabine consolidation": "regular",
    "Anthracycline-based chemotherapy": "regular",
    "Azacitidine palliative": "low-intensity",
    "Supportive care only": "low-intensity",
    "Chemo + allogeneic HSCT": "high-intensity",
    "Chemo + autologous HSCT": "high-intensity",
}
_RAW_BY_CATEGORY = {
    "target": ["FLT3 inhibitor trial", "IDH2 inhibitor maintenance"],
    "regular": ["Standard 7+3 induction", "Cytarabine consolidation",
                "Anthracycline-based chemotherapy"],
    "low-intensity": ["Azacitidine palliative", "Supportive care only"],
    "high-intensity": ["Chemo + allogeneic HSCT", "Chemo + autologous HSCT"],
}

CYTO_GROUPS = ("normal karyotype", "complex karyotype", "inv(16)", "t(8;21)",
               "11q23 abnormality", "other")
ELN_GROUPS = ("favorable", "intermediate", "adverse")


@dataclass(frozen=True)
class SimScale:
    """Gene-pool sizes; the full cohort structure at test-friendly widths."""

    mut_shared: int = 318          # shrinks to 281 after the 37 zero-mutation drop
    mut_zero: int = 37
    exp_shared: int = 1500
    tcga_extra_mut: int = 30
    ohsu_extra_mut: int = 12
    tcga_extra_exp: int = 25
    ohsu_extra_exp: int = 15

    def small(self) -> "SimScale":
        return SimScale(mut_shared=60, mut_zero=8, exp_shared=120,
                        tcga_extra_mut=6, ohsu_extra_mut=4,
                        tcga_extra_exp=5, ohsu_extra_exp=4)


@dataclass
class SimCohorts:
    """In-memory raw exports plus the generating ground truth."""

    tcga: dict = field(default_factory=dict)   # name -> list of csv rows
    ohsu: dict = field(default_factory=dict)
    truth: dict = field(default_factory=dict)


def _clinical_core(rng: np.random.Generator, n: int) -> dict:
    age = np.clip(np.round(rng.normal(56, 15, n)), 18, 88)
    bm = np.clip(np.round(rng.normal(68, 20, n), 1), 20, 100)
    mutation_count = np.clip(rng.poisson(9, n), 1, 34)
    pb = np.clip(np.round(rng.normal(41, 26, n), 1), 0, 99.2)
    wbc = np.clip(np.round(np.exp(rng.normal(3.2, 1.1, n)), 1), 0.4, 483)
    gender = rng.choice(["Male", "Female"], n)
    race = rng.choice(["white", "not white"], n, p=[0.72, 0.28])
    cyto = rng.choice(CYTO_GROUPS, n, p=[0.42, 0.18, 0.1, 0.1, 0.08, 0.12])
    eln = rng.choice(ELN_GROUPS, n, p=[0.22, 0.5, 0.28])
    return dict(age=age, bm=bm, mutation_count=mutation_count, pb=pb, wbc=wbc,
                gender=gender, race=race, cyto=cyto, eln=eln)


def _assign_treatment(rng, age, eln):
    """Intensity correlates with age and risk group, like real practice."""
    n = len(age)
    out = np.empty(n, dtype=object)
    for i in range(n):
        if age[i] >= 68:
            probs = {"low-intensity": 0.9, "regular": 0.06, "target": 0.03,
                     "high-intensity": 0.01}
        elif eln[i] == "adverse":
            probs = {"high-intensity": 0.5, "regular": 0.3, "target": 0.15,
                     "low-intensity": 0.05}
        elif eln[i] == "favorable":
            probs = {"regular": 0.55, "target": 0.2, "high-intensity": 0.15,
                     "low-intensity": 0.1}
        else:
            probs = {"regular": 0.45, "high-intensity": 0.25, "target": 0.2,
                     "low-intensity": 0.1}
        cats = list(probs)
        out[i] = cats[rng.choice(len(cats), p=np.array(list(probs.values())))]
    return out


def generate(seed: int = 7, scale: SimScale | None = None) -> SimCohorts:
    """Build both cohorts' raw tables and the ground-truth description."""
    scale = scale or SimScale()
    rng = np.random.default_rng(seed)

    # ---- gene name pools -------------------------------------------------
    known_mut = tuple(dict.fromkeys(LITERATURE_GENES + CHI2_GENES))
    n_filler_mut = scale.mut_shared - len(known_mut) - scale.mut_zero
    if n_filler_mut < 0:
        raise ValueError("mut_shared too small for the known genes")
    filler_mut = [f"MSYN{i:04d}" for i in range(n_filler_mut)]
    zero_mut = [f"MZRO{i:04d}" for i in range(scale.mut_zero)]
    mut_genes = list(known_mut) + filler_mut + zero_mut

    known_exp = tuple(dict.fromkeys(SIGNATURE_GENES + LITERATURE_GENES))
    n_filler_exp = scale.exp_shared - len(known_exp)
    if n_filler_exp < 0:
        raise ValueError("exp_shared too small for the known genes")
    filler_exp = [f"ESYN{i:04d}" for i in range(n_filler_exp)]
    exp_genes = list(known_exp) + filler_exp

    tcga_only_mut = [f"MTCG{i:04d}" for i in range(scale.tcga_extra_mut)]
    ohsu_only_mut = [f"MOHS{i:04d}" for i in range(scale.ohsu_extra_mut)]
    tcga_only_exp = [f"ETCG{i:04d}" for i in range(scale.tcga_extra_exp)]
    ohsu_only_exp = [f"EOHS{i:04d}" for i in range(scale.ohsu_extra_exp)]

    # ---- retained core: 272 samples, 90 TCGA / 182 OHSU -------------------
    n_core = 272
    core_source = np.array([TCGA] * 90 + [OHSU] * 182)
    core_ids = np.array(
        [f"TCGA-AB-{2000 + i}" for i in range(90)]
        + [f"BA{2500 + 3 * i}" for i in range(182)]
    )
    clin = _clinical_core(rng, n_core)
    treatment = _assign_treatment(rng, clin["age"], clin["eln"])

    # mutations: per-gene base rates; TP53/PHF6 later push the risk score
    base_rates = np.clip(rng.beta(1.3, 11.0, len(mut_genes)), 0.01, 0.35)
    named_rates = {"TP53": 0.15, "PHF6": 0.14, "FLT3": 0.28, "NPM1": 0.25,
                   "DNMT3A": 0.22, "IDH1": 0.08, "IDH2": 0.1, "TET2": 0.09,
                   "ASXL1": 0.07, "RUNX1": 0.09, "CEBPA": 0.06, "NRAS": 0.12,
                   "KRAS": 0.05, "SF3B1": 0.04, "U2AF1": 0.05, "SRSF2": 0.07}
    for i, g in enumerate(mut_genes):
        if g in named_rates:
            base_rates[i] = named_rates[g]
        if g.startswith("MZRO"):
            base_rates[i] = 0.0
    mut_core = (rng.random((n_core, len(mut_genes))) < base_rates).astype(np.int8)

    # expression: the 22 signature genes load on a handful of co-expression
    # factors that drive survival, so each carries a strong marginal signal
    # (the way real co-regulated prognostic modules behave); everything else
    # is independent noise
    exp_mu = rng.normal(8.0, 2.0, len(exp_genes))
    exp_sigma = rng.uniform(0.5, 2.0, len(exp_genes))
    exp_core = exp_mu + exp_sigma * rng.normal(size=(n_core, len(exp_genes)))
    sig_idx = [exp_genes.index(g) for g in SIGNATURE_GENES]
    n_factors = 3
    factors = rng.normal(size=(n_core, n_factors))
    factor_of = np.arange(len(sig_idx)) % n_factors
    loadings = rng.uniform(0.7, 0.92, len(sig_idx)) * rng.choice([-1.0, 1.0], len(sig_idx))
    for j, g in enumerate(sig_idx):
        shared = loadings[j] * factors[:, factor_of[j]]
        unique = np.sqrt(max(0.0, 1.0 - loadings[j] ** 2)) * rng.normal(size=n_core)
        exp_core[:, g] = exp_mu[g] + exp_sigma[g] * (shared + unique)
    factor_weights = rng.uniform(0.8, 1.2, n_factors)

    def zscore(v):
        sd = v.std()
        return (v - v.mean()) / (sd if sd > 0 else 1.0)

    z_exp = zscore(factors @ factor_weights)

    mut_ix = {g: mut_genes.index(g) for g in known_mut}
    mut_shift = (3.0 * mut_core[:, mut_ix["TP53"]]
                 + 3.1 * mut_core[:, mut_ix["PHF6"]]
                 - 0.8 * mut_core[:, mut_ix["NPM1"]]
                 + 0.75 * mut_core[:, mut_ix["FLT3"]]
                 + 0.65 * mut_core[:, mut_ix["DNMT3A"]]
                 + 0.7 * mut_core[:, mut_ix["RUNX1"]]
                 + 0.5 * mut_core[:, mut_ix["ASXL1"]]
                 + 0.45 * mut_core[:, mut_ix["TET2"]]
                 - 0.35 * mut_core[:, mut_ix["CEBPA"]])

    eln_effect = np.array([{"favorable": -0.22, "intermediate": 0.0,
                            "adverse": 0.25}[e] for e in clin["eln"]])
    treat_effect = np.array([{"low-intensity": 0.42, "regular": 0.0,
                              "target": -0.12, "high-intensity": -0.3}[t]
                             for t in treatment])
    clin_shift = (0.034 * (clin["age"] - 56) + eln_effect + treat_effect
                  + 0.002 * (clin["bm"] - 68))

    risk = (2.4 * z_exp + mut_shift + clin_shift
            + rng.normal(0.0, 1.0, n_core))
    deceased_idx = set(np.argsort(-risk, kind="stable")[:172])
    survival = np.array(
        ["deceased" if i in deceased_idx else "living" for i in range(n_core)]
    )

    # scattered missing clinical cells (never survival, never whole rows)
    missing_cells: dict[str, set[int]] = {name: set() for name in
                                          ("age", "bm", "pb", "wbc", "race",
                                           "cyto", "eln", "gender")}
    miss_budget = {"pb": 14, "wbc": 12, "race": 9, "cyto": 8, "eln": 6,
                   "age": 3, "gender": 2, "bm": 2}
    for name, count in miss_budget.items():
        missing_cells[name] = set(rng.choice(n_core, size=count, replace=False).tolist())

    # ---- chaff rows removed by each cleaning rule -------------------------
    def chaff(source, n, kind, start):
        rows = _clinical_core(rng, n)
        rows["treatment"] = _assign_treatment(rng, rows["age"], rows["eln"])
        rows["survival"] = rng.choice(["living", "deceased"], n, p=[0.35, 0.65])
        if kind == "underage":
            rows["age"] = rng.integers(2, 18, n).astype(float)
        elif kind == "lowblast":
            rows["bm"] = np.round(rng.uniform(2, 19.4, n), 1)
        elif kind == "nosurvival":
            rows["survival"] = np.array([None] * n, dtype=object)
        prefix = "TCGA-AB-" if source == TCGA else "BA"
        rows["ids"] = np.array(
            [f"{prefix}{start + i}" if source == TCGA else f"{prefix}{start + 2 * i}"
             for i in range(n)]
        )
        return rows

    tcga_chaff = [chaff(TCGA, 25, "underage", 5000), chaff(TCGA, 35, "lowblast", 5200),
                  chaff(TCGA, 50, "nosurvival", 5400)]
    ohsu_chaff = [chaff(OHSU, 70, "underage", 7000), chaff(OHSU, 125, "lowblast", 7700),
                  chaff(OHSU, 180, "nosurvival", 8600)]
    n_cross_dup = 5      # OHSU rows reusing TCGA sample ids; removed by clean()
    n_within_dup = 110   # OHSU rows repeating OHSU ids; removed at ingest

    # ---- assemble per-cohort row lists ------------------------------------
    def fmt(v):
        if v is None:
            return ""
        if isinstance(v, (float, np.floating)):
            return f"{float(v):g}"
        return str(v)

    truth = {
        "seed": seed,
        "signature_genes": list(SIGNATURE_GENES),
        "signature_loadings": {g: float(b) for g, b in zip(SIGNATURE_GENES, loadings)},
        "chi2_genes": list(CHI2_GENES),
        "retained": int(n_core),
        "class_counts": {"living": 100, "deceased": 172},
        "mut_genes_after_clean": scale.mut_shared - scale.mut_zero,
        "treatment_map": TREATMENT_MAP,
    }

    cohorts = {}
    for source in (TCGA, OHSU):
        headers = _TCGA_HEADERS if source == TCGA else _OHSU_HEADERS
        surv_map = _TCGA_SURVIVAL if source == TCGA else _OHSU_SURVIVAL
        core_mask = core_source == source
        order = np.flatnonzero(core_mask)
        clin_rows = []
        sample_ids = []

        def clinical_row(sid, age, bm, mc, pb, wbc, gender, race, cyto, eln,
                         treatment_raw, survival_value):
            surv = surv_map[survival_value] if survival_value in surv_map else ""
            return {
                headers["sample_id"]: sid,
                headers["diagnosis_age"]: fmt(age),
                headers["bm_blast_pct"]: fmt(bm),
                headers["mutation_count"]: fmt(mc),
                headers["pb_blast_pct"]: fmt(pb),
                headers["wbc"]: fmt(wbc),
                headers["gender"]: fmt(gender),
                headers["race"]: fmt(race),
                headers["cytogenetic_info"]: fmt(cyto),
                headers["eln_risk"]: fmt(eln),
                headers["treatment_intensity"]: fmt(treatment_raw),
                headers["survival_status"]: surv,
            }

        raw_treatment = {}
        for i in order:
            cat = treatment[i]
            raws = _RAW_BY_CATEGORY[cat]
            raw_treatment[i] = raws[int(rng.integers(len(raws)))]
        for i in order:
            sid = core_ids[i]
            sample_ids.append(sid)

            def maybe(name, value):
                return None if i in missing_cells.get(name, ()) else value

            clin_rows.append(clinical_row(
                sid,
                maybe("age", clin["age"][i]),
                maybe("bm", clin["bm"][i]),
                clin["mutation_count"][i],
                maybe("pb", clin["pb"][i]),
                maybe("wbc", clin["wbc"][i]),
                maybe("gender", clin["gender"][i]),
                maybe("race", clin["race"][i]),
                maybe("cyto", clin["cyto"][i]),
                maybe("eln", clin["eln"][i]),
                raw_treatment[i],
                survival[i],
            ))

        chaff_sets = tcga_chaff if source == TCGA else ohsu_chaff
        chaff_ids, chaff_mut, chaff_exp = [], [], []
        for rows in chaff_sets:
            n = len(rows["ids"])
            c_mut = (rng.random((n, len(mut_genes))) < np.clip(base_rates, 0.01, 0.35)).astype(np.int8)
            c_exp = exp_mu + exp_sigma * rng.normal(size=(n, len(exp_genes)))
            for j in range(n):
                sid = rows["ids"][j]
                chaff_ids.append(sid)
                chaff_mut.append(c_mut[j])
                chaff_exp.append(c_exp[j])
                raws = _RAW_BY_CATEGORY[rows["treatment"][j]]
                clin_rows.append(clinical_row(
                    sid, rows["age"][j], rows["bm"][j], rows["mutation_count"][j],
                    rows["pb"][j], rows["wbc"][j], rows["gender"][j], rows["race"][j],
                    rows["cyto"][j], rows["eln"][j],
                    raws[int(rng.integers(len(raws)))],
                    rows["survival"][j],
                ))

        if source == OHSU:
            # cross-cohort duplicates: TCGA core ids re-exported by OHSU
            dup_of = core_ids[:n_cross_dup]
            for sid in dup_of:
                chaff_ids.append(sid)
                chaff_mut.append((rng.random(len(mut_genes)) < np.clip(base_rates, 0.01, 0.35)).astype(np.int8))
                chaff_exp.append(exp_mu + exp_sigma * rng.normal(size=len(exp_genes)))
                clin_rows.append(clinical_row(
                    sid, 60.0, 55.0, 8, 30.0, 12.0, "Male", "white",
                    "normal karyotype", "intermediate",
                    "Standard 7+3 induction", "deceased",
                ))
            # within-table duplicates: repeat existing OHSU rows; ingest keeps
            # the first occurrence
            pool = list(range(len(clin_rows)))
            repeats = rng.choice(pool, size=n_within_dup, replace=True)
            for r in repeats:
                clin_rows.append(dict(clin_rows[r]))

        all_ids = sample_ids + chaff_ids
        mut_matrix = np.vstack(
            [mut_core[core_mask]] + ([np.array(chaff_mut)] if chaff_mut else [])
        )
        exp_matrix = np.vstack(
            [exp_core[core_mask]] + ([np.array(chaff_exp)] if chaff_exp else [])
        )
        # cohort-only genes, dropped later by the intersection rule
        only_mut = tcga_only_mut if source == TCGA else ohsu_only_mut
        only_exp = tcga_only_exp if source == TCGA else ohsu_only_exp
        extra_mut = (rng.random((len(all_ids), len(only_mut))) < 0.1).astype(np.int8)
        extra_exp = rng.normal(8, 2, size=(len(all_ids), len(only_exp)))

        # unjoined gene-table column: a sample id with no clinical row
        ghost = f"{source}-GHOST-1"

        def gene_csv(gene_names, matrix, extra_names, extra, decimals):
            header = ["Hugo_Symbol"] + all_ids + [ghost]
            rows = [header]
            ghost_vals = rng.normal(8, 2, size=len(gene_names) + len(extra_names))
            full = np.hstack([matrix, extra])
            names = list(gene_names) + list(extra_names)
            for gi, gname in enumerate(names):
                vals = full[:, gi]
                if decimals == 0:
                    cells = [str(int(v)) for v in vals] + [str(int(abs(ghost_vals[gi])) % 2)]
                else:
                    cells = [f"{v:.4f}" for v in vals] + [f"{ghost_vals[gi]:.4f}"]
                rows.append([gname] + cells)
            return rows

        clin_header = list(clin_rows[0].keys())
        clin_csv = [clin_header] + [[row[h] for h in clin_header] for row in clin_rows]
        cohorts[source] = {
            "clinical": clin_csv,
            "mutations": gene_csv(mut_genes, mut_matrix, only_mut, extra_mut, 0),
            "expressions": gene_csv(exp_genes, exp_matrix, only_exp, extra_exp, 4),
        }

    truth["risk"] = [float(v) for v in risk]
    truth["core_ids"] = [str(s) for s in core_ids]
    return SimCohorts(tcga=cohorts[TCGA], ohsu=cohorts[OHSU], truth=truth)


_COLUMN_SPEC_TEMPLATE = """[identity]
sample_id = {sample_id}

[clinical]
diagnosis_age = {diagnosis_age}
bm_blast_pct = {bm_blast_pct}
mutation_count = {mutation_count}
pb_blast_pct = {pb_blast_pct}
wbc = {wbc}
gender = {gender}
race = {race}
cytogenetic_info = {cytogenetic_info}
eln_risk = {eln_risk}
treatment_intensity = {treatment_intensity}
survival_status = {survival_status}

[survival_values]
living = {living}
deceased = {deceased}
"""


def write_exports(directory, seed: int = 7, scale: SimScale | None = None) -> Path:
    """Write both cohorts' CSVs, the column specs, the treatment map, and the
    ground-truth sidecar into `directory`.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    sim = generate(seed=seed, scale=scale)

    def write_csv(path, rows):
        import csv as _csv
        with open(path, "w", encoding="utf-8", newline="") as fh:
            _csv.writer(fh).writerows(rows)

    for source, tables in (("tcga", sim.tcga), ("ohsu", sim.ohsu)):
        for kind in ("clinical", "mutations", "expressions"):
            write_csv(directory / f"{source}_{kind}.csv", tables[kind])

    for source, headers, surv in (("tcga", _TCGA_HEADERS, _TCGA_SURVIVAL),
                                  ("ohsu", _OHSU_HEADERS, _OHSU_SURVIVAL)):
        spec = _COLUMN_SPEC_TEMPLATE.format(
            living=surv["living"], deceased=surv["deceased"], **headers
        )
        (directory / f"{source}_columns.ini").write_text(spec, encoding="utf-8")

    lines = ["[mapping]"] + [f"{raw} = {cat}" for raw, cat in TREATMENT_MAP.items()]
    (directory / "treatment_map.ini").write_text("\n".join(lines) + "\n", encoding="utf-8")
    (directory / "ground_truth.json").write_text(
        json.dumps(sim.truth, indent=2), encoding="utf-8"
    )
    return directory

"""Command-line pipeline driver.

Stages exchange data through directories: `ingest` writes a canonical cohort
dir, `clean`/`impute` write record bundles (clin/mut/exp CSVs aligned by
sample id), `select-features` writes selection reports plus the final
publication tables, and the modeling commands read bundles and model files.
Report commands drop a PNG figure next to each CSV unless --no-figures.
"""

from __future__ import annotations

import csv
import json
import logging
import sys
from pathlib import Path

import click
import numpy as np
import pandas as pd

from . import __version__
from .cohort import (
    categorize_treatment, clean, export_final, ingest, load_bundle, load_cohort,
    records_to_frames, save_bundle, save_cohort,
)
from .config import (
    LABEL_LIVING, load_column_spec, load_service_config, load_treatment_map,
)
from .ebm import EbmConfig, train
from .errors import AmlboostError
from .explain import explain_global, explain_local, term_curve
from .featsel import chi2_select, l1_select, literature_genes
from .figures import (
    grid_figure, importance_figure, local_explanation_figure,
    recommendation_figure, save_figure, term_curve_figure,
)
from .grid import GridConfig, run_grid, select_features_for_seed, train_full_model
from .impute import impute_knn
from .metrics import metrics_report, stratified_split
from .recommend import recommend as recommend_patient
from .store import load_model, save_model
from .synthetic import SimScale, write_exports

log = logging.getLogger(__name__)


def _fail(exc: Exception) -> click.ClickException:
    return click.ClickException(str(exc))


@click.group()
@click.version_option(__version__)
@click.option("--log-level", default="info", show_default=True,
              type=click.Choice(["debug", "info", "warning", "error"]))
def main(log_level):
    """Explainable AML survival prediction and therapy decision support."""
    logging.basicConfig(level=getattr(logging, log_level.upper()),
                        format="%(levelname)s %(name)s: %(message)s")


@main.command()
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
@click.option("--seed", default=7, show_default=True)
@click.option("--small", is_flag=True, help="reduced gene pools for quick runs")
def simulate(out_dir, seed, small):
    """Generate the synthetic two-cohort raw exports and config files."""
    scale = SimScale().small() if small else SimScale()
    path = write_exports(out_dir, seed=seed, scale=scale)
    click.echo(f"synthetic exports written to {path}")


@main.command()
@click.option("--clinical", required=True, type=click.Path(path_type=Path))
@click.option("--mutations", required=True, type=click.Path(path_type=Path))
@click.option("--expressions", required=True, type=click.Path(path_type=Path))
@click.option("--source-id", required=True)
@click.option("--spec", "spec_path", required=True, type=click.Path(path_type=Path),
              help="column-spec INI mapping raw headers to canonical fields")
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
def ingest_cmd(clinical, mutations, expressions, source_id, spec_path, out_dir):
    """Parse one cohort's raw exports into a canonical cohort directory."""
    try:
        spec = load_column_spec(spec_path)
        cohort = ingest(clinical, mutations, expressions, source_id, spec)
        save_cohort(cohort, out_dir)
    except AmlboostError as exc:
        raise _fail(exc)
    click.echo(f"{source_id}: {len(cohort.clinical)} clinical rows, "
               f"{cohort.mutations.shape[1]} mutation genes, "
               f"{cohort.expressions.shape[1]} expression genes -> {out_dir}")


main.add_command(ingest_cmd, name="ingest")


@main.command(name="clean")
@click.option("--cohort", "cohort_dirs", multiple=True, required=True,
              type=click.Path(path_type=Path), help="ingested cohort directory (repeatable)")
@click.option("--treatment-map", "map_path", type=click.Path(path_type=Path),
              help="therapy-name mapping INI; omit if already categorized")
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
def clean_cmd(cohort_dirs, map_path, out_dir):
    """Pool cohorts, apply the cleaning rules, and write a record bundle."""
    try:
        cohorts = [load_cohort(d) for d in cohort_dirs]
        records, report = clean(cohorts)
        if map_path:
            records = categorize_treatment(records, load_treatment_map(map_path))
        save_bundle(records, out_dir)
        report.save(out_dir)
    except AmlboostError as exc:
        raise _fail(exc)
    click.echo(report.to_text())
    click.echo(f"bundle -> {out_dir}")


@main.command(name="impute")
@click.option("--in", "in_dir", required=True, type=click.Path(path_type=Path))
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
@click.option("-k", "--neighbors", default=3, show_default=True)
def impute_cmd(in_dir, out_dir, neighbors):
    """Fill missing clinical cells by k-nearest-neighbor imputation."""
    try:
        records = load_bundle(in_dir)
        filled = impute_knn(records, k=neighbors)
        save_bundle(filled, out_dir)
    except AmlboostError as exc:
        raise _fail(exc)
    changed = sum(1 for a, b in zip(records, filled) if a != b)
    click.echo(f"imputed {changed} records -> {out_dir}")


@main.command(name="select-features")
@click.option("--in", "in_dir", required=True, type=click.Path(path_type=Path))
@click.option("--seed", default=0, show_default=True, help="holdout split seed")
@click.option("--alpha", default=0.05, show_default=True)
@click.option("--target-count", default=22, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
@click.option("--export-final/--no-export-final", "write_final", default=True,
              show_default=True,
              help="also write the final CLIN/MUT/EXP publication tables")
def select_features_cmd(in_dir, seed, alpha, target_count, out_dir, write_final):
    """Run both selection procedures on the train+validation partitions."""
    out_dir = Path(out_dir)
    try:
        records = load_bundle(in_dir)
        clin, mut, exp = records_to_frames(records)
        labels = (clin["survival_status"] == LABEL_LIVING).to_numpy().astype(int)
        split = stratified_split(labels, seed=seed)
        chi2 = chi2_select(mut.to_numpy(), labels, alpha=alpha,
                           feature_names=list(mut.columns),
                           rows=split.trainval, test_rows=split.test)
        path = l1_select(exp.to_numpy(), labels, target_count=target_count,
                         feature_names=list(exp.columns),
                         rows=split.trainval, test_rows=split.test)
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "chi2.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["feature", "statistic", "p_value", "selected"])
            for r in chi2:
                writer.writerow([r.feature, f"{r.statistic:.10g}",
                                 f"{r.p_value:.10g}", int(r.selected)])
        with open(out_dir / "l1_path.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["strength", "nonzero_count", "chosen"])
            for i, lam in enumerate(path.strengths):
                writer.writerow([f"{lam:.10g}", int(path.nonzero_counts[i]),
                                 int(i == path.chosen_index)])
        chi2_hits = sorted(r.feature for r in chi2 if r.selected)
        mut_features = sorted(set(r.feature for r in chi2 if r.selected)
                              | {g for g in literature_genes() if g in mut.columns})
        exp_features = sorted(path.selected_features)
        (out_dir / "selected_mut.txt").write_text("\n".join(mut_features) + "\n")
        (out_dir / "selected_exp.txt").write_text("\n".join(exp_features) + "\n")
        (out_dir / "selection.json").write_text(json.dumps({
            "seed": seed, "alpha": alpha, "target_count": target_count,
            "chi2_selected": chi2_hits,
            "mut_features": mut_features, "exp_features": exp_features,
            "l1_chosen_strength": path.chosen_strength,
        }, indent=2), encoding="utf-8")
        if write_final:
            tables = export_final(records, mut_features, exp_features)
            tables.save(out_dir / "final")
    except AmlboostError as exc:
        raise _fail(exc)
    click.echo(f"chi-squared selected {len(chi2_hits)} genes "
               f"(union with literature: {len(mut_features)}); "
               f"L1 selected {len(exp_features)} genes -> {out_dir}")


def _load_feature_lists(selection_dir: Path):
    mut_path = selection_dir / "selected_mut.txt"
    exp_path = selection_dir / "selected_exp.txt"
    mut_features = mut_path.read_text().split() if mut_path.is_file() else []
    exp_features = exp_path.read_text().split() if exp_path.is_file() else []
    return mut_features, exp_features


@main.command(name="train")
@click.option("--in", "in_dir", required=True, type=click.Path(path_type=Path))
@click.option("--model-id", required=True,
              help="feature-set combination, e.g. CLIN, MUT, EXP, CLIN+MUT")
@click.option("--selection", "selection_dir", type=click.Path(path_type=Path),
              help="select-features output dir with the gene lists")
@click.option("--seed", default=0, show_default=True)
@click.option("--holdout/--full", default=False, show_default=True,
              help="train on the split's training partition instead of all rows")
@click.option("--out", "model_path", required=True, type=click.Path(path_type=Path))
def train_cmd(in_dir, model_id, selection_dir, seed, holdout, model_path):
    """Train one model and write the versioned model file."""
    try:
        records = load_bundle(in_dir)
        mut_features, exp_features = ([], [])
        if selection_dir:
            mut_features, exp_features = _load_feature_lists(Path(selection_dir))
        parts = model_id.split("+")
        if ("MUT" in parts and not mut_features) or ("EXP" in parts and not exp_features):
            raise AmlboostError(
                f"model {model_id!r} needs --selection with the selected gene lists"
            )
        if holdout:
            clin, _, _ = records_to_frames(records)
            labels = (clin["survival_status"] == LABEL_LIVING).to_numpy().astype(int)
            split = stratified_split(labels, seed=seed)
            subset = [records[i] for i in split.train]
            model = train_full_model(subset, model_id, mut_features, exp_features,
                                     EbmConfig(seed=seed))
            model.meta["holdout"] = f"train partition of split seed {seed}"
        else:
            model = train_full_model(records, model_id, mut_features, exp_features,
                                     EbmConfig(seed=seed))
        save_model(model, model_path)
    except AmlboostError as exc:
        raise _fail(exc)
    click.echo(f"trained {model_id} on {model.meta['trained_rows']} rows -> {model_path}")


@main.command(name="evaluate")
@click.option("--model", "model_path", required=True, type=click.Path(path_type=Path))
@click.option("--in", "in_dir", required=True, type=click.Path(path_type=Path))
@click.option("--seed", default=0, show_default=True)
@click.option("--partition", default="test", show_default=True,
              type=click.Choice(["train", "validation", "test", "all"]))
@click.option("--out", "out_path", type=click.Path(path_type=Path))
def evaluate_cmd(model_path, in_dir, seed, partition, out_path):
    """Score a bundle partition with the five reported measures."""
    try:
        model = load_model(model_path)
        records = load_bundle(in_dir)
        clin, mut, exp = records_to_frames(records)
        labels = (clin["survival_status"] == LABEL_LIVING).to_numpy().astype(int)
        if partition == "all":
            rows = np.arange(len(records))
        else:
            split = stratified_split(labels, seed=seed)
            rows = getattr(split, partition)
        table = pd.concat([clin, mut.drop(columns=[], errors="ignore"),
                           exp], axis=1)
        table = table.loc[:, ~table.columns.duplicated(keep="first")]
        probs = model.predict_proba(table.iloc[rows])
        report = metrics_report(labels[rows], probs,
                                model_id=model.meta.get("model_id", "model"),
                                partition=partition)
    except AmlboostError as exc:
        raise _fail(exc)
    row = report.row()
    click.echo(json.dumps(row, indent=2))
    if out_path:
        pd.DataFrame([row]).to_csv(out_path, index=False)
        click.echo(f"metrics -> {out_path}")


@main.command(name="grid")
@click.option("--in", "in_dir", required=True, type=click.Path(path_type=Path))
@click.option("--seeds", default=20, show_default=True)
@click.option("--literature-only", is_flag=True,
              help="literature-gene arm (the published comparison experiment)")
@click.option("--out", "out_path", required=True, type=click.Path(path_type=Path))
@click.option("--figures/--no-figures", default=True, show_default=True)
def grid_cmd(in_dir, seeds, literature_only, out_path, figures):
    """Train and evaluate all seven models over stratified holdout seeds."""
    try:
        records = load_bundle(in_dir)
        config = GridConfig(seeds=tuple(range(seeds)), literature_only=literature_only)
        result = run_grid(records, config)
    except AmlboostError as exc:
        raise _fail(exc)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    result.per_seed_frame().to_csv(out_path, index=False)
    median_path = out_path.with_name(out_path.stem + "_median.csv")
    result.median_frame().to_csv(median_path, index=False)
    click.echo(result.median_text())
    click.echo(f"per-seed metrics -> {out_path}; medians -> {median_path}")
    if figures:
        fig_path = save_figure(grid_figure(result.median_frame()),
                               out_path.with_suffix(".png"))
        click.echo(f"figure -> {fig_path}")


def read_patient_csv(path: Path) -> dict:
    """One-row CSV with feature-name headers -> feature mapping."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if len(rows) != 1:
        raise AmlboostError(f"{path} must hold exactly one patient row, found {len(rows)}")
    record = {}
    for name, raw in rows[0].items():
        if raw is None or raw.strip().lower() in ("", "na", "nan"):
            continue
        try:
            record[name] = float(raw)
        except ValueError:
            record[name] = raw.strip()
    return record


@main.command(name="explain")
@click.option("--model", "model_path", required=True, type=click.Path(path_type=Path))
@click.option("--patient", "patient_path", type=click.Path(path_type=Path),
              help="one-row patient CSV for a local explanation")
@click.option("--global", "global_flag", is_flag=True, help="global importances")
@click.option("--term", "term_feature", help="shape function for one feature")
@click.option("--top-k", default=15, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
@click.option("--figures/--no-figures", default=True, show_default=True)
def explain_cmd(model_path, patient_path, global_flag, term_feature, top_k,
                out_dir, figures):
    """Local, global, or per-term explanation reports."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        model = load_model(model_path)
        wrote = []
        if patient_path:
            record = read_patient_csv(Path(patient_path))
            explanation = explain_local(model, record, top_k=top_k)
            frame = pd.DataFrame([
                {"feature": c.feature, "value": c.value, "bin": c.bin_label,
                 "contribution": c.score, "term_index": c.term_index}
                for c in explanation.contributions
            ])
            # %.17g keeps the logit arithmetic bit-identical across CSV round trips
            frame.to_csv(out_dir / "local_explanation.csv", index=False,
                         float_format="%.17g")
            wrote.append("local_explanation.csv")
            click.echo(f"P(survival) = {explanation.probability:.4f} "
                       f"(logit {explanation.logit:+.4f}, "
                       f"intercept {explanation.intercept:+.4f})")
            for c in explanation.top(top_k):
                click.echo(f"  {c.feature:28s} {c.bin_label:>18s} {c.score:+.4f}")
            if figures:
                save_figure(local_explanation_figure(explanation, top_k),
                            out_dir / "local_explanation.png")
                wrote.append("local_explanation.png")
        if global_flag:
            gi = explain_global(model)
            frame = pd.DataFrame([
                {"feature": name, "importance": gi.importances[name], "rank": i + 1}
                for i, name in enumerate(gi.ranking)
            ])
            frame.to_csv(out_dir / "importance.csv", index=False)
            wrote.append("importance.csv")
            for name, value in gi.top(top_k):
                click.echo(f"  {name:28s} {value:.5f}")
            if figures:
                save_figure(importance_figure(gi, top_k), out_dir / "importance.png")
                wrote.append("importance.png")
        if term_feature:
            points = term_curve(model, term_feature)
            frame = pd.DataFrame(points, columns=["bin", "score"])
            frame.to_csv(out_dir / f"term_{term_feature}.csv", index=False)
            wrote.append(f"term_{term_feature}.csv")
            if figures:
                save_figure(term_curve_figure(model, term_feature),
                            out_dir / f"term_{term_feature}.png")
                wrote.append(f"term_{term_feature}.png")
        if not wrote:
            raise AmlboostError("nothing to do: pass --patient, --global, or --term")
    except AmlboostError as exc:
        raise _fail(exc)
    click.echo(f"wrote {', '.join(wrote)} -> {out_dir}")


@main.command(name="recommend")
@click.option("--model", "model_path", required=True, type=click.Path(path_type=Path))
@click.option("--patient", "patient_path", required=True, type=click.Path(path_type=Path))
@click.option("--out", "out_dir", type=click.Path(path_type=Path))
@click.option("--figures/--no-figures", default=True, show_default=True)
def recommend_cmd(model_path, patient_path, out_dir, figures):
    """Score all four therapy intensities and pick the survival-maximizing one."""
    try:
        model = load_model(model_path)
        record = read_patient_csv(Path(patient_path))
        result = recommend_patient(model, record)
    except AmlboostError as exc:
        raise _fail(exc)
    click.echo(f"{'treatment':16s} {'P(survival)':>12s}  recommended")
    for option in result.options:
        marker = "  <-- recommended" if option.treatment == result.recommended else ""
        click.echo(f"{option.treatment:16s} {option.probability:12.4f}{marker}")
    click.echo(f"margin over runner-up: {result.margin:.4f}")
    if out_dir:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        pd.DataFrame([
            {"treatment": o.treatment, "probability": o.probability,
             "recommended": int(o.treatment == result.recommended)}
            for o in result.options
        ]).to_csv(out_dir / "recommendation.csv", index=False)
        if figures:
            save_figure(recommendation_figure(result), out_dir / "recommendation.png")
        click.echo(f"recommendation report -> {out_dir}")


@main.command(name="serve")
@click.option("--config", "config_path", required=True, type=click.Path(path_type=Path))
@click.option("--host", default=None, help="override bind address")
@click.option("--port", default=None, type=int, help="override port")
def serve_cmd(config_path, host, port):
    """Run the read-only HTTP decision service."""
    import os
    import uvicorn

    from .service import create_app

    try:
        config = load_service_config(config_path)
    except AmlboostError as exc:
        raise _fail(exc)
    bind = host or os.environ.get("AMLBOOST_BIND", config.bind)
    bind_port = port or int(os.environ.get("AMLBOOST_PORT", config.port))
    log_level = os.environ.get("AMLBOOST_LOG_LEVEL", config.log_level)
    app = create_app(config)
    uvicorn.run(app, host=bind, port=bind_port, log_level=log_level)


if __name__ == "__main__":
    sys.exit(main())

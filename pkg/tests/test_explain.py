import numpy as np
import pandas as pd
import pytest

from amlboost.binning import FeatureSchema
from amlboost.ebm import EbmModel, TermFunction, sigmoid
from amlboost.errors import UnknownFeatureError
from amlboost.explain import explain_global, explain_local, term_curve


def three_term_model():
    schemas = [
        FeatureSchema(name="age", kind="continuous", bin_edges=(40.0, 60.0)),
        FeatureSchema(name="risk", kind="categorical",
                      categories=("adverse", "favorable")),
        FeatureSchema(name="mut", kind="binary", categories=("0", "1")),
    ]
    terms = [
        TermFunction(feature="age", scores=np.array([0.0, -0.5, 0.1, 0.6])),
        TermFunction(feature="risk", scores=np.array([0.0, 0.8, -0.8])),
        TermFunction(feature="mut", scores=np.array([0.0, -0.05, 1.2])),
    ]
    counts = [np.array([0.0, 3, 4, 3]), np.array([0.0, 5, 5]), np.array([0.0, 8, 2])]
    return EbmModel(schemas=schemas, terms=terms, intercept=-0.3,
                    importances=np.zeros(3), bin_counts=counts,
                    meta={"positive_class": "living"})


class TestExplainLocal:
    def test_hand_lookup_oracle(self):
        model = three_term_model()
        record = {"age": 45.0, "risk": "adverse", "mut": 1}
        got = explain_local(model, record)
        by_name = {c.feature: c for c in got.contributions}
        assert by_name["age"].score == 0.1          # bin [40, 60)
        assert by_name["risk"].score == 0.8
        assert by_name["mut"].score == 1.2
        assert by_name["mut"].bin_label == "1"
        assert got.logit == pytest.approx(-0.3 + 0.1 + 0.8 + 1.2)
        assert got.probability == float(sigmoid(np.asarray(got.logit)))
        assert got.predicted_class == "living"

    def test_zero_term_model(self):
        model = three_term_model()
        for term in model.terms:
            term.scores[:] = 0.0
        got = explain_local(model, {"age": 70.0, "risk": "favorable", "mut": 0})
        assert all(c.score == 0.0 for c in got.contributions)
        assert got.probability == float(sigmoid(np.asarray(model.intercept)))

    def test_additivity_exact_over_full_list(self, sin_model):
        model, table, _ = sin_model
        rng = np.random.default_rng(3)
        for _ in range(100):
            record = {"x1": float(rng.uniform(-4, 4)), "x2": float(rng.normal())}
            explanation = explain_local(model, record)
            assert explanation.logit_from_parts() == model.predict_logit_record(record)
            assert explanation.logit == explanation.logit_from_parts()

    def test_sorted_by_magnitude_with_name_tiebreak(self):
        model = three_term_model()
        got = explain_local(model, {"age": 45.0, "risk": "adverse", "mut": 1})
        mags = [abs(c.score) for c in got.contributions]
        assert mags == sorted(mags, reverse=True)
        # tie-break: equal magnitudes sort by feature name
        model.terms[0].scores[:] = 0.5
        model.terms[1].scores[:] = 0.5
        tied = explain_local(model, {"age": 45.0, "risk": "adverse", "mut": 0})
        tied_names = [c.feature for c in tied.contributions if abs(c.score) == 0.5]
        assert tied_names == sorted(tied_names)

    def test_truncation_is_display_only(self):
        model = three_term_model()
        record = {"age": 45.0, "risk": "adverse", "mut": 1}
        full = explain_local(model, record)
        assert len(full.top(2)) == 2
        assert full.top(2)[0].score == max(abs(c.score) for c in full.contributions)
        assert full.probability == explain_local(model, record, top_k=1).probability

    def test_missing_feature_contributes_its_missing_bin(self):
        model = three_term_model()
        got = explain_local(model, {"age": 45.0})
        by_name = {c.feature: c for c in got.contributions}
        assert by_name["risk"].bin_label == "missing"
        assert by_name["risk"].score == 0.0


class TestExplainGlobal:
    def test_zero_scores_zero_importance(self):
        model = three_term_model()
        model.terms[2].scores[:] = 0.0
        gi = explain_global(model)
        assert gi.importances["mut"] == 0.0

    def test_half_half_weighted_mean(self):
        model = three_term_model()
        # risk: +0.8 on half the rows, -0.8 on the other half -> importance 0.8
        gi = explain_global(model)
        assert gi.importances["risk"] == pytest.approx(0.8)

    def test_matches_model_importances(self, sin_model):
        model, table, _ = sin_model
        gi = explain_global(model)
        for j, schema in enumerate(model.schemas):
            assert gi.importances[schema.name] == pytest.approx(
                float(model.importances[j]), rel=1e-12)

    def test_recompute_from_training_table(self, sin_model):
        model, table, _ = sin_model
        gi = explain_global(model, training_table=table)
        for j, schema in enumerate(model.schemas):
            assert gi.importances[schema.name] == pytest.approx(
                float(model.importances[j]), rel=1e-12)

    def test_invariant_under_category_relabeling(self):
        model = three_term_model()
        base = explain_global(model).importances["risk"]
        # permute the category order (and scores + counts with it)
        schemas = list(model.schemas)
        schemas[1] = FeatureSchema(name="risk", kind="categorical",
                                   categories=("favorable", "adverse"))
        terms = [model.terms[0],
                 TermFunction(feature="risk", scores=np.array([0.0, -0.8, 0.8])),
                 model.terms[2]]
        counts = [model.bin_counts[0], np.array([0.0, 5, 5]), model.bin_counts[2]]
        permuted = EbmModel(schemas=schemas, terms=terms, intercept=model.intercept,
                            importances=model.importances, bin_counts=counts,
                            meta=model.meta)
        assert explain_global(permuted).importances["risk"] == pytest.approx(base)

    def test_ranking_descending_with_name_tiebreak(self):
        model = three_term_model()
        gi = explain_global(model)
        values = [gi.importances[name] for name in gi.ranking]
        assert values == sorted(values, reverse=True)


class TestTermCurve:
    def test_binary_term_three_entries(self):
        model = three_term_model()
        points = term_curve(model, "mut")
        assert len(points) == 3
        assert points[0][0] == "missing"
        assert [p[0] for p in points[1:]] == ["0", "1"]

    def test_continuous_intervals_ascending(self):
        model = three_term_model()
        points = term_curve(model, "age")
        assert [p[0] for p in points] == [
            "missing", "[-inf, 40)", "[40, 60)", "[60, inf)"]
        assert len(points) == model.schemas[0].n_bins

    def test_unknown_feature(self):
        with pytest.raises(UnknownFeatureError):
            term_curve(three_term_model(), "nope")

    def test_curve_lookup_matches_local_contributions(self, sin_model):
        model, _, _ = sin_model
        record = {"x1": 0.7, "x2": -1.2}
        explanation = explain_local(model, record)
        curves = {s.name: dict(term_curve(model, s.name)) for s in model.schemas}
        for c in explanation.contributions:
            assert curves[c.feature][c.bin_label] == c.score

import numpy as np
import pandas as pd
import pytest
from scipy.stats import spearmanr

from amlboost.ebm import EbmConfig, EbmModel, TermFunction, sigmoid, train
from amlboost.binning import FeatureSchema
from amlboost.errors import TrainingDataError


def hand_built_model():
    """Two-feature model with known scores for arithmetic-identity tests."""
    schemas = [
        FeatureSchema(name="a", kind="continuous", bin_edges=(0.0,)),
        FeatureSchema(name="g", kind="categorical", categories=("x", "y")),
    ]
    terms = [
        TermFunction(feature="a", scores=np.array([0.0, 1.0, -1.0])),
        TermFunction(feature="g", scores=np.array([0.0, 0.25, -0.25])),
    ]
    return EbmModel(
        schemas=schemas, terms=terms, intercept=-2.2,
        importances=np.array([1.0, 0.25]),
        bin_counts=[np.array([0.0, 5.0, 5.0]), np.array([0.0, 5.0, 5.0])],
        meta={"positive_class": "living"},
    )


class TestPredict:
    def test_intercept_only(self):
        model = hand_built_model()
        for term in model.terms:
            term.scores[:] = 0.0
        assert model.predict_logit_record({"a": 1.0, "g": "x"}) == -2.2

    def test_hand_arithmetic(self):
        model = hand_built_model()
        # a=-1 -> bin 1 (+1.0); g absent -> missing bin (0)
        assert model.predict_logit_record({"a": -1.0}) == pytest.approx(-1.2)
        got = model.predict_logit_record({"a": 5.0, "g": "y"})
        assert got == pytest.approx(-2.2 - 1.0 - 0.25)

    def test_batch_equals_scalar_bitwise(self):
        model = hand_built_model()
        rng = np.random.default_rng(0)
        table = pd.DataFrame({
            "a": rng.normal(size=50),
            "g": rng.choice(["x", "y", "zzz"], size=50),
        })
        batch = model.predict_logit(table)
        for i in range(len(table)):
            rec = {"a": float(table["a"][i]), "g": table["g"][i]}
            assert batch[i] == model.predict_logit_record(rec)

    def test_proba_examples(self):
        assert sigmoid(np.array(0.0)) == 0.5
        assert float(sigmoid(np.array(-2.197))) == pytest.approx(0.100, abs=1e-3)

    def test_logit_clamp_keeps_proba_open_interval(self):
        # clamping at +/-30 floors the probability at sigmoid(-30) = 9.358e-14;
        # strictly inside (0, 1) however extreme the raw logit
        lo = float(sigmoid(np.array(-1e9)))
        hi = float(sigmoid(np.array(1e9)))
        assert lo == float(sigmoid(np.array(-30.0))) > 9e-14
        assert hi == float(sigmoid(np.array(30.0))) < 1 - 9e-14
        assert 0.0 < lo < hi < 1.0

    def test_proba_monotone_in_logit(self):
        logits = np.linspace(-40, 40, 401)
        probs = sigmoid(logits)
        assert (np.diff(probs) >= 0).all()


class TestTrainValidation:
    def test_single_class_fatal(self):
        table = pd.DataFrame({"x": [1.0, 2.0, 3.0, 4.0]})
        with pytest.raises(TrainingDataError, match="single-class"):
            train(table, [1, 1, 1, 1])

    def test_non_binary_labels_fatal(self):
        table = pd.DataFrame({"x": [1.0, 2.0, 3.0]})
        with pytest.raises(TrainingDataError):
            train(table, [0, 1, 2])

    def test_non_finite_cell_fatal_names_row_and_feature(self):
        table = pd.DataFrame({"wbc": [1.0, np.inf, 2.0, 1.5] * 5})
        labels = [0, 1] * 10
        with pytest.raises(TrainingDataError, match="wbc"):
            train(table, labels)


class TestTrainBehavior:
    def test_no_signal_limit(self):
        """Labels independent of features: terms near zero, intercept near the
        base-rate log-odds. 2000 rows keeps in-draw associations well below
        the 0.1 bound (they scale as 1/sqrt(n))."""
        rng = np.random.default_rng(42)
        n = 2000
        table = pd.DataFrame({
            "a": rng.normal(size=n),
            "b": rng.choice(list("xyz"), size=n),
        })
        y = (np.random.default_rng(99).random(n) < 0.3).astype(int)
        model = train(table, y, EbmConfig(seed=1))
        max_score = max(float(np.abs(t.scores).max()) for t in model.terms)
        assert max_score < 0.1
        base = float(np.log(y.mean() / (1 - y.mean())))
        assert model.intercept == pytest.approx(base, abs=0.15)

    def test_sin_shape_recovery(self, sin_model):
        model, _, _ = sin_model
        schema = model.schemas[0]
        edges = np.asarray(schema.bin_edges)
        centers = np.concatenate([[edges[0] - 0.1], (edges[:-1] + edges[1:]) / 2,
                                  [edges[-1] + 0.1]])
        rho = spearmanr(model.terms[0].scores[1:], np.sin(centers)).statistic
        assert rho >= 0.9

    def test_centering(self, sin_model):
        model, _, _ = sin_model
        for term, counts in zip(model.terms, model.bin_counts):
            mean = float(np.dot(counts, term.scores) / counts.sum())
            assert abs(mean) < 1e-9

    def test_missing_bin_score_is_zero(self, sin_model):
        model, _, _ = sin_model
        for term in model.terms:
            assert term.scores[0] == 0.0

    def test_determinism_bit_identical(self):
        rng = np.random.default_rng(5)
        table = pd.DataFrame({"x": rng.normal(size=300), "z": rng.normal(size=300)})
        y = (table["x"] + 0.5 * rng.normal(size=300) > 0).astype(int)
        a = train(table, y, EbmConfig(seed=11))
        b = train(table, y, EbmConfig(seed=11))
        assert a.intercept == b.intercept
        for ta, tb in zip(a.terms, b.terms):
            assert (ta.scores == tb.scores).all()

    def test_row_permutation_invariance_with_sample_ids(self):
        rng = np.random.default_rng(6)
        n = 120
        table = pd.DataFrame({"x": rng.normal(size=n), "z": rng.normal(size=n)})
        y = (table["x"] > 0).astype(int).to_numpy()
        ids = np.array([f"S{i:04d}" for i in range(n)])
        base = train(table, y, EbmConfig(seed=2, outer_bags=4, max_rounds=200),
                     sample_ids=ids)
        perm = rng.permutation(n)
        shuffled = train(table.iloc[perm].reset_index(drop=True), y[perm],
                         EbmConfig(seed=2, outer_bags=4, max_rounds=200),
                         sample_ids=ids[perm])
        assert base.intercept == shuffled.intercept
        for ta, tb in zip(base.terms, shuffled.terms):
            assert (ta.scores == tb.scores).all()

    def test_importances_match_definition(self, sin_model):
        model, _, _ = sin_model
        for j, (term, counts) in enumerate(zip(model.terms, model.bin_counts)):
            expected = float(np.dot(counts, np.abs(term.scores)) / counts.sum())
            assert model.importances[j] == pytest.approx(expected, rel=1e-12)

    def test_meta_records_config_and_encoding(self, sin_model):
        model, _, _ = sin_model
        assert model.meta["config"]["learning_rate"] == 0.01
        assert model.meta["config"]["outer_bags"] == 8
        assert model.meta["positive_class"] == "living"
        assert model.meta["class_counts"]["positive"] + \
            model.meta["class_counts"]["negative"] == model.meta["trained_rows"]

    def test_seed_changes_model(self):
        rng = np.random.default_rng(7)
        table = pd.DataFrame({"x": rng.normal(size=200)})
        y = (table["x"] + rng.normal(size=200) > 0).astype(int)
        a = train(table, y, EbmConfig(seed=1))
        b = train(table, y, EbmConfig(seed=2))
        assert a.intercept != b.intercept or any(
            (ta.scores != tb.scores).any() for ta, tb in zip(a.terms, b.terms)
        )

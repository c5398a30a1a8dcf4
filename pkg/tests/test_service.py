import pytest
from fastapi.testclient import TestClient

from amlboost.config import ServiceConfig
from amlboost.errors import ConfigError
from amlboost.explain import explain_local
from amlboost.grid import train_full_model
from amlboost.service import create_app
from amlboost.store import load_model, model_version_hash, save_model


@pytest.fixture(scope="module")
def service(small_records, tmp_path_factory):
    root = tmp_path_factory.mktemp("service")
    mut_genes = sorted(small_records[0].mutations)[:6] + ["TP53", "PHF6"]
    mut_genes = sorted(set(mut_genes))
    clin_mut = train_full_model(small_records, "CLIN+MUT", mut_genes, [])
    clin = train_full_model(small_records, "CLIN", [], [])
    save_model(clin_mut, root / "clin_mut.json")
    save_model(clin, root / "clin.json")
    config = ServiceConfig(
        models={"clin_mut": root / "clin_mut.json", "clin": root / "clin.json"},
        default_model="clin_mut",
        max_body_bytes=64_000,
    )
    client = TestClient(create_app(config))
    return client, config, root


PATIENT = {
    "diagnosis_age": 74, "bm_blast_pct": 66, "mutation_count": 12,
    "pb_blast_pct": 41, "wbc": 18.5, "gender": "Male", "race": "white",
    "cytogenetic_info": "complex karyotype", "eln_risk": "adverse",
    "treatment_intensity": "regular", "TP53": 1, "PHF6": 0,
}


class TestReadEndpoints:
    def test_health(self, service):
        client, _, _ = service
        body = client.get("/health").json()
        assert body["status"] == "ok"
        assert body["models"] == ["clin", "clin_mut"]

    def test_models_listing(self, service):
        client, config, root = service
        body = client.get("/models").json()
        assert body["default"] == "clin_mut"
        entry = next(m for m in body["models"] if m["id"] == "clin_mut")
        assert entry["version"] == model_version_hash(root / "clin_mut.json")
        assert "treatment_intensity" in entry["features"]

    def test_importance_ranked(self, service):
        client, _, _ = service
        body = client.get("/models/clin/importance").json()
        ranks = [row["rank"] for row in body["importances"]]
        assert ranks == list(range(1, len(ranks) + 1))
        values = [row["importance"] for row in body["importances"]]
        assert values == sorted(values, reverse=True)

    def test_term_curve(self, service):
        client, _, _ = service
        body = client.get("/models/clin_mut/term/TP53").json()
        assert body["kind"] == "binary"
        assert [p["bin"] for p in body["points"]] == ["missing", "0", "1"]

    def test_unknown_model_404(self, service):
        client, _, _ = service
        assert client.get("/models/nope/importance").status_code == 404
        assert client.post("/models/nope/predict",
                           json={"features": {}}).status_code == 404

    def test_unknown_feature_404(self, service):
        client, _, _ = service
        assert client.get("/models/clin/term/NOPE").status_code == 404


class TestPredict:
    def test_predict_matches_library(self, service):
        client, _, root = service
        response = client.post("/models/clin_mut/predict", json={"features": PATIENT})
        assert response.status_code == 200
        body = response.json()
        model = load_model(root / "clin_mut.json")
        explanation = explain_local(model, PATIENT)
        assert body["probability"] == pytest.approx(explanation.probability, abs=1e-12)
        assert body["logit"] == pytest.approx(explanation.logit, abs=1e-12)
        got = [(c["feature"], c["contribution"]) for c in body["explanation"]["contributions"]]
        want = [(c.feature, c.score) for c in explanation.contributions]
        assert got == want
        assert len(body["explanation"]["top"]) <= 15

    def test_additivity_in_payload(self, service):
        client, _, _ = service
        body = client.post("/models/clin_mut/predict", json={"features": PATIENT}).json()
        ordered = sorted(body["explanation"]["contributions"],
                         key=lambda c: c["term_index"])
        total = body["explanation"]["intercept"]
        for c in ordered:
            total += c["contribution"]
        assert total == pytest.approx(body["logit"], abs=0.0)

    def test_missing_features_warned_not_rejected(self, service):
        client, _, _ = service
        sparse = {"diagnosis_age": 50}
        body = client.post("/models/clin_mut/predict", json={"features": sparse})
        assert body.status_code == 200
        warned = body.json()["warnings"]
        assert any("wbc" in w for w in warned)

    def test_unknown_feature_422_with_location(self, service):
        client, _, _ = service
        response = client.post("/models/clin_mut/predict",
                               json={"features": {"made_up": 1.0}})
        assert response.status_code == 422
        detail = response.json()["detail"]
        assert detail[0]["loc"] == ["body", "features", "made_up"]

    def test_non_finite_and_wrong_type_422(self, service):
        client, _, _ = service
        for bad in ({"wbc": "abc"}, {"wbc": True}):
            response = client.post("/models/clin_mut/predict", json={"features": bad})
            assert response.status_code == 422, bad
        response = client.post("/models/clin_mut/predict",
                               json={"features": {"gender": {"x": 1}}})
        assert response.status_code == 422

    def test_malformed_body_422(self, service):
        client, _, _ = service
        assert client.post("/models/clin_mut/predict", json={}).status_code == 422

    def test_payload_too_large_413(self, service):
        client, config, _ = service
        blob = {"features": {"gender": "x" * (config.max_body_bytes + 10)}}
        response = client.post("/models/clin_mut/predict", json=blob)
        assert response.status_code == 413


class TestRecommendEndpoint:
    def test_exactly_four_options(self, service):
        client, _, _ = service
        body = client.post("/models/clin_mut/recommend", json={"features": PATIENT}).json()
        assert len(body["options"]) == 4
        treatments = [o["treatment"] for o in body["options"]]
        assert treatments == ["low-intensity", "target", "regular", "high-intensity"]
        assert body["recommended"] in treatments
        probs = {o["treatment"]: o["probability"] for o in body["options"]}
        assert body["recommended"] == max(
            treatments, key=lambda t: (probs[t], -treatments.index(t)))

    def test_recommend_against_clin_only_model_works(self, service):
        client, _, _ = service
        clin_patient = {k: v for k, v in PATIENT.items() if k not in ("TP53", "PHF6")}
        body = client.post("/models/clin/recommend", json={"features": clin_patient})
        assert body.status_code == 200

    def test_cli_and_api_identical_numbers(self, service, tmp_path):
        from click.testing import CliRunner
        import pandas as pd

        from amlboost.cli import main

        client, _, root = service
        api = client.post("/models/clin_mut/predict", json={"features": PATIENT}).json()
        patient_csv = tmp_path / "p.csv"
        pd.DataFrame([PATIENT]).to_csv(patient_csv, index=False)
        out = tmp_path / "explain"
        result = CliRunner().invoke(main, [
            "explain", "--model", str(root / "clin_mut.json"),
            "--patient", str(patient_csv), "--out", str(out), "--no-figures",
        ])
        assert result.exit_code == 0, result.output
        frame = pd.read_csv(out / "local_explanation.csv",
                            float_precision="round_trip")
        api_contribs = {c["feature"]: c["contribution"]
                        for c in api["explanation"]["contributions"]}
        for _, row in frame.iterrows():
            assert row["contribution"] == pytest.approx(
                api_contribs[row["feature"]], abs=0.0)


class TestConfig:
    def test_default_model_must_be_registered(self, tmp_path):
        with pytest.raises(ConfigError):
            ServiceConfig(models={"a": tmp_path / "a.json"}, default_model="b")

    def test_empty_registry_rejected(self):
        with pytest.raises(ConfigError):
            ServiceConfig(models={}, default_model="a")

    def test_reload_swaps_registry(self, service, small_records, tmp_path):
        client, config, root = service
        registry = client.app.state.registry
        before = registry.get("clin_mut").version
        registry.reload()
        assert registry.get("clin_mut").version == before

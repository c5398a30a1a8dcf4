import numpy as np
import pandas as pd
import pytest

from amlboost.cohort import categorize_treatment, clean, ingest
from amlboost.config import load_column_spec, load_treatment_map
from amlboost.ebm import EbmConfig, train
from amlboost.impute import impute_knn
from amlboost.synthetic import SimScale, write_exports


def build_records(raw_dir):
    cohorts = []
    for src in ("tcga", "ohsu"):
        spec = load_column_spec(raw_dir / f"{src}_columns.ini")
        cohorts.append(ingest(
            raw_dir / f"{src}_clinical.csv",
            raw_dir / f"{src}_mutations.csv",
            raw_dir / f"{src}_expressions.csv",
            src.upper(), spec,
        ))
    records, report = clean(cohorts)
    records = categorize_treatment(records, load_treatment_map(raw_dir / "treatment_map.ini"))
    records = impute_knn(records, k=3)
    return cohorts, records, report


@pytest.fixture(scope="session")
def small_raw_dir(tmp_path_factory):
    """Reduced-gene-pool synthetic exports; fast enough for unit tests."""
    out = tmp_path_factory.mktemp("sim_small")
    return write_exports(out, seed=7, scale=SimScale().small())


@pytest.fixture(scope="session")
def small_pipeline(small_raw_dir):
    return build_records(small_raw_dir)


@pytest.fixture(scope="session")
def small_records(small_pipeline):
    return small_pipeline[1]


@pytest.fixture(scope="session")
def full_raw_dir(tmp_path_factory):
    """Full-scale fixture used by the acceptance suite."""
    out = tmp_path_factory.mktemp("sim_full")
    return write_exports(out, seed=7)


@pytest.fixture(scope="session")
def full_pipeline(full_raw_dir):
    return build_records(full_raw_dir)


@pytest.fixture(scope="session")
def sin_model():
    """2000-row additive recovery fixture shared by several tests."""
    rng = np.random.default_rng(42)
    n = 2000
    x1 = rng.uniform(-3, 3, n)
    x2 = rng.normal(size=n)
    logit = 2.0 * np.sin(x1) + 1.0 * (x2 > 0) + rng.normal(0.0, 0.5, n)
    y = (rng.random(n) < 1.0 / (1.0 + np.exp(-logit))).astype(int)
    table = pd.DataFrame({"x1": x1, "x2": x2})
    model = train(table, y, EbmConfig(seed=3))
    return model, table, y

"""Parsers for the key/value (INI) configuration files.

Three file kinds share the same INI syntax (`configparser`, case-sensitive
keys, `=` delimiter):

* column spec  -- maps canonical clinical field names to the raw CSV headers
  of one cohort export, plus survival-status value normalization;
* treatment map -- maps raw therapy names to the four intensity categories;
* service config -- model registry and HTTP settings for `amlboost serve`.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

CLINICAL_CONTINUOUS = (
    "diagnosis_age",
    "bm_blast_pct",
    "mutation_count",
    "pb_blast_pct",
    "wbc",
)
CLINICAL_CATEGORICAL = (
    "gender",
    "race",
    "cytogenetic_info",
    "eln_risk",
    "treatment_intensity",
)
CLINICAL_PREDICTORS = CLINICAL_CONTINUOUS + CLINICAL_CATEGORICAL
LABEL_FIELD = "survival_status"
CLINICAL_FIELDS = CLINICAL_PREDICTORS + (LABEL_FIELD,)

TREATMENT_CATEGORIES = ("target", "regular", "low-intensity", "high-intensity")
#: Least-aggressive-first ordering used for recommendation tie-breaks.
TREATMENT_INTENSITY_ORDER = ("low-intensity", "target", "regular", "high-intensity")

LABEL_LIVING = "living"
LABEL_DECEASED = "deceased"


def _read_ini(path: str | Path) -> configparser.ConfigParser:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(delimiters=("=",), interpolation=None)
    parser.optionxform = str  # keys are case-sensitive raw names
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return parser


@dataclass(frozen=True)
class ColumnSpec:
    """How one cohort's raw CSV headers map onto the canonical record fields."""

    sample_id: str
    clinical: dict[str, str]  # canonical field -> raw clinical header
    survival_values: dict[str, str]  # raw status value -> living/deceased
    gene_id_column: str | None = None  # first column of the wide tables if None

    def __post_init__(self):
        unknown = set(self.clinical) - set(CLINICAL_FIELDS)
        if unknown:
            raise ConfigError(f"unknown clinical fields in column spec: {sorted(unknown)}")
        if LABEL_FIELD not in self.clinical:
            raise ConfigError("column spec must map survival_status")


def load_column_spec(path: str | Path) -> ColumnSpec:
    parser = _read_ini(path)
    if not parser.has_section("identity") or not parser.has_option("identity", "sample_id"):
        raise ConfigError(f"{path}: missing [identity] sample_id entry")
    if not parser.has_section("clinical"):
        raise ConfigError(f"{path}: missing [clinical] section")
    clinical = dict(parser.items("clinical"))
    survival_values: dict[str, str] = {}
    if parser.has_section("survival_values"):
        for canonical, raw_list in parser.items("survival_values"):
            if canonical not in (LABEL_LIVING, LABEL_DECEASED):
                raise ConfigError(
                    f"{path}: [survival_values] keys must be living/deceased, got {canonical!r}"
                )
            for raw in raw_list.split(","):
                survival_values[raw.strip()] = canonical
    gene_id = None
    if parser.has_option("genes", "id_column"):
        gene_id = parser.get("genes", "id_column")
    return ColumnSpec(
        sample_id=parser.get("identity", "sample_id"),
        clinical=clinical,
        survival_values=survival_values,
        gene_id_column=gene_id,
    )


def load_treatment_map(path: str | Path) -> dict[str, str]:
    """Raw therapy name -> one of the four intensity categories."""
    parser = _read_ini(path)
    if not parser.has_section("mapping"):
        raise ConfigError(f"{path}: missing [mapping] section")
    mapping = {}
    for raw, category in parser.items("mapping"):
        category = category.strip()
        if category not in TREATMENT_CATEGORIES:
            raise ConfigError(
                f"{path}: {raw!r} maps to {category!r}; expected one of {TREATMENT_CATEGORIES}"
            )
        mapping[raw] = category
    return mapping


@dataclass
class ServiceConfig:
    models: dict[str, Path]
    default_model: str
    bind: str = "127.0.0.1"
    port: int = 8000
    max_body_bytes: int = 1_048_576
    log_level: str = "info"
    base_dir: Path = field(default_factory=Path)

    def __post_init__(self):
        if not self.models:
            raise ConfigError("service config registers no models")
        if self.default_model not in self.models:
            raise ConfigError(
                f"default model {self.default_model!r} not in registry {sorted(self.models)}"
            )


def load_service_config(path: str | Path) -> ServiceConfig:
    parser = _read_ini(path)
    base = Path(path).resolve().parent
    if not parser.has_section("models") or not parser.items("models"):
        raise ConfigError(f"{path}: missing or empty [models] section")
    models = {
        model_id: (base / p).resolve() if not Path(p).is_absolute() else Path(p)
        for model_id, p in parser.items("models")
    }
    get = parser.get
    default = get("service", "default_model", fallback=next(iter(models)))
    return ServiceConfig(
        models=models,
        default_model=default,
        bind=get("service", "bind", fallback="127.0.0.1"),
        port=parser.getint("service", "port", fallback=8000),
        max_body_bytes=parser.getint("service", "max_body_bytes", fallback=1_048_576),
        log_level=get("service", "log_level", fallback="info"),
        base_dir=base,
    )

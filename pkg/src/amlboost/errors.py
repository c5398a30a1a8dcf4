"""Exception hierarchy shared across the pipeline, engine, and service."""


class AmlboostError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(AmlboostError):
    """A configuration file is missing, malformed, or inconsistent."""


class IngestError(AmlboostError):
    """A raw export cannot be ingested (missing id column, duplicate headers, ...)."""


class CleanError(AmlboostError):
    """Cohort cleaning failed; carries the report accumulated so far."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ImputationError(AmlboostError):
    """A record cannot be imputed (e.g. every clinical field missing)."""


class TreatmentMappingError(AmlboostError):
    """Raw therapy names without a mapping entry."""

    def __init__(self, unmapped):
        self.unmapped = sorted(set(unmapped))
        super().__init__(
            "unmapped therapy names: " + ", ".join(repr(n) for n in self.unmapped)
        )


class ExportError(AmlboostError):
    """A requested feature is absent from the cleaned cohort."""


class SelectionError(AmlboostError):
    """Feature selection failed (empty path, test-row leakage, ...)."""


class BinningError(AmlboostError):
    """A feature cannot be binned (all-missing column, unknown kind, ...)."""


class TrainingDataError(AmlboostError):
    """Training input is invalid (single-class labels, non-finite cells, ...)."""


class ModelFormatError(AmlboostError):
    """A model file is corrupted or has an unsupported version."""


class UnknownFeatureError(AmlboostError):
    """A feature name does not exist in the model schema."""


class RecommendationError(AmlboostError):
    """The model cannot drive treatment recommendation (no treatment term)."""

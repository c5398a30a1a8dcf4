"""Counterfactual therapy recommendation.

The patient is scored under each of the four treatment intensities; the
category with the highest predicted survival probability wins, with ties
going to the least aggressive therapy.
"""

from __future__ import annotations

from dataclasses import dataclass

from .config import TREATMENT_INTENSITY_ORDER
from .ebm import EbmModel
from .errors import RecommendationError
from .explain import LocalExplanation, explain_local

TREATMENT_FEATURE = "treatment_intensity"


@dataclass(frozen=True)
class TreatmentOption:
    treatment: str
    probability: float
    explanation: LocalExplanation


@dataclass
class TherapyRecommendation:
    """Four counterfactual scores plus the argmax choice.

    `options` is ordered least-aggressive-first (the display order);
    `recommended` is the argmax with that order breaking exact ties.
    `margin` is the probability gap between the best and second-best option.
    """

    options: list[TreatmentOption]
    recommended: str
    margin: float

    def option(self, treatment: str) -> TreatmentOption:
        for opt in self.options:
            if opt.treatment == treatment:
                return opt
        raise KeyError(treatment)


def recommend(model: EbmModel, record: dict) -> TherapyRecommendation:
    """Score `record` under every treatment intensity (its incoming treatment
    value, if any, is ignored) and pick the survival-maximizing category.
    """
    if TREATMENT_FEATURE not in model.feature_names:
        raise RecommendationError(
            f"model has no {TREATMENT_FEATURE!r} feature; it cannot drive "
            "treatment recommendation"
        )
    options = []
    for treatment in TREATMENT_INTENSITY_ORDER:
        variant = dict(record)
        variant[TREATMENT_FEATURE] = treatment
        explanation = explain_local(model, variant)
        options.append(TreatmentOption(
            treatment=treatment,
            probability=explanation.probability,
            explanation=explanation,
        ))
    best = max(options, key=lambda o: o.probability)  # ties keep earliest = least aggressive
    runner_up = max((o.probability for o in options if o.treatment != best.treatment),
                    default=best.probability)
    return TherapyRecommendation(
        options=options,
        recommended=best.treatment,
        margin=float(best.probability - runner_up),
    )

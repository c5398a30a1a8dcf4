"""Matplotlib renderers for the report paths.

Every CLI report command can drop a PNG next to its CSV output: local
explanations as signed horizontal bars, global importances as a top-k bar
chart, term shape functions as step/bar plots, and the grid medians as
grouped bars.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

from .binning import KIND_CONTINUOUS
from .ebm import EbmModel
from .explain import GlobalImportance, LocalExplanation
from .errors import UnknownFeatureError

BAR_POS = "#2c7fb8"
BAR_NEG = "#d95f0e"


def save_figure(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def local_explanation_figure(explanation: LocalExplanation, top_k: int = 15,
                             title: str = "Local explanation"):
    """Signed contribution bars, largest magnitude on top, intercept anchored."""
    rows = explanation.top(top_k)
    labels = [f"{c.feature} = {c.value if c.value is not None else 'missing'}"
              for c in rows][::-1]
    scores = [c.score for c in rows][::-1]
    colors = [BAR_POS if s >= 0 else BAR_NEG for s in scores]
    fig, ax = plt.subplots(figsize=(8, max(3, 0.4 * len(rows) + 1.5)))
    ax.barh(np.arange(len(rows)), scores, color=colors)
    ax.set_yticks(np.arange(len(rows)), labels, fontsize=8)
    ax.axvline(0.0, color="black", linewidth=0.8)
    ax.set_xlabel("contribution (logit)")
    ax.set_title(
        f"{title}\nintercept {explanation.intercept:+.3f}, "
        f"P(survival) = {explanation.probability:.3f}"
    )
    fig.tight_layout()
    return fig


def importance_figure(importance: GlobalImportance, top_k: int = 15,
                      title: str = "Feature importance"):
    rows = importance.top(top_k)[::-1]
    fig, ax = plt.subplots(figsize=(8, max(3, 0.4 * len(rows) + 1.2)))
    ax.barh(np.arange(len(rows)), [v for _, v in rows], color=BAR_POS)
    ax.set_yticks(np.arange(len(rows)), [n for n, _ in rows], fontsize=8)
    ax.set_xlabel("mean |contribution| (training-weighted)")
    ax.set_title(title)
    fig.tight_layout()
    return fig


def term_curve_figure(model: EbmModel, feature: str):
    """Shape function: step plot for continuous terms, bars for categorical."""
    for schema, term in zip(model.schemas, model.terms):
        if schema.name == feature:
            break
    else:
        raise UnknownFeatureError(f"model has no feature {feature!r}")
    fig, ax = plt.subplots(figsize=(8, 4))
    if schema.kind == KIND_CONTINUOUS and schema.bin_edges:
        edges = np.asarray(schema.bin_edges, dtype=float)
        span = edges[-1] - edges[0] if edges.size > 1 else max(abs(edges[0]), 1.0)
        left = np.concatenate([[edges[0] - 0.05 * span], edges])
        right = np.concatenate([edges, [edges[-1] + 0.05 * span]])
        scores = term.scores[1:]
        ax.step(np.append(left, right[-1]), np.append(scores, scores[-1]),
                where="post", color=BAR_POS)
        ax.set_xlabel(feature)
    else:
        labels = schema.labels()
        ax.bar(np.arange(len(labels)), term.scores,
               color=[BAR_POS if s >= 0 else BAR_NEG for s in term.scores])
        ax.set_xticks(np.arange(len(labels)), labels, rotation=30,
                      ha="right", fontsize=8)
    ax.axhline(0.0, color="black", linewidth=0.8)
    ax.set_ylabel("contribution (logit)")
    ax.set_title(f"Shape function: {feature}")
    fig.tight_layout()
    return fig


def grid_figure(median_frame: pd.DataFrame, title: str = "Model comparison (median over seeds)"):
    metrics = [c for c in median_frame.columns if c != "Model"]
    models = median_frame["Model"].to_list()
    x = np.arange(len(models))
    width = 0.8 / len(metrics)
    fig, ax = plt.subplots(figsize=(10, 4.5))
    for i, metric in enumerate(metrics):
        ax.bar(x + i * width, median_frame[metric], width, label=metric)
    ax.set_xticks(x + 0.4 - width / 2, models, rotation=20, ha="right", fontsize=8)
    ax.set_ylim(0, 1)
    ax.legend(fontsize=8, ncol=len(metrics))
    ax.set_title(title)
    fig.tight_layout()
    return fig


def recommendation_figure(recommendation, title: str = "Counterfactual therapy scores"):
    options = recommendation.options
    names = [o.treatment for o in options]
    probs = [o.probability for o in options]
    colors = [BAR_POS if o.treatment == recommendation.recommended else "#bdbdbd"
              for o in options]
    fig, ax = plt.subplots(figsize=(7, 3.6))
    ax.bar(np.arange(len(names)), probs, color=colors)
    ax.set_xticks(np.arange(len(names)), names, fontsize=9)
    ax.set_ylim(0, 1)
    ax.set_ylabel("P(survival)")
    ax.set_title(f"{title}\nrecommended: {recommendation.recommended} "
                 f"(margin {recommendation.margin:.3f})")
    fig.tight_layout()
    return fig

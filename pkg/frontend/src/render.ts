import {
  contributionChart, fmtMargin, fmtProbability, termBarChart, termStepChart,
} from "./charts";
import type {
  FieldErrorPayload, ImportanceEntry, RecommendResponse, TermResponse,
} from "./types";
import { TREATMENT_ORDER } from "./types";

const TOP_K = 15;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K, className?: string, textContent?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (textContent !== undefined) node.textContent = textContent;
  return node;
}

/**
 * The four treatment cards in fixed intensity order plus the explanation
 * chart for the recommended option. Every rendered number is a formatted
 * payload field; nothing is recomputed locally.
 */
export function renderWhatIf(container: HTMLElement, payload: RecommendResponse): void {
  container.replaceChildren();

  const cards = el("div", "treatment-cards");
  const byTreatment = new Map(payload.options.map((o) => [o.treatment, o]));
  for (const treatment of TREATMENT_ORDER) {
    const option = byTreatment.get(treatment);
    if (!option) continue;
    const isRecommended = treatment === payload.recommended;
    const card = el("div", isRecommended ? "card recommended" : "card");
    card.dataset.treatment = treatment;
    card.appendChild(el("h3", "card-title", treatment));
    const prob = el("div", "card-probability", fmtProbability(option.probability));
    prob.dataset.treatment = treatment;
    card.appendChild(prob);
    card.appendChild(el("div", "card-caption", "P(survival)"));
    if (isRecommended) {
      card.appendChild(el("div", "card-badge",
        `recommended (margin ${fmtMargin(payload.margin)})`));
    }
    cards.appendChild(card);
  }
  container.appendChild(cards);

  const recommended = byTreatment.get(payload.recommended);
  if (recommended) {
    const section = el("section", "explanation");
    section.appendChild(el("h3", undefined,
      `Why: top ${TOP_K} contributions under ${payload.recommended}`));
    section.appendChild(contributionChart(
      recommended.explanation.top.slice(0, TOP_K),
      recommended.explanation.intercept,
    ));
    container.appendChild(section);
  }

  if (payload.warnings.length > 0) {
    const warnings = el("div", "warnings");
    warnings.appendChild(el("strong", undefined,
      `${payload.warnings.length} feature(s) missing (routed to the missing bin):`));
    const list = el("ul");
    for (const warning of payload.warnings) {
      list.appendChild(el("li", undefined, warning));
    }
    warnings.appendChild(list);
    container.appendChild(warnings);
  }
}

/** Inline field messages; keys are feature names or "expressions"/"form". */
export function renderFieldErrors(form: HTMLElement, errors: Record<string, string>): void {
  for (const node of Array.from(form.querySelectorAll(".field-error"))) {
    node.remove();
  }
  for (const [field, message] of Object.entries(errors)) {
    const slot = form.querySelector(`[data-error-for="${field}"]`);
    const error = el("span", "field-error", message);
    error.setAttribute("data-field", field);
    if (slot) {
      slot.appendChild(error);
    } else {
      form.appendChild(error);
    }
  }
}

/** Map the server's 422 detail onto inline messages. */
export function fieldErrorsFromServer(details: FieldErrorPayload[]): Record<string, string> {
  const errors: Record<string, string> = {};
  for (const item of details) {
    const name = item.loc[item.loc.length - 1];
    errors[String(name)] = item.msg;
  }
  return errors;
}

/** Network-failure banner; the retry button resubmits the preserved form. */
export function renderRetryBanner(container: HTMLElement, onRetry: () => void): void {
  container.replaceChildren();
  const banner = el("div", "retry-banner");
  banner.appendChild(el("span", undefined,
    "The decision service could not be reached. Your inputs are preserved."));
  const button = el("button", "retry-button", "Retry");
  button.addEventListener("click", onRetry);
  banner.appendChild(button);
  container.appendChild(banner);
}

/** Importance-ranked term picker; only features the API reports exist. */
export function renderTermPicker(
  select: HTMLSelectElement, entries: ImportanceEntry[],
): void {
  select.replaceChildren();
  if (entries.length === 0) {
    select.disabled = true;
    const option = document.createElement("option");
    option.textContent = "no model loaded";
    select.appendChild(option);
    return;
  }
  select.disabled = false;
  for (const entry of entries) {
    const option = document.createElement("option");
    option.value = entry.feature;
    option.textContent = `${entry.rank}. ${entry.feature}`;
    select.appendChild(option);
  }
}

export function renderTermChart(container: HTMLElement, term: TermResponse): void {
  container.replaceChildren();
  container.appendChild(el("h3", undefined, `Shape function: ${term.feature}`));
  const chart = term.kind === "continuous"
    ? termStepChart(term.points)
    : termBarChart(term.points);
  container.appendChild(chart);
}

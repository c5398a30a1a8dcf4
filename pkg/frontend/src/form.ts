import type { FeatureMap } from "./types";

// Clinical inputs with the published descriptive ranges as hints; the same
// bounds drive inline validation before any request goes out.
export interface NumericFieldSpec {
  name: string;
  label: string;
  min: number;
  max: number;
  step: number;
}

export const CLINICAL_NUMERIC: NumericFieldSpec[] = [
  { name: "diagnosis_age", label: "Diagnosis age (years)", min: 18, max: 88, step: 1 },
  { name: "bm_blast_pct", label: "Bone marrow blast %", min: 20, max: 100, step: 0.1 },
  { name: "mutation_count", label: "Mutation count", min: 1, max: 34, step: 1 },
  { name: "pb_blast_pct", label: "Peripheral blood blast %", min: 0, max: 99.2, step: 0.1 },
  { name: "wbc", label: "WBC (x10^9/L)", min: 0.4, max: 483, step: 0.1 },
];

// Categorical clinical fields; their options come from the model's term
// endpoint (bins minus the missing slot), never from local lists.
export const CLINICAL_CATEGORICAL = [
  { name: "gender", label: "Gender" },
  { name: "race", label: "Race" },
  { name: "cytogenetic_info", label: "Cytogenetic group" },
  { name: "eln_risk", label: "ELN risk" },
] as const;

export const CLINICAL_FIELDS = [
  ...CLINICAL_NUMERIC.map((f) => f.name),
  ...CLINICAL_CATEGORICAL.map((f) => f.name),
];

export interface FormState {
  model_id: string;
  clinical: Record<string, string>;   // raw input text; "" means missing
  mutations: Record<string, boolean>; // toggled mutation flags
  expressionsText: string;            // bulk "GENE,value" lines
}

export function emptyForm(modelId: string): FormState {
  return { model_id: modelId, clinical: {}, mutations: {}, expressionsText: "" };
}

export interface ParsedExpressions {
  values: Record<string, number>;
  errors: string[];
}

/** Bulk expression entry: one `GENE,value` (or `GENE=value` / tab) per line. */
export function parseExpressions(text: string, knownFeatures: Set<string>): ParsedExpressions {
  const values: Record<string, number> = {};
  const errors: string[] = [];
  for (const rawLine of text.split(/\r?\n/)) {
    const line = rawLine.trim();
    if (!line) continue;
    const match = line.split(/[,=\t]/).map((part) => part.trim());
    if (match.length !== 2 || !match[0]) {
      errors.push(`cannot parse line: "${line}"`);
      continue;
    }
    const [gene, raw] = match as [string, string];
    const value = Number(raw);
    if (!Number.isFinite(value)) {
      errors.push(`${gene}: "${raw}" is not a number`);
      continue;
    }
    if (!knownFeatures.has(gene)) {
      errors.push(`${gene}: not a feature of this model`);
      continue;
    }
    values[gene] = value;
  }
  return { values, errors };
}

export type FieldErrors = Record<string, string>;

/** Client-side mirror of the server's 422 rules plus the range hints. */
export function validateForm(form: FormState, knownFeatures: Set<string>): FieldErrors {
  const errors: FieldErrors = {};
  for (const spec of CLINICAL_NUMERIC) {
    const raw = (form.clinical[spec.name] ?? "").trim();
    if (raw === "") continue; // incomplete sections submit as missing
    const value = Number(raw);
    if (!Number.isFinite(value)) {
      errors[spec.name] = "must be a number";
    } else if (value < spec.min || value > spec.max) {
      errors[spec.name] = `must be between ${spec.min} and ${spec.max}`;
    }
  }
  const expressions = parseExpressions(form.expressionsText, knownFeatures);
  if (expressions.errors.length > 0) {
    errors["expressions"] = expressions.errors.join("; ");
  }
  return errors;
}

/** Request body the what-if loop sends; empty inputs are simply omitted. */
export function toFeatureMap(form: FormState, knownFeatures: Set<string>): FeatureMap {
  const features: FeatureMap = {};
  for (const spec of CLINICAL_NUMERIC) {
    const raw = (form.clinical[spec.name] ?? "").trim();
    if (raw !== "") features[spec.name] = Number(raw);
  }
  for (const field of CLINICAL_CATEGORICAL) {
    const raw = (form.clinical[field.name] ?? "").trim();
    if (raw !== "") features[field.name] = raw;
  }
  for (const [gene, flagged] of Object.entries(form.mutations)) {
    if (flagged) features[gene] = 1;
  }
  const parsed = parseExpressions(form.expressionsText, knownFeatures);
  Object.assign(features, parsed.values);
  return features;
}

export function serializeForm(form: FormState): string {
  return JSON.stringify(form);
}

export function deserializeForm(text: string): FormState {
  const raw = JSON.parse(text) as FormState;
  return {
    model_id: raw.model_id,
    clinical: { ...raw.clinical },
    mutations: { ...raw.mutations },
    expressionsText: raw.expressionsText ?? "",
  };
}

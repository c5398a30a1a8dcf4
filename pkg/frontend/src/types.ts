// Payload shapes of the amlboost decision service. The UI renders these
// verbatim; it never derives numbers of its own.

export type FeatureValue = number | string;
export type FeatureMap = Record<string, FeatureValue>;

export interface ModelInfo {
  id: string;
  version: string;
  features: string[];
  positive_class: string | null;
  trained_rows: number | null;
  default: boolean;
}

export interface ModelsResponse {
  models: ModelInfo[];
  default: string;
}

export interface ImportanceEntry {
  feature: string;
  importance: number;
  rank: number;
}

export interface ImportanceResponse {
  model_id: string;
  version: string;
  importances: ImportanceEntry[];
}

export type FeatureKind = "continuous" | "categorical" | "binary";

export interface TermPoint {
  bin: string;
  score: number;
}

export interface TermResponse {
  model_id: string;
  version: string;
  feature: string;
  kind: FeatureKind;
  points: TermPoint[];
}

export interface ContributionPayload {
  feature: string;
  value: FeatureValue | null;
  bin: string;
  contribution: number;
  term_index: number;
}

export interface ExplanationPayload {
  intercept: number;
  logit: number;
  probability: number;
  predicted_class: string;
  contributions: ContributionPayload[];
  top: ContributionPayload[];
}

export interface PredictResponse {
  model_id: string;
  version: string;
  probability: number;
  logit: number;
  predicted_class: string;
  explanation: ExplanationPayload;
  warnings: string[];
}

export interface TreatmentOptionPayload {
  treatment: string;
  probability: number;
  explanation: ExplanationPayload;
}

export interface RecommendResponse {
  model_id: string;
  version: string;
  recommended: string;
  margin: number;
  options: TreatmentOptionPayload[];
  warnings: string[];
}

export interface FieldErrorPayload {
  loc: (string | number)[];
  msg: string;
  type?: string;
}

export const TREATMENT_ORDER = [
  "low-intensity",
  "target",
  "regular",
  "high-intensity",
] as const;

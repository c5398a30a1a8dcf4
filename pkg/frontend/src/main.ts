import { ApiClient, ApiError, RequestSequencer } from "./api";
import {
  CLINICAL_CATEGORICAL, CLINICAL_FIELDS, CLINICAL_NUMERIC, FormState,
  deserializeForm, emptyForm, serializeForm, toFeatureMap, validateForm,
} from "./form";
import {
  fieldErrorsFromServer, renderFieldErrors, renderRetryBanner, renderTermChart,
  renderTermPicker, renderWhatIf,
} from "./render";
import type { FeatureKind } from "./types";

const STORAGE_KEY = "amlboost-form";

interface AppElements {
  form: HTMLElement;
  results: HTMLElement;
  banner: HTMLElement;
  modelSelect: HTMLSelectElement;
  termSelect: HTMLSelectElement;
  termView: HTMLElement;
  submit: HTMLButtonElement;
}

export class App {
  readonly sequencer = new RequestSequencer();
  form: FormState = emptyForm("");
  private featureKinds = new Map<string, FeatureKind>();
  private categories = new Map<string, string[]>();

  constructor(
    private readonly api: ApiClient,
    private readonly elements: AppElements,
    private readonly storage: Storage | null = null,
  ) {}

  get knownFeatures(): Set<string> {
    return new Set(this.featureKinds.keys());
  }

  async start(): Promise<void> {
    const models = await this.api.models();
    const select = this.elements.modelSelect;
    select.replaceChildren();
    for (const model of models.models) {
      const option = document.createElement("option");
      option.value = model.id;
      option.textContent = `${model.id} (${model.version})`;
      select.appendChild(option);
    }
    const saved = this.storage?.getItem(STORAGE_KEY);
    this.form = saved ? deserializeForm(saved) : emptyForm(models.default);
    if (!models.models.some((m) => m.id === this.form.model_id)) {
      this.form.model_id = models.default;
    }
    select.value = this.form.model_id;
    select.addEventListener("change", () => {
      this.form.model_id = select.value;
      void this.loadModel();
    });
    this.elements.submit.addEventListener("click", () => void this.submit());
    this.elements.termSelect.addEventListener("change", () =>
      void this.exploreTerm(this.elements.termSelect.value));
    await this.loadModel();
  }

  /** Pull the selected model's schema (kinds + category options) and rebuild
   * the form inputs; the picker comes from the importance ranking. */
  async loadModel(): Promise<void> {
    const modelId = this.form.model_id;
    const models = await this.api.models();
    const info = models.models.find((m) => m.id === modelId);
    this.featureKinds.clear();
    this.categories.clear();
    if (!info) {
      renderTermPicker(this.elements.termSelect, []);
      return;
    }
    for (const feature of info.features) {
      const term = await this.api.term(modelId, feature);
      this.featureKinds.set(feature, term.kind);
      if (term.kind !== "continuous") {
        this.categories.set(
          feature,
          term.points.map((p) => p.bin).filter((b) => b !== "missing"),
        );
      }
    }
    const importance = await this.api.importance(modelId);
    renderTermPicker(this.elements.termSelect, importance.importances);
    this.rebuildForm();
  }

  private rebuildForm(): void {
    const root = this.elements.form;
    root.replaceChildren();
    const clinical = document.createElement("fieldset");
    clinical.appendChild(Object.assign(document.createElement("legend"),
      { textContent: "Clinical features" }));
    for (const spec of CLINICAL_NUMERIC) {
      if (!this.featureKinds.has(spec.name)) continue;
      const row = document.createElement("label");
      row.dataset.errorFor = spec.name;
      row.appendChild(document.createTextNode(
        `${spec.label} [${spec.min}-${spec.max}] `));
      const input = document.createElement("input");
      input.type = "number";
      input.name = spec.name;
      input.min = String(spec.min);
      input.max = String(spec.max);
      input.step = String(spec.step);
      input.value = this.form.clinical[spec.name] ?? "";
      input.addEventListener("input", () => {
        this.form.clinical[spec.name] = input.value;
        this.persist();
      });
      row.appendChild(input);
      clinical.appendChild(row);
    }
    for (const field of CLINICAL_CATEGORICAL) {
      if (!this.featureKinds.has(field.name)) continue;
      const row = document.createElement("label");
      row.dataset.errorFor = field.name;
      row.appendChild(document.createTextNode(`${field.label} `));
      const select = document.createElement("select");
      select.name = field.name;
      const blank = document.createElement("option");
      blank.value = "";
      blank.textContent = "(not recorded)";
      select.appendChild(blank);
      for (const category of this.categories.get(field.name) ?? []) {
        const option = document.createElement("option");
        option.value = category;
        option.textContent = category;
        select.appendChild(option);
      }
      select.value = this.form.clinical[field.name] ?? "";
      select.addEventListener("change", () => {
        this.form.clinical[field.name] = select.value;
        this.persist();
      });
      row.appendChild(select);
      clinical.appendChild(row);
    }
    root.appendChild(clinical);

    const mutations = [...this.featureKinds.entries()]
      .filter(([name, kind]) => kind === "binary" && !CLINICAL_FIELDS.includes(name))
      .map(([name]) => name)
      .sort();
    if (mutations.length > 0) {
      const fieldset = document.createElement("fieldset");
      fieldset.appendChild(Object.assign(document.createElement("legend"),
        { textContent: "Mutations (optional)" }));
      for (const gene of mutations) {
        const row = document.createElement("label");
        const box = document.createElement("input");
        box.type = "checkbox";
        box.name = gene;
        box.checked = this.form.mutations[gene] ?? false;
        box.addEventListener("change", () => {
          this.form.mutations[gene] = box.checked;
          this.persist();
        });
        row.appendChild(box);
        row.appendChild(document.createTextNode(` ${gene}`));
        fieldset.appendChild(row);
      }
      root.appendChild(fieldset);
    }

    const hasExpressions = [...this.featureKinds.entries()].some(
      ([name, kind]) => kind === "continuous" && !CLINICAL_FIELDS.includes(name));
    if (hasExpressions) {
      const fieldset = document.createElement("fieldset");
      fieldset.dataset.errorFor = "expressions";
      fieldset.appendChild(Object.assign(document.createElement("legend"),
        { textContent: "Expression levels (optional, paste GENE,value per line)" }));
      const area = document.createElement("textarea");
      area.name = "expressions";
      area.rows = 6;
      area.value = this.form.expressionsText;
      area.addEventListener("input", () => {
        this.form.expressionsText = area.value;
        this.persist();
      });
      fieldset.appendChild(area);
      root.appendChild(fieldset);
    }
  }

  private persist(): void {
    this.storage?.setItem(STORAGE_KEY, serializeForm(this.form));
  }

  /** The what-if loop: validate, send, and render only the newest response. */
  async submit(): Promise<void> {
    this.elements.banner.replaceChildren();
    const errors = validateForm(this.form, this.knownFeatures);
    renderFieldErrors(this.elements.form, errors);
    if (Object.keys(errors).length > 0) {
      return; // invalid forms never reach the network
    }
    const ticket = this.sequencer.next();
    const features = toFeatureMap(this.form, this.knownFeatures);
    try {
      const payload = await this.api.recommend(this.form.model_id, features);
      if (!this.sequencer.isCurrent(ticket)) return; // stale response discarded
      renderWhatIf(this.elements.results, payload);
    } catch (error) {
      if (!this.sequencer.isCurrent(ticket)) return;
      if (error instanceof ApiError && error.status === 422) {
        renderFieldErrors(this.elements.form,
          error.fieldErrors.length
            ? fieldErrorsFromServer(error.fieldErrors)
            : { form: error.message });
        return;
      }
      renderRetryBanner(this.elements.banner, () => void this.submit());
    }
  }

  async exploreTerm(feature: string): Promise<void> {
    if (!feature) return;
    const term = await this.api.term(this.form.model_id, feature);
    renderTermChart(this.elements.termView, term);
  }
}

export function mount(root: Document, baseUrl = ""): App {
  const pick = <T extends HTMLElement>(id: string): T => {
    const node = root.getElementById(id);
    if (!node) throw new Error(`missing #${id}`);
    return node as T;
  };
  const app = new App(new ApiClient(baseUrl), {
    form: pick("patient-form"),
    results: pick("results"),
    banner: pick("banner"),
    modelSelect: pick<HTMLSelectElement>("model-select"),
    termSelect: pick<HTMLSelectElement>("term-select"),
    termView: pick("term-view"),
    submit: pick<HTMLButtonElement>("submit"),
  }, window.localStorage);
  void app.start();
  return app;
}

declare global {
  interface Window { amlboostApp?: App }
}

if (typeof document !== "undefined" && document.getElementById("patient-form")) {
  window.amlboostApp = mount(document);
}

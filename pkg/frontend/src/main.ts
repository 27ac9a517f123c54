/**
 * Explorer wiring: controls -> debounced service calls -> rendered views.
 *
 * Responses are reconciled through LatestRequestGate: each request carries
 * the canonical serialization of its config fragment, and only responses
 * matching the latest issued fragment reach the DOM.
 */

import { ApiClient, FetchTransport, LatestRequestGate } from "./api.js";
import { debounce } from "./debounce.js";
import { Json } from "./serialize.js";
import {
  clampBandwidth,
  clampBeta,
  clampCapacity,
  clampEta,
  clampHarmRatio,
  defaultDraft,
  evaluateFragment,
  ScenarioDraft,
} from "./state.js";
import { BreakEvenResult, EvaluateResult, OptimizeResult } from "./types.js";
import { buildBreakEvenViewModel, renderBreakEvenView } from "./views/breakeven.js";
import { buildBudgetViewModel, renderBudgetView } from "./views/budget.js";
import { buildRatioGridViewModel, RatioGridResult, renderRatioGridView } from "./views/ratio.js";
import { buildScenarioViewModel, renderScenarioPanel } from "./views/scenario.js";

const DEBOUNCE_MS = 180;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function numberInput(id: string): number {
  return Number(el<HTMLInputElement>(id).value);
}

export function startApp(baseUrl = ""): void {
  const api = new ApiClient(new FetchTransport(baseUrl));
  const draft: ScenarioDraft = defaultDraft();

  const scenarioGate = new LatestRequestGate();
  const breakEvenGate = new LatestRequestGate();
  const budgetGate = new LatestRequestGate();
  const ratioGate = new LatestRequestGate();

  const showError = (region: string, message: string) => {
    el(region).innerHTML = `<p class="error">${message}</p>`;
  };

  const refreshScenario = debounce(async () => {
    draft.capacity = clampCapacity(numberInput("capacity"), draft.populationSize);
    draft.beta = clampBeta(numberInput("beta"));
    draft.harmRatio = clampHarmRatio(numberInput("harm-ratio"));
    draft.utilityKind =
      el<HTMLSelectElement>("utility-kind").value === "crra" ? "crra" : "partitioned";
    const fragment = evaluateFragment(draft);
    const token = scenarioGate.issue(fragment);
    try {
      const doc = await api.postAnalysis<EvaluateResult>("/evaluate", fragment);
      if (!scenarioGate.isCurrent(doc.client_token ?? token)) return;
      renderScenarioPanel(el("scenario-panel"), buildScenarioViewModel(doc));
    } catch (err) {
      showError("scenario-panel", String(err));
    }
  }, DEBOUNCE_MS);

  const refreshBreakEven = debounce(async () => {
    const bandwidth = clampBandwidth(numberInput("bandwidth"));
    const etaMax = clampEta(numberInput("eta-max"));
    const fragment: Json = {
      ...(evaluateFragment(draft) as Record<string, Json>),
      masks: { band: { band: { cutoff: "capacity", bandwidth } } },
      levers: {
        improve: { kind: "prediction_improvement", mask: "band" },
        expand: {
          kind: "expand_capacity",
          delta_alpha: 0.025,
          cost: { kind: "per_person", unit_cost: 4.0 },
        },
      },
      analysis: {
        kind: "break_even",
        lever: "improve",
        benchmark: "expand",
        grid: { start: 0, stop: etaMax, num: 21 },
        with_equivalent_cost: true,
      },
    };
    const token = breakEvenGate.issue(fragment);
    try {
      const doc = await api.postAnalysis<BreakEvenResult>("/break-even", fragment);
      if (!breakEvenGate.isCurrent(doc.client_token ?? token)) return;
      renderBreakEvenView(el("breakeven-view"), buildBreakEvenViewModel(doc));
    } catch (err) {
      showError("breakeven-view", String(err));
    }
  }, DEBOUNCE_MS);

  const refreshBudget = debounce(async () => {
    const budget = Math.max(0, numberInput("budget"));
    const manualOn = el<HTMLInputElement>("manual-mode").checked;
    const manual = manualOn
      ? [Math.max(0, numberInput("manual-collect")), Math.max(0, numberInput("manual-expand"))]
      : undefined;
    const fragment: Json = {
      ...(evaluateFragment(draft) as Record<string, Json>),
      levers: {
        collect: {
          kind: "data_labeling",
          seed: 11,
          cost: { kind: "per_person", unit_cost: 13.0 },
        },
        expand: {
          kind: "expand_capacity",
          cost: { kind: "per_person", unit_cost: 100.0 },
        },
      },
      analysis: {
        kind: "optimize_budget",
        levers: ["collect", "expand"],
        budget,
        resolution: budget > 0 ? budget / 50 : null,
        ...(manual ? { manual_spends: manual } : {}),
      },
    };
    const token = budgetGate.issue(fragment);
    try {
      const doc = await api.postAnalysis<OptimizeResult>("/optimize", fragment);
      if (!budgetGate.isCurrent(doc.client_token ?? token)) return;
      renderBudgetView(el("budget-view"), buildBudgetViewModel(doc));
    } catch (err) {
      showError("budget-view", String(err));
    }
  }, DEBOUNCE_MS);

  const refreshRatio = debounce(async () => {
    const fragment: Json = {
      ...(evaluateFragment(draft) as Record<string, Json>),
      levers: {
        improve: { kind: "prediction_improvement" },
        soften: { kind: "harm_reduction" },
      },
      analysis: {
        kind: "ratio_grid",
        lever_a: "improve",
        grid_a: [0.05, 0.1, 0.2, 0.4, 0.8],
        lever_b: "soften",
        grid_b: [0.0, 0.5, 1.0, 1.5],
        truncation: [0.2, 5.0],
      },
    };
    const token = ratioGate.issue(fragment);
    try {
      const doc = await api.postAnalysis<RatioGridResult>("/ratio-grid", fragment);
      if (!ratioGate.isCurrent(doc.client_token ?? token)) return;
      renderRatioGridView(el("ratio-view"), buildRatioGridViewModel(doc));
    } catch (err) {
      showError("ratio-view", String(err));
    }
  }, DEBOUNCE_MS);

  el("upload-form").addEventListener("submit", async (event) => {
    event.preventDefault();
    const content = el<HTMLTextAreaElement>("dataset-content").value;
    try {
      const summary = await api.uploadDataset({
        content,
        schema: {
          outcome_col: el<HTMLInputElement>("outcome-col").value,
          prediction_col: el<HTMLInputElement>("prediction-col").value,
        },
        direction: el<HTMLSelectElement>("direction").value,
      });
      draft.datasetId = summary.dataset_id;
      draft.populationSize = summary.size;
      el("dataset-summary").textContent =
        `${summary.name}: N=${summary.size}, labeled ${summary.labeled_share}`;
      refreshScenario();
    } catch (err) {
      el("dataset-summary").textContent = String(err);
    }
  });

  for (const id of ["capacity", "beta", "harm-ratio", "utility-kind"]) {
    el(id).addEventListener("input", () => {
      refreshScenario();
      refreshBreakEven();
      refreshRatio();
    });
  }
  for (const id of ["bandwidth", "eta-max"]) {
    el(id).addEventListener("input", refreshBreakEven);
  }
  for (const id of ["budget", "manual-mode", "manual-collect", "manual-expand"]) {
    el(id).addEventListener("input", refreshBudget);
  }

  refreshScenario();
}

declare global {
  interface Window {
    allocsimExplorer: { startApp: typeof startApp };
  }
}

if (typeof window !== "undefined") {
  window.allocsimExplorer = { startApp };
}

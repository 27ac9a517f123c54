/**
 * Live welfare summary panel.
 *
 * The view model copies service numbers by reference; the panel performs
 * no arithmetic on them, so what the engine computed is what renders.
 */

import { EvaluateResult, ResultDocument } from "../types.js";

export interface ScenarioViewModel {
  configHash: string;
  welfare: number;
  randomBaseline: number;
  perfectBaseline: number;
  welfareRatio: number | null;
  slots: number;
  slotsUsed: number;
  fillCount: number;
  warnings: string[];
}

export function buildScenarioViewModel(
  document: ResultDocument<EvaluateResult>,
): ScenarioViewModel {
  const r = document.result;
  return {
    configHash: document.config_hash,
    welfare: r.welfare,
    randomBaseline: r.random_baseline,
    perfectBaseline: r.perfect_baseline,
    welfareRatio: r.welfare_ratio,
    slots: r.slots,
    slotsUsed: r.slots_used,
    fillCount: r.fill_count,
    warnings: r.warnings,
  };
}

/** Every number the panel shows, for transport-interception tests. */
export function displayedNumbers(vm: ScenarioViewModel): number[] {
  const values = [vm.welfare, vm.randomBaseline, vm.perfectBaseline, vm.slots,
                  vm.slotsUsed, vm.fillCount];
  if (vm.welfareRatio !== null) values.push(vm.welfareRatio);
  return values;
}

export function renderScenarioPanel(root: HTMLElement, vm: ScenarioViewModel): void {
  const ratio = vm.welfareRatio === null ? "undefined (zero baseline)" : String(vm.welfareRatio);
  root.innerHTML = `
    <dl class="scenario-summary" data-config-hash="${vm.configHash}">
      <dt>Welfare</dt><dd data-field="welfare">${vm.welfare}</dd>
      <dt>Random baseline</dt><dd data-field="random">${vm.randomBaseline}</dd>
      <dt>Perfect baseline</dt><dd data-field="perfect">${vm.perfectBaseline}</dd>
      <dt>Ratio over random</dt><dd data-field="ratio">${ratio}</dd>
      <dt>Slots used</dt><dd data-field="slots">${vm.slotsUsed} / ${vm.slots}</dd>
    </dl>
    ${vm.warnings.length ? `<p class="warnings">${vm.warnings.join("; ")}</p>` : ""}
  `;
}

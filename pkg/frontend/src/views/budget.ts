/**
 * Budget split explorer: optimal spend per lever, the coverage/capacity
 * the split buys, and the manual-override comparison. The welfare cost of
 * deviating from the optimum arrives precomputed (`deviation_loss`); the
 * view never subtracts welfare values itself.
 */

import { OptimizeResult, ResultDocument } from "../types.js";
import { renderStackedBar } from "../charts.js";

export interface BudgetViewModel {
  configHash: string;
  budget: number;
  totalWelfare: number;
  welfareGain: number;
  baselineWelfare: number;
  splits: { leverId: string; spend: number; theta: number }[];
  resultingLabelShare: number;
  resultingCapacity: number;
  resultingSlots: number;
  manual: {
    spends: number[];
    welfare: number;
    gain: number;
    deviationLoss: number;
    resultingLabelShare: number;
    resultingCapacity: number;
  } | null;
}

export function buildBudgetViewModel(
  document: ResultDocument<OptimizeResult>,
): BudgetViewModel {
  const r = document.result;
  return {
    configHash: document.config_hash,
    budget: r.budget,
    totalWelfare: r.total_welfare,
    welfareGain: r.welfare_gain,
    baselineWelfare: r.baseline_welfare,
    splits: r.splits.map((s) => ({ leverId: s.lever_id, spend: s.spend, theta: s.theta })),
    resultingLabelShare: r.resulting.label_share,
    resultingCapacity: r.resulting.capacity,
    resultingSlots: r.resulting.slots,
    manual: r.manual
      ? {
          spends: r.manual.spends,
          welfare: r.manual.welfare,
          gain: r.manual.gain,
          deviationLoss: r.manual.deviation_loss,
          resultingLabelShare: r.manual.resulting.label_share,
          resultingCapacity: r.manual.resulting.capacity,
        }
      : null,
  };
}

export function displayedNumbers(vm: BudgetViewModel): number[] {
  const values = [
    vm.budget, vm.totalWelfare, vm.welfareGain, vm.baselineWelfare,
    vm.resultingLabelShare, vm.resultingCapacity, vm.resultingSlots,
  ];
  for (const s of vm.splits) values.push(s.spend, s.theta);
  if (vm.manual) {
    values.push(vm.manual.welfare, vm.manual.gain, vm.manual.deviationLoss,
                vm.manual.resultingLabelShare, vm.manual.resultingCapacity,
                ...vm.manual.spends);
  }
  return values;
}

export function renderBudgetView(root: HTMLElement, vm: BudgetViewModel): void {
  const splitRows = vm.splits.map((s) => `
      <tr><td>${s.leverId}</td>
          <td data-field="spend-${s.leverId}">${s.spend}</td>
          <td data-field="theta-${s.leverId}">${s.theta}</td></tr>`).join("");
  const manual = vm.manual === null ? "" : `
    <section class="manual-split">
      <h4>Manual split</h4>
      <p>welfare <span data-field="manual-welfare">${vm.manual.welfare}</span>,
         cost of deviating from the optimum
         <span data-field="deviation-loss">${vm.manual.deviationLoss}</span></p>
    </section>`;
  root.innerHTML = `
    <section class="budget" data-config-hash="${vm.configHash}">
      <h3>Budget ${vm.budget}</h3>
      <div class="chart">${renderStackedBar(
        vm.splits.map((s) => ({ label: s.leverId, value: s.spend })), vm.budget,
      )}</div>
      <table>
        <thead><tr><th>lever</th><th>spend</th><th>magnitude reached</th></tr></thead>
        <tbody>${splitRows}</tbody>
      </table>
      <p>Resulting coverage <span data-field="label-share">${vm.resultingLabelShare}</span>,
         capacity <span data-field="capacity">${vm.resultingCapacity}</span>
         (<span data-field="slots">${vm.resultingSlots}</span> slots);
         welfare <span data-field="welfare">${vm.totalWelfare}</span>
         (gain <span data-field="gain">${vm.welfareGain}</span>).</p>
      ${manual}
    </section>
  `;
}

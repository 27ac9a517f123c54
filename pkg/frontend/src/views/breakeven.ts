/**
 * Break-even explorer: the (magnitude, gain difference) curve, the first
 * crossing marker, and the per-point equivalent-cost readout ("hours you
 * should be willing to invest"), all straight from one service response.
 */

import { BreakEvenResult, ResultDocument } from "../types.js";
import { renderLineChart } from "../charts.js";

export interface BreakEvenViewModel {
  configHash: string;
  leverId: string;
  benchmarkId: string;
  attained: boolean;
  markerTheta: number | null;
  benchmarkGain: number;
  rmseParityEta: number | null;
  /** (theta, gain - benchmark gain) pairs, service-computed. */
  curve: { theta: number; gainMinusBenchmark: number; equivalentCost: number | null }[];
}

export function buildBreakEvenViewModel(
  document: ResultDocument<BreakEvenResult>,
): BreakEvenViewModel {
  const r = document.result;
  return {
    configHash: document.config_hash,
    leverId: r.lever,
    benchmarkId: r.benchmark,
    attained: r.attained,
    markerTheta: r.theta_star,
    benchmarkGain: r.benchmark_gain,
    rmseParityEta: r.rmse_parity_eta,
    curve: r.points.map((p) => ({
      theta: p.theta,
      gainMinusBenchmark: p.gain_minus_benchmark,
      equivalentCost: p.equivalent_cost,
    })),
  };
}

export function displayedNumbers(vm: BreakEvenViewModel): number[] {
  const values: number[] = [vm.benchmarkGain];
  if (vm.markerTheta !== null) values.push(vm.markerTheta);
  if (vm.rmseParityEta !== null) values.push(vm.rmseParityEta);
  for (const p of vm.curve) {
    values.push(p.theta, p.gainMinusBenchmark);
    if (p.equivalentCost !== null) values.push(p.equivalentCost);
  }
  return values;
}

export function renderBreakEvenView(root: HTMLElement, vm: BreakEvenViewModel): void {
  const marker = vm.attained && vm.markerTheta !== null
    ? `<p class="marker">Break-even at magnitude <b data-field="theta-star">${vm.markerTheta}</b></p>`
    : `<p class="marker unattained">No magnitude in range suffices.</p>`;
  const parity = vm.rmseParityEta === null ? "" :
    `<p>Reduction to reach population RMSE parity: <span data-field="parity">${vm.rmseParityEta}</span></p>`;
  const rows = vm.curve.map((p) => `
      <tr>
        <td>${p.theta}</td>
        <td>${p.gainMinusBenchmark}</td>
        <td>${p.equivalentCost === null ? "-" : p.equivalentCost}</td>
      </tr>`).join("");
  root.innerHTML = `
    <section class="breakeven" data-config-hash="${vm.configHash}">
      <h3>${vm.leverId} vs ${vm.benchmarkId}</h3>
      ${marker}${parity}
      <div class="chart">${renderLineChart(
        vm.curve.map((p) => [p.theta, p.gainMinusBenchmark]),
        { markerX: vm.attained ? vm.markerTheta : null, zeroLine: true },
      )}</div>
      <table>
        <thead><tr><th>magnitude</th><th>gain - benchmark</th><th>equivalent cost</th></tr></thead>
        <tbody>${rows}</tbody>
      </table>
    </section>
  `;
}

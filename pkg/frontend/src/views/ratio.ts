/**
 * Ratio heatmap: willingness-to-pay for lever A in units of lever B.
 *
 * Colors use the service's truncated values (presentation clipping);
 * tooltips carry the raw ratios. Undefined cells (nonpositive benchmark
 * gain) render gray and never display a number.
 */

import { ResultDocument } from "../types.js";
import { renderHeatmap } from "../charts.js";

export interface RatioGridResult {
  lever_a: string;
  lever_b: string;
  axis_a: number[];
  axis_b: number[];
  truncation: [number, number];
  cells: {
    theta_a: number;
    theta_b: number;
    gain_a: number;
    gain_b: number;
    defined: boolean;
    ratio: number | null;
    ratio_truncated: number | null;
  }[];
}

export interface RatioGridViewModel {
  configHash: string;
  leverA: string;
  leverB: string;
  axisA: number[];
  axisB: number[];
  truncation: [number, number];
  cells: { ratio: number | null; ratioTruncated: number | null; defined: boolean }[][];
}

export function buildRatioGridViewModel(
  document: ResultDocument<RatioGridResult>,
): RatioGridViewModel {
  const r = document.result;
  const byKey = new Map(r.cells.map((c) => [`${c.theta_a}|${c.theta_b}`, c]));
  const cells = r.axis_a.map((ta) =>
    r.axis_b.map((tb) => {
      const cell = byKey.get(`${ta}|${tb}`);
      if (!cell) throw new Error(`missing cell ${ta}, ${tb}`);
      return { ratio: cell.ratio, ratioTruncated: cell.ratio_truncated, defined: cell.defined };
    }),
  );
  return {
    configHash: document.config_hash,
    leverA: r.lever_a,
    leverB: r.lever_b,
    axisA: r.axis_a,
    axisB: r.axis_b,
    truncation: r.truncation,
    cells,
  };
}

export function displayedNumbers(vm: RatioGridViewModel): number[] {
  const values: number[] = [...vm.axisA, ...vm.axisB];
  for (const row of vm.cells) {
    for (const cell of row) {
      if (cell.defined && cell.ratio !== null && cell.ratioTruncated !== null) {
        values.push(cell.ratio, cell.ratioTruncated);
      }
    }
  }
  return values;
}

export function renderRatioGridView(root: HTMLElement, vm: RatioGridViewModel): void {
  const svg = renderHeatmap(vm.axisA, vm.axisB, (i, j) => {
    const cell = vm.cells[i]![j]!;
    return { value: cell.ratioTruncated, raw: cell.ratio };
  });
  const rows = vm.cells
    .map((row, i) => {
      const cells = row
        .map((c) => `<td>${c.defined && c.ratio !== null ? c.ratio : "-"}</td>`)
        .join("");
      return `<tr><th>${vm.axisA[i]}</th>${cells}</tr>`;
    })
    .join("");
  root.innerHTML = `
    <section class="ratio-grid" data-config-hash="${vm.configHash}">
      <h3>${vm.leverA} over ${vm.leverB}</h3>
      <p>Colors clipped to [${vm.truncation[0]}, ${vm.truncation[1]}];
         tooltips and the table show raw ratios.</p>
      <div class="chart">${svg}</div>
      <table>
        <thead><tr><th></th>${vm.axisB.map((t) => `<th>${t}</th>`).join("")}</tr></thead>
        <tbody>${rows}</tbody>
      </table>
    </section>
  `;
}

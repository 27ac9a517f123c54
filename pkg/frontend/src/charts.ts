/**
 * Dependency-free SVG chart fragments.
 *
 * Geometry here is presentation only (pixel scaling of service numbers);
 * raw values always appear in tooltips via <title> elements.
 */

const WIDTH = 420;
const HEIGHT = 180;
const PAD = 28;

function scale(values: number[], lo: number, hi: number): (v: number) => number {
  const min = Math.min(...values);
  const max = Math.max(...values);
  const span = max - min || 1;
  return (v: number) => lo + ((v - min) / span) * (hi - lo);
}

export interface LineChartOptions {
  markerX?: number | null;
  zeroLine?: boolean;
}

export function renderLineChart(points: [number, number][], options: LineChartOptions = {}): string {
  if (points.length === 0) return "<svg></svg>";
  const xs = points.map((p) => p[0]);
  const ys = points.map((p) => p[1]);
  const sx = scale(xs, PAD, WIDTH - PAD);
  const sy = scale(ys, HEIGHT - PAD, PAD);
  const path = points
    .map(([x, y], i) => `${i === 0 ? "M" : "L"}${sx(x).toFixed(1)},${sy(y).toFixed(1)}`)
    .join(" ");
  const zero =
    options.zeroLine && Math.min(...ys) < 0 && Math.max(...ys) > 0
      ? `<line x1="${PAD}" x2="${WIDTH - PAD}" y1="${sy(0).toFixed(1)}" y2="${sy(0).toFixed(1)}" class="zero-line" stroke="#999" stroke-dasharray="4 3"/>`
      : "";
  const marker =
    options.markerX !== null && options.markerX !== undefined
      ? `<line x1="${sx(options.markerX).toFixed(1)}" x2="${sx(options.markerX).toFixed(1)}" y1="${PAD}" y2="${HEIGHT - PAD}" class="break-even-marker" stroke="#c9a227" stroke-width="2"><title>${options.markerX}</title></line>`
      : "";
  const dots = points
    .map(([x, y]) => `<circle cx="${sx(x).toFixed(1)}" cy="${sy(y).toFixed(1)}" r="2.5"><title>${x}, ${y}</title></circle>`)
    .join("");
  return `<svg viewBox="0 0 ${WIDTH} ${HEIGHT}" role="img">${zero}<path d="${path}" fill="none" stroke="#2a6f97" stroke-width="1.5"/>${dots}${marker}</svg>`;
}

export function renderStackedBar(
  parts: { label: string; value: number }[],
  total: number,
): string {
  const width = WIDTH - 2 * PAD;
  let x = PAD;
  const colors = ["#2a6f97", "#61a5c2", "#c9a227", "#9b2226"];
  const segments = parts.map((part, i) => {
    const w = total > 0 ? (part.value / total) * width : 0;
    const seg = `<rect x="${x.toFixed(1)}" y="40" width="${w.toFixed(1)}" height="36" fill="${colors[i % colors.length]}"><title>${part.label}: ${part.value}</title></rect>`;
    x += w;
    return seg;
  });
  const unspent = `<rect x="${x.toFixed(1)}" y="40" width="${(PAD + width - x).toFixed(1)}" height="36" fill="#ddd"><title>unspent</title></rect>`;
  return `<svg viewBox="0 0 ${WIDTH} 120" role="img">${segments.join("")}${unspent}</svg>`;
}

export function renderHeatmap(
  axisA: number[],
  axisB: number[],
  cell: (i: number, j: number) => { value: number | null; raw: number | null },
): string {
  const cw = (WIDTH - 2 * PAD) / axisB.length;
  const ch = (HEIGHT - 2 * PAD) / axisA.length;
  const rects: string[] = [];
  for (let i = 0; i < axisA.length; i++) {
    for (let j = 0; j < axisB.length; j++) {
      const { value, raw } = cell(i, j);
      const fill = value === null ? "#eee" : heatColor(value);
      const tooltip = raw === null ? "undefined" : String(raw);
      rects.push(
        `<rect x="${(PAD + j * cw).toFixed(1)}" y="${(PAD + i * ch).toFixed(1)}" width="${cw.toFixed(1)}" height="${ch.toFixed(1)}" fill="${fill}"><title>${tooltip}</title></rect>`,
      );
    }
  }
  return `<svg viewBox="0 0 ${WIDTH} ${HEIGHT}" role="img">${rects.join("")}</svg>`;
}

/** Cool below 1, warm above 1 on a log-ish ramp clipped by the caller. */
function heatColor(value: number): string {
  if (value >= 1) {
    const t = Math.min(1, Math.log(value) / Math.log(5));
    const g = Math.round(180 - 120 * t);
    return `rgb(230, ${g}, 80)`;
  }
  const t = Math.min(1, Math.log(1 / Math.max(value, 1e-9)) / Math.log(5));
  const r = Math.round(180 - 120 * t);
  return `rgb(${r}, 190, 230)`;
}

/**
 * Small deterministic SVG scene builder: linear scales, axes, polylines,
 * bars and labels. Output contains no timestamps or random ids, so
 * re-rendering the same data yields identical bytes.
 */

export interface Scale {
  (value: number): number;
  domain: [number, number];
}

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  let [d0, d1] = domain;
  if (d0 === d1) {
    d0 -= 1;
    d1 += 1;
  }
  const k = (range[1] - range[0]) / (d1 - d0);
  const f = ((value: number) => range[0] + (value - d0) * k) as Scale;
  f.domain = [d0, d1];
  return f;
}

export function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (!Number.isFinite(lo)) {
    throw new Error("cannot compute extent of an empty series");
  }
  return [lo, hi];
}

const fmt = (v: number): string => {
  const s = v.toFixed(2);
  return s === "-0.00" ? "0.00" : s;
};

/** Short human label for tick values. */
export function tickLabel(v: number): string {
  if (v !== 0 && (Math.abs(v) >= 10000 || Math.abs(v) < 0.01)) {
    return v.toExponential(1);
  }
  return Number(v.toFixed(3)).toString();
}

export function escapeText(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export interface Panel {
  x: number;
  y: number;
  width: number;
  height: number;
  elements: string[];
}

export const PALETTE = {
  line: "#2563eb",
  reference: "#dc2626",
  bars: "#60a5fa",
  barsAlt: "#f59e0b",
  axis: "#374151",
  grid: "#e5e7eb",
  marker: "#dc2626",
};

export function makePanel(x: number, y: number, width: number, height: number): Panel {
  return { x, y, width, height, elements: [] };
}

export function panelTitle(panel: Panel, text: string): void {
  panel.elements.push(
    `<text x="${fmt(panel.x + panel.width / 2)}" y="${fmt(panel.y - 8)}" ` +
      `text-anchor="middle" font-size="13" fill="${PALETTE.axis}">${escapeText(text)}</text>`,
  );
}

export function axes(panel: Panel, xs: Scale, ys: Scale, xLabel: string, yLabel: string): void {
  const { x, y, width, height } = panel;
  const bottom = y + height;
  panel.elements.push(
    `<line x1="${fmt(x)}" y1="${fmt(bottom)}" x2="${fmt(x + width)}" y2="${fmt(bottom)}" stroke="${PALETTE.axis}" stroke-width="1"/>`,
    `<line x1="${fmt(x)}" y1="${fmt(y)}" x2="${fmt(x)}" y2="${fmt(bottom)}" stroke="${PALETTE.axis}" stroke-width="1"/>`,
  );
  for (const t of [0, 0.5, 1]) {
    const vx = xs.domain[0] + t * (xs.domain[1] - xs.domain[0]);
    const px = xs(vx);
    panel.elements.push(
      `<line x1="${fmt(px)}" y1="${fmt(bottom)}" x2="${fmt(px)}" y2="${fmt(bottom + 4)}" stroke="${PALETTE.axis}"/>`,
      `<text x="${fmt(px)}" y="${fmt(bottom + 16)}" text-anchor="middle" font-size="10" fill="${PALETTE.axis}">${tickLabel(vx)}</text>`,
    );
    const vy = ys.domain[0] + t * (ys.domain[1] - ys.domain[0]);
    const py = ys(vy);
    panel.elements.push(
      `<line x1="${fmt(x - 4)}" y1="${fmt(py)}" x2="${fmt(x)}" y2="${fmt(py)}" stroke="${PALETTE.axis}"/>`,
      `<text x="${fmt(x - 6)}" y="${fmt(py + 3)}" text-anchor="end" font-size="10" fill="${PALETTE.axis}">${tickLabel(vy)}</text>`,
    );
  }
  panel.elements.push(
    `<text x="${fmt(x + width / 2)}" y="${fmt(bottom + 30)}" text-anchor="middle" font-size="11" fill="${PALETTE.axis}">${escapeText(xLabel)}</text>`,
    `<text x="${fmt(x - 42)}" y="${fmt(y + height / 2)}" text-anchor="middle" font-size="11" fill="${PALETTE.axis}" transform="rotate(-90 ${fmt(x - 42)} ${fmt(y + height / 2)})">${escapeText(yLabel)}</text>`,
  );
}

export function polyline(panel: Panel, xs: Scale, ys: Scale, x: number[], y: number[],
                         color: string = PALETTE.line): void {
  const points = x.map((v, i) => `${fmt(xs(v))},${fmt(ys(y[i]))}`).join(" ");
  panel.elements.push(
    `<polyline fill="none" stroke="${color}" stroke-width="1.2" points="${points}"/>`,
  );
}

export function circles(panel: Panel, xs: Scale, ys: Scale, x: number[], y: number[],
                        color: string, cssClass: string): void {
  for (let i = 0; i < x.length; i++) {
    panel.elements.push(
      `<circle class="${cssClass}" cx="${fmt(xs(x[i]))}" cy="${fmt(ys(y[i]))}" r="2.5" fill="${color}"/>`,
    );
  }
}

/** Horizontal reference line carrying its value as a data attribute. */
export function referenceLineY(panel: Panel, xs: Scale, ys: Scale, value: number,
                               label?: string): void {
  const py = ys(value);
  panel.elements.push(
    `<line class="reference" data-value="${value}" x1="${fmt(panel.x)}" y1="${fmt(py)}" ` +
      `x2="${fmt(panel.x + panel.width)}" y2="${fmt(py)}" stroke="${PALETTE.reference}" ` +
      `stroke-width="1" stroke-dasharray="5,3"/>`,
    `<text x="${fmt(panel.x + panel.width + 4)}" y="${fmt(py + 3)}" font-size="10" ` +
      `fill="${PALETTE.reference}">${escapeText(label ?? tickLabel(value))}</text>`,
  );
}

/** Vertical reference line carrying its value as a data attribute. */
export function referenceLineX(panel: Panel, xs: Scale, value: number, label?: string): void {
  const px = xs(value);
  panel.elements.push(
    `<line class="reference" data-value="${value}" x1="${fmt(px)}" y1="${fmt(panel.y)}" ` +
      `x2="${fmt(px)}" y2="${fmt(panel.y + panel.height)}" stroke="${PALETTE.reference}" ` +
      `stroke-width="1" stroke-dasharray="5,3"/>`,
    `<text x="${fmt(px)}" y="${fmt(panel.y - 2)}" text-anchor="middle" font-size="10" ` +
      `fill="${PALETTE.reference}">${escapeText(label ?? tickLabel(value))}</text>`,
  );
}

export interface Histogram {
  edges: number[];
  counts: number[];
}

export function histogram(values: number[], bins: number, weights?: number[],
                          domain?: [number, number]): Histogram {
  const [lo, hi] = domain ?? extent(values);
  const span = hi > lo ? hi - lo : 1;
  const edges = Array.from({ length: bins + 1 }, (_, i) => lo + (span * i) / bins);
  const counts = new Array(bins).fill(0);
  values.forEach((v, i) => {
    let k = Math.floor(((v - lo) / span) * bins);
    if (k < 0) k = 0;
    if (k >= bins) k = bins - 1;
    counts[k] += weights ? weights[i] : 1;
  });
  return { edges, counts };
}

export function bars(panel: Panel, xs: Scale, ys: Scale, hist: Histogram,
                     color: string = PALETTE.bars): void {
  const base = ys(0);
  for (let i = 0; i < hist.counts.length; i++) {
    const x0 = xs(hist.edges[i]);
    const x1 = xs(hist.edges[i + 1]);
    const top = ys(hist.counts[i]);
    panel.elements.push(
      `<rect x="${fmt(x0)}" y="${fmt(top)}" width="${fmt(Math.max(x1 - x0 - 0.5, 0.5))}" ` +
        `height="${fmt(Math.max(base - top, 0))}" fill="${color}"/>`,
    );
  }
}

export function document(width: number, height: number, panels: Panel[],
                         title: string): string {
  const body = panels.map((p) => p.elements.join("\n")).join("\n");
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">`,
    `<rect width="${width}" height="${height}" fill="#ffffff"/>`,
    `<title>${escapeText(title)}</title>`,
    body,
    "</svg>",
    "",
  ].join("\n");
}

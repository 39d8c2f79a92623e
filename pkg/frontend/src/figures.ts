/**
 * The five figure types rendered from a run directory:
 *
 * 1. coefficient posterior histograms (particle cloud, truth lines)
 * 2. MAP coefficient traces over the stream (truth lines)
 * 3. normalised effective sample size over the stream (threshold, re-inits)
 * 4. runtime vs stream size (benchmark table)
 * 5. covariate histograms split by declared hypothesis
 */

import { Table, numericColumn, prefixedColumns } from "./csv.js";
import { GeneratorSpec, Snapshot } from "./io.js";
import {
  PALETTE,
  axes,
  bars,
  circles,
  document,
  extent,
  histogram,
  linearScale,
  makePanel,
  panelTitle,
  polyline,
  referenceLineX,
  referenceLineY,
} from "./svg.js";

const PANEL_W = 420;
const PANEL_H = 160;
const MARGIN_L = 70;
const MARGIN_R = 60;
const MARGIN_T = 40;
const GAP = 60;

function panelGrid(count: number, columns = 1) {
  const rows = Math.ceil(count / columns);
  const width = MARGIN_L + columns * (PANEL_W + MARGIN_R);
  const height = MARGIN_T + rows * (PANEL_H + GAP);
  const at = (i: number) => ({
    x: MARGIN_L + (i % columns) * (PANEL_W + MARGIN_R),
    y: MARGIN_T + Math.floor(i / columns) * (PANEL_H + GAP),
  });
  return { width, height, at };
}

export function coefficientHistograms(snapshot: Snapshot, spec?: GeneratorSpec): string {
  const d = snapshot.d;
  const weights = snapshot.weights;
  const grid = panelGrid(d);
  const panels = [];
  for (let j = 0; j < d; j++) {
    const values = snapshot.particles.map((p) => p.beta[j]);
    const { x, y } = grid.at(j);
    const panel = makePanel(x, y, PANEL_W, PANEL_H);
    const domain = extent(spec ? values.concat([spec.beta[j]]) : values);
    const hist = histogram(values, 40, weights, pad(domain));
    const xs = linearScale(pad(domain), [x, x + PANEL_W]);
    const ys = linearScale([0, Math.max(...hist.counts) * 1.05 || 1], [y + PANEL_H, y]);
    panelTitle(panel, `posterior of coefficient ${j}`);
    bars(panel, xs, ys, hist);
    axes(panel, xs, ys, `coefficient ${j}`, "posterior mass");
    if (spec) {
      referenceLineX(panel, xs, spec.beta[j]);
    }
    panels.push(panel);
  }
  return document(grid.width, grid.height, panels, "coefficient posterior histograms");
}

function pad([lo, hi]: [number, number]): [number, number] {
  const span = hi > lo ? hi - lo : 1;
  return [lo - 0.05 * span, hi + 0.05 * span];
}

export function mapTraces(trace: Table, spec?: GeneratorSpec): string {
  const t = numericColumn(trace, "t");
  const betaCols = prefixedColumns(trace, "map_beta");
  if (betaCols.length === 0) {
    throw new Error("trace.csv has no map_beta columns");
  }
  const grid = panelGrid(betaCols.length);
  const panels = [];
  betaCols.forEach((name, j) => {
    const series = numericColumn(trace, name);
    const { x, y } = grid.at(j);
    const panel = makePanel(x, y, PANEL_W, PANEL_H);
    const domain = pad(extent(spec ? series.concat([spec.beta[j]]) : series));
    const xs = linearScale([t[0], t[t.length - 1]], [x, x + PANEL_W]);
    const ys = linearScale(domain, [y + PANEL_H, y]);
    panelTitle(panel, `MAP coefficient ${j} over the stream`);
    axes(panel, xs, ys, "records processed", `coefficient ${j}`);
    polyline(panel, xs, ys, t, series);
    if (spec) {
      referenceLineY(panel, xs, ys, spec.beta[j]);
    }
    panels.push(panel);
  });
  return document(grid.width, grid.height, panels, "MAP coefficient traces");
}

export function nessOverTime(trace: Table): string {
  const t = numericColumn(trace, "t");
  const ness = numericColumn(trace, "ness");
  const reinit = numericColumn(trace, "reinit");
  const grid = panelGrid(1);
  const { x, y } = grid.at(0);
  const panel = makePanel(x, y, PANEL_W, PANEL_H);
  const xs = linearScale([t[0], t[t.length - 1]], [x, x + PANEL_W]);
  const ys = linearScale([0, 1.05], [y + PANEL_H, y]);
  panelTitle(panel, "normalised effective sample size");
  axes(panel, xs, ys, "records processed", "NESS");
  polyline(panel, xs, ys, t, ness);
  referenceLineY(panel, xs, ys, 0.1, "re-init threshold 0.1");
  const rx = t.filter((_, i) => reinit[i] === 1);
  circles(panel, xs, ys, rx, rx.map(() => 1.0), PALETTE.marker, "reinit");
  return document(grid.width, grid.height, [panel], "NESS over the stream");
}

export function runtimeCurve(benchmark: Table): string {
  const n = numericColumn(benchmark, "n");
  const seconds = numericColumn(benchmark, "seconds");
  const grid = panelGrid(1);
  const { x, y } = grid.at(0);
  const panel = makePanel(x, y, PANEL_W, PANEL_H);
  const xs = linearScale(pad(extent(n.concat([0]))), [x, x + PANEL_W]);
  const ys = linearScale(pad(extent(seconds.concat([0]))), [y + PANEL_H, y]);
  panelTitle(panel, "wall-clock time vs stream size");
  axes(panel, xs, ys, "records", "seconds");
  polyline(panel, xs, ys, n, seconds);
  circles(panel, xs, ys, n, seconds, PALETTE.line, "sample");
  return document(grid.width, grid.height, [panel], "runtime scaling");
}

export function covariateSplitHistograms(records: Table, decisions: Table): string {
  const ids = numericColumn(records, "id");
  const covCols = prefixedColumns(records, "x");
  if (covCols.length === 0) {
    throw new Error("records.csv has no covariate columns");
  }
  const declaredById = new Map<number, number>();
  const decIds = numericColumn(decisions, "id");
  const declared = numericColumn(decisions, "declared");
  decIds.forEach((id, i) => declaredById.set(id, declared[i]));

  const grid = panelGrid(covCols.length * 2, 2);
  const panels = [];
  covCols.forEach((name, j) => {
    const values = numericColumn(records, name);
    const domain = pad(extent(values));
    for (const side of [1, 0]) {
      const subset = values.filter((_, i) => declaredById.get(ids[i]) === side);
      const index = j * 2 + (side === 1 ? 0 : 1);
      const { x, y } = grid.at(index);
      const panel = makePanel(x, y, PANEL_W, PANEL_H);
      const hist = histogram(subset.length ? subset : [0], 30, undefined, domain);
      const xs = linearScale(domain, [x, x + PANEL_W]);
      const ys = linearScale([0, Math.max(...hist.counts) * 1.05 || 1], [y + PANEL_H, y]);
      panelTitle(panel, `${name}: declared ${side === 1 ? "signal" : "null"} (${subset.length})`);
      bars(panel, xs, ys, hist, side === 1 ? PALETTE.barsAlt : PALETTE.bars);
      axes(panel, xs, ys, name, "count");
      panels.push(panel);
    }
  });
  return document(grid.width, grid.height, panels, "covariates by declared hypothesis");
}

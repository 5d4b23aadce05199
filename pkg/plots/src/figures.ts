import { Table, SchemaError, requireColumns, column, numericColumn } from "./csv";
import { leastSquares, mean } from "./fit";
import { PALETTE, Scene, fmt, makeScale, plotArea } from "./svg";

export type FigureKind =
  | "eps_convergence_loglog"
  | "regularity_bars"
  | "schauder_compensated"
  | "residual_decay";

/** Reference regularity of each driver component as a function of theta. */
export function referenceTable(theta: number): Record<string, number> {
  return {
    X: theta / 2 - 1,
    V: 1.5 * theta - 2,
    Y: 2 * theta - 3,
    W: 2 * theta - 4,
    What: 2 * theta - 4,
    Z: 2.5 * theta - 5,
    Zhat: 2.5 * theta - 5,
  };
}

function groupBy<T>(keys: string[], values: T[]): Map<string, T[]> {
  const out = new Map<string, T[]>();
  keys.forEach((k, i) => {
    const bucket = out.get(k);
    if (bucket) bucket.push(values[i]);
    else out.set(k, [values[i]]);
  });
  return out;
}

export function epsConvergenceFigure(path: string, table: Table): string {
  requireColumns(path, table, ["component", "eps", "seed", "alpha", "norm", "diff_norm"]);
  const comps = column(table, "component");
  const eps = numericColumn(table, "eps");
  const diff = numericColumn(table, "diff_norm");
  const names = [...new Set(comps)];
  const area = plotArea();

  // seed-mean difference per (component, eps)
  const series = names.map((name) => {
    const idx = comps.map((c, i) => (c === name ? i : -1)).filter((i) => i >= 0);
    const byEps = groupBy(idx.map((i) => String(eps[i])), idx.map((i) => diff[i]));
    const pts = [...byEps.entries()]
      .map(([e, ds]) => [Number(e), mean(ds)] as [number, number])
      .filter(([, d]) => d > 0)
      .sort((a, b) => a[0] - b[0]);
    return { name, pts };
  }).filter((s) => s.pts.length >= 2);
  if (series.length === 0) {
    throw new SchemaError(`${path}: no strictly positive difference norms to plot`);
  }

  const allE = series.flatMap((s) => s.pts.map((p) => p[0]));
  const allD = series.flatMap((s) => s.pts.map((p) => p[1]));
  const xs = makeScale(Math.min(...allE), Math.max(...allE), area.x0, area.x1, true);
  const ys = makeScale(Math.min(...allD), Math.max(...allD), area.y0, area.y1, true);

  const scene = new Scene();
  scene.axes(xs, ys, "eps", "||C^eps - C^{eps/2}||");
  const legend: Array<[string, string]> = [];
  series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    scene.polyline(s.pts.map(([e, d]) => [xs(e), ys(d)]),
                   `stroke="${color}" stroke-width="1.5"`);
    for (const [e, d] of s.pts) {
      scene.circle(xs(e), ys(d), 3, `fill="${color}"`);
    }
    const fit = leastSquares(s.pts.map((p) => Math.log(p[0])),
                             s.pts.map((p) => Math.log(p[1])));
    legend.push([`${s.name}: rate ${fmt(fit.slope)} ± ${fmt(fit.stderr)}`, color]);
  });
  scene.legend(legend);
  return scene.render("Cauchy differences vs eps (log-log, seed means)");
}

export function regularityFigure(path: string, table: Table): string {
  requireColumns(path, table, ["component", "theta", "eps", "seed", "slope", "reference"]);
  const comps = column(table, "component");
  const slope = numericColumn(table, "slope");
  const reference = numericColumn(table, "reference");
  const theta = numericColumn(table, "theta")[0];
  const names = [...new Set(comps)];
  const area = plotArea();

  const refTable = referenceTable(theta);
  const bars = names.map((name) => {
    const idx = comps.map((c, i) => (c === name ? i : -1)).filter((i) => i >= 0);
    const ref = reference[idx[0]];
    const expected = refTable[name];
    if (expected !== undefined && ref !== expected) {
      throw new SchemaError(
        `${path}: reference for ${name} is ${ref}, table value is ${expected}`);
    }
    return { name, mean: mean(idx.map((i) => slope[i])), ref };
  });

  const vals = bars.flatMap((b) => [b.mean, b.ref]);
  const lo = Math.min(0, ...vals) - 0.2;
  const hi = Math.max(0, ...vals) + 0.2;
  const ys = makeScale(lo, hi, area.y0, area.y1);
  const xs = makeScale(0, bars.length, area.x0, area.x1);
  xs.ticks = [];

  const scene = new Scene();
  scene.axes(xs, ys, "component", "fitted regularity");
  const width = (area.x1 - area.x0) / bars.length;
  bars.forEach((b, i) => {
    const cx = area.x0 + (i + 0.5) * width;
    const y0 = ys(0);
    const yb = ys(b.mean);
    scene.rect(cx - width * 0.3, Math.min(y0, yb), width * 0.6, Math.abs(yb - y0),
               `fill="${PALETTE[i % PALETTE.length]}" fill-opacity="0.7"`);
    // reference tick at the table value
    scene.line(cx - width * 0.42, ys(b.ref), cx + width * 0.42, ys(b.ref),
               'stroke="#000" stroke-width="2" stroke-dasharray="4 2" class="reference-tick"');
    scene.text(cx, area.y0 + 20, b.name, 'text-anchor="middle" font-size="12"');
    scene.text(cx, ys(b.ref) - 6, `ref ${fmt(b.ref)}`,
               'text-anchor="middle" font-size="10"');
  });
  return scene.render(`Regularity slopes vs references (theta = ${fmt(theta)})`);
}

export function schauderFigure(path: string, table: Table): string {
  requireColumns(path, table, ["t", "compensated_norm"]);
  const t = numericColumn(table, "t");
  const v = numericColumn(table, "compensated_norm");
  const area = plotArea();
  const xs = makeScale(Math.min(...t), Math.max(...t), area.x0, area.x1, true);
  const ys = makeScale(0, Math.max(...v) * 1.1, area.y0, area.y1);
  const scene = new Scene();
  scene.axes(xs, ys, "t", "t^delta ||P_t f||");
  const pts = t.map((ti, i) => [xs(ti), ys(v[i])] as [number, number]);
  scene.polyline(pts, `stroke="${PALETTE[0]}" stroke-width="1.5"`);
  for (const [px, py] of pts) scene.circle(px, py, 3, `fill="${PALETTE[0]}"`);
  const ratio = Math.max(...v) / Math.min(...v);
  scene.legend([[`max/min = ${fmt(ratio)}`, PALETTE[0]]]);
  return scene.render("Compensated semigroup smoothing probe");
}

export function residualFigure(path: string, table: Table): string {
  requireColumns(path, table, ["iteration", "residual"]);
  const it = numericColumn(table, "iteration");
  const res = numericColumn(table, "residual");
  const pos = res.filter((r) => r > 0);
  if (pos.length === 0) {
    throw new SchemaError(`${path}: residuals are all zero; nothing to plot`);
  }
  const area = plotArea();
  const xs = makeScale(Math.min(...it), Math.max(...it), area.x0, area.x1);
  const ys = makeScale(Math.min(...pos), Math.max(...pos), area.y0, area.y1, true);
  const scene = new Scene();
  scene.axes(xs, ys, "Picard iteration", "residual");
  const pts = it.map((i, j) => [xs(i), ys(Math.max(res[j], Math.min(...pos)))] as [number, number]);
  scene.polyline(pts, `stroke="${PALETTE[1]}" stroke-width="1.5"`);
  for (const [px, py] of pts) scene.circle(px, py, 3, `fill="${PALETTE[1]}"`);
  const fit = leastSquares(it, res.map((r) => Math.log(Math.max(r, 1e-300))));
  scene.legend([[`decay rate ${fmt(Math.exp(fit.slope))}/iter`, PALETTE[1]]]);
  return scene.render("Picard residual decay");
}

export const FIGURES: Record<FigureKind, (path: string, t: Table) => string> = {
  eps_convergence_loglog: epsConvergenceFigure,
  regularity_bars: regularityFigure,
  schauder_compensated: schauderFigure,
  residual_decay: residualFigure,
};

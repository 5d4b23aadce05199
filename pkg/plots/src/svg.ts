/** Minimal deterministic SVG scene builder: fixed canvas, no timestamps,
 * identical inputs give byte-identical output. */

export const WIDTH = 720;
export const HEIGHT = 480;
export const MARGIN = { left: 70, right: 160, top: 40, bottom: 55 };

export const PALETTE = [
  "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf",
];

export function fmt(x: number): string {
  if (x === 0) return "0";
  const a = Math.abs(x);
  if (a >= 0.01 && a < 10000) {
    return String(Number(x.toPrecision(6)));
  }
  return x.toExponential(3);
}

export interface Scale {
  (v: number): number;
  ticks: number[];
  log: boolean;
}

function niceTicks(lo: number, hi: number, count = 6): number[] {
  const span = hi - lo;
  if (span <= 0) return [lo];
  const step0 = span / count;
  const mag = Math.pow(10, Math.floor(Math.log10(step0)));
  const step = [1, 2, 5, 10].map((m) => m * mag).find((s) => span / s <= count) ?? mag * 10;
  const start = Math.ceil(lo / step) * step;
  const ticks: number[] = [];
  for (let t = start; t <= hi + 1e-12 * span; t += step) {
    ticks.push(Number(t.toPrecision(12)));
  }
  return ticks;
}

function logTicks(lo: number, hi: number): number[] {
  const ticks: number[] = [];
  for (let e = Math.ceil(Math.log10(lo) - 1e-9); Math.pow(10, e) <= hi * (1 + 1e-9); e++) {
    ticks.push(Math.pow(10, e));
  }
  return ticks.length >= 2 ? ticks : [lo, hi];
}

export function makeScale(lo: number, hi: number, outLo: number, outHi: number,
                          log = false): Scale {
  if (log) {
    const llo = Math.log10(lo);
    const lhi = Math.log10(hi);
    const f = ((v: number) =>
      outLo + ((Math.log10(v) - llo) / (lhi - llo || 1)) * (outHi - outLo)) as Scale;
    f.ticks = logTicks(lo, hi);
    f.log = true;
    return f;
  }
  const f = ((v: number) =>
    outLo + ((v - lo) / (hi - lo || 1)) * (outHi - outLo)) as Scale;
  f.ticks = niceTicks(lo, hi);
  f.log = false;
  return f;
}

export class Scene {
  parts: string[] = [];

  text(x: number, y: number, s: string, attrs = ""): void {
    this.parts.push(`<text x="${fmt(x)}" y="${fmt(y)}" ${attrs}>${escapeXml(s)}</text>`);
  }

  line(x1: number, y1: number, x2: number, y2: number, attrs: string): void {
    this.parts.push(
      `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" ${attrs}/>`);
  }

  polyline(pts: Array<[number, number]>, attrs: string): void {
    const p = pts.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
    this.parts.push(`<polyline points="${p}" fill="none" ${attrs}/>`);
  }

  circle(x: number, y: number, r: number, attrs: string): void {
    this.parts.push(`<circle cx="${fmt(x)}" cy="${fmt(y)}" r="${r}" ${attrs}/>`);
  }

  rect(x: number, y: number, w: number, h: number, attrs: string): void {
    this.parts.push(
      `<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(w)}" height="${fmt(h)}" ${attrs}/>`);
  }

  axes(xs: Scale, ys: Scale, xlabel: string, ylabel: string): void {
    const { left, top, bottom } = MARGIN;
    const x0 = left;
    const x1 = WIDTH - MARGIN.right;
    const y0 = HEIGHT - bottom;
    const y1 = top;
    this.line(x0, y0, x1, y0, 'stroke="#333" stroke-width="1"');
    this.line(x0, y0, x0, y1, 'stroke="#333" stroke-width="1"');
    for (const t of xs.ticks) {
      const px = xs(t);
      if (px < x0 - 0.5 || px > x1 + 0.5) continue;
      this.line(px, y0, px, y0 + 5, 'stroke="#333"');
      this.text(px, y0 + 20, xs.log ? `1e${Math.round(Math.log10(t))}` : fmt(t),
                'text-anchor="middle" font-size="12"');
    }
    for (const t of ys.ticks) {
      const py = ys(t);
      if (py > y0 + 0.5 || py < y1 - 0.5) continue;
      this.line(x0 - 5, py, x0, py, 'stroke="#333"');
      this.text(x0 - 8, py + 4, ys.log ? `1e${Math.round(Math.log10(t))}` : fmt(t),
                'text-anchor="end" font-size="12"');
    }
    this.text((x0 + x1) / 2, HEIGHT - 12, xlabel,
              'text-anchor="middle" font-size="13"');
    this.text(16, (y0 + y1) / 2, ylabel,
              `text-anchor="middle" font-size="13" transform="rotate(-90 16 ${fmt((y0 + y1) / 2)})"`);
  }

  legend(entries: Array<[string, string]>): void {
    const x = WIDTH - MARGIN.right + 12;
    let y = MARGIN.top + 8;
    for (const [label, color] of entries) {
      this.line(x, y - 4, x + 18, y - 4, `stroke="${color}" stroke-width="2"`);
      this.text(x + 24, y, label, 'font-size="12"');
      y += 18;
    }
  }

  render(title: string): string {
    return [
      `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}">`,
      `<rect x="0" y="0" width="${WIDTH}" height="${HEIGHT}" fill="white"/>`,
      `<text x="${WIDTH / 2}" y="22" text-anchor="middle" font-size="15" font-weight="bold">${escapeXml(title)}</text>`,
      ...this.parts,
      "</svg>",
      "",
    ].join("\n");
  }
}

function escapeXml(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function plotArea(): { x0: number; x1: number; y0: number; y1: number } {
  return {
    x0: MARGIN.left, x1: WIDTH - MARGIN.right,
    y0: HEIGHT - MARGIN.bottom, y1: MARGIN.top,
  };
}

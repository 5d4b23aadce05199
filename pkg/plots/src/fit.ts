export interface Fit {
  slope: number;
  intercept: number;
  stderr: number;
}

/** Ordinary least squares y = a x + b with the slope standard error. */
export function leastSquares(x: number[], y: number[]): Fit {
  const n = x.length;
  if (n < 2) {
    return { slope: NaN, intercept: NaN, stderr: NaN };
  }
  const mx = x.reduce((s, v) => s + v, 0) / n;
  const my = y.reduce((s, v) => s + v, 0) / n;
  let sxx = 0;
  let sxy = 0;
  for (let i = 0; i < n; i++) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const slope = sxy / sxx;
  const intercept = my - slope * mx;
  let sse = 0;
  for (let i = 0; i < n; i++) {
    const r = y[i] - (slope * x[i] + intercept);
    sse += r * r;
  }
  const stderr = n > 2 ? Math.sqrt(sse / (n - 2) / sxx) : 0;
  return { slope, intercept, stderr };
}

export function mean(xs: number[]): number {
  return xs.reduce((s, v) => s + v, 0) / xs.length;
}

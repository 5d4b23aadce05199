"""Dyadic Littlewood-Paley analysis and Besov/weighted-norm estimators.

The partition of unity is built from the smoothstep

    psi(r) = b(4/3 - r) / (b(4/3 - r) + b(r - 1)),   b(s) = exp(-1/s) 1_{s>0},

which is identically 1 for r <= 1 and 0 for r >= 4/3.  The blocks are
rho_{-1}(k) = psi(|k|) and rho_j(k) = psi(2^{-j-1}|k|) - psi(2^{-j}|k|) for
j >= 0; the sum over j = -1..j_max telescopes to exactly 1 on every retained
wavenumber once 2^{j_max+1} >= max |k|.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid, SpectralField, TimeField, ifft2


def bump(s):
    """exp(-1/s) for s > 0, else 0; smooth at 0 from the right."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    pos = s > 0
    out[pos] = np.exp(-1.0 / s[pos])
    return out


def smoothstep(r):
    """psi(r): 1 for r <= 1, 0 for r >= 4/3, smooth monotone in between."""
    r = np.asarray(r, dtype=float)
    num = bump(4.0 / 3.0 - r)
    den = num + bump(r - 1.0)
    out = np.zeros_like(r)
    nz = den > 0
    out[nz] = num[nz] / den[nz]
    return out


@dataclass(frozen=True)
class DyadicPartition:
    """Multiplier tables rho_j(k), j = -1..j_max, stored at index j + 1."""

    grid: Grid
    j_max: int
    rho: np.ndarray  # (j_max + 2, n, n) float64

    @property
    def n_blocks(self) -> int:
        return self.j_max + 2

    def block_index(self, j: int) -> int:
        if j < -1 or j > self.j_max:
            raise ValueError(f"block index {j} outside [-1, {self.j_max}]")
        return j + 1


def build_partition(grid: Grid) -> DyadicPartition:
    r = grid.abs_k
    k_max = float(np.max(r))
    j_max = 0
    while 2.0 ** (j_max + 1) < k_max:
        j_max += 1
    tables = [smoothstep(r)]
    for j in range(j_max + 1):
        tables.append(smoothstep(r / 2.0 ** (j + 1)) - smoothstep(r / 2.0 ** j))
    return DyadicPartition(grid, j_max, np.stack(tables))


def lp_block(f: SpectralField, j: int, part: DyadicPartition,
             cumulative: bool = False) -> SpectralField:
    """Delta_j f, or S_j f = sum_{m <= j-1} Delta_m f when cumulative."""
    if part.grid != f.grid:
        raise ValueError("partition built for a different grid")
    if cumulative:
        if j - 1 < -1:
            return SpectralField.zero(f.grid)
        mult = part.rho[: part.block_index(j - 1) + 1].sum(axis=0)
    else:
        mult = part.rho[part.block_index(j)]
    return SpectralField(f.grid, mult * f.coeff)


def block_sups(f: SpectralField, part: DyadicPartition) -> np.ndarray:
    """Lattice sup of |Delta_j f| for every block, shape (j_max + 2,)."""
    n = f.grid.n
    phys = np.real(ifft2(part.rho * f.coeff[None, :, :]) * n**2)
    return np.max(np.abs(phys), axis=(1, 2))


def block_sups_batch(data: np.ndarray, part: DyadicPartition,
                     chunk: int = 64) -> np.ndarray:
    """Block sups for a batch of coefficient arrays, (M, n, n) -> (M, J)."""
    n = part.grid.n
    out = np.empty((data.shape[0], part.n_blocks))
    for lo in range(0, data.shape[0], chunk):
        hi = min(lo + chunk, data.shape[0])
        phys = np.real(ifft2(part.rho[None, :, :, :]
                             * data[lo:hi, None, :, :]) * n**2)
        out[lo:hi] = np.max(np.abs(phys), axis=(2, 3))
    return out


def besov_norm(f: SpectralField, alpha: float, part: DyadicPartition) -> float:
    """Discrete estimator of the Besov-Hoelder norm, sup_j 2^{j alpha} |Delta_j f|_inf."""
    sups = block_sups(f, part)
    weights = 2.0 ** (alpha * np.arange(-1, part.j_max + 1))
    return float(np.max(weights * sups))


class NoSignalError(ValueError):
    """Raised when a regularity fit has no usable block amplitudes."""


def fit_regularity(f: SpectralField, part: DyadicPartition,
                   j_lo: int, j_hi: int) -> float:
    """Estimate the Besov-Hoelder exponent from block decay.

    Returns minus the least-squares slope of log2 |Delta_j f|_inf against j
    over j in [j_lo, j_hi].  Requires j_lo >= 1, j_hi <= j_max - 1 and at
    least three blocks in the fit window.
    """
    if j_lo < 1 or j_hi > part.j_max - 1:
        raise ValueError(f"fit range [{j_lo}, {j_hi}] outside [1, {part.j_max - 1}]")
    if j_hi - j_lo < 2:
        raise ValueError("fit range must span at least three blocks")
    sups = block_sups(f, part)[part.block_index(j_lo): part.block_index(j_hi) + 1]
    if np.any(sups == 0.0):
        raise NoSignalError("zero block amplitude inside the fit range")
    js = np.arange(j_lo, j_hi + 1, dtype=float)
    slope = np.polyfit(js, np.log2(sups), 1)[0]
    return float(-slope)


@dataclass(frozen=True)
class TimeNormSpec:
    """Which of the weighted time-Besov norms to estimate.

    kind:  CT         sup_t   ||u_t||_{C^alpha}
           ETeta      sup_t   t^eta ||u_t||_{C^alpha}
           CTdelta    sup_{ s<t }       ||u_t - u_s|| / (t-s)^delta
           ETetadelta sup_{ s<t } s^eta ||u_t - u_s|| / (t-s)^delta
    restricted to samples with t > 0.
    """

    kind: str
    alpha: float
    eta: float = 0.0
    delta: float = 1.0

    def __post_init__(self):
        if self.kind not in ("CT", "CTdelta", "ETeta", "ETetadelta"):
            raise ValueError(f"unknown time norm kind {self.kind!r}")
        if self.eta < 0:
            raise ValueError("eta must be >= 0")
        if not 0.0 < self.delta <= 1.0:
            raise ValueError("delta must be in (0, 1]")


def time_norm(u: TimeField, spec: TimeNormSpec, part: DyadicPartition,
              exact_pairs: bool = False) -> float:
    """Estimate a weighted time-Besov norm over the positive-time samples.

    Hoelder-in-time kinds restrict the (t, s) pairs to dyadic gaps
    s = t - 2^r dt, giving O(M log M) work; exact_pairs switches to the full
    O(M^2) pair set.
    """
    times = u.times()
    keep = times > 1e-14
    if not np.any(keep):
        raise ValueError("no positive-time samples")
    times = times[keep]
    data = u.data[keep]
    weights = 2.0 ** (spec.alpha * np.arange(-1, part.j_max + 1))
    m = len(times)

    if spec.kind in ("CT", "ETeta"):
        norms = np.max(block_sups_batch(data, part) * weights[None, :], axis=1)
        if spec.kind == "ETeta":
            norms = times ** spec.eta * norms
        return float(np.max(norms))

    if m < 3:
        raise ValueError("Hoelder-in-time norms need at least three samples")
    best = 0.0
    if exact_pairs:
        lag_set = range(1, m)
    else:
        lag_set = []
        r = 1
        while r < m:
            lag_set.append(r)
            r *= 2
    for lag in lag_set:
        diffs = data[lag:] - data[:-lag]
        norms = np.max(block_sups_batch(diffs, part) * weights[None, :], axis=1)
        gaps = times[lag:] - times[:-lag]
        vals = norms / gaps ** spec.delta
        if spec.kind == "ETetadelta":
            vals = vals * times[:-lag] ** spec.eta
        best = max(best, float(np.max(vals)))
    return best

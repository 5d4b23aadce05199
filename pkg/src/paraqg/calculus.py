"""Products, paraproducts, resonant products, commutators and multipliers.

All products are alias-free: factors are zero-padded to pad_factor * n modes
per axis, multiplied on the padded physical lattice, transformed back and
truncated to the symmetric band |k_l| <= n/2 - 1.  With pad_factor >= 3/2
the retained coefficients equal the exact convolution of the factors.

The paraproducts are assembled from padded physical Littlewood-Paley blocks:

    f < g = sum_{j >= 1} S_{j-1} f * Delta_j g          (low-high)
    f > g = g < f with the roles swapped                (high-low)
    f o g = sum_j Delta_j f * (Delta_{j-1} + Delta_j + Delta_{j+1}) g

which regroups the defining double sums exactly.  Block sums are accumulated
in ascending j so results are bit-reproducible.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .grid import Grid, SpectralField, _check_same_grid, fft2, ifft2
from .partition import DyadicPartition, build_partition


@lru_cache(maxsize=8)
def default_partition(grid: Grid) -> DyadicPartition:
    return build_partition(grid)


# ---------------------------------------------------------------------------
# padded physical engine


def _pad(coeff: np.ndarray, n: int, m: int) -> np.ndarray:
    """Embed (..., n, n) coefficients into the (..., m, m) layout.

    The self-paired Nyquist row/column of the storage band is split
    symmetrically between +n/2 and -n/2 on the padded grid (the cosine
    interpretation of real fields), so Hermitian storage data yields an
    exactly Hermitian padded spectrum.
    """
    h = n // 2
    out = np.zeros(coeff.shape[:-2] + (m, m), dtype=np.complex128)
    out[..., :h, :h] = coeff[..., :h, :h]
    out[..., :h, m - h + 1:] = coeff[..., :h, h + 1:]
    out[..., m - h + 1:, :h] = coeff[..., h + 1:, :h]
    out[..., m - h + 1:, m - h + 1:] = coeff[..., h + 1:, h + 1:]

    row = coeff[..., h, :]  # k1 = -n/2
    out[..., m - h, :h] = 0.5 * row[..., :h]
    out[..., m - h, m - h + 1:] = 0.5 * row[..., h + 1:]
    out[..., h, 0] = 0.5 * np.conj(row[..., 0])
    out[..., h, m - h + 1:] = 0.5 * np.conj(row[..., 1:h])[..., ::-1]
    out[..., h, 1:h] = 0.5 * np.conj(row[..., h + 1:])[..., ::-1]

    col = coeff[..., :, h]  # k2 = -n/2
    out[..., :h, m - h] = 0.5 * col[..., :h]
    out[..., m - h + 1:, m - h] = 0.5 * col[..., h + 1:]
    out[..., 0, h] = 0.5 * np.conj(col[..., 0])
    out[..., m - h + 1:, h] = 0.5 * np.conj(col[..., 1:h])[..., ::-1]
    out[..., 1:h, h] = 0.5 * np.conj(col[..., h + 1:])[..., ::-1]

    corner = coeff[..., h, h]  # (k1, k2) = (-n/2, -n/2)
    out[..., m - h, m - h] = 0.5 * corner
    out[..., h, h] = 0.5 * np.conj(corner)
    return out


def _pad_packed(a: np.ndarray, b: np.ndarray | None, n: int, m: int) -> np.ndarray:
    """_pad(a) + i _pad(b) in one pass (quadrants pack linearly; the
    conjugating Nyquist-split lines are fixed up per field)."""
    h = n // 2
    packed = a if b is None else a + 1j * b
    out = np.zeros(packed.shape[:-2] + (m, m), dtype=np.complex128)
    out[..., :h, :h] = packed[..., :h, :h]
    out[..., :h, m - h + 1:] = packed[..., :h, h + 1:]
    out[..., m - h + 1:, :h] = packed[..., h + 1:, :h]
    out[..., m - h + 1:, m - h + 1:] = packed[..., h + 1:, h + 1:]

    def conj_pack(sl):
        # conj per packed field: conj(a) + i conj(b)
        if b is None:
            return np.conj(a[sl])
        return np.conj(a[sl]) + 1j * np.conj(b[sl])

    row = packed[..., h, :]
    row_c = conj_pack((Ellipsis, h, slice(None)))
    out[..., m - h, :h] = 0.5 * row[..., :h]
    out[..., m - h, m - h + 1:] = 0.5 * row[..., h + 1:]
    out[..., h, 0] = 0.5 * row_c[..., 0]
    out[..., h, m - h + 1:] = 0.5 * row_c[..., 1:h][..., ::-1]
    out[..., h, 1:h] = 0.5 * row_c[..., h + 1:][..., ::-1]

    col = packed[..., :, h]
    col_c = conj_pack((Ellipsis, slice(None), h))
    out[..., :h, m - h] = 0.5 * col[..., :h]
    out[..., m - h + 1:, m - h] = 0.5 * col[..., h + 1:]
    out[..., 0, h] = 0.5 * col_c[..., 0]
    out[..., m - h + 1:, h] = 0.5 * col_c[..., 1:h][..., ::-1]
    out[..., 1:h, h] = 0.5 * col_c[..., h + 1:][..., ::-1]

    out[..., m - h, m - h] = 0.5 * packed[..., h, h]
    out[..., h, h] = 0.5 * conj_pack((Ellipsis, h, h))
    return out


def _phys_pad(coeff: np.ndarray, grid: Grid) -> np.ndarray:
    """Padded physical samples of the interpolant, real (..., m, m).

    Batches are evaluated two fields per complex transform: the padded
    spectra are Hermitian, so packing A + iB and splitting real/imaginary
    parts recovers both physical fields exactly.
    """
    m = grid.padded_n
    shape = coeff.shape
    flat = coeff.reshape(-1, shape[-2], shape[-1])
    B = flat.shape[0]
    if B == 1:
        return np.real(ifft2(_pad(flat, grid.n, m)) * m**2).reshape(shape[:-2] + (m, m))
    half = (B + 1) // 2
    a = flat[:half]
    b = np.zeros_like(a)
    b[: B - half] = flat[half:]
    phys = ifft2(_pad_packed(a, b, grid.n, m)) * m**2
    out = np.empty((B, m, m))
    out[:half] = phys.real
    out[half:] = phys.imag[: B - half]
    return out.reshape(shape[:-2] + (m, m))


def _reverse_modes(a: np.ndarray) -> np.ndarray:
    """F(k) -> F(-k) on the FFT layout of the last two axes."""
    out = a[..., ::-1, ::-1]
    return np.roll(out, (1, 1), axis=(-2, -1))


def _spec_trunc(phys: np.ndarray, grid: Grid) -> np.ndarray:
    """Forward transform of padded physical values, truncated and band-masked.

    Real batches are packed two per complex transform and separated with
    the Hermitian split F_a = (F + conj(F(-k)))/2, F_b = (F - conj(F(-k)))/2i,
    applied after truncation (every retained mode has its mirror retained;
    the self-paired Nyquist lines are band-masked anyway).
    """
    n, m = grid.n, grid.padded_n
    h = n // 2
    shape = phys.shape
    flat = phys.reshape(-1, m, m)
    B = flat.shape[0]

    def trunc(full):
        out = np.empty(full.shape[:-2] + (n, n), dtype=np.complex128)
        out[..., :h, :h] = full[..., :h, :h]
        out[..., :h, h:] = full[..., :h, m - h:]
        out[..., h:, :h] = full[..., m - h:, :h]
        out[..., h:, h:] = full[..., m - h:, m - h:]
        return out

    if B == 1:
        out = trunc(fft2(flat) / m**2)
    else:
        half = (B + 1) // 2
        packed = flat[:half].astype(np.complex128)
        packed[: B - half] += 1j * flat[half:]
        tr = trunc(fft2(packed) / m**2)
        rev = np.conj(_reverse_modes(tr))
        out = np.empty((B, n, n), dtype=np.complex128)
        out[:half] = 0.5 * (tr + rev)
        out[half:] = (-0.5j) * (tr - rev)[: B - half]
    out *= grid.band_mask
    return out.reshape(shape[:-2] + (n, n))


class Blocks:
    """Padded physical Littlewood-Paley blocks of one field.

    phys[i] holds Delta_{i-1} f on the padded lattice; cum[i] the partial sum
    S_i f = sum_{j <= i-1} Delta_j f, so cum[-1] is the full field.
    """

    __slots__ = ("grid", "phys", "_cum")

    def __init__(self, coeff: np.ndarray, part: DyadicPartition):
        self.grid = part.grid
        self.phys = _phys_pad(part.rho * coeff[None, :, :], part.grid)
        self._cum = None

    @property
    def cum(self) -> np.ndarray:
        if self._cum is None:
            self._cum = np.cumsum(self.phys, axis=0)
        return self._cum

    @property
    def total(self) -> np.ndarray:
        return self.cum[-1]


def _lt_phys(fb: Blocks, gb: Blocks) -> np.ndarray:
    nb = fb.phys.shape[0]
    return np.einsum("jxy,jxy->xy", fb.cum[: nb - 2], gb.phys[2:])


def _res_phys(fb: Blocks, gb: Blocks) -> np.ndarray:
    w = gb.phys.copy()
    w[:-1] += gb.phys[1:]
    w[1:] += gb.phys[:-1]
    return np.einsum("jxy,jxy->xy", fb.phys, w)


def lt_coeff(fb: Blocks, gb: Blocks) -> np.ndarray:
    return _spec_trunc(_lt_phys(fb, gb), fb.grid)


def gt_coeff(fb: Blocks, gb: Blocks) -> np.ndarray:
    return _spec_trunc(_lt_phys(gb, fb), fb.grid)


def res_coeff(fb: Blocks, gb: Blocks) -> np.ndarray:
    return _spec_trunc(_res_phys(fb, gb), fb.grid)


def prod_coeff(f_phys: np.ndarray, g_phys: np.ndarray, grid: Grid) -> np.ndarray:
    return _spec_trunc(f_phys * g_phys, grid)


def blocks_phys_batch(coeff: np.ndarray, part: DyadicPartition) -> np.ndarray:
    """Padded physical blocks of a batch of fields, (B, n, n) -> (B, J, m, m)."""
    stacked = part.rho[None, :, :, :] * coeff[:, None, :, :]
    return _phys_pad(stacked, part.grid)


def res_batch(fc: np.ndarray, gc: np.ndarray, part: DyadicPartition) -> np.ndarray:
    """Resonant products of paired batches, (B, n, n) each -> (B, n, n)."""
    fb = blocks_phys_batch(fc, part)
    gb = blocks_phys_batch(gc, part)
    w = gb.copy()
    w[:, :-1] += gb[:, 1:]
    w[:, 1:] += gb[:, :-1]
    return _spec_trunc(np.einsum("bjxy,bjxy->bxy", fb, w), part.grid)


def prod_batch(fc: np.ndarray, gc: np.ndarray, grid: Grid) -> np.ndarray:
    """Alias-free products of paired batches, (B, n, n) each -> (B, n, n)."""
    return _spec_trunc(_phys_pad(fc, grid) * _phys_pad(gc, grid), grid)


# ---------------------------------------------------------------------------
# public operations


def product(f: SpectralField, g: SpectralField) -> SpectralField:
    """Alias-free pointwise product, exact on the retained band."""
    _check_same_grid(f, g)
    phys = _phys_pad(f.coeff, f.grid) * _phys_pad(g.coeff, f.grid)
    return SpectralField(f.grid, _spec_trunc(phys, f.grid))


def paraproduct(f: SpectralField, g: SpectralField, mode: str,
                part: DyadicPartition | None = None) -> SpectralField:
    """Bony paraproducts: mode 'lt' is f < g, 'gt' is f > g, 'resonant' f o g."""
    _check_same_grid(f, g)
    if part is None:
        part = default_partition(f.grid)
    fb = Blocks(f.coeff, part)
    gb = Blocks(g.coeff, part)
    if mode == "lt":
        coeff = lt_coeff(fb, gb)
    elif mode == "gt":
        coeff = gt_coeff(fb, gb)
    elif mode == "resonant":
        coeff = res_coeff(fb, gb)
    else:
        raise ValueError(f"unknown paraproduct mode {mode!r}")
    return SpectralField(f.grid, coeff)


def commutator_C(f: SpectralField, g: SpectralField, h: SpectralField,
                 part: DyadicPartition | None = None) -> SpectralField:
    """C(f, g, h) = (f < g) o h - f (g o h), composed from the primitives."""
    _check_same_grid(f, g)
    _check_same_grid(f, h)
    if part is None:
        part = default_partition(f.grid)
    fb = Blocks(f.coeff, part)
    gb = Blocks(g.coeff, part)
    hb = Blocks(h.coeff, part)
    lt_fg = Blocks(lt_coeff(fb, gb), part)
    first = res_coeff(lt_fg, hb)
    second = prod_coeff(fb.total, _phys_pad(res_coeff(gb, hb), f.grid), f.grid)
    return SpectralField(f.grid, first - second)


@lru_cache(maxsize=32)
def _riesz_mult(grid: Grid, l: int) -> np.ndarray:
    k_l = (grid.k1 if l == 1 else grid.k2).astype(float)
    absk = grid.abs_k.copy()
    absk[0, 0] = 1.0
    mult = 1j * np.broadcast_to(k_l, (grid.n, grid.n)) / absk
    mult = mult.copy()
    mult[0, 0] = 0.0
    # zero the self-paired Nyquist line of the odd axis to keep fields real
    if l == 1:
        mult[grid.n // 2, :] = 0.0
    else:
        mult[:, grid.n // 2] = 0.0
    return mult


@lru_cache(maxsize=32)
def _partial_mult(grid: Grid, l: int) -> np.ndarray:
    k_l = (grid.k1 if l == 1 else grid.k2).astype(float)
    mult = 2j * np.pi * np.broadcast_to(k_l, (grid.n, grid.n)).copy()
    if l == 1:
        mult[grid.n // 2, :] = 0.0
    else:
        mult[:, grid.n // 2] = 0.0
    return mult


def riesz(f: SpectralField, l: int) -> SpectralField:
    """l-th Riesz transform, multiplier i k_l / |k|, zero mode killed."""
    if l not in (1, 2):
        raise ValueError("Riesz index must be 1 or 2")
    return SpectralField(f.grid, _riesz_mult(f.grid, l) * f.coeff)


def riesz_perp(f: SpectralField) -> tuple[SpectralField, SpectralField]:
    """R_perp f = (R_2 f, -R_1 f), the divergence-free transport velocity."""
    return riesz(f, 2), -riesz(f, 1)


def partial_deriv(f: SpectralField, l: int) -> SpectralField:
    """Partial derivative along axis l, multiplier 2 pi i k_l."""
    if l not in (1, 2):
        raise ValueError("derivative index must be 1 or 2")
    return SpectralField(f.grid, _partial_mult(f.grid, l) * f.coeff)


def gradient(f: SpectralField) -> tuple[SpectralField, SpectralField]:
    return partial_deriv(f, 1), partial_deriv(f, 2)


def riesz_para_comm(f: SpectralField, g: SpectralField, l: int,
                    part: DyadicPartition | None = None) -> SpectralField:
    """R_l(f < g) - f < (R_l g), the Riesz-paraproduct commutator."""
    _check_same_grid(f, g)
    if part is None:
        part = default_partition(f.grid)
    fb = Blocks(f.coeff, part)
    gb = Blocks(g.coeff, part)
    first = _riesz_mult(f.grid, l) * lt_coeff(fb, gb)
    second = lt_coeff(fb, Blocks(_riesz_mult(f.grid, l) * g.coeff, part))
    return SpectralField(f.grid, first - second)

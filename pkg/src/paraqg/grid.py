"""Fourier representation of real scalar fields on the 2-torus [0,1)^2.

A field u is stored by its Fourier coefficients u_hat(k) for
k in {-n/2, ..., n/2-1}^2, laid out in FFT order (axis 0 is k_1, axis 1 is
k_2).  The normalisation is the continuum one,

    u_hat(k) = integral of u(x) exp(-2 pi i k.x) dx,

so u(x) = sum_k u_hat(k) exp(2 pi i k.x) and a constant field c has
u_hat(0) = c.  Real fields satisfy u_hat(-k) = conj(u_hat(k)) with -k taken
mod n, which makes the self-paired Nyquist rows real-constrained.

Dealiased products and odd multiplier operators (derivatives, Riesz
transforms) retain only the closed symmetric band |k_l| <= n/2 - 1, so every
operation in the calculus maps real fields to real fields.  The transforms
themselves are exact inverses on the full storage band.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.fft as _fft

_WORKERS = 2


def fft2(a):
    return _fft.fft2(a, axes=(-2, -1), workers=_WORKERS)


def ifft2(a):
    return _fft.ifft2(a, axes=(-2, -1), workers=_WORKERS)


@dataclass(frozen=True)
class Grid:
    """Uniform n x n sampling of the torus with an alias-free padding rule.

    n must be a power of two, n >= 16.  pad_factor >= 3/2 guarantees that
    truncated products of band-limited fields are exact on the retained band.
    """

    n: int
    pad_factor: Fraction = Fraction(3, 2)
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        n = self.n
        if n < 16 or (n & (n - 1)) != 0:
            raise ValueError(f"grid size must be a power of two >= 16, got {n}")
        if self.pad_factor < Fraction(3, 2):
            raise ValueError("pad_factor must be >= 3/2 for alias-free products")
        if (self.pad_factor * n).denominator != 1:
            raise ValueError("pad_factor * n must be an integer")

    @property
    def padded_n(self) -> int:
        return int(self.pad_factor * self.n)

    @property
    def k1(self) -> np.ndarray:
        """Integer wavenumbers along axis 0, shape (n, 1)."""
        return self._cached("k1", lambda: (np.fft.fftfreq(self.n) * self.n).astype(np.int64).reshape(-1, 1))

    @property
    def k2(self) -> np.ndarray:
        """Integer wavenumbers along axis 1, shape (1, n)."""
        return self._cached("k2", lambda: (np.fft.fftfreq(self.n) * self.n).astype(np.int64).reshape(1, -1))

    @property
    def abs_k(self) -> np.ndarray:
        """|k| on the full storage band, shape (n, n)."""
        return self._cached("abs_k", lambda: np.hypot(self.k1.astype(float), self.k2.astype(float)))

    @property
    def k_max(self) -> float:
        return float(self.n / 2) * np.sqrt(2.0)

    @property
    def band_mask(self) -> np.ndarray:
        """True on the closed symmetric band |k_l| <= n/2 - 1."""
        def build():
            half = self.n // 2
            m1 = np.abs(self.k1) <= half - 1
            m2 = np.abs(self.k2) <= half - 1
            return m1 & m2
        return self._cached("band_mask", build)

    def lattice(self):
        """Physical sampling points (x1, x2) as two (n, n) arrays."""
        x = np.arange(self.n) / self.n
        return np.meshgrid(x, x, indexing="ij")

    def _cached(self, key, build):
        if key not in self._cache:
            self._cache[key] = build()
        return self._cache[key]


@dataclass(frozen=True)
class SpectralField:
    """Complex Fourier coefficients of a real field, full storage band."""

    grid: Grid
    coeff: np.ndarray

    def __post_init__(self):
        n = self.grid.n
        if self.coeff.shape != (n, n):
            raise ValueError(f"coefficient array must be ({n}, {n}), got {self.coeff.shape}")

    @classmethod
    def zero(cls, grid: Grid) -> "SpectralField":
        return cls(grid, np.zeros((grid.n, grid.n), dtype=np.complex128))

    @classmethod
    def constant(cls, grid: Grid, c: float) -> "SpectralField":
        coeff = np.zeros((grid.n, grid.n), dtype=np.complex128)
        coeff[0, 0] = c
        return cls(grid, coeff)

    @classmethod
    def from_modes(cls, grid: Grid, modes: dict) -> "SpectralField":
        """Build a real field from {k: amplitude}; conjugate modes are added."""
        coeff = np.zeros((grid.n, grid.n), dtype=np.complex128)
        for (a, b), amp in modes.items():
            coeff[a % grid.n, b % grid.n] += amp
            coeff[(-a) % grid.n, (-b) % grid.n] += np.conj(amp)
        return cls(grid, coeff)

    def to_physical(self) -> np.ndarray:
        return to_physical(self)

    def max_abs(self) -> float:
        """Sup of |u| over the physical lattice."""
        return float(np.max(np.abs(self.to_physical())))

    def hermitian_defect(self) -> float:
        """Max |u_hat(-k) - conj(u_hat(k))| over the storage band."""
        rolled = np.conj(self.coeff[::-1, ::-1])
        rolled = np.roll(rolled, (1, 1), axis=(0, 1))
        return float(np.max(np.abs(self.coeff - rolled)))

    def __add__(self, other):
        _check_same_grid(self, other)
        return SpectralField(self.grid, self.coeff + other.coeff)

    def __sub__(self, other):
        _check_same_grid(self, other)
        return SpectralField(self.grid, self.coeff - other.coeff)

    def __neg__(self):
        return SpectralField(self.grid, -self.coeff)

    def __mul__(self, scalar):
        return SpectralField(self.grid, self.coeff * scalar)

    __rmul__ = __mul__


def _check_same_grid(f, g):
    if f.grid != g.grid:
        raise ValueError("fields live on different grids")


def to_spectral(samples: np.ndarray, grid: Grid) -> SpectralField:
    """Transform n x n real lattice values to Fourier coefficients."""
    samples = np.asarray(samples)
    if samples.shape != (grid.n, grid.n):
        raise ValueError(f"samples must be ({grid.n}, {grid.n}), got {samples.shape}")
    if np.iscomplexobj(samples):
        raise ValueError("samples must be real")
    return SpectralField(grid, fft2(samples.astype(np.float64)) / grid.n**2)


def to_physical(f: SpectralField) -> np.ndarray:
    """Evaluate the band-limited interpolant on the n x n lattice."""
    n = f.grid.n
    return np.real(ifft2(f.coeff) * n**2)


@dataclass(frozen=True)
class TimeField:
    """A trajectory of spectral fields at t_m = t0 + m*dt, m = 0..M."""

    grid: Grid
    t0: float
    dt: float
    data: np.ndarray  # (M+1, n, n) complex

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.data.ndim != 3 or self.data.shape[1:] != (self.grid.n, self.grid.n):
            raise ValueError("data must be (M+1, n, n)")
        if self.data.shape[0] < 2:
            raise ValueError("a trajectory needs at least two samples")

    @property
    def n_steps(self) -> int:
        return self.data.shape[0] - 1

    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.data.shape[0])

    def field(self, m: int) -> SpectralField:
        return SpectralField(self.grid, self.data[m])

    @classmethod
    def from_fields(cls, fields, t0: float, dt: float) -> "TimeField":
        grid = fields[0].grid
        data = np.stack([f.coeff for f in fields])
        return cls(grid, t0, dt, data)

    def restrict(self, m0: int, m1: int) -> "TimeField":
        """Sub-trajectory over sample indices m0..m1 inclusive."""
        return TimeField(self.grid, self.t0 + m0 * self.dt, self.dt,
                         self.data[m0:m1 + 1])

    def __add__(self, other):
        self._check_aligned(other)
        return TimeField(self.grid, self.t0, self.dt, self.data + other.data)

    def __sub__(self, other):
        self._check_aligned(other)
        return TimeField(self.grid, self.t0, self.dt, self.data - other.data)

    def _check_aligned(self, other):
        if (self.grid != other.grid or self.data.shape != other.data.shape
                or abs(self.t0 - other.t0) > 1e-12 or abs(self.dt - other.dt) > 1e-15):
            raise ValueError("time fields are not aligned")

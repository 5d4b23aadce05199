import numpy as np
import pytest

from paraqg.grid import Grid, SpectralField, TimeField
from paraqg.partition import build_partition
from paraqg.semigroup import (Dissipation, integrate_I, phi1, phi2, propagate,
                              schauder_probe, semigroup_para_comm)


@pytest.fixture(scope="module")
def grid():
    return Grid(16)


def random_field(grid, seed, band=None):
    rng = np.random.default_rng(seed)
    coeff = np.fft.fft2(rng.standard_normal((grid.n, grid.n))) / grid.n**2
    if band is not None:
        k = (np.fft.fftfreq(grid.n) * grid.n).astype(int)
        mask = (np.abs(k)[:, None] <= band) & (np.abs(k)[None, :] <= band)
        coeff = coeff * mask
    return SpectralField(grid, coeff)


def test_dissipation_validation():
    with pytest.raises(ValueError):
        Dissipation(0.0)
    with pytest.raises(ValueError):
        Dissipation(2.5)
    with pytest.raises(ValueError):
        Dissipation(2.0, shift=2)


def test_propagate_identity_at_zero_time(grid):
    f = random_field(grid, 0)
    out = propagate(f, 0.0, Dissipation(1.7, shift=1))
    assert (out - f).max_abs() < 1e-14


def test_propagate_single_mode_decay(grid):
    f = SpectralField.from_modes(grid, {(1, 0): 0.5})
    out = propagate(f, 1.0, Dissipation(2.0, shift=0))
    want = np.exp(-4 * np.pi**2) * 0.5
    assert out.coeff[1, 0] == pytest.approx(want, rel=1e-12)


def test_propagate_semigroup_law(grid):
    f = random_field(grid, 1)
    d = Dissipation(1.8, shift=1)
    a = propagate(propagate(f, 0.3, d), 0.45, d)
    b = propagate(f, 0.75, d)
    assert (a - b).max_abs() <= 1e-12 * max(b.max_abs(), 1e-30)


def test_propagate_rejects_negative_time(grid):
    with pytest.raises(ValueError):
        propagate(SpectralField.zero(grid), -0.1, Dissipation(2.0))


def test_phi_functions_match_high_precision_reference():
    import mpmath as mp
    mp.mp.dps = 40
    for z in (1e-12, -1e-7, 1e-5, -5e-5, 2e-4, 1.0, -3.0):
        ref1 = float(mp.expm1(z) / mp.mpf(z))
        ref2 = float((mp.expm1(z) - mp.mpf(z)) / mp.mpf(z) ** 2)
        assert phi1(np.array([z]))[0] == pytest.approx(ref1, rel=1e-12)
        assert phi2(np.array([z]))[0] == pytest.approx(ref2, rel=1e-11)


def test_integrate_zero(grid):
    data = np.zeros((5, grid.n, grid.n), dtype=complex)
    u = TimeField(grid, 0.0, 0.1, data)
    out = integrate_I(u, Dissipation(2.0, shift=1))
    assert np.max(np.abs(out.data)) == 0.0


def test_integrate_constant_integrand_closed_form(grid):
    # I[u]_t = (1 - e^{-lam t})/lam for u_s = cos(2 pi x1); exact here
    # because the integrand is constant in time.
    lam = 4 * np.pi**2 + 1
    f = SpectralField.from_modes(grid, {(1, 0): 0.5})
    steps = 100
    data = np.repeat(f.coeff[None, :, :], steps + 1, axis=0)
    u = TimeField(grid, 0.0, 1e-3, data)
    out = integrate_I(u, Dissipation(2.0, shift=1))
    got = out.data[-1][1, 0]
    want = 0.5 * (1 - np.exp(-lam * 0.1)) / lam
    assert got == pytest.approx(want, rel=1e-12)
    assert 2 * got.real == pytest.approx(0.02427318164212494, rel=1e-10)


def test_integrate_requires_shifted_propagator(grid):
    data = np.zeros((3, grid.n, grid.n), dtype=complex)
    u = TimeField(grid, 0.0, 0.1, data)
    with pytest.raises(ValueError):
        integrate_I(u, Dissipation(2.0, shift=0))


def test_integrate_linearity(grid):
    d = Dissipation(1.9, shift=1)
    rng = np.random.default_rng(2)
    data_a = rng.standard_normal((6, grid.n, grid.n)) * (1 + 0j)
    data_b = rng.standard_normal((6, grid.n, grid.n)) * (1 + 0j)
    ua = TimeField(grid, 0.0, 0.05, data_a)
    ub = TimeField(grid, 0.0, 0.05, data_b)
    combo = TimeField(grid, 0.0, 0.05, data_a + 2.5 * data_b)
    lhs = integrate_I(combo, d).data
    rhs = integrate_I(ua, d).data + 2.5 * integrate_I(ub, d).data
    assert np.max(np.abs(lhs - rhs)) < 1e-12


def _integration_residual(grid, dt, steps):
    """Midpoint defect of the integrator for a smooth single-mode integrand."""
    lam = 4 * np.pi**2 + 1
    base = SpectralField.from_modes(grid, {(1, 0): 0.5}).coeff
    ts = dt * np.arange(steps + 1)
    data = np.cos(3.0 * ts)[:, None, None] * base[None, :, :]
    u = TimeField(grid, 0.0, dt, data)
    out = integrate_I(u, Dissipation(2.0, shift=1)).data[:, 1, 0]
    mid_i = 0.5 * (out[1:] + out[:-1])
    mid_u = 0.5 * (data[1:, 1, 0] + data[:-1, 1, 0])
    resid = (out[1:] - out[:-1]) / dt + lam * mid_i - mid_u
    return np.max(np.abs(resid))


def test_integrator_is_second_order(grid):
    r1 = _integration_residual(grid, 2e-3, 200)
    r2 = _integration_residual(grid, 1e-3, 400)
    assert r1 / r2 == pytest.approx(4.0, rel=0.3)


def test_semigroup_para_comm_vanishes_at_zero_time(grid):
    f = random_field(grid, 3, band=5)
    g = random_field(grid, 4, band=5)
    out = semigroup_para_comm(f, g, 0.0, Dissipation(2.0, shift=1))
    assert out.max_abs() < 1e-12


def test_semigroup_para_comm_constant_f(grid):
    g = random_field(grid, 5)
    c = SpectralField.constant(grid, 2.0)
    out = semigroup_para_comm(c, g, 0.2, Dissipation(1.8, shift=1))
    assert out.max_abs() < 1e-12


def test_semigroup_para_comm_linear_decay(grid):
    # dissipation order chosen so t * lambda_max < 1 across the whole fit
    # range; on a finite grid that is the small-t regime of the commutator
    f = random_field(grid, 6, band=7)
    g = random_field(grid, 7, band=7)
    d = Dissipation(0.4, shift=0)
    part = build_partition(grid)
    ts = np.logspace(-3, -1, 7)
    vals = [semigroup_para_comm(f, g, t, d, part).max_abs() for t in ts]
    slope = np.polyfit(np.log(ts), np.log(vals), 1)[0]
    assert slope >= 0.9


def test_schauder_probe_delta_zero_decays(grid):
    f = random_field(grid, 8)
    d = Dissipation(2.0, shift=0)
    part = build_partition(grid)
    alpha = -0.8
    pts = schauder_probe(f, d, alpha, 0.0, [1e-3, 1e-2, 1e-1, 1.0], part)
    from paraqg.partition import besov_norm
    base = besov_norm(f, alpha, part)
    assert pts[0][1] <= base * (1 + 1e-10)
    assert all(v <= base * (1 + 1e-10) for _, v in pts)


def test_schauder_probe_single_mode_closed_form(grid):
    # |k| = 4 sits purely in block 1; the probe value is explicit
    part = build_partition(grid)
    f = SpectralField.from_modes(grid, {(4, 0): 0.5})
    theta, alpha, delta = 2.0, -1.2, 0.5
    d = Dissipation(theta, shift=0)
    lam = (2 * np.pi * 4.0) ** theta
    for t, val in schauder_probe(f, d, alpha, delta, [1e-3, 1e-2], part):
        want = t**delta * np.exp(-t * lam) * 2.0 ** (1 * (alpha + theta * delta))
        assert val == pytest.approx(want, rel=1e-10)


def test_propagate_commutes_with_blocks_and_multipliers(grid):
    from paraqg.calculus import partial_deriv, riesz
    from paraqg.partition import lp_block
    part = build_partition(grid)
    f = random_field(grid, 9)
    d = Dissipation(1.7, shift=1)
    a = propagate(riesz(f, 1), 0.3, d)
    b = riesz(propagate(f, 0.3, d), 1)
    assert (a - b).max_abs() < 1e-13
    a = propagate(lp_block(f, 2, part), 0.3, d)
    b = lp_block(propagate(f, 0.3, d), 2, part)
    assert (a - b).max_abs() < 1e-13
    a = propagate(partial_deriv(f, 2), 0.3, d)
    b = partial_deriv(propagate(f, 0.3, d), 2)
    assert (a - b).max_abs() < 1e-12

import numpy as np
import pytest

from paraqg.calculus import (commutator_C, gradient, paraproduct,
                             partial_deriv, product, riesz, riesz_para_comm,
                             riesz_perp)
from paraqg.grid import Grid, SpectralField
from paraqg.partition import besov_norm, build_partition, lp_block


@pytest.fixture(scope="module")
def grid():
    return Grid(16)


@pytest.fixture(scope="module")
def part(grid):
    return build_partition(grid)


def random_band_field(grid, rng, band=None):
    """Random real field supported on |k_l| <= band."""
    n = grid.n
    band = band if band is not None else n // 2 - 1
    coeff = np.fft.fft2(rng.standard_normal((n, n))) / n**2
    k = (np.fft.fftfreq(n) * n).astype(int)
    mask = (np.abs(k)[:, None] <= band) & (np.abs(k)[None, :] <= band)
    return SpectralField(grid, coeff * mask)


def conv_oracle(f, g):
    """Direct convolution sum over stored modes, truncated like product()."""
    n = f.grid.n
    half = n // 2
    k = (np.fft.fftfreq(n) * n).astype(int)
    out = np.zeros((n, n), dtype=complex)
    for a1 in range(n):
        for a2 in range(n):
            K1, K2 = k[a1], k[a2]
            if abs(K1) > half - 1 or abs(K2) > half - 1:
                continue
            acc = 0.0 + 0.0j
            for b1 in range(n):
                for b2 in range(n):
                    r1, r2 = K1 - k[b1], K2 - k[b2]
                    if -half <= r1 < half and -half <= r2 < half:
                        acc += f.coeff[b1, b2] * g.coeff[r1 % n, r2 % n]
            out[a1, a2] = acc
    return out


def test_product_identity_element(grid):
    rng = np.random.default_rng(0)
    g = random_band_field(grid, rng)
    one = SpectralField.constant(grid, 1.0)
    got = product(one, g)
    assert np.max(np.abs(got.coeff - g.coeff * grid.band_mask)) < 1e-14


def test_product_cosine_squared(grid):
    f = SpectralField.from_modes(grid, {(1, 0): 0.5})
    got = product(f, f)
    want = SpectralField.from_modes(grid, {(2, 0): 0.25})
    want = SpectralField(grid, want.coeff.copy())
    want.coeff[0, 0] += 0.5
    assert np.max(np.abs(got.coeff - want.coeff)) < 1e-14


def test_product_matches_convolution_oracle(grid):
    rng = np.random.default_rng(1)
    f = random_band_field(grid, rng, band=5)
    g = random_band_field(grid, rng, band=6)
    got = product(f, g).coeff
    want = conv_oracle(f, g)
    scale = np.max(np.abs(want))
    assert np.max(np.abs(got - want)) <= 1e-12 * scale


def test_product_grid_mismatch(grid):
    other = Grid(32)
    with pytest.raises(ValueError):
        product(SpectralField.zero(grid), SpectralField.zero(other))


def test_bony_identity(grid):
    rng = np.random.default_rng(2)
    for _ in range(20):
        f = random_band_field(grid, rng)
        g = random_band_field(grid, rng)
        total = (paraproduct(f, g, "lt") + paraproduct(f, g, "gt")
                 + paraproduct(f, g, "resonant"))
        diff = (product(f, g) - total).max_abs()
        assert diff <= 1e-10 * max(f.max_abs() * g.max_abs(), 1e-30)


def test_paraproduct_block_separated_pair(grid, part):
    # f in block -1 only, g in block 2 only: all of fg is low-high
    f = SpectralField.from_modes(grid, {(1, 0): 0.5})
    g = SpectralField.from_modes(grid, {(0, 6): 0.5, (6, 1): 0.25})
    assert part.rho[part.block_index(2)][0, 6] == 1.0
    lt = paraproduct(f, g, "lt")
    assert (lt - product(f, g)).max_abs() < 1e-13
    assert paraproduct(f, g, "resonant").max_abs() < 1e-13
    assert paraproduct(f, g, "gt").max_abs() < 1e-13


def test_paraproduct_constant_factor(grid, part):
    rng = np.random.default_rng(3)
    c = 1.7
    f = SpectralField.constant(grid, c)
    g = random_band_field(grid, rng)
    low = lp_block(g, -1, part) + lp_block(g, 0, part)
    gt = paraproduct(f, g, "gt")
    res = paraproduct(f, g, "resonant")
    lt = paraproduct(f, g, "lt")
    assert gt.max_abs() < 1e-13
    assert (res - c * low).max_abs() <= 1e-12 * g.max_abs()
    want_lt = c * (g - low)
    masked = SpectralField(grid, want_lt.coeff * grid.band_mask)
    assert (lt - masked).max_abs() <= 1e-12 * g.max_abs()


def test_paraproduct_bilinearity(grid):
    rng = np.random.default_rng(4)
    f1 = random_band_field(grid, rng)
    f2 = random_band_field(grid, rng)
    g = random_band_field(grid, rng)
    for mode in ("lt", "gt", "resonant"):
        lhs = paraproduct(f1 + 2.0 * f2, g, mode)
        rhs = paraproduct(f1, g, mode) + 2.0 * paraproduct(f2, g, mode)
        assert (lhs - rhs).max_abs() < 1e-11


def _oracle_lt(f, g, part):
    """f < g from the defining double sum, using the convolution oracle."""
    grid = f.grid
    blocks_f = [lp_block(f, j, part) for j in range(-1, part.j_max + 1)]
    blocks_g = [lp_block(g, j, part) for j in range(-1, part.j_max + 1)]
    out = np.zeros((grid.n, grid.n), dtype=complex)
    for i1, j1 in enumerate(range(-1, part.j_max + 1)):
        for i2, j2 in enumerate(range(-1, part.j_max + 1)):
            if j1 + 2 <= j2:
                out += conv_oracle(blocks_f[i1], blocks_g[i2])
    return out


def _oracle_res(f, g, part):
    grid = f.grid
    blocks_f = [lp_block(f, j, part) for j in range(-1, part.j_max + 1)]
    blocks_g = [lp_block(g, j, part) for j in range(-1, part.j_max + 1)]
    out = np.zeros((grid.n, grid.n), dtype=complex)
    for i1, j1 in enumerate(range(-1, part.j_max + 1)):
        for i2, j2 in enumerate(range(-1, part.j_max + 1)):
            if abs(j1 - j2) <= 1:
                out += conv_oracle(blocks_f[i1], blocks_g[i2])
    return out


def test_paraproducts_match_double_sum_oracle(grid, part):
    rng = np.random.default_rng(5)
    f = random_band_field(grid, rng, band=5)
    g = random_band_field(grid, rng, band=5)
    lt = paraproduct(f, g, "lt").coeff
    res = paraproduct(f, g, "resonant").coeff
    scale = max(np.max(np.abs(lt)), np.max(np.abs(res)))
    assert np.max(np.abs(lt - _oracle_lt(f, g, part))) <= 1e-11 * scale
    assert np.max(np.abs(res - _oracle_res(f, g, part))) <= 1e-11 * scale


def test_commutator_trivial_cases(grid):
    rng = np.random.default_rng(6)
    g = random_band_field(grid, rng)
    h = random_band_field(grid, rng)
    zero = SpectralField.zero(grid)
    assert commutator_C(random_band_field(grid, rng), zero, h).max_abs() < 1e-14
    assert commutator_C(random_band_field(grid, rng), g, zero).max_abs() < 1e-14


def test_commutator_constant_first_argument(grid):
    rng = np.random.default_rng(7)
    one = SpectralField.constant(grid, 1.0)
    g = random_band_field(grid, rng)
    h = random_band_field(grid, rng)
    got = commutator_C(one, g, h)
    want = (paraproduct(paraproduct(one, g, "lt"), h, "resonant")
            - product(one, paraproduct(g, h, "resonant")))
    assert (got - want).max_abs() < 1e-12


def test_commutator_matches_block_sum_oracle(grid, part):
    rng = np.random.default_rng(8)
    f = random_band_field(grid, rng, band=4)
    g = random_band_field(grid, rng, band=4)
    h = random_band_field(grid, rng, band=4)
    got = commutator_C(f, g, h).coeff

    lt_fg = SpectralField(grid, _oracle_lt(f, g, part))
    first = _oracle_res(lt_fg, h, part)
    second = conv_oracle(f, SpectralField(grid, _oracle_res(g, h, part)))
    want = first - second
    scale = max(np.max(np.abs(want)), 1e-30)
    assert np.max(np.abs(got - want)) <= 1e-10 * scale


def test_riesz_kills_constants(grid):
    one = SpectralField.constant(grid, 2.0)
    assert riesz(one, 1).max_abs() < 1e-15
    assert riesz(one, 2).max_abs() < 1e-15


def test_riesz_single_mode(grid):
    f = SpectralField.from_modes(grid, {(1, 0): 0.5})
    x1, _ = grid.lattice()
    got = riesz(f, 1).to_physical()
    assert np.max(np.abs(got + np.sin(2 * np.pi * x1))) < 1e-13


def test_riesz_multiplier_algebra(grid):
    rng = np.random.default_rng(9)
    f = random_band_field(grid, rng)
    lhs = riesz(riesz(f, 1), 1) + riesz(riesz(f, 2), 2)
    mean_removed = SpectralField(grid, f.coeff.copy())
    mean_removed.coeff[0, 0] = 0.0
    assert (lhs + mean_removed).max_abs() < 1e-13


def test_riesz_perp_components(grid):
    rng = np.random.default_rng(10)
    f = random_band_field(grid, rng)
    p1, p2 = riesz_perp(f)
    assert (p1 - riesz(f, 2)).max_abs() < 1e-15
    assert (p2 + riesz(f, 1)).max_abs() < 1e-15


def test_partial_single_mode(grid):
    f = SpectralField.from_modes(grid, {(1, 0): 0.5})
    x1, _ = grid.lattice()
    got = partial_deriv(f, 1).to_physical()
    assert np.max(np.abs(got + 2 * np.pi * np.sin(2 * np.pi * x1))) < 1e-12


def test_partial_leibniz_on_paraproduct(grid):
    # band-limited inputs keep products inside the symmetric band
    rng = np.random.default_rng(11)
    f = random_band_field(grid, rng, band=3)
    g = random_band_field(grid, rng, band=3)
    for l in (1, 2):
        lhs = partial_deriv(paraproduct(f, g, "lt"), l)
        rhs = (paraproduct(partial_deriv(f, l), g, "lt")
               + paraproduct(f, partial_deriv(g, l), "lt"))
        scale = max(lhs.max_abs(), 1e-30)
        assert (lhs - rhs).max_abs() <= 1e-10 * scale


def test_divergence_free_velocity(grid):
    rng = np.random.default_rng(12)
    u = random_band_field(grid, rng)
    v1, v2 = riesz_perp(u)
    div = partial_deriv(v1, 1) + partial_deriv(v2, 2)
    assert div.max_abs() < 1e-12


def test_riesz_para_comm_is_the_composition(grid):
    rng = np.random.default_rng(13)
    f = random_band_field(grid, rng)
    g = random_band_field(grid, rng)
    for l in (1, 2):
        got = riesz_para_comm(f, g, l)
        want = riesz(paraproduct(f, g, "lt"), l) - paraproduct(f, riesz(g, l), "lt")
        assert (got - want).max_abs() <= 1e-12 * max(want.max_abs(), 1e-30)
    zero = SpectralField.zero(grid)
    assert riesz_para_comm(f, zero, 1).max_abs() < 1e-15


def test_riesz_boundedness_surrogate(grid, part):
    rng = np.random.default_rng(14)
    for _ in range(8):
        u = random_band_field(grid, rng)
        for alpha in (-1.0, 0.0, 1.0):
            for l in (1, 2):
                assert besov_norm(riesz(u, l), alpha, part) <= 1.5 * besov_norm(u, alpha, part)


def test_operations_preserve_reality(grid):
    rng = np.random.default_rng(15)
    f = random_band_field(grid, rng)
    g = random_band_field(grid, rng)
    outs = [product(f, g), paraproduct(f, g, "lt"), paraproduct(f, g, "resonant"),
            riesz(f, 1), partial_deriv(f, 2), commutator_C(f, g, g)]
    for out in outs:
        assert out.hermitian_defect() < 1e-12


def test_gradient_pair(grid):
    rng = np.random.default_rng(16)
    f = random_band_field(grid, rng)
    g1, g2 = gradient(f)
    assert (g1 - partial_deriv(f, 1)).max_abs() < 1e-15
    assert (g2 - partial_deriv(f, 2)).max_abs() < 1e-15

import math

import numpy as np
import pytest

from nlskit import (GridSpec, GridUsageError, RadialKernel, ScalarField,
                    apply_multiplier, convolve_radial_kernel,
                    field_from_function, forward_transform, inverse_transform,
                    spectral_gradient)

from conftest import gaussian, random_field


def test_gridspec_validation():
    with pytest.raises(ValueError):
        GridSpec(4, 64, 8.0)
    with pytest.raises(ValueError):
        GridSpec(1, 63, 8.0)   # odd
    with pytest.raises(ValueError):
        GridSpec(1, 4, 8.0)    # too few points
    with pytest.raises(ValueError):
        GridSpec(1, 64, -1.0)
    g = GridSpec(2, 64, 8.0)
    assert g.npoints == 64 ** 2
    assert g.axis_wavenumbers.shape == (64,)
    assert math.isclose(g.h, 0.25)


def test_constant_maps_to_dc_mode(grid1d):
    f = ScalarField(np.full(grid1d.shape, 1.0 + 0.0j), grid1d, "physical")
    c = f.to_spectral().values
    assert abs(c[0] - 1.0) < 1e-12
    assert np.abs(c[1:]).max() < 1e-12


def test_plane_wave_single_coefficient(grid1d):
    k1 = math.pi / grid1d.l
    f = field_from_function(grid1d, lambda x: np.exp(1j * k1 * x))
    c = f.to_spectral().values
    assert abs(c[1] - 1.0) < 1e-12
    others = np.abs(np.delete(c, 1))
    assert others.max() < 1e-12


def test_gaussian_spectrum_matches_transform(grid1d):
    # coefficients of exp(ikx) scale the closed-form transform by 1/(2L)
    f = gaussian(grid1d)
    c = f.to_spectral().values
    k = grid1d.axis_wavenumbers
    closed = math.sqrt(2.0 * math.pi) * np.exp(-k ** 2 / 2.0)
    assert np.abs(2 * grid1d.l * c - closed).max() < 1e-8


@pytest.mark.parametrize("d,m,l", [(1, 256, 16.0), (2, 64, 8.0), (3, 24, 6.0)])
def test_round_trip_and_parseval(d, m, l):
    grid = GridSpec(d, max(m, 8), l)
    rng = np.random.default_rng(7)
    f = random_field(grid, rng)
    back = f.to_spectral().to_physical()
    scale = np.abs(f.values).max()
    assert np.abs(back.values - f.values).max() < 1e-12 * scale
    assert math.isclose(f.l2_norm(), f.to_spectral().l2_norm(), rel_tol=1e-12)


def test_wrong_representation_rejected(grid1d):
    f = gaussian(grid1d)
    with pytest.raises(GridUsageError):
        forward_transform(f.to_spectral())
    with pytest.raises(GridUsageError):
        inverse_transform(f)


def test_gradient_constant_and_sine(grid1d):
    const = ScalarField(np.full(grid1d.shape, 2.0 + 1.0j), grid1d, "physical")
    assert np.abs(spectral_gradient(const)[0].values).max() < 1e-12
    k = math.pi / grid1d.l
    s = field_from_function(grid1d, lambda x: np.sin(k * x).astype(complex))
    dx = spectral_gradient(s)[0].values
    assert np.abs(dx - k * np.cos(k * grid1d.x_mesh[0])).max() < 1e-12


def test_gradient_gaussian(grid1d):
    f = gaussian(grid1d)
    dx = spectral_gradient(f)[0].values
    x = grid1d.x_mesh[0]
    assert np.abs(dx - (-x) * np.exp(-x ** 2 / 2)).max() < 1e-8


def test_gradient_leibniz_band_limited(grid1d):
    rng = np.random.default_rng(3)
    m = grid1d.m
    f = random_field(grid1d, rng, band=m // 6 - 1)
    g = random_field(grid1d, rng, band=m // 6 - 1)
    prod = ScalarField(f.values * g.values, grid1d, "physical")
    lhs = spectral_gradient(prod)[0].values
    rhs = f.values * spectral_gradient(g)[0].values + g.values * spectral_gradient(f)[0].values
    scale = np.abs(rhs).max()
    assert np.abs(lhs - rhs).max() < 1e-10 * scale


def test_gradient_leibniz_decaying_envelope(grid1d):
    # modes up to M/3 with a decaying envelope: aliasing stays below 1e-8
    rng = np.random.default_rng(4)
    m = grid1d.m
    j = np.rint(np.fft.fftfreq(m) * m)
    env = np.where(np.abs(j) <= m // 3, np.exp(-(j / (m / 16)) ** 2), 0.0)
    def mk():
        coef = (rng.standard_normal(m) + 1j * rng.standard_normal(m)) * env
        return ScalarField(np.fft.ifftn(coef) * math.sqrt(m), grid1d, "physical")
    f, g = mk(), mk()
    prod = ScalarField(f.values * g.values, grid1d, "physical")
    lhs = spectral_gradient(prod)[0].values
    rhs = f.values * spectral_gradient(g)[0].values + g.values * spectral_gradient(f)[0].values
    assert np.abs(lhs - rhs).max() < 1e-8 * np.abs(rhs).max()


def test_multiplier_identity_and_unitary(grid1d):
    f = gaussian(grid1d, velocity=[0.5])
    same = apply_multiplier(f, lambda k: np.ones_like(k))
    assert np.abs(same.values - f.values).max() < 1e-12
    t = 0.7
    flowed = apply_multiplier(f, lambda k: np.exp(-1j * k ** 2 * t))
    assert math.isclose(flowed.l2_norm(), f.l2_norm(), rel_tol=1e-12)


def test_multiplier_fractional_eigenfunction(grid1d):
    k = math.pi / grid1d.l
    s = field_from_function(grid1d, lambda x: np.sin(k * x).astype(complex))
    out = apply_multiplier(s, lambda km: np.sqrt(km))
    assert np.abs(out.values - math.sqrt(k) * np.sin(k * grid1d.x_mesh[0])).max() < 1e-10


def test_multiplier_rejects_nonfinite(grid1d):
    f = gaussian(grid1d)
    with pytest.raises(ValueError, match="k ="):
        apply_multiplier(f, lambda k: 1.0 / k, name="inverse modulus")


# ---------------------------------------------------------------------------
# Free-space convolution
# ---------------------------------------------------------------------------

def test_convolve_zero_is_zero(grid2d):
    z = ScalarField(np.zeros(grid2d.shape), grid2d, "physical")
    out = convolve_radial_kernel(z, RadialKernel.reciprocal())
    assert np.abs(out.values).max() == 0.0


def test_convolve_newtonian_point_mass():
    # unit-mass narrow Gaussian: the 1/r potential outside the bulk is 1/|x|
    grid = GridSpec(3, 96, 6.0)
    sig = 0.25
    f = field_from_function(grid, lambda x, y, z: np.exp(-(x * x + y * y + z * z) / (2 * sig ** 2)))
    f = ScalarField(f.values.real / (grid.cell_volume * f.values.real.sum()), grid, "physical")
    pot = convolve_radial_kernel(f, RadialKernel.reciprocal())
    r = np.sqrt(sum(a ** 2 for a in grid.x_mesh))
    sel = (r > 4 * sig) & (r < 0.5 * grid.l)
    rel = np.abs(pot.values[sel] - 1.0 / r[sel]) * r[sel]
    assert rel.max() < 1e-2


def test_convolve_absdistance_point_mass():
    grid = GridSpec(3, 96, 6.0)
    sig = 0.1
    f = field_from_function(grid, lambda x, y, z: np.exp(-(x * x + y * y + z * z) / (2 * sig ** 2)))
    f = ScalarField(f.values.real / (grid.cell_volume * f.values.real.sum()), grid, "physical")
    out = convolve_radial_kernel(f, RadialKernel.abs_distance())
    r = np.sqrt(sum(a ** 2 for a in grid.x_mesh))
    sel = (r > 2.0) & (r < 0.6 * grid.l)
    assert (np.abs(out.values[sel] - r[sel]) / r[sel]).max() < 1e-2


def test_convolve_linear_and_translation_equivariant(grid1d):
    rng = np.random.default_rng(11)
    x = grid1d.x_mesh[0]
    supp = np.exp(-x ** 2 / 4)  # supported well inside the box
    a = ScalarField(supp * rng.standard_normal(grid1d.shape), grid1d, "physical")
    b = ScalarField(supp * rng.standard_normal(grid1d.shape), grid1d, "physical")
    k = RadialKernel.abs_distance()
    lhs = convolve_radial_kernel(ScalarField(2 * a.values + 3 * b.values, grid1d, "physical"), k)
    rhs = 2 * convolve_radial_kernel(a, k).values + 3 * convolve_radial_kernel(b, k).values
    assert np.abs(lhs.values - rhs).max() < 1e-10 * np.abs(rhs).max()

    shift = 12  # cells
    shifted = ScalarField(np.roll(a.values, shift), grid1d, "physical")
    conv_shifted = convolve_radial_kernel(shifted, k)
    expected = np.roll(convolve_radial_kernel(a, k).values, shift)
    # equivariance holds away from the wrapped sliver: compare the central half
    central = np.abs(grid1d.x_mesh[0]) < grid1d.l / 2
    scale = np.abs(expected).max()
    assert np.abs(conv_shifted.values - expected)[central].max() < 1e-8 * scale


def test_convolve_reciprocal_rejected_in_1d(grid1d):
    f = gaussian(grid1d)
    f = ScalarField(np.abs(f.values) ** 2, grid1d, "physical")
    with pytest.raises(ValueError, match="d = 1"):
        convolve_radial_kernel(f, RadialKernel.reciprocal())


def test_convolve_requires_real(grid1d):
    f = gaussian(grid1d, velocity=[1.0])
    with pytest.raises(ValueError, match="real"):
        convolve_radial_kernel(f, RadialKernel.abs_distance())

import math

import numpy as np
import pytest
from scipy import integrate, special

from conewave.core.exceptions import AliasingError, GridMismatchError, SobolevDivergenceError
from conewave.models.schemas import Cone, ConePoint
from conewave.services.bessel_hankel import lambda_grid, radial_grid
from conewave.services.oracles import planar_distance
from conewave.services.spectral_calculus import (
    add_fields,
    apply_multiplier,
    energy,
    evaluate_field,
    field_from_function,
    field_from_spectrum,
    lp_cutoff,
    lp_decompose,
    lp_multiplier,
    lp_orthogonality,
    lp_piece,
    mode_energies,
    mode_function,
    multiplier_kernel,
    physical_l2,
    polar_bump,
    polar_samples,
    project_harmonics,
    project_mode,
    rescale_field,
    sobolev_norm,
    spectral_l2,
    spectral_wave_solve,
)

CONE = Cone(rho=2.0 / 3.0)


def _gaussian_field(cone=CONE, j_max=2, lambda_max=12.0, r_max=12.0):
    """exp(-r^2 / 2) on the cone, held directly by its mode-zero spectrum."""
    c = math.sqrt(2.0 * math.pi * cone.rho)
    return field_from_spectrum(
        cone,
        {0: lambda lam: c * np.exp(-0.5 * lam * lam)},
        lambda_grid(lambda_max, r_max=r_max),
        j_max,
        r_max,
    )


def _two_mode_field():
    c = math.sqrt(2.0 * math.pi * CONE.rho)
    return field_from_spectrum(
        CONE,
        {
            0: lambda lam: c * np.exp(-0.5 * lam * lam),
            1: lambda lam: lam ** 1.5 * np.exp(-0.5 * lam * lam),
            -1: lambda lam: lam ** 1.5 * np.exp(-0.5 * lam * lam),
        },
        lambda_grid(12.0, r_max=12.0),
        2,
        12.0,
    )


# ---------------------------------------------------------------------------------
# Littlewood-Paley cutoffs
# ---------------------------------------------------------------------------------

def test_lp_cutoffs_form_a_partition_of_unity():
    z = np.logspace(-3.0, 3.0, 2001)
    total = sum(lp_cutoff(z * 2.0 ** -k) for k in range(-15, 16))
    np.testing.assert_allclose(total, 1.0, atol=1e-14)


def test_lp_cutoff_support():
    z = np.array([0.0, 0.5, 1.0 / math.sqrt(2.0), 2.0 * math.sqrt(2.0), 3.0, -1.0])
    values = lp_cutoff(z)
    np.testing.assert_array_equal(values, 0.0)
    assert np.all(lp_cutoff(np.linspace(0.8, 2.7, 50)) > 0.0)


def test_lp_multiplier_is_a_dilation():
    lam = np.linspace(0.1, 20.0, 77)
    np.testing.assert_allclose(lp_multiplier(2)(lam * lam), lp_cutoff(lam / 4.0), rtol=1e-15)


# ---------------------------------------------------------------------------------
# angular projection
# ---------------------------------------------------------------------------------

def test_project_mode_picks_out_one_mode():
    grid = radial_grid(3.0, 0.5)
    samples = polar_samples(CONE, lambda r, theta: np.exp(-r * r) * mode_function(CONE.rho, 1, theta), grid, 16)
    np.testing.assert_allclose(project_mode(samples, 1).values, np.exp(-grid.nodes ** 2), rtol=1e-13)
    np.testing.assert_allclose(project_mode(samples, 0).values, 0.0, atol=1e-14)
    np.testing.assert_allclose(project_mode(samples, 2).values, 0.0, atol=1e-14)


def test_project_mode_refuses_to_alias():
    samples = polar_samples(CONE, lambda r, theta: np.ones(np.broadcast(r, theta).shape), radial_grid(1.0, 0.5), 8)
    with pytest.raises(AliasingError):
        project_mode(samples, 3)


def test_real_data_has_conjugate_symmetric_modes():
    bump = polar_bump(CONE, ConePoint(r=2.0, theta=0.4), 0.3)
    field = field_from_function(CONE, bump, 4.5, lambda_grid(20.0, r_max=4.5), 6)
    for j in range(1, 7):
        np.testing.assert_allclose(field.mode(-j), np.conj(field.mode(j)), rtol=1e-12, atol=1e-15)


def test_forward_transform_of_a_tip_centred_gaussian():
    field = field_from_function(CONE, lambda r, theta: np.exp(-0.5 * r * r) + 0.0 * theta, 9.0,
                                lambda_grid(10.0, r_max=9.0), 2)
    expected = math.sqrt(2.0 * math.pi * CONE.rho) * np.exp(-0.5 * field.lambda_grid.nodes ** 2)
    np.testing.assert_allclose(field.mode(0), expected, rtol=1e-10, atol=1e-14)
    np.testing.assert_allclose(field.mode(1), 0.0, atol=1e-13)


# ---------------------------------------------------------------------------------
# multipliers
# ---------------------------------------------------------------------------------

def test_identity_multiplier():
    field = _two_mode_field()
    out = apply_multiplier(field, lambda lam2: np.ones_like(lam2))
    np.testing.assert_array_equal(out.coefficients, field.coefficients)


def test_multipliers_compose():
    field = _two_mode_field()
    g1 = lambda lam2: np.exp(-lam2)
    g2 = lambda lam2: lp_cutoff(np.sqrt(lam2))
    both = apply_multiplier(apply_multiplier(field, g1), g2)
    product = apply_multiplier(field, lambda lam2: g1(lam2) * g2(lam2))
    np.testing.assert_allclose(both.coefficients, product.coefficients, rtol=1e-14, atol=0.0)


def test_low_and_high_pieces_reconstruct_the_field():
    field = _two_mode_field()
    low = apply_multiplier(field, lambda lam2: lp_cutoff(np.sqrt(lam2)))
    high = apply_multiplier(field, lambda lam2: 1.0 - lp_cutoff(np.sqrt(lam2)))
    np.testing.assert_allclose(add_fields(low, high).coefficients, field.coefficients, rtol=1e-14, atol=1e-15)


def test_lambda_squared_multiplier_is_the_laplacian():
    field = _gaussian_field()
    lap = apply_multiplier(field, lambda lam2: lam2)
    r = np.array([0.5, 1.0, 2.0, 3.0])
    values = evaluate_field(lap, r, np.full(r.shape, 0.3))
    np.testing.assert_allclose(values.real, (2.0 - r * r) * np.exp(-0.5 * r * r), atol=1e-10)
    np.testing.assert_allclose(values.imag, 0.0, atol=1e-12)


def test_lp_decompose_sums_back_to_the_field():
    field = _two_mode_field()
    decomposition = lp_decompose(field, (-25, 5))
    assert decomposition.levels == list(range(-25, 6))
    assert not decomposition.coverage_warning
    assert decomposition.leftover < 1e-20
    total = sum(p.coefficients for p in decomposition.pieces)
    np.testing.assert_allclose(total, field.coefficients, rtol=1e-13, atol=1e-15)


def test_lp_decompose_flags_a_short_dyadic_range(caplog):
    decomposition = lp_decompose(_two_mode_field(), (0, 0))
    assert decomposition.coverage_warning
    assert 0.01 < decomposition.leftover < 1.0
    assert "misses" in caplog.text
    np.testing.assert_array_equal(decomposition.piece(0).coefficients, lp_piece(_two_mode_field(), 0).coefficients)


def test_lp_decompose_of_a_compact_spectrum():
    def spectrum(lam):
        return np.where((lam > 0.75) & (lam < 2.7), (lam - 0.75) ** 2 * (2.7 - lam) ** 2, 0.0)

    field = field_from_spectrum(CONE, {0: spectrum}, lambda_grid(6.0), 1, 10.0)
    decomposition = lp_decompose(field, (-4, 4))
    assert not decomposition.coverage_warning
    norms = {k: float(np.sum(mode_energies(decomposition.piece(k)))) for k in decomposition.levels}
    for k, value in norms.items():
        if k in (-1, 0, 1):
            assert value > 0.0
        else:
            assert value == 0.0


def test_lp_orthogonality_is_at_most_one():
    field = _two_mode_field()
    ratio = lp_orthogonality(field, 0.5, (-25, 5))
    assert 0.0 < ratio <= 1.0 + 1e-12


def test_project_harmonics_drops_low_modes():
    field = project_harmonics(_two_mode_field(), 1)
    np.testing.assert_array_equal(field.mode(0), 0.0)
    assert np.any(field.mode(1) != 0.0)


# ---------------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------------

def test_plancherel():
    field = _two_mode_field()
    assert spectral_l2(field) == pytest.approx(physical_l2(field), rel=1e-8)


def test_gaussian_norm_in_closed_form():
    # ||exp(-r^2 / 2)||^2 over the cone is 2 pi rho * 1/2
    assert spectral_l2(_gaussian_field()) == pytest.approx(math.sqrt(math.pi * CONE.rho), rel=1e-12)


def test_negative_homogeneous_norm_of_low_frequency_data_diverges():
    with pytest.raises(SobolevDivergenceError):
        sobolev_norm(_gaussian_field(), -1.5)
    assert sobolev_norm(_gaussian_field(), -1.5, homogeneous=False) > 0.0


def test_sobolev_exponent_out_of_range():
    with pytest.raises(ValueError):
        sobolev_norm(_gaussian_field(), 3.0)


# ---------------------------------------------------------------------------------
# wave evolution
# ---------------------------------------------------------------------------------

def test_wave_solve_at_time_zero_returns_the_data():
    f = _gaussian_field()
    g = _two_mode_field()
    u, u_t = spectral_wave_solve(CONE, f, g, 0.0)
    np.testing.assert_array_equal(u.coefficients, f.coefficients)
    np.testing.assert_array_equal(u_t.coefficients, g.coefficients)


@pytest.mark.parametrize("t", [0.5, 3.0, 17.0])
def test_energy_is_conserved(t):
    f = _gaussian_field()
    g = _two_mode_field()
    u, u_t = spectral_wave_solve(CONE, f, g, t)
    assert energy(u, u_t) == pytest.approx(energy(f, g), rel=1e-12)


def test_grid_mismatch():
    a = _gaussian_field()
    b = _gaussian_field(lambda_max=8.0)
    with pytest.raises(GridMismatchError):
        add_fields(a, b)
    with pytest.raises(GridMismatchError):
        spectral_wave_solve(Cone(rho=1.5), a, a, 1.0)


# ---------------------------------------------------------------------------------
# scaling
# ---------------------------------------------------------------------------------

@pytest.mark.parametrize("mu", [0.25, 4.0])
def test_rescale_field(mu):
    field = _two_mode_field()
    scaled = rescale_field(field, mu)
    for s in (0.0, 1.0):
        assert sobolev_norm(scaled, s) == pytest.approx(mu ** (1.0 - s) * sobolev_norm(field, s), rel=1e-12)
    r = np.array([0.4, 1.3, 2.2])
    theta = np.array([0.1, -0.5, 1.0])
    np.testing.assert_allclose(evaluate_field(scaled, mu * r, theta), evaluate_field(field, r, theta),
                               rtol=1e-10, atol=1e-13)
    with pytest.raises(ValueError):
        rescale_field(field, 0.0)


# ---------------------------------------------------------------------------------
# kernels of multipliers
# ---------------------------------------------------------------------------------

def test_multiplier_kernel_on_the_plane():
    plane = Cone(rho=1.0)
    p1, p2 = ConePoint(r=1.0, theta=0.0), ConePoint(r=1.5, theta=0.7)
    d = planar_distance(p1, p2)
    G = lp_multiplier(0)
    value = multiplier_kernel(plane, G, p1, p2, 3.0)
    edges = [1.01 / math.sqrt(2.0), 1.0, 1.5, 2.0, 0.99 * 2.0 * math.sqrt(2.0)]
    ref = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        part, _ = integrate.quad(lambda lam: float(lp_cutoff(lam)[0]) * special.j0(lam * d) * lam, a, b,
                                 epsabs=0.0, epsrel=1e-12, limit=200)
        ref += part
    assert value.value == pytest.approx(ref / (2.0 * math.pi), rel=1e-7)

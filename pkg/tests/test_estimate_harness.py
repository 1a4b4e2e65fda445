import math

import numpy as np
import pytest
from pydantic import ValidationError

from conewave.core.config import settings
from conewave.core.exceptions import (
    HarmonicLeakageError,
    InvalidConfigError,
    TripleValidityError,
    ZeroDataError,
)
from conewave.models.fields import ConeData
from conewave.models.schemas import AdmissibleTriple, Cone, ConePoint, MorawetzConfig
from conewave.services import estimate_harness as harness
from conewave.services.bessel_hankel import lambda_grid
from conewave.services.cone_geometry import distance_arrays
from conewave.services.propagator_kernel import diffractive_kernel
from conewave.services.spectral_calculus import (
    default_j_max,
    field_from_function,
    field_from_spectrum,
    lp_piece,
    polar_bump,
)

CONE = Cone(rho=2.0 / 3.0)


def _band_field(modes, lambda_max=2.0 * math.sqrt(2.0), t_max=0.0, r_max=10.0, j_max=3):
    grid = lambda_grid(lambda_max, t_max=t_max, r_max=r_max)
    spectra = {j: (lambda lam, a=amp: a * harness.lp_piece_multiplier(0, lam)) for j, amp in modes.items()}
    return field_from_spectrum(CONE, spectra, grid, j_max, r_max)


# ---------------------------------------------------------------------------------
# decay fits
# ---------------------------------------------------------------------------------

def test_fit_decay_recovers_the_exponent():
    times = np.geomspace(1.0, 100.0, 10)
    fit = harness.fit_decay(times, 3.0 * times ** -0.5)
    assert fit.slope == pytest.approx(-0.5, abs=1e-12)
    assert fit.slope_ci[0] <= fit.slope <= fit.slope_ci[1]
    assert not fit.sampling_warning


def test_fit_decay_confidence_band_covers_noisy_data():
    rng = np.random.default_rng(4)
    times = np.geomspace(5.0, 50.0, 12)
    sups = times ** -0.5 * np.exp(0.01 * rng.normal(size=times.size))
    fit = harness.fit_decay(times, sups)
    assert fit.slope_ci[0] < fit.slope < fit.slope_ci[1]
    assert abs(fit.slope + 0.5) < 0.05


def test_fit_decay_rejects_unordered_times():
    with pytest.raises(ValidationError):
        harness.fit_decay([2.0, 1.0, 3.0], [1.0, 1.0, 1.0])


@pytest.mark.slow
def test_dispersive_decay_on_a_wide_cone():
    source = ConePoint(r=1.0, theta=0.0)
    grid = lambda_grid(2.0 * math.sqrt(2.0), t_max=50.0, r_max=1.0)
    g = harness.localized_point_source(CONE, source, grid, default_j_max(CONE, grid.r_max))
    fit = harness.dispersive_scan(CONE, g, list(np.geomspace(5.0, 50.0, 4)), source, threads=2)
    assert settings.DECAY_SLOPE_LO <= fit.slope <= settings.DECAY_SLOPE_HI


def test_dispersive_scan_needs_times():
    field = _band_field({0: 1.0})
    with pytest.raises(ValueError):
        harness.dispersive_scan(CONE, field, [], ConePoint(r=1.0, theta=0.0))


def test_cosine_dispersive_scan_needs_times():
    field = _band_field({0: 1.0})
    with pytest.raises(ValueError):
        harness.cosine_dispersive_scan(CONE, field, [], ConePoint(r=1.0, theta=0.0))


def test_localized_point_source_is_band_limited():
    grid = lambda_grid(6.0)
    field = harness.localized_point_source(CONE, ConePoint(r=1.0, theta=0.2), grid, 4)
    lam = grid.nodes
    outside = (lam < 1.0 / math.sqrt(2.0)) | (lam > 2.0 * math.sqrt(2.0))
    np.testing.assert_array_equal(field.coefficients[:, outside], 0.0)
    assert np.any(field.coefficients[:, ~outside] != 0.0)


# ---------------------------------------------------------------------------------
# Strichartz
# ---------------------------------------------------------------------------------

def test_strichartz_ratio_of_zero_data():
    zero = harness.zero_like(_band_field({0: 1.0}))
    with pytest.raises(ZeroDataError):
        harness.strichartz_ratio(CONE, AdmissibleTriple(p=6.0, q=6.0, gamma=0.5), zero, zero, 1.0)


@pytest.mark.parametrize(
    "triple",
    [
        AdmissibleTriple.from_pq(2.0, 8.0),
        AdmissibleTriple(p=6.0, q=6.0, gamma=0.4),
        AdmissibleTriple.from_pq(8.0, math.inf),
    ],
)
def test_strichartz_ratio_rejects_invalid_triples(triple):
    field = _band_field({0: 1.0})
    with pytest.raises(TripleValidityError):
        harness.strichartz_ratio(CONE, triple, field, field, 1.0)


def test_admissible_triples():
    assert AdmissibleTriple(p=6.0, q=6.0, gamma=0.5).is_admissible
    assert not AdmissibleTriple.from_pq(2.0, 8.0).is_admissible
    assert not AdmissibleTriple(p=4.0, q=math.inf, gamma=0.75).is_admissible


def test_strichartz_ratio_needs_positive_time():
    field = _band_field({0: 1.0})
    with pytest.raises(ValueError):
        harness.strichartz_ratio(CONE, AdmissibleTriple(p=6.0, q=6.0, gamma=0.5), field, field, 0.0)


@pytest.mark.slow
def test_strichartz_ratio_is_stable_under_scaling():
    source = ConePoint(r=3.0, theta=0.0)
    grid = lambda_grid(3.0, t_max=2.0, r_max=6.2)
    field = lp_piece(field_from_function(CONE, polar_bump(CONE, source, 0.4), 6.2, grid, default_j_max(CONE, 3.0)), 0)
    ratios = harness.strichartz_scaling_family(CONE, AdmissibleTriple(p=6.0, q=6.0, gamma=0.5), field, field, 2.0,
                                               (0.5, 1.0, 2.0), threads=2)
    spread = (max(ratios.values()) - min(ratios.values())) / min(ratios.values())
    assert spread < settings.STRICHARTZ_STABILITY


def test_frequency_localized_ratio_of_a_missing_piece():
    field = _band_field({0: 1.0})
    with pytest.raises(ZeroDataError):
        harness.frequency_localized_ratio(CONE, AdmissibleTriple(p=6.0, q=6.0, gamma=0.5), field, field, 0.5, 3)


def test_dyadic_pieces_recombine():
    triple = AdmissibleTriple(p=6.0, q=6.0, gamma=0.5)
    field = _band_field({0: 1.0, 1: 0.5})
    full, summed = harness.orthogonality_check(CONE, triple, field, field, 0.5, (-2, 2), threads=1)
    assert full > 0.0 and summed > 0.0
    # the five pieces add up to the data, so the triangle and Cauchy-Schwarz inequalities apply
    assert full <= math.sqrt(5.0) * summed * (1.0 + 1e-9)
    ratio = harness.frequency_localized_ratio(CONE, triple, field, field, 0.5, 0, threads=1)
    assert 0.0 < ratio < math.inf


def test_local_strichartz_ratio_uses_inhomogeneous_norms():
    triple = AdmissibleTriple(p=6.0, q=6.0, gamma=0.5)
    field = _band_field({0: 1.0})
    homogeneous = harness.strichartz_ratio(CONE, triple, field, field, 0.5, threads=1)
    local = harness.strichartz_ratio(CONE, triple, field, field, 0.5, homogeneous=False, threads=1)
    expected = harness.data_norm(field, field, 0.5) / harness.data_norm(field, field, 0.5, homogeneous=False)
    assert local / homogeneous == pytest.approx(expected, rel=1e-12)


@pytest.mark.slow
def test_nonadmissible_contrast_reports_every_level():
    field = _band_field({0: 1.0})
    ratios = harness.nonadmissible_contrast(CONE, field, field, 0.5, levels=2, threads=2)
    assert sorted(ratios) == [0, 1, 2]
    assert all(v > 0.0 for v in ratios.values())


def test_energy_drift():
    field = _band_field({0: 1.0, 1: 0.5j})
    assert harness.energy_drift(CONE, field, field, np.linspace(0.0, 100.0, 21)) <= settings.ENERGY_DRIFT_TOL
    zero = harness.zero_like(field)
    assert harness.energy_drift(CONE, zero, zero, [1.0]) == 0.0


# ---------------------------------------------------------------------------------
# Hilbert transform in time
# ---------------------------------------------------------------------------------

def test_hilbert_transform_of_a_cosine_is_a_sine():
    n = 512
    t = 2.0 * math.pi * np.arange(n) / n
    samples = np.stack([np.cos(5.0 * t), np.sin(3.0 * t)])
    result = harness.hilbert_time_transform(samples, window=False, pad_factor=1)
    np.testing.assert_allclose(result.values[0], np.sin(5.0 * t), atol=1e-12)
    np.testing.assert_allclose(result.values[1], -np.cos(3.0 * t), atol=1e-12)
    assert result.leakage == 0.0
    assert not result.leakage_warning


def test_hilbert_transform_flags_energy_at_the_ends():
    result = harness.hilbert_time_transform(np.ones(400), window=False, pad_factor=2)
    assert result.leakage_warning


def test_hilbert_transform_rejects_bad_padding():
    with pytest.raises(ValueError):
        harness.hilbert_time_transform(np.zeros(16), pad_factor=0)


def test_raised_cosine():
    window = harness.raised_cosine(100, 10)
    assert window[0] == pytest.approx(0.5 * (1.0 - math.cos(0.05 * math.pi)))
    np.testing.assert_array_equal(window[10:90], 1.0)
    np.testing.assert_allclose(window[:10], window[::-1][:10])
    np.testing.assert_array_equal(harness.raised_cosine(8, 0), 1.0)


def test_cosine_via_hilbert_of_zero_data():
    zero = harness.zero_like(_band_field({0: 1.0}))
    times = np.arange(0.0, 2.0, 0.25)
    assert harness.cosine_via_hilbert_check(CONE, zero, times, [ConePoint(r=1.0, theta=0.0)]) == 0.0


def test_cosine_via_hilbert_needs_a_uniform_grid():
    field = _band_field({0: 1.0})
    with pytest.raises(ValueError):
        harness.cosine_via_hilbert_check(CONE, field, [0.0, 0.5, 0.7], [ConePoint(r=1.0, theta=0.0)])
    with pytest.raises(ValueError):
        harness.cosine_via_hilbert_check(CONE, field, [0.0], [ConePoint(r=1.0, theta=0.0)])


@pytest.mark.slow
def test_cosine_propagator_is_the_hilbert_transform_of_the_sine_propagator():
    dt, taper = 0.25, 300
    grid = lambda_grid(3.5, t_max=40.0 + taper * dt + 5.0, r_max=3.0)
    bump = lambda centre: (lambda lam: np.exp(-0.5 * ((lam - centre) / 0.2) ** 2))
    f = field_from_spectrum(CONE, {0: bump(1.5), 1: bump(2.0), -2: bump(1.2)}, grid, 2, 10.0)
    points = [ConePoint(r=0.7, theta=0.3), ConePoint(r=2.5, theta=2.0)]
    deviation = harness.cosine_via_hilbert_check(CONE, f, np.arange(-40.0, 40.0, dt), points, taper=taper)
    assert deviation <= settings.HILBERT_IDENTITY_TOL


# ---------------------------------------------------------------------------------
# Morawetz
# ---------------------------------------------------------------------------------

def test_morawetz_constant_in_closed_form():
    # J_{1/2}(x)^2 = 2 sin^2(x) / (pi x), and int sin^2(x) / x^2 dx = pi / 2
    assert harness.morawetz_constant(0.5, 0.25) == pytest.approx(1.0, rel=1e-14)


@pytest.mark.parametrize("mu", [0.4, 1.2, 1.5, 1.8])
def test_morawetz_constant_for_half_integer_order(mu):
    # int x^{-mu-1} (1 - cos 2x) dx = 2^mu pi / (2 Gamma(mu + 1) sin(pi mu / 2)) for 0 < mu < 2
    expected = 2.0 ** (mu - 1.0) / (math.gamma(mu + 1.0) * math.sin(0.5 * math.pi * mu))
    assert harness.morawetz_constant(0.5, 0.25 * mu) == pytest.approx(expected, rel=1e-13)


def test_morawetz_constant_order_recurrence():
    # raising nu by one multiplies the integral by (nu + (1 - mu) / 2) / (nu + (1 + mu) / 2)
    nu, alpha = 2.0, 0.3
    mu = 4.0 * alpha
    ratio = harness.morawetz_constant(nu + 1.0, alpha) / harness.morawetz_constant(nu, alpha)
    assert ratio == pytest.approx((nu + 0.5 * (1.0 - mu)) / (nu + 0.5 * (1.0 + mu)), rel=1e-13)


def test_morawetz_constant_outside_the_range():
    with pytest.raises(InvalidConfigError):
        harness.morawetz_constant(0.5, 0.5)
    with pytest.raises(InvalidConfigError):
        harness.morawetz_constant(1.5, 0.0)


def test_morawetz_hypothesis():
    assert MorawetzConfig(m=1, alpha_mz=0.9).satisfies_hypothesis(CONE)
    assert not MorawetzConfig(m=1, alpha_mz=1.2).satisfies_hypothesis(CONE)
    field = _band_field({1: 1.0})
    with pytest.raises(InvalidConfigError):
        harness.morawetz_frequency_side(CONE, MorawetzConfig(m=1, alpha_mz=1.2), field, field)


def test_single_harmonic_frequency_side_attains_the_mode_bound():
    cfg = MorawetzConfig(m=1, alpha_mz=0.3)
    g = _band_field({1: 1.0})
    f = harness.zero_like(g)
    lhs, per_mode = harness.morawetz_frequency_side(CONE, cfg, f, g)
    assert list(per_mode) == [1]
    expected = math.sqrt(math.pi * harness.morawetz_constant(CONE.nu(1), 0.3))
    assert lhs / harness.morawetz_rhs(f, g) == pytest.approx(expected, rel=1e-12)
    assert harness.morawetz_mode_bound(CONE, cfg, 1) == pytest.approx(expected, rel=1e-14)


def test_morawetz_direct_integral_is_bounded_by_the_frequency_side():
    cfg_short = MorawetzConfig(m=1, alpha_mz=0.3, t_max=10.0)
    cfg_long = MorawetzConfig(m=1, alpha_mz=0.3, t_max=40.0)
    f = _band_field({1: 1.0, -2: 0.5 + 0.5j}, t_max=40.0)
    g = _band_field({2: 0.3, 3: -1.0}, t_max=40.0)
    short = harness.morawetz_ratio(CONE, cfg_short, f, g, threads=1)
    long = harness.morawetz_ratio(CONE, cfg_long, f, g, threads=2)
    assert long.lhs_frequency_side == pytest.approx(short.lhs_frequency_side, rel=1e-14)
    assert short.lhs <= long.lhs <= long.lhs_frequency_side * (1.0 + 1e-6)
    assert long.lhs >= 0.5 * long.lhs_frequency_side
    assert set(long.per_mode) == {1, -2, 2, 3}


def test_morawetz_refuses_low_harmonics():
    f = _band_field({0: 1.0, 1: 1.0})
    with pytest.raises(HarmonicLeakageError):
        harness.morawetz_ratio(CONE, MorawetzConfig(m=1, alpha_mz=0.3), f, f)


def test_morawetz_ratio_of_zero_data():
    zero = harness.zero_like(_band_field({1: 1.0}))
    with pytest.raises(ZeroDataError):
        harness.morawetz_ratio(CONE, MorawetzConfig(m=1, alpha_mz=0.3), zero, zero)


def test_sharpness_contrast_grows_toward_the_critical_weight():
    cfg = MorawetzConfig(m=1, alpha_mz=0.3)
    f = _band_field({1: 1.0})
    g = _band_field({-1: 0.5})
    ratios = harness.morawetz_sharpness_contrast(CONE, cfg, f, g)
    assert ratios[1e-3] > ratios[1e-2] > ratios[1e-1]


def test_direct_morawetz_ratio_is_dilation_invariant():
    cfg = MorawetzConfig(m=1, alpha_mz=0.3, t_max=10.0)
    f = _band_field({1: 1.0, 2: 0.4j}, t_max=10.0)
    g = _band_field({-1: 0.2, 3: 1.0}, t_max=10.0)
    ratios = harness.scaling_invariance(CONE, cfg, f, g, (0.5, 1.0, 2.0), threads=2)
    values = list(ratios.values())
    assert max(values) - min(values) <= settings.MORAWETZ_SCALING_TOL * min(values)
    assert ratios[1.0] == pytest.approx(harness.morawetz_ratio(CONE, cfg, f, g).ratio, rel=1e-14)
    assert ratios[1.0] < harness.morawetz_frequency_side(CONE, cfg, f, g)[0] / harness.morawetz_rhs(f, g)


def test_dilation_without_a_dilated_window_changes_the_direct_ratio():
    cfg = MorawetzConfig(m=1, alpha_mz=0.3, t_max=2.0)
    f = _band_field({1: 1.0}, t_max=8.0)
    g = harness.zero_like(f)
    f_mu, g_mu = harness.scaled_data(f, g, 4.0)
    fixed = harness.morawetz_ratio(CONE, cfg, f_mu, g_mu).ratio
    dilated = harness.scaling_invariance(CONE, cfg, f, g, (4.0,))[4.0]
    assert fixed < 0.98 * dilated


def test_harmonic_band_data_attains_the_mode_bound():
    grid = lambda_grid(2.0 * math.sqrt(2.0), r_max=10.0)
    cfg = MorawetzConfig(m=1, alpha_mz=0.3)
    for velocity in (True, False):
        f, g = harness.harmonic_band_data(CONE, grid, 3, 2, velocity=velocity)
        assert set(np.flatnonzero(np.any(f.coefficients != 0, axis=1))) == ({5} if not velocity else set())
        lhs, per_mode = harness.morawetz_frequency_side(CONE, cfg, f, g)
        assert list(per_mode) == [2]
        expected = math.sqrt(math.pi * harness.morawetz_constant(CONE.nu(2), 0.3))
        assert lhs / harness.morawetz_rhs(f, g) == pytest.approx(expected, rel=1e-12)
    with pytest.raises(ValueError):
        harness.harmonic_band_data(CONE, grid, 3, 4)


def test_random_band_data_keeps_high_harmonics():
    grid = lambda_grid(3.0)
    f, g = harness.random_band_data(CONE, grid, 4, 2, np.random.default_rng(0))
    for field in (f, g):
        low = np.abs(field.mode_numbers) < 2
        np.testing.assert_array_equal(field.coefficients[low], 0.0)
        assert np.any(field.coefficients != 0.0)
    with pytest.raises(ValueError):
        harness.random_band_data(CONE, grid, 2, 3, np.random.default_rng(0))


# ---------------------------------------------------------------------------------
# kernel bounds and propagation speed
# ---------------------------------------------------------------------------------

def test_diffractive_term_is_homogeneous_of_degree_minus_one():
    for rho in (2.0 / 3.0, 1.5):
        cone = Cone(rho=rho)
        base = diffractive_kernel(cone, 3.0, 1.0, 0.7, 0.4)
        assert diffractive_kernel(cone, 6.0, 2.0, 1.4, 0.4) == pytest.approx(0.5 * base, rel=1e-10)


def test_diffractive_bound_scan_reports_a_frozen_constant():
    scan = harness.diffractive_bound_scan((2.0 / 3.0,), coarse=(5, 4), refinement=2, radii=((1.0, 1.0),))
    entry = scan[2.0 / 3.0]
    assert entry["constant"] > 0.0 and math.isfinite(entry["constant"])
    assert math.isfinite(entry["fine_max"])
    assert entry["violations"] >= 0


@pytest.mark.slow
def test_geometric_composition_scan():
    target = ConePoint(r=1.0, theta=0.0)
    grid = lambda_grid(2.0 * math.sqrt(2.0), r_max=13.0)
    scan = harness.geometric_composition_scan(CONE, (2.0,), target, grid, default_j_max(CONE, grid.r_max))
    assert list(scan) == [2.0]
    assert 0.0 < scan[2.0] < math.inf


def test_finite_speed_check():
    cone = Cone(rho=1.5)
    centre = ConePoint(r=2.0, theta=0.0)

    def g(r, theta):
        d = distance_arrays(cone, r, theta, centre.r, centre.theta)
        return np.exp(-0.5 * (d / 0.25) ** 2)

    data = ConeData(func=g, r_support=4.0, feature_scale=0.125)
    points = [ConePoint(r=2.0, theta=0.3), ConePoint(r=6.0, theta=0.1), ConePoint(r=7.5, theta=-2.0)]
    outside, inside = harness.finite_speed_check(cone, data, 1.0, points, threads=1)
    assert outside == 0.0
    assert inside > 0.0

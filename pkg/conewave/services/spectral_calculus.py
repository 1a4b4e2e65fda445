"""Functional calculus of the cone Laplacian through the Fourier-Bessel resolution.

A field is held as Hankel-side angular coefficients a_j(lambda) = H_{nu_j}[Pi_j a](lambda)
with nu_j = |j| / rho and phi_j(theta) = (2 pi rho)^{-1/2} exp(i j theta / rho). Every
multiplier G(Delta) acts by multiplying the coefficients by G(lambda^2).
"""
import logging
import math
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from conewave.core.config import settings
from conewave.core.exceptions import AliasingError, GridMismatchError, SobolevDivergenceError
from conewave.models.fields import ConeData, LPDecomposition, PolarSamples, RadialFunction, RadialGrid, SpectralField
from conewave.models.schemas import Cone, ConePoint, QuadratureEstimate
from conewave.services.bessel_hankel import (
    bessel_j,
    composite_grid,
    hankel_matrix,
    radial_grid,
    radial_kernel_coefficient,
)
from conewave.services.parallel import ordered_map

logger = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)
_CUTOFF_EDGES = (1.01 / SQRT2, 1.0, 2.0, 0.99 * 2.0 * SQRT2)


# ---------------------------------------------------------------------------------
# Littlewood-Paley cutoffs
# ---------------------------------------------------------------------------------

def _smooth_step(x: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for x <= 0, 1 for x >= 1."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
        b = np.where(x < 1, np.exp(-1.0 / np.where(x < 1, 1.0 - x, 1.0)), 0.0)
    return a / (a + b)


def _bump(zeta: np.ndarray) -> np.ndarray:
    a, b, c, d = _CUTOFF_EDGES
    return _smooth_step((zeta - a) / (b - a)) * _smooth_step((d - zeta) / (d - c))


def lp_cutoff(zeta) -> np.ndarray:
    """Mother cutoff beta_0, supported in (1/sqrt2, 2 sqrt2), with sum_k beta_0(2^-k z) = 1."""
    zeta = np.atleast_1d(np.asarray(zeta, dtype=float))
    out = np.zeros(zeta.shape)
    pos = zeta > 0
    z = zeta[pos]
    m = np.floor(np.log2(z))
    total = np.zeros(z.shape)
    for shift in range(-3, 4):
        total += _bump(z * 2.0 ** -(m + shift))
    out[pos] = _bump(z) / total
    return out


def lp_multiplier(k: int) -> Callable[[np.ndarray], np.ndarray]:
    """beta_k as a function of lambda^2."""
    return lambda lam2: lp_cutoff(np.sqrt(lam2) * 2.0 ** -k)


# ---------------------------------------------------------------------------------
# angular modes
# ---------------------------------------------------------------------------------

def mode_function(rho: float, j: int, theta) -> np.ndarray:
    return np.exp(1j * j * np.asarray(theta, dtype=float) / rho) / math.sqrt(2.0 * math.pi * rho)


def angular_grid(rho: float, n_theta: int) -> np.ndarray:
    """n_theta uniform angles covering (-pi rho, pi rho]."""
    return np.linspace(-math.pi * rho, math.pi * rho, n_theta + 1)[1:]


def default_n_theta(j_max: int) -> int:
    return 4 * j_max + 16


def default_j_max(cone: Cone, lambda_max: float) -> int:
    return int(math.ceil(settings.J_MAX_PER_FREQUENCY * cone.rho * lambda_max)) + settings.J_MAX_MARGIN


def polar_samples(cone: Cone, func, r_grid: RadialGrid, n_theta: int) -> PolarSamples:
    theta = angular_grid(cone.rho, n_theta)
    rr, tt = np.meshgrid(r_grid.nodes, theta, indexing="ij")
    return PolarSamples(rho=cone.rho, r_grid=r_grid, theta=theta, values=np.asarray(func(rr, tt)))


def project_mode(samples: PolarSamples, j: int) -> RadialFunction:
    """Pi_j a(r) = int a(r, theta) conj(phi_j(theta)) dtheta by the periodic trapezoid rule."""
    n_theta = samples.theta.size
    if n_theta < 4 * abs(j) or n_theta == 0:
        raise AliasingError(f"{n_theta} angular nodes cannot resolve mode {j} (need {4 * abs(j)})")
    dtheta = 2.0 * math.pi * samples.rho / n_theta
    basis = np.conj(mode_function(samples.rho, j, samples.theta))
    return RadialFunction(grid=samples.r_grid, values=samples.values @ basis * dtheta)


# ---------------------------------------------------------------------------------
# constructing fields
# ---------------------------------------------------------------------------------

def field_from_polar(samples: PolarSamples, lambda_grid: RadialGrid, j_max: int) -> SpectralField:
    n_theta = samples.theta.size
    if n_theta < 4 * j_max:
        raise AliasingError(f"{n_theta} angular nodes cannot resolve j_max = {j_max}")
    dtheta = 2.0 * math.pi * samples.rho / n_theta
    js = np.arange(-j_max, j_max + 1)
    basis = np.conj(mode_function(samples.rho, js[None, :], samples.theta[:, None]))
    radial = (samples.values @ basis * dtheta).T

    coeffs = np.zeros((js.size, lambda_grid.nodes.size), dtype=complex)
    for jj in range(0, j_max + 1):
        mat = hankel_matrix(jj / samples.rho, lambda_grid.nodes, samples.r_grid)
        coeffs[j_max + jj] = mat @ radial[j_max + jj]
        if jj:
            coeffs[j_max - jj] = mat @ radial[j_max - jj]
    return SpectralField(rho=samples.rho, lambda_grid=lambda_grid, coefficients=coeffs,
                         j_max=j_max, r_max=samples.r_grid.r_max)


def field_from_function(
    cone: Cone,
    func: Callable[[np.ndarray, np.ndarray], np.ndarray],
    r_max: float,
    lambda_grid: RadialGrid,
    j_max: int,
    panel_width: Optional[float] = None,
    n_theta: Optional[int] = None,
) -> SpectralField:
    """Spectral coefficients of a function a(r, theta) supported in r <= r_max."""
    width = panel_width or min(0.5, math.pi / lambda_grid.r_max)
    samples = polar_samples(cone, func, radial_grid(r_max, width), n_theta or default_n_theta(j_max))
    return field_from_polar(samples, lambda_grid, j_max)


def field_from_spectrum(
    cone: Cone,
    spectra: Dict[int, Callable[[np.ndarray], np.ndarray]],
    lambda_grid: RadialGrid,
    j_max: int,
    r_max: float,
) -> SpectralField:
    """A field given directly by its Hankel-side coefficients a_j(lambda) for a few modes."""
    coeffs = np.zeros((2 * j_max + 1, lambda_grid.nodes.size), dtype=complex)
    for j, spectrum in spectra.items():
        if abs(j) > j_max:
            raise ValueError(f"mode {j} exceeds j_max = {j_max}")
        coeffs[j + j_max] = spectrum(lambda_grid.nodes)
    return SpectralField(rho=cone.rho, lambda_grid=lambda_grid, coefficients=coeffs, j_max=j_max, r_max=r_max)


def point_source_field(
    cone: Cone,
    source: ConePoint,
    lambda_grid: RadialGrid,
    j_max: int,
    cutoff: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    width: float = 0.0,
    r_max: Optional[float] = None,
) -> SpectralField:
    """Unit point mass at ``source``, mollified by exp(-(width lambda)^2 / 2) and localised by cutoff(lambda)."""
    if source.r <= 0:
        raise ValueError("point source must lie off the cone tip")
    lam = lambda_grid.nodes
    profile = np.exp(-0.5 * (width * lam) ** 2)
    if cutoff is not None:
        profile = profile * cutoff(lam)
    js = np.arange(-j_max, j_max + 1)
    coeffs = np.empty((js.size, lam.size), dtype=complex)
    for j in js:
        coeffs[j + j_max] = np.conj(mode_function(cone.rho, j, source.theta)) * bessel_j(abs(j) / cone.rho, lam * source.r) * profile
    return SpectralField(rho=cone.rho, lambda_grid=lambda_grid, coefficients=coeffs, j_max=j_max,
                         r_max=r_max or source.r + 10.0)


# ---------------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------------

def mode_profiles(field: SpectralField, r, threads: Optional[int] = None) -> np.ndarray:
    """Radial mode functions a_j(r) = int a_j(lambda) J_nu(lambda r) lambda d lambda, shape (2 j_max + 1, len(r))."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    lam, w = field.lambda_grid.nodes, field.lambda_grid.weights
    weighted = field.coefficients * w[None, :]
    j_max = field.j_max

    def one(jj: int) -> np.ndarray:
        bessel = bessel_j(jj / field.rho, np.outer(r, lam))
        rows = [j_max + jj] if jj == 0 else [j_max + jj, j_max - jj]
        return bessel @ weighted[rows].T

    blocks = ordered_map(one, list(range(j_max + 1)), threads)
    out = np.empty((2 * j_max + 1, r.size), dtype=complex)
    for jj, block in enumerate(blocks):
        out[j_max + jj] = block[:, 0]
        if jj:
            out[j_max - jj] = block[:, 1]
    return out


def synthesize(profiles: np.ndarray, rho: float, theta) -> np.ndarray:
    """sum_j phi_j(theta) profiles[j] for a grid of angles; shape (..., len(r), len(theta))."""
    j_max = (profiles.shape[-2] - 1) // 2
    js = np.arange(-j_max, j_max + 1)
    basis = mode_function(rho, js[:, None], np.atleast_1d(theta)[None, :])
    return np.einsum("...jr,jk->...rk", profiles, basis)


def evaluate_field(field: SpectralField, r, theta, threads: Optional[int] = None) -> np.ndarray:
    """Complex values of the field at broadcast points (r, theta)."""
    r, theta = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(theta, dtype=float))
    r_unique, inverse = np.unique(r.ravel(), return_inverse=True)
    profiles = mode_profiles(field, r_unique, threads)
    js = field.mode_numbers
    basis = mode_function(field.rho, js[:, None], theta.ravel()[None, :])
    values = np.sum(profiles[:, inverse] * basis, axis=0)
    return values.reshape(r.shape)


def as_cone_data(field: SpectralField, r_support: float, feature_scale: float, r_inner: float = 0.0) -> ConeData:
    """The real part of a field as quadrature-ready data (truncated to r_inner <= r <= r_support)."""
    return ConeData(
        func=lambda r, theta: np.real(evaluate_field(field, r, theta)),
        r_support=r_support,
        r_inner=r_inner,
        feature_scale=feature_scale,
    )


# ---------------------------------------------------------------------------------
# multipliers and norms
# ---------------------------------------------------------------------------------

def _check_same_grid(a: SpectralField, b: SpectralField) -> None:
    if a.rho != b.rho or a.j_max != b.j_max or a.lambda_grid.nodes.shape != b.lambda_grid.nodes.shape \
            or not np.array_equal(a.lambda_grid.nodes, b.lambda_grid.nodes):
        raise GridMismatchError("fields live on different cones or spectral grids")


def apply_multiplier(field: SpectralField, G: Callable[[np.ndarray], np.ndarray]) -> SpectralField:
    lam = field.lambda_grid.nodes
    return field.with_coefficients(field.coefficients * np.asarray(G(lam * lam))[None, :])


def add_fields(a: SpectralField, b: SpectralField) -> SpectralField:
    _check_same_grid(a, b)
    return a.with_coefficients(a.coefficients + b.coefficients)


def scale_field(field: SpectralField, factor: complex) -> SpectralField:
    return field.with_coefficients(factor * field.coefficients)


def lp_piece(field: SpectralField, k: int) -> SpectralField:
    return apply_multiplier(field, lp_multiplier(k))


def mode_energies(field: SpectralField) -> np.ndarray:
    return np.sum(np.abs(field.coefficients) ** 2 * field.lambda_grid.weights[None, :], axis=1)


def lp_decompose(field: SpectralField, k_range: Tuple[int, int]) -> LPDecomposition:
    """Pieces beta_k(sqrt Delta) field for k_lo <= k <= k_hi, flagged when they miss energy."""
    k_lo, k_hi = k_range
    if k_hi < k_lo:
        raise ValueError(f"empty dyadic range {k_range}")
    pieces = [lp_piece(field, k) for k in range(k_lo, k_hi + 1)]
    total = float(np.sum(mode_energies(field)))
    leftover = 0.0
    if total > 0:
        residual = field.coefficients - sum(p.coefficients for p in pieces)
        leftover = float(np.sum(np.abs(residual) ** 2 * field.lambda_grid.weights[None, :])) / total
    warn = leftover > settings.LP_COVERAGE_TOL
    if warn:
        logger.warning(f"Dyadic range {k_range} misses {leftover:.3e} of the field energy")
    return LPDecomposition(k_range=(k_lo, k_hi), pieces=pieces, leftover=leftover, coverage_warning=warn)


def _sobolev_weight(lam: np.ndarray, s: float, homogeneous: bool) -> np.ndarray:
    if homogeneous:
        return lam ** (2.0 * s)
    return (1.0 + lam * lam) ** s


def sobolev_norm(field: SpectralField, s: float, homogeneous: bool = True) -> float:
    if not -2.0 <= s <= 2.0:
        raise ValueError(f"Sobolev exponent {s} outside [-2, 2]")
    lam, w = field.lambda_grid.nodes, field.lambda_grid.weights
    density = np.sum(np.abs(field.coefficients) ** 2, axis=0) * w
    if homogeneous and s < 0:
        total = float(np.sum(density))
        low = float(np.sum(density[lam < settings.SOBOLEV_LAMBDA_MIN]))
        if total > 0 and low / total > settings.SOBOLEV_LOW_FREQUENCY_TOL:
            raise SobolevDivergenceError(
                f"H^{s} norm diverges: {low / total:.3e} of the energy sits below lambda = {settings.SOBOLEV_LAMBDA_MIN}")
    return math.sqrt(float(np.sum(density * _sobolev_weight(lam, s, homogeneous))))


def spectral_l2(field: SpectralField) -> float:
    return sobolev_norm(field, 0.0)


def physical_l2(field: SpectralField, r_max: Optional[float] = None, n_theta: Optional[int] = None) -> float:
    """L2 norm from samples on a polar quadrature grid (the physical side of Plancherel)."""
    r_max = r_max or field.r_max
    grid = radial_grid(r_max, min(0.5, math.pi / field.lambda_max))
    theta = angular_grid(field.rho, n_theta or default_n_theta(field.j_max))
    values = synthesize(mode_profiles(field, grid.nodes), field.rho, theta)
    dtheta = 2.0 * math.pi * field.rho / theta.size
    return math.sqrt(float(np.sum(np.abs(values) ** 2 * grid.weights[:, None]) * dtheta))


def lp_orthogonality(field: SpectralField, s: float, k_range: Tuple[int, int]) -> float:
    """sum_k ||beta_k f||^2_{H^s} / ||f||^2_{H^s}; at most one for any field."""
    norm = sobolev_norm(field, s)
    if norm == 0:
        return 0.0
    pieces = lp_decompose(field, k_range).pieces
    return sum(sobolev_norm(p, s) ** 2 for p in pieces) / norm ** 2


def project_harmonics(field: SpectralField, m: int) -> SpectralField:
    """Restriction to the modes |j| >= m."""
    coeffs = np.array(field.coefficients)
    coeffs[np.abs(field.mode_numbers) < m] = 0.0
    return field.with_coefficients(coeffs)


def rescale_field(field: SpectralField, mu: float) -> SpectralField:
    """The dilation a(x) -> a(x / mu): lambda -> lambda / mu, coefficients times mu^2."""
    if mu <= 0:
        raise ValueError(f"scale factor must be positive, got {mu}")
    grid = field.lambda_grid
    if grid.panel_edges is not None:
        new_grid = composite_grid(grid.panel_edges / mu, grid.order)
    else:
        new_grid = RadialGrid(nodes=grid.nodes / mu, weights=grid.weights / mu ** 2, r_max=grid.r_max / mu)
    return SpectralField(rho=field.rho, lambda_grid=new_grid, coefficients=field.coefficients * mu ** 2,
                         j_max=field.j_max, r_max=field.r_max * mu)


# ---------------------------------------------------------------------------------
# wave evolution
# ---------------------------------------------------------------------------------

def sine_multiplier(t: float, lam: np.ndarray) -> np.ndarray:
    """sin(t lambda) / lambda with the Taylor series where t lambda is small."""
    lam = np.asarray(lam, dtype=float)
    x = t * lam
    small = np.abs(x) < settings.WAVE_SERIES_THRESHOLD
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = np.sin(x) / lam
    series = t * (1.0 - x * x / 6.0 + x ** 4 / 120.0)
    return np.where(small, series, direct)


def spectral_wave_solve(cone: Cone, f: SpectralField, g: SpectralField, t: float) -> Tuple[SpectralField, SpectralField]:
    """(u(t), u_t(t)) for u_tt + Delta u = 0 with u(0) = f, u_t(0) = g."""
    _check_same_grid(f, g)
    if abs(f.rho - cone.rho) > 1e-14:
        raise GridMismatchError(f"field lives on rho = {f.rho}, not {cone.rho}")
    lam = f.lambda_grid.nodes
    cos = np.cos(t * lam)
    u = cos * f.coefficients + sine_multiplier(t, lam) * g.coefficients
    u_t = -lam * np.sin(t * lam) * f.coefficients + cos * g.coefficients
    return f.with_coefficients(u), f.with_coefficients(u_t)


def wave_profiles(f: SpectralField, g: SpectralField, times: Sequence[float], r,
                  threads: Optional[int] = None) -> np.ndarray:
    """Radial mode profiles of u(t) for many times at once, shape (len(times), 2 j_max + 1, len(r))."""
    _check_same_grid(f, g)
    r = np.atleast_1d(np.asarray(r, dtype=float))
    times = np.asarray(times, dtype=float)
    lam, w = f.lambda_grid.nodes, f.lambda_grid.weights
    cos = np.cos(np.outer(times, lam))
    sine = np.stack([sine_multiplier(t, lam) for t in times])
    j_max = f.j_max

    def one(jj: int) -> np.ndarray:
        bessel = bessel_j(jj / f.rho, np.outer(r, lam)) * w[None, :]
        rows = [j_max + jj] if jj == 0 else [j_max + jj, j_max - jj]
        out = []
        for row in rows:
            spectra = cos * f.coefficients[row][None, :] + sine * g.coefficients[row][None, :]
            out.append(spectra @ bessel.T)
        return np.stack(out)

    blocks = ordered_map(one, list(range(j_max + 1)), threads)
    profiles = np.empty((times.size, 2 * j_max + 1, r.size), dtype=complex)
    for jj, block in enumerate(blocks):
        profiles[:, j_max + jj] = block[0]
        if jj:
            profiles[:, j_max - jj] = block[1]
    return profiles


def energy(u: SpectralField, u_t: SpectralField) -> float:
    """||u_t||^2 + ||u||^2_{H^1 homogeneous}."""
    return sobolev_norm(u_t, 0.0) ** 2 + sobolev_norm(u, 1.0) ** 2


# ---------------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------------

def multiplier_kernel(
    cone: Cone,
    G: Callable[[np.ndarray], np.ndarray],
    p1: ConePoint,
    p2: ConePoint,
    lambda_max: float,
    j_max: Optional[int] = None,
    threads: Optional[int] = None,
) -> QuadratureEstimate:
    """Schwartz kernel of G(Delta) at (p1, p2) summed mode by mode; G must vanish beyond lambda_max."""
    j_max = default_j_max(cone, lambda_max) if j_max is None else j_max
    coefficients = ordered_map(
        lambda jj: radial_kernel_coefficient(cone.nu(jj), G, p1.r, p2.r, lambda_max),
        list(range(j_max + 1)),
        threads,
    )
    dtheta = p1.theta - p2.theta
    total, error = 0.0, 0.0
    for jj, coef in enumerate(coefficients):
        angular = (1.0 if jj == 0 else 2.0 * math.cos(jj * dtheta / cone.rho)) / (2.0 * math.pi * cone.rho)
        total += angular * coef.value
        error = max(error, coef.error_estimate)
    warn = any(c.accuracy_warning for c in coefficients)
    return QuadratureEstimate(value=total, error_estimate=error, accuracy_warning=warn)


def polar_bump(cone: Cone, source: ConePoint, sigma: float, kappa: float = 4.0):
    """exp(-(r - r0)^2 / 2 sigma^2) exp(kappa (cos((theta - theta0) / rho) - 1)), smooth on the cone away from the tip."""
    rho = cone.rho

    def bump(r, theta):
        r = np.asarray(r, dtype=float)
        theta = np.asarray(theta, dtype=float)
        return np.exp(-0.5 * ((r - source.r) / sigma) ** 2 + kappa * (np.cos((theta - source.theta) / rho) - 1.0))

    return bump

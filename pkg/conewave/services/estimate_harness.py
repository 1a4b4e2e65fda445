"""Numerical verification of dispersive, Strichartz, Hilbert-transform and Morawetz estimates.

Every solution is produced by the spectral solver; the closed-form kernel enters only in
the pointwise bound scans and in the finite-speed and composition checks.
"""
import logging
import math
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy import interpolate, special, stats

from conewave.core.config import settings
from conewave.core.exceptions import (
    HarmonicLeakageError,
    InvalidConfigError,
    TripleValidityError,
    ZeroDataError,
)
from conewave.models.fields import ConeData, SpectralField
from conewave.models.schemas import (
    AdmissibleTriple,
    Cone,
    ConePoint,
    DecayFit,
    HilbertResult,
    MorawetzConfig,
    MorawetzResult,
)
from conewave.services.bessel_hankel import bessel_j, radial_grid
from conewave.services.cone_geometry import normalize_angle
from conewave.services.parallel import ordered_map
from conewave.services.propagator_kernel import SinePropagator, diffractive_arrays
from conewave.services.spectral_calculus import (
    angular_grid,
    apply_multiplier,
    default_n_theta,
    energy,
    lp_cutoff,
    lp_piece,
    mode_energies,
    mode_profiles,
    point_source_field,
    project_harmonics,
    rescale_field,
    scale_field,
    sobolev_norm,
    spectral_wave_solve,
    synthesize,
    wave_profiles,
)

logger = logging.getLogger(__name__)


def zero_like(field: SpectralField) -> SpectralField:
    return field.with_coefficients(np.zeros_like(field.coefficients))


def fit_decay(times: Sequence[float], sup_norms: Sequence[float], sampling_warning: bool = False) -> DecayFit:
    """Least-squares slope of log sup-norm against log t with a 95% confidence band."""
    log_t = np.log(np.asarray(times, dtype=float))
    log_n = np.log(np.asarray(sup_norms, dtype=float))
    fit = stats.linregress(log_t, log_n)
    if len(times) > 2:
        half = float(stats.t.ppf(0.975, len(times) - 2)) * float(fit.stderr)
    else:
        half = 0.0
    return DecayFit(
        times=[float(t) for t in times],
        sup_norms=[float(n) for n in sup_norms],
        slope=float(fit.slope),
        slope_ci=(float(fit.slope) - half, float(fit.slope) + half),
        sampling_warning=sampling_warning,
    )


# ---------------------------------------------------------------------------------
# dispersive decay
# ---------------------------------------------------------------------------------

def _front_radii(t: float, r0: float, r_top: float) -> np.ndarray:
    step = 0.1
    radii = [np.arange(step, r_top + step, step)]
    for front in (abs(t - r0), t + r0, t - r0):
        if front > 0:
            radii.append(np.clip(front + np.arange(-2.0, 2.0, 0.02), 1e-6, r_top))
    return np.unique(np.concatenate(radii))


def _sup_norm(f: SpectralField, g: SpectralField, t: float, source: ConePoint) -> Tuple[float, bool]:
    r_top = source.r + t + 3.0
    radii = _front_radii(t, source.r, r_top)
    theta = angular_grid(f.rho, max(default_n_theta(f.j_max), 64))
    values = np.abs(synthesize(wave_profiles(f, g, [t], radii, threads=1)[0], f.rho, theta))
    i_r, _ = np.unravel_index(int(np.argmax(values)), values.shape)
    return float(values.max()), bool(i_r == radii.size - 1)


def _decay_scan(f: SpectralField, g: SpectralField, times: Sequence[float], source: ConePoint,
                data_l1: float, threads: Optional[int]) -> DecayFit:
    times = sorted(float(t) for t in times)
    results = ordered_map(lambda t: _sup_norm(f, g, t, source), times, threads)
    sups = [value / data_l1 for value, _ in results]
    at_edge = any(edge for _, edge in results)
    if at_edge:
        logger.warning("Sup norm attained at the edge of the sampling region; enlarge the sampling radius")
    return fit_decay(times, sups, sampling_warning=at_edge)


def dispersive_scan(
    cone: Cone,
    g: SpectralField,
    times: Sequence[float],
    source: ConePoint,
    data_l1: float = 1.0,
    threads: Optional[int] = None,
) -> DecayFit:
    """||beta(sqrt Delta) U(t) g||_inf / ||g||_1 over times, sampled densely around the fronts."""
    if not times:
        raise ValueError("no times to scan")
    logger.info(f"Dispersive scan on rho={cone.rho} over {len(times)} times")
    return _decay_scan(zero_like(g), g, times, source, data_l1, threads)


def cosine_dispersive_scan(
    cone: Cone,
    f: SpectralField,
    times: Sequence[float],
    source: ConePoint,
    data_l1: float = 1.0,
    threads: Optional[int] = None,
) -> DecayFit:
    """The cosine-propagator analogue of dispersive_scan."""
    if not times:
        raise ValueError("no times to scan")
    return _decay_scan(f, zero_like(f), times, source, data_l1, threads)


def localized_point_source(cone: Cone, source: ConePoint, lambda_grid, j_max: int, k: int = 0) -> SpectralField:
    """beta_k(sqrt Delta) applied to a unit point mass at ``source``."""
    return point_source_field(cone, source, lambda_grid, j_max,
                              cutoff=lambda lam: lp_piece_multiplier(k, lam))


def lp_piece_multiplier(k: int, lam: np.ndarray) -> np.ndarray:
    return lp_cutoff(np.asarray(lam) * 2.0 ** -k)


# ---------------------------------------------------------------------------------
# Strichartz
# ---------------------------------------------------------------------------------

def _time_rule(T: float, lambda_max: float, order: int = 10) -> Tuple[np.ndarray, np.ndarray]:
    panels = max(1, int(math.ceil(T * lambda_max / math.pi)))
    edges = np.linspace(0.0, T, panels + 1)
    x, w = np.polynomial.legendre.leggauss(order)
    half = 0.5 * np.diff(edges)
    nodes = (edges[:-1, None] + half[:, None] * (x[None, :] + 1.0)).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def spacetime_norm(
    f: SpectralField,
    g: SpectralField,
    T: float,
    p: float,
    q: float,
    r_max: Optional[float] = None,
    threads: Optional[int] = None,
) -> float:
    """||u||_{L^p([0,T]; L^q)} by Gauss rules in t and r and the trapezoid rule in theta."""
    r_max = r_max or f.r_max + T
    lam_max = f.lambda_max
    grid = radial_grid(r_max, min(r_max / 8.0, math.pi / lam_max))
    theta = angular_grid(f.rho, int(4 * q * f.j_max + 16))
    dtheta = 2.0 * math.pi * f.rho / theta.size
    times, t_weights = _time_rule(T, lam_max)

    def lq_norm(t: float) -> float:
        values = synthesize(wave_profiles(f, g, [t], grid.nodes, threads=1)[0], f.rho, theta)
        return float(np.sum(np.abs(values) ** q * grid.weights[:, None]) * dtheta) ** (1.0 / q)

    norms = np.asarray(ordered_map(lq_norm, list(times), threads))
    return float(np.sum(t_weights * norms ** p)) ** (1.0 / p)


def _check_triple(triple: AdmissibleTriple, allow_nonadmissible: bool) -> None:
    if abs(triple.scaling_defect) > 1e-12:
        raise TripleValidityError(f"{triple} violates 1/p + 2/q = 1 - gamma")
    if not allow_nonadmissible and not triple.is_admissible:
        raise TripleValidityError(f"{triple} is not admissible")
    if math.isinf(triple.q):
        raise TripleValidityError("q = inf is only handled by the dispersive scan")


def data_norm(f: SpectralField, g: SpectralField, gamma: float, homogeneous: bool = True) -> float:
    return sobolev_norm(f, gamma, homogeneous) + sobolev_norm(g, gamma - 1.0, homogeneous)


def strichartz_ratio(
    cone: Cone,
    triple: AdmissibleTriple,
    f: SpectralField,
    g: SpectralField,
    T: float,
    homogeneous: bool = True,
    allow_nonadmissible: bool = False,
    threads: Optional[int] = None,
) -> float:
    """||u||_{L^p L^q} / (||f||_{H^gamma} + ||g||_{H^{gamma-1}}); inhomogeneous norms for the local variant."""
    _check_triple(triple, allow_nonadmissible)
    if T <= 0:
        raise ValueError(f"T must be positive, got {T}")
    denom = data_norm(f, g, triple.gamma, homogeneous)
    if denom == 0.0:
        raise ZeroDataError("Strichartz ratio of zero data")
    return spacetime_norm(f, g, T, triple.p, triple.q, threads=threads) / denom


def scaled_data(f: SpectralField, g: SpectralField, mu: float) -> Tuple[SpectralField, SpectralField]:
    """Data (f(x/mu), mu^-1 g(x/mu)), whose solution is u(t/mu, x/mu)."""
    return rescale_field(f, mu), scale_field(rescale_field(g, mu), 1.0 / mu)


def strichartz_scaling_family(
    cone: Cone,
    triple: AdmissibleTriple,
    f: SpectralField,
    g: SpectralField,
    T: float,
    mus: Sequence[float],
    threads: Optional[int] = None,
) -> Dict[float, float]:
    out = {}
    for mu in mus:
        f_mu, g_mu = scaled_data(f, g, mu)
        out[float(mu)] = strichartz_ratio(cone, triple, f_mu, g_mu, mu * T, threads=threads)
    return out


def frequency_localized_ratio(
    cone: Cone,
    triple: AdmissibleTriple,
    f: SpectralField,
    g: SpectralField,
    T: float,
    k: int,
    allow_nonadmissible: bool = False,
    threads: Optional[int] = None,
) -> float:
    """||u_k|| / (2^{k gamma} ||f_k||_2 + 2^{k(gamma-1)} ||g_k||_2) for the dyadic piece k."""
    _check_triple(triple, allow_nonadmissible)
    f_k, g_k = lp_piece(f, k), lp_piece(g, k)
    denom = 2.0 ** (k * triple.gamma) * sobolev_norm(f_k, 0.0) + 2.0 ** (k * (triple.gamma - 1.0)) * sobolev_norm(g_k, 0.0)
    if denom == 0.0:
        raise ZeroDataError(f"dyadic piece {k} of the data vanishes")
    return spacetime_norm(f_k, g_k, T, triple.p, triple.q, threads=threads) / denom


def orthogonality_check(
    cone: Cone,
    triple: AdmissibleTriple,
    f: SpectralField,
    g: SpectralField,
    T: float,
    k_range: Tuple[int, int],
    threads: Optional[int] = None,
) -> Tuple[float, float]:
    """(||u||_{L^p L^q}, (sum_k ||u_k||^2_{L^p L^q})^{1/2}) for the dyadic pieces of the data."""
    _check_triple(triple, False)
    full = spacetime_norm(f, g, T, triple.p, triple.q, threads=threads)
    pieces = [
        spacetime_norm(lp_piece(f, k), lp_piece(g, k), T, triple.p, triple.q, r_max=f.r_max + T, threads=threads)
        for k in range(k_range[0], k_range[1] + 1)
    ]
    return full, math.sqrt(sum(x * x for x in pieces))


def nonadmissible_contrast(
    cone: Cone,
    f: SpectralField,
    g: SpectralField,
    T: float,
    levels: int = 2,
    triple: Optional[AdmissibleTriple] = None,
    threads: Optional[int] = None,
) -> Dict[int, float]:
    """Ratios of a scaling-consistent but non-admissible triple as the data move up dyadic levels at fixed T."""
    triple = triple or AdmissibleTriple.from_pq(2.0, 8.0)
    out = {}
    for level in range(levels + 1):
        f_l, g_l = scaled_data(f, g, 2.0 ** -level)
        out[level] = strichartz_ratio(cone, triple, f_l, g_l, T, allow_nonadmissible=True, threads=threads)
    return out


def energy_drift(cone: Cone, f: SpectralField, g: SpectralField, times: Sequence[float]) -> float:
    e0 = energy(f, g)
    if e0 == 0.0:
        return 0.0
    drift = 0.0
    for t in times:
        u, u_t = spectral_wave_solve(cone, f, g, float(t))
        drift = max(drift, abs(energy(u, u_t) - e0) / e0)
    return drift


# ---------------------------------------------------------------------------------
# Hilbert transform in time
# ---------------------------------------------------------------------------------

def raised_cosine(n: int, taper: int) -> np.ndarray:
    window = np.ones(n)
    if taper <= 0:
        return window
    ramp = 0.5 * (1.0 - np.cos(math.pi * (np.arange(taper) + 0.5) / taper))
    window[:taper] = ramp
    window[n - taper:] = ramp[::-1]
    return window


def hilbert_time_transform(
    samples: np.ndarray,
    window: bool = True,
    pad_factor: int = 2,
    taper: Optional[int] = None,
) -> HilbertResult:
    """Discrete multiplier -i sgn(tau) along the last (time) axis.

    With ``window`` a raised-cosine taper is applied at both ends and the signal is
    zero-padded by ``pad_factor``; without it the samples are treated as one period.
    """
    v = np.asarray(samples, dtype=float)
    n = v.shape[-1]
    if pad_factor < 1:
        raise ValueError("pad_factor must be at least 1")
    edge = 0
    if window:
        edge = min(int(taper or settings.HILBERT_TAPER_LENGTH), n // 4)
        v = v * raised_cosine(n, edge)
    size = pad_factor * n
    spectrum = np.fft.fft(v, n=size, axis=-1)
    spectrum *= -1j * np.sign(np.fft.fftfreq(size))
    out = np.real(np.fft.ifft(spectrum, axis=-1))[..., :n]

    leakage = 0.0
    if window or pad_factor > 1:
        total = float(np.sum(v * v))
        boundary = max(1, edge // 2)
        if total > 0:
            leakage = float(np.sum(v[..., :boundary] ** 2) + np.sum(v[..., n - boundary:] ** 2)) / total
    warn = leakage > settings.HILBERT_LEAKAGE_TOL
    if warn:
        logger.warning(f"Hilbert transform input carries {leakage:.3e} of its energy at the grid ends")
    return HilbertResult(values=out, leakage=leakage, leakage_warning=warn)


def _point_series(f: SpectralField, g: SpectralField, times: np.ndarray, points: Sequence[ConePoint]) -> np.ndarray:
    radii = np.array([p.r for p in points])
    profiles = wave_profiles(f, g, times, radii, threads=1)
    js = f.mode_numbers
    out = np.empty((len(points), times.size))
    for i, p in enumerate(points):
        basis = np.exp(1j * js * p.theta / f.rho) / math.sqrt(2.0 * math.pi * f.rho)
        out[i] = np.real(profiles[:, :, i] @ basis)
    return out


def cosine_via_hilbert_check(
    cone: Cone,
    f: SpectralField,
    times: Sequence[float],
    points: Sequence[ConePoint],
    taper: Optional[int] = None,
) -> float:
    """max |w + T v| / max |w| for w = cos(t sqrt Delta) f and v = sin(t sqrt Delta) f on the given times.

    The uniform time grid is extended by a taper on both sides so that the window only
    touches samples outside the requested interval.
    """
    times = np.asarray(times, dtype=float)
    if times.size < 2:
        raise ValueError("need at least two times")
    dt = float(times[1] - times[0])
    if not np.allclose(np.diff(times), dt, rtol=1e-9, atol=0.0):
        raise ValueError("times must be uniformly spaced")
    if sobolev_norm(f, 0.0) == 0.0:
        return 0.0

    edge = int(taper or settings.HILBERT_TAPER_LENGTH)
    extended = times[0] + dt * np.arange(-edge, times.size + edge)
    zero = zero_like(f)
    w = _point_series(f, zero, extended, points)
    v = _point_series(zero, apply_multiplier(f, np.sqrt), extended, points)

    window = np.ones(extended.size)
    ramp = raised_cosine(2 * edge, edge)[:edge]
    window[:edge] = ramp
    window[extended.size - edge:] = ramp[::-1]
    tv = hilbert_time_transform(v * window, window=False, pad_factor=2)

    plateau = slice(edge, edge + times.size)
    scale = float(np.max(np.abs(w[:, plateau])))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(w[:, plateau] + tv.values[:, plateau]))) / scale


# ---------------------------------------------------------------------------------
# Morawetz
# ---------------------------------------------------------------------------------

def morawetz_constant(nu: float, alpha_mz: float) -> float:
    """int_0^inf x^{-4 alpha} J_nu(x)^2 dx, finite for 0 < 4 alpha < 2 nu + 1."""
    mu = 4.0 * alpha_mz
    if not 0.0 < mu < 2.0 * nu + 1.0:
        raise InvalidConfigError(f"weight exponent 4*alpha = {mu} outside (0, 2*nu + 1) for nu = {nu}")
    log_value = (special.gammaln(mu) + special.gammaln(nu + 0.5 * (1.0 - mu))
                 - mu * math.log(2.0) - 2.0 * special.gammaln(0.5 * (1.0 + mu))
                 - special.gammaln(nu + 0.5 * (1.0 + mu)))
    return math.exp(log_value)


def _check_leakage(f: SpectralField, g: SpectralField, m: int) -> None:
    for name, field in (("f", f), ("g", g)):
        energies = mode_energies(field)
        total = float(np.sum(energies))
        if total == 0:
            continue
        low = float(np.sum(energies[np.abs(field.mode_numbers) < m]))
        if low / total > settings.MORAWETZ_LEAKAGE_TOL:
            raise HarmonicLeakageError(f"{name} carries {low / total:.3e} of its energy in modes |j| < {m}")


def _mode_weight(field: SpectralField, power: float) -> np.ndarray:
    """sum over lambda of lambda^power |a_j|^2 d lambda for each mode."""
    lam, w = field.lambda_grid.nodes, field.lambda_grid.weights
    return np.sum(np.abs(field.coefficients) ** 2 * (lam ** (power - 1.0) * w)[None, :], axis=1)


def morawetz_rhs(f: SpectralField, g: SpectralField) -> float:
    return sobolev_norm(f, 0.5) + sobolev_norm(g, -0.5)


def morawetz_frequency_side(cone: Cone, cfg: MorawetzConfig, f: SpectralField, g: SpectralField) -> Tuple[float, Dict[int, float]]:
    """Time-integrated left side over all of R, per harmonic, from the Hankel-side data."""
    if not cfg.satisfies_hypothesis(cone):
        raise InvalidConfigError(f"alpha = {cfg.alpha_mz} violates 0 < alpha < 1/4 + nu_m/2 = {0.25 + 0.5 * cfg.nu_m(cone)}")
    energies = _mode_weight(f, 2.0) + _mode_weight(g, 0.0)
    per_mode: Dict[int, float] = {}
    total = 0.0
    for idx, j in enumerate(f.mode_numbers):
        if abs(j) < cfg.m or energies[idx] == 0.0:
            continue
        value = math.pi * morawetz_constant(cone.nu(int(j)), cfg.alpha_mz) * float(energies[idx])
        per_mode[int(j)] = value
        total += value
    return math.sqrt(total), per_mode


def _direct_mode(nu: float, alpha_mz: float, a_plus: np.ndarray, a_minus: np.ndarray,
                 lam: np.ndarray, w: np.ndarray, T: float, r_max: float) -> float:
    """int_0^r_max r^{-4 alpha} int_{-T}^{T} |A u_j(t, r)|^2 dt dr for one harmonic."""
    weight = lam ** (0.5 - 2.0 * alpha_mz) * w
    c_plus = a_plus * weight
    c_minus = a_minus * weight

    diff = lam[:, None] - lam[None, :]
    summ = lam[:, None] + lam[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        s_diff = np.where(diff == 0.0, 2.0 * T, 2.0 * np.sin(T * diff) / np.where(diff == 0.0, 1.0, diff))
    s_sum = 2.0 * np.sin(T * summ) / summ
    q = (np.outer(c_plus, np.conj(c_plus)) + np.outer(c_minus, np.conj(c_minus))) * s_diff \
        + (np.outer(c_plus, np.conj(c_minus)) + np.outer(c_minus, np.conj(c_plus))) * s_sum

    def time_integral(r: np.ndarray) -> np.ndarray:
        bessel = bessel_j(nu, np.outer(r, lam))
        return np.real(np.sum((bessel @ q) * bessel, axis=1))

    width = min(1.0, math.pi / float(lam[-1]))
    order = 16
    exponent = 2.0 * nu - 4.0 * alpha_mz
    total = 0.0
    if exponent < 6.0:
        x, wj = special.roots_jacobi(order, 0.0, exponent)
        r = 0.5 * width * (x + 1.0)
        smooth = time_integral(r) / r ** (2.0 * nu)
        total += (0.5 * width) ** (exponent + 1.0) * float(np.sum(wj * smooth))
        start = width
    else:
        start = 0.0
    grid_edges = np.linspace(start, r_max, max(1, int(math.ceil((r_max - start) / width))) + 1)
    x, wl = np.polynomial.legendre.leggauss(order)
    half = 0.5 * np.diff(grid_edges)
    r = (grid_edges[:-1, None] + half[:, None] * (x[None, :] + 1.0)).ravel()
    wr = (half[:, None] * wl[None, :]).ravel()
    total += float(np.sum(wr * r ** (-4.0 * alpha_mz) * time_integral(r)))
    return total


def morawetz_ratio(
    cone: Cone,
    cfg: MorawetzConfig,
    f: SpectralField,
    g: SpectralField,
    threads: Optional[int] = None,
) -> MorawetzResult:
    """||r^{-1/2-2 alpha} Delta^{1/4-alpha} u||_{L^2([-T,T] x C)} / (||f||_{H^1/2} + ||g||_{H^-1/2}).

    The time integral is exact on the truncated window; the frequency-side value over all
    of R is reported alongside and their gap is the tail estimate.
    """
    _check_leakage(f, g, cfg.m)
    f, g = project_harmonics(f, cfg.m), project_harmonics(g, cfg.m)
    rhs = morawetz_rhs(f, g)
    if rhs == 0.0:
        raise ZeroDataError("Morawetz ratio of zero data")
    lhs_freq, _ = morawetz_frequency_side(cone, cfg, f, g)

    lam, w = f.lambda_grid.nodes, f.lambda_grid.weights
    r_max = f.r_max + cfg.t_max
    rows = [i for i, j in enumerate(f.mode_numbers) if abs(j) >= cfg.m
            and (np.any(f.coefficients[i] != 0) or np.any(g.coefficients[i] != 0))]

    def one(i: int) -> float:
        nu = cone.nu(int(f.mode_numbers[i]))
        a_plus = 0.5 * (f.coefficients[i] + g.coefficients[i] / (1j * lam))
        a_minus = 0.5 * (f.coefficients[i] - g.coefficients[i] / (1j * lam))
        return _direct_mode(nu, cfg.alpha_mz, a_plus, a_minus, lam, w, cfg.t_max, r_max)

    values = ordered_map(one, rows, threads)
    per_mode = {int(f.mode_numbers[i]): v for i, v in zip(rows, values)}
    lhs = math.sqrt(max(sum(values), 0.0))
    tail = max(lhs_freq ** 2 - lhs ** 2, 0.0) ** 0.5
    return MorawetzResult(ratio=lhs / rhs, lhs=lhs, rhs=rhs, lhs_frequency_side=lhs_freq,
                          tail_estimate=tail, per_mode=per_mode)


def morawetz_sharpness_contrast(
    cone: Cone,
    cfg: MorawetzConfig,
    f: SpectralField,
    g: SpectralField,
    gaps: Sequence[float] = (1e-1, 1e-2, 1e-3),
) -> Dict[float, float]:
    """Frequency-side ratios as alpha approaches 1/4 + nu_m/2 from below with the data held fixed."""
    bound = 0.25 + 0.5 * cfg.nu_m(cone)
    f, g = project_harmonics(f, cfg.m), project_harmonics(g, cfg.m)
    rhs = morawetz_rhs(f, g)
    if rhs == 0.0:
        raise ZeroDataError("Morawetz ratio of zero data")
    out = {}
    for gap in gaps:
        near = MorawetzConfig(m=cfg.m, alpha_mz=bound - gap, t_max=cfg.t_max)
        out[float(gap)] = morawetz_frequency_side(cone, near, f, g)[0] / rhs
    return out


def scaling_invariance(
    cone: Cone,
    cfg: MorawetzConfig,
    f: SpectralField,
    g: SpectralField,
    mus: Sequence[float],
    threads: Optional[int] = None,
) -> Dict[float, float]:
    """Direct Morawetz ratio across dilations of fixed data, the time window dilated with them.

    The solution of the dilated data is u(t / mu, x / mu), so the window [-mu T, mu T] makes
    the truncated ratio invariant and the spread measures the discretisation alone.
    """
    out = {}
    for mu in mus:
        f_mu, g_mu = scaled_data(f, g, mu)
        window = cfg.model_copy(update={"t_max": mu * cfg.t_max})
        out[float(mu)] = morawetz_ratio(cone, window, f_mu, g_mu, threads=threads).ratio
    return out


# ---------------------------------------------------------------------------------
# kernel bounds and propagation speed
# ---------------------------------------------------------------------------------

def _diffractive_scaled(rho: float, n_ratio: int, n_theta: int, radii: Sequence[Tuple[float, float]]) -> np.ndarray:
    ratios = 1.0 + 19.0 * np.arange(1, n_ratio + 1) / n_ratio
    dthetas = math.pi * rho * np.arange(n_theta + 1) / n_theta
    out = []
    for r1, r2 in radii:
        t = ratios * (r1 + r2)
        tt, dd = np.meshgrid(t, dthetas, indexing="ij")
        kernel, _ = diffractive_arrays(rho, tt, r1, r2, dd)
        out.append(np.abs(kernel) * np.sqrt(tt * tt - (r1 + r2) ** 2))
    return np.concatenate([o.ravel() for o in out])


def diffractive_bound_scan(
    rhos: Sequence[float],
    coarse: Tuple[int, int] = (20, 16),
    refinement: int = 10,
    radii: Sequence[Tuple[float, float]] = ((1.0, 1.0), (0.5, 2.0), (3.0, 0.25)),
) -> Dict[float, Dict[str, float]]:
    """Fits C in |K_diff| <= C [t^2 - (r1 + r2)^2]^{-1/2} on a coarse scan, then checks a finer one.

    The fitted constant is frozen (times BOUND_SAFETY) before the fine scan is evaluated.
    """
    out = {}
    for rho in rhos:
        frozen = settings.BOUND_SAFETY * float(np.max(_diffractive_scaled(rho, coarse[0], coarse[1], radii)))
        fine = _diffractive_scaled(rho, coarse[0] * refinement, coarse[1] * refinement, radii)
        violations = int(np.count_nonzero(fine > frozen))
        out[float(rho)] = {"constant": frozen, "fine_max": float(np.max(fine)), "violations": violations}
        logger.info(f"Diffractive bound on rho={rho}: C={frozen:.6g}, {violations} violations on {fine.size} points")
    return out


def geometric_composition_scan(
    cone: Cone,
    times: Sequence[float],
    target: ConePoint,
    lambda_grid,
    j_max: int,
    feature_scale: float = 0.3,
) -> Dict[float, float]:
    """int |K_beta(x; y)| K_geom(t; x; y) dy divided by min(t, t^{-1/2}).

    K_beta(x; .) is tabulated on a polar grid from the spectral side and interpolated.
    """
    kernel = point_source_field(cone, target, lambda_grid, j_max, cutoff=lambda lam: lp_piece_multiplier(0, lam))
    propagator = SinePropagator(cone, threads=1)
    out = {}
    for t in times:
        r_top = target.r + t + 10.0
        radii = np.linspace(0.0, r_top, int(r_top / 0.05) + 1)
        theta = np.linspace(-math.pi * cone.rho, math.pi * cone.rho, 257)
        table = np.abs(synthesize(mode_profiles(kernel, radii, threads=1), cone.rho, theta))
        lookup = interpolate.RegularGridInterpolator((radii, theta), table, bounds_error=False, fill_value=0.0)

        def density(r, th, lookup=lookup):
            pts = np.stack([np.ravel(r), np.ravel(normalize_angle(cone.rho, th))], axis=-1)
            return lookup(pts).reshape(np.shape(r))

        data = ConeData(func=density, r_support=r_top, feature_scale=feature_scale)
        value = propagator.apply(float(t), data, target, parts="geometric", check_accuracy=False).value
        out[float(t)] = value / min(t, t ** -0.5)
    return out


def finite_speed_check(cone: Cone, g: ConeData, t: float, points: Sequence[ConePoint],
                       threads: Optional[int] = None) -> Tuple[float, float]:
    """(max |U(t)g| outside radius t + R, max |U(t)g| inside) over the sample points."""
    propagator = SinePropagator(cone, threads=threads)
    values = propagator.apply_many(t, g, list(points))
    outside = [abs(v.value) for p, v in zip(points, values) if p.r > t + g.r_support]
    inside = [abs(v.value) for p, v in zip(points, values) if p.r <= t + g.r_support]
    return max(outside, default=0.0), max(inside, default=0.0)


def random_band_data(
    cone: Cone,
    lambda_grid,
    j_max: int,
    m: int,
    rng: np.random.Generator,
    levels: Sequence[int] = (-1, 0),
    n_modes: int = 3,
    r_max: float = 10.0,
) -> Tuple[SpectralField, SpectralField]:
    """Random (f, g) in a few harmonics |j| >= m, each a random mix of dyadic cutoffs."""
    lam = lambda_grid.nodes
    candidates = [j for j in range(-j_max, j_max + 1) if abs(j) >= m]
    if not candidates:
        raise ValueError(f"no harmonics with |j| >= {m} below j_max = {j_max}")
    picks = rng.choice(candidates, size=min(n_modes, len(candidates)), replace=False)
    fields = []
    for _ in range(2):
        coeffs = np.zeros((2 * j_max + 1, lam.size), dtype=complex)
        for j in picks:
            for k in levels:
                amp = complex(rng.normal(), rng.normal())
                coeffs[int(j) + j_max] += amp * lp_piece_multiplier(k, lam)
        fields.append(SpectralField(rho=cone.rho, lambda_grid=lambda_grid, coefficients=coeffs,
                                    j_max=j_max, r_max=r_max))
    return fields[0], fields[1]


def harmonic_band_data(
    cone: Cone,
    lambda_grid,
    j_max: int,
    j: int,
    velocity: bool = True,
    levels: Sequence[int] = (-1, 0),
    r_max: float = 10.0,
) -> Tuple[SpectralField, SpectralField]:
    """Band-limited data in the single harmonic j, carried by g when ``velocity`` else by f."""
    if abs(j) > j_max:
        raise ValueError(f"harmonic {j} above j_max = {j_max}")
    lam = lambda_grid.nodes
    coeffs = np.zeros((2 * j_max + 1, lam.size), dtype=complex)
    coeffs[j + j_max] = sum(lp_piece_multiplier(k, lam) for k in levels)
    field = SpectralField(rho=cone.rho, lambda_grid=lambda_grid, coefficients=coeffs, j_max=j_max, r_max=r_max)
    return (zero_like(field), field) if velocity else (field, zero_like(field))


def morawetz_mode_bound(cone: Cone, cfg: MorawetzConfig, j_max: int) -> float:
    """Largest ratio over single-harmonic data with f = 0: sqrt(pi M(nu_j, alpha)) maximised over m <= j <= j_max."""
    return max(math.sqrt(math.pi * morawetz_constant(cone.nu(j), cfg.alpha_mz)) for j in range(cfg.m, j_max + 1))

"""Acceptance checks run by ``verify``; each returns one EstimateReport.

The quick suite shrinks grids and sample counts and uses the *_QUICK tolerances.
"""
import logging
import math
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from conewave.core.config import settings
from conewave.core.exceptions import AccuracyBudgetError, ConewaveError
from conewave.models.fields import ConeData
from conewave.models.schemas import (
    AdmissibleTriple,
    BoundaryCondition,
    Cone,
    ConePoint,
    EstimateReport,
    MorawetzConfig,
    MorawetzResult,
    Wedge,
)
from conewave.services import estimate_harness as harness
from conewave.services import oracles
from conewave.services.bessel_hankel import bessel_j, hankel_matrix, lambda_grid, radial_grid
from conewave.services.cone_geometry import normalize_angle
from conewave.services.parallel import ordered_map
from conewave.services.propagator_kernel import SinePropagator, sine_kernel
from conewave.services.spectral_calculus import (
    add_fields,
    default_j_max,
    evaluate_field,
    field_from_function,
    field_from_spectrum,
    lp_piece,
    polar_bump,
    spectral_wave_solve,
)
from conewave.services.wedge_bvp import (
    boundary_trace_check,
    diffraction_signature,
    evaluate_wedge,
    gaussian_wedge_data,
    solve_wedge,
    wedge_field_from_function,
)

logger = logging.getLogger(__name__)

Check = Callable[[str, np.random.Generator, Optional[int]], EstimateReport]


def _quick(suite: str) -> bool:
    return suite == "quick"


def _random_point(rng: np.random.Generator, rho: float, r_lo: float, r_hi: float) -> ConePoint:
    return ConePoint(r=float(rng.uniform(r_lo, r_hi)),
                     theta=float(normalize_angle(rho, rng.uniform(-math.pi * rho, math.pi * rho))))


# ---------------------------------------------------------------------------------
# special functions
# ---------------------------------------------------------------------------------

def check_special_functions(suite: str, rng: np.random.Generator, threads: Optional[int]) -> EstimateReport:
    x = np.linspace(0.1, 30.0, 300)
    half = bessel_j(0.5, x)
    half_exact = np.sqrt(2.0 / (math.pi * x)) * np.sin(x)
    three_halves = bessel_j(1.5, x)
    three_halves_exact = np.sqrt(2.0 / (math.pi * x)) * (np.sin(x) / x - np.cos(x))
    closed = max(float(np.max(np.abs(half - half_exact))) / float(np.max(np.abs(half_exact))),
                 float(np.max(np.abs(three_halves - three_halves_exact))) / float(np.max(np.abs(three_halves_exact))))

    recurrence = 0.0
    for nu in (1.5, 2.7, 7.3, 20.25):
        lhs = bessel_j(nu - 1.0, x) + bessel_j(nu + 1.0, x)
        rhs = 2.0 * nu / x * bessel_j(nu, x)
        recurrence = max(recurrence, float(np.max(np.abs(lhs - rhs))) / float(np.max(np.abs(lhs))))

    r_grid = radial_grid(4.0, 0.1)
    l_grid = lambda_grid(45.0, r_max=4.0)
    profile = np.exp(-0.5 * ((r_grid.nodes - 2.0) / 0.15) ** 2)
    inversion = 0.0
    for nu in (0.0, 1.5, 4.0):
        forward = hankel_matrix(nu, l_grid.nodes, r_grid) @ profile
        back = hankel_matrix(nu, r_grid.nodes, l_grid) @ forward
        err = math.sqrt(float(np.sum((back - profile) ** 2 * r_grid.weights)) / float(np.sum(profile ** 2 * r_grid.weights)))
        inversion = max(inversion, err)

    tolerances = {"closed_form": 1e-8, "recurrence": 1e-8, "hankel_inversion": 1e-6}
    values = {"closed_form": closed, "recurrence": recurrence, "hankel_inversion": inversion}
    passed = all(values[k] <= tolerances[k] for k in tolerances)
    return EstimateReport(check_name="special_functions", values=values, passed=passed, tolerances=tolerances)


# ---------------------------------------------------------------------------------
# kernel
# ---------------------------------------------------------------------------------

def _kernel_recovery(rho: float, n: int, rng: np.random.Generator, reference) -> Tuple[float, float, int]:
    cone = Cone(rho=rho)
    worst_rel, worst_diff, used = 0.0, 0.0, 0
    for _ in range(n):
        t = float(rng.uniform(0.5, 5.0))
        p1 = _random_point(rng, rho, 0.2, 3.0)
        p2 = _random_point(rng, rho, 0.2, 3.0)
        expected, near = reference(t, p1, p2)
        if near:
            continue
        k = sine_kernel(cone, t, p1, p2)
        used += 1
        worst_diff = max(worst_diff, abs(k.diffractive))
        if expected == 0.0:
            worst_rel = max(worst_rel, abs(k.total))
        else:
            worst_rel = max(worst_rel, abs(k.total - expected) / abs(expected))
    return worst_rel, worst_diff, used


def _near_light_cone(t: float, d: float) -> bool:
    return abs(t * t - d * d) < 1e-3 * t * t


def check_plane_recovery(suite: str, rng: np.random.Generator, threads: Optional[int]) -> EstimateReport:
    n = 200 if _quick(suite) else 1000

    def reference(t, p1, p2):
        d = oracles.planar_distance(p1, p2)
        return oracles.free_plane_kernel(t, d), _near_light_cone(t, d)

    rel, diff, used = _kernel_recovery(1.0, n, rng, reference)
    tolerances = {"relative": 1e-12, "diffractive": 1e-14}
    return EstimateReport(check_name="plane_recovery", params={"rho": 1.0, "samples": used},
                          values={"max_relative_error": rel, "max_diffractive": diff},
                          passed=rel <= tolerances["relative"] and diff <= tolerances["diffractive"],
                          tolerances=tolerances)


def check_quotient_recovery(suite: str, rng: np.random.Generator, threads: Optional[int]) -> EstimateReport:
    n = 200 if _quick(suite) else 1000
    values: Dict[str, object] = {}
    passed = True
    tolerances = {"relative": 1e-10, "diffractive": 1e-12}
    for order in (2, 3):

        def reference(t, p1, p2, order=order):
            near = any(
                _near_light_cone(t, oracles.planar_distance(p1, ConePoint(r=p2.r, theta=p2.theta + 2 * math.pi * k / order)))
                for k in range(order))
            return oracles.quotient_image_kernel(order, t, p1, p2), near

        rel, diff, _ = _kernel_recovery(1.0 / order, n, rng, reference)
        values[f"max_relative_error_N{order}"] = rel
        values[f"max_diffractive_N{order}"] = diff
        passed = passed and rel <= tolerances["relative"] and diff <= tolerances["diffractive"]
    return EstimateReport(check_name="quotient_recovery", values=values, passed=passed, tolerances=tolerances)


def cross_engine_values(rho: float, times, targets, sigma: float, lambda_max: float,
                        threads: Optional[int], source: Optional[ConePoint] = None) -> List[Tuple[float, List[float], List[float]]]:
    """U(t)g at the targets from the kernel quadrature and from the spectral solver."""
    cone = Cone(rho=rho)
    source = source or ConePoint(r=3.0, theta=0.0)
    bump = polar_bump(cone, source, sigma)
    r_support = source.r + 8.0 * sigma
    data = ConeData(func=bump, r_support=r_support, r_inner=max(0.0, source.r - 8.0 * sigma), feature_scale=sigma)
    j_max = default_j_max(cone, lambda_max)
    grid = lambda_grid(lambda_max, t_max=max(times), r_max=r_support)
    g = field_from_function(cone, bump, r_support, grid, j_max)
    zero = g.with_coefficients(np.zeros_like(g.coefficients))
    propagator = SinePropagator(cone, threads=threads)
    out = []
    for t in times:
        u, _ = spectral_wave_solve(cone, zero, g, t)
        spectral = [float(np.real(evaluate_field(u, p.r, p.theta))) for p in targets]
        kernel = [e.value for e in propagator.apply_many(t, data, targets)]
        out.append((t, kernel, spectral))
    return out


def check_cross_engine(suite: str, rng: np.random.Generator, threads: Optional[int]) -> EstimateReport:
    quick = _quick(suite)
    rho, sigma = 2.0 / 3.0, 0.4
    lambda_max = 18.0 if quick else 22.0
    times = (0.5, 2.0, 5.0)
    n_points = 6 if quick else 50
    targets = [_random_point(rng, rho, 0.3, 9.0) for _ in range(n_points)]
    rows = cross_engine_values(rho, times, targets, sigma, lambda_max, threads)
    worst = 0.0
    for _, kernel, spectral in rows:
        scale = max(max(abs(v) for v in spectral), 1e-300)
        worst = max(worst, max(abs(a - b) for a, b in zip(kernel, spectral)) / scale)
    tol = settings.CROSS_ENGINE_TOL_QUICK if quick else settings.CROSS_ENGINE_TOL
    return EstimateReport(check_name="cross_engine", params={"rho": rho, "times": list(times), "points": n_points},
                          values={"max_relative_deviation": worst}, passed=worst <= tol, tolerances={"relative": tol})


def check_diffractive_bound(suite: str, rng: np.random.Generator, threads: Optional[int]) -> EstimateReport:
    quick = _quick(suite)
    scan = harness.diffractive_bound_scan((2.0 / 3.0, 1.5, 2.5), coarse=(10, 8) if quick else (20, 16),
                                          refinement=3 if quick else 10)
    values = {f"rho={rho:.6g}": entry for rho, entry in scan.items()}
    passed = all(entry["violations"] == 0 for entry in scan.values())
    return EstimateReport(check_name="diffractive_bound", values=values, passed=passed,
                          tolerances={"safety": settings.BOUND_SAFETY})


def check_geometric_composition(suite: str, rng: np.random.Generator, threads: Optional[int]) -> EstimateReport:
    cone = Cone(rho=2.0 / 3.0)
    target = ConePoint(r=1.0, theta=0.0)
    times = (2.0, 5.0) if _quick(suite) else (1.0, 2.0, 5.0, 10.0)
    grid = lambda_grid(2.0 * math.sqrt(2.0), r_max=target.r + max(times) + 10.0)
    scan = harness.geometric_composition_scan(cone, times, target, grid, default_j_max(cone, grid.r_max))
    return EstimateReport(check_name="geometric_composition", params={"rho": cone.rho, "target_r": target.r},
                          values={"normalised": {str(t): v for t, v in scan.items()},
                                  "fitted_constant": max(scan.values())})


# ---------------------------------------------------------------------------------
# estimates
# ---------------------------------------------------------------------------------

def dispersive_fit(rho: float, t_lo: float, t_hi: float, n_times: int, r0: float, threads: Optional[int]):
    cone = Cone(rho=rho)
    source = ConePoint(r=r0, theta=0.0)
    grid = lambda_grid(2.0 * math.sqrt(2.0), t_max=t_hi, r_max=r0)
    g = harness.localized_point_source(cone, source, grid, default_j_max(cone, grid.r_max))
    times = list(np.geomspace(t_lo, t_hi, n_times))
    return harness.dispersive_scan(cone, g, times, source, threads=threads)


def check_dispersive(suite: str, rng: np.random.Generator, threads: Optional[int]) -> EstimateReport:
    n_times = 4 if _quick(suite) else 8
    values: Dict[str, object] = {}
    passed = True
    for rho in (1.0, 2.0 / 3.0, 1.5):
        fit = dispersive_fit(rho, 5.0, 50.0, n_times, 1.0, threads)
        values[f"slope_rho={rho:.6g}"] = fit.slope
        values[f"ci_rho={rho:.6g}"] = list(fit.slope_ci)
        passed = passed and settings.DECAY_SLOPE_LO <= fit.slope <= settings.DECAY_SLOPE_HI
    return EstimateReport(check_name="dispersive_decay", params={"t_lo": 5.0, "t_hi": 50.0, "n_times": n_times},
                          values=values, passed=passed,
                          tolerances={"slope_lo": settings.DECAY_SLOPE_LO, "slope_hi": settings.DECAY_SLOPE_HI})


def check_cosine_dispersive(suite: str, rng: np.random.Generator, threads: Optional[int]) -> EstimateReport:
    cone = Cone(rho=2.0 / 3.0)
    source = ConePoint(r=1.0, theta=0.0)
    grid = lambda_grid(2.0 * math.sqrt(2.0), t_max=50.0, r_max=source.r)
    f = harness.localized_point_source(cone, source, grid, default_j_max(cone, grid.r_max))
    times = list(np.geomspace(5.0, 50.0, 4 if _quick(suite) else 8))
    fit = harness.cosine_dispersive_scan(cone, f, times, source, threads=threads)
    return EstimateReport(check_name="cosine_dispersive_decay", params={"rho": cone.rho, "t_lo": 5.0, "t_hi": 50.0},
                          slope=fit.slope, ci=fit.slope_ci, values={"sampling_warning": fit.sampling_warning})


def hilbert_data(cone: Cone, t_extent: float):
    """Band-limited data with Gaussian spectral profiles in three harmonics."""
    grid = lambda_grid(3.5, t_max=t_extent, r_max=3.0)

    def bump(centre, width=0.2):
        return lambda lam: np.exp(-0.5 * ((lam - centre) / width) ** 2)

    spectra = {
        0: bump(1.5),
        1: lambda lam: (0.5 + 0.3j) * bump(2.0)(lam),
        -2: lambda lam: 0.7 * bump(1.2)(lam),
    }
    return field_from_spectrum(cone, spectra, grid, j_max=2, r_max=10.0)


def check_hilbert(suite: str, rng: np.random.Generator, threads: Optional[int]) -> EstimateReport:
    cone = Cone(rho=2.0 / 3.0)
    dt = 0.25
    times = np.arange(-40.0, 40.0, dt)
    taper = int(settings.HILBERT_TAPER_LENGTH)
    f = hilbert_data(cone, 40.0 + taper * dt + 5.0)
    points = [ConePoint(r=0.7, theta=0.3), ConePoint(r=1.5, theta=-1.0), ConePoint(r=2.5, theta=2.0)]
    deviation = harness.cosine_via_hilbert_check(cone, f, times, points, taper=taper)
    tol = settings.HILBERT_IDENTITY_TOL
    return EstimateReport(check_name="hilbert_identity", params={"rho": cone.rho, "dt": dt},
                          values={"max_relative_deviation": deviation}, passed=deviation <= tol,
                          tolerances={"relative": tol})


def strichartz_data(cone: Cone, T: float, source: Optional[ConePoint] = None, sigma: float = 0.4):
    """Dyadic piece k = 0 of a polar bump, used as both f and g."""
    source = source or ConePoint(r=3.0, theta=0.0)
    r_max = source.r + 8.0 * sigma
    bump = polar_bump(cone, source, sigma)
    grid = lambda_grid(3.0, t_max=T, r_max=r_max)
    field = field_from_function(cone, bump, r_max, grid, default_j_max(cone, 3.0))
    piece = lp_piece(field, 0)
    return piece, piece


def check_strichartz(suite: str, rng: np.random.Generator, threads: Optional[int]) -> EstimateReport:
    cone = Cone(rho=2.0 / 3.0)
    T = 2.0 if _quick(suite) else 5.0
    f, g = strichartz_data(cone, T)
    triple = AdmissibleTriple(p=6.0, q=6.0, gamma=0.5)
    ratios = harness.strichartz_scaling_family(cone, triple, f, g, T, (0.25, 1.0, 4.0), threads=threads)
    spread = (max(ratios.values()) - min(ratios.values())) / min(ratios.values())
    drift = harness.energy_drift(cone, f, g, np.linspace(0.0, 100.0, 21))
    passed = spread < settings.STRICHARTZ_STABILITY and drift <= settings.ENERGY_DRIFT_TOL
    return EstimateReport(check_name="strichartz_scaling",
                          params={"p": 6.0, "q": 6.0, "gamma": 0.5, "T": T},
                          values={"ratios": {str(k): v for k, v in ratios.items()}, "spread": spread, "energy_drift": drift},
                          passed=passed,
                          tolerances={"spread": settings.STRICHARTZ_STABILITY, "energy_drift": settings.ENERGY_DRIFT_TOL})


def check_strichartz_pieces(suite: str, rng: np.random.Generator, threads: Optional[int]) -> EstimateReport:
    cone = Cone(rho=2.0 / 3.0)
    T = 1.0 if _quick(suite) else 2.0
    source, sigma = ConePoint(r=3.0, theta=0.0), 0.4
    r_max = source.r + 8.0 * sigma
    lambda_max = 4.0 * math.sqrt(2.0)
    grid = lambda_grid(lambda_max, t_max=T, r_max=r_max)
    field = field_from_function(cone, polar_bump(cone, source, sigma), r_max, grid, default_j_max(cone, lambda_max))
    pieces = [lp_piece(field, k) for k in (-1, 0, 1)]
    data = add_fields(add_fields(pieces[0], pieces[1]), pieces[2])
    triple = AdmissibleTriple(p=6.0, q=6.0, gamma=0.5)
    full, summed = harness.orthogonality_check(cone, triple, data, data, T, (-1, 1), threads=threads)
    local = {str(k): harness.frequency_localized_ratio(cone, triple, data, data, T, k, threads=threads)
             for k in (-1, 0, 1)}
    return EstimateReport(check_name="strichartz_pieces", params={"p": 6.0, "q": 6.0, "gamma": 0.5, "T": T},
                          values={"full_norm": full, "square_summed_pieces": summed,
                                  "ratio": full / summed, "piece_ratios": local})


def check_strichartz_contrast(suite: str, rng: np.random.Generator, threads: Optional[int]) -> EstimateReport:
    cone = Cone(rho=2.0 / 3.0)
    f, g = strichartz_data(cone, 2.0)
    growth = harness.nonadmissible_contrast(cone, f, g, 2.0, levels=2, threads=threads)
    return EstimateReport(check_name="strichartz_nonadmissible_contrast", params={"p": 2.0, "q": 8.0, "gamma": 0.25},
                          values={"ratios": {str(k): v for k, v in growth.items()},
                                  "growth": growth[max(growth)] / growth[0]})


def _morawetz_grid(cfg: MorawetzConfig):
    return lambda_grid(2.0 * math.sqrt(2.0), t_max=cfg.t_max, r_max=10.0)


def morawetz_draws(cone: Cone, cfg: MorawetzConfig, draws: int, j_max: int,
                   rng: np.random.Generator, threads: Optional[int] = None) -> List[MorawetzResult]:
    """Morawetz ratios for independent random band-limited data in harmonics m <= |j| <= j_max."""
    grid = _morawetz_grid(cfg)
    results = []
    for _ in range(draws):
        f, g = harness.random_band_data(cone, grid, j_max, cfg.m, rng)
        results.append(harness.morawetz_ratio(cone, cfg, f, g, threads=threads))
    return results


def morawetz_coarse_constant(cone: Cone, cfg: MorawetzConfig, j_max: int, draws: int,
                             rng: np.random.Generator, threads: Optional[int] = None) -> Tuple[float, float]:
    """(frozen constant, coarse maximum) from direct ratios of single-harmonic data and coarse draws.

    The frozen constant is the coarse maximum times BOUND_SAFETY.
    """
    grid = _morawetz_grid(cfg)
    ratios = []
    for j in range(cfg.m, j_max + 1):
        for velocity in (True, False):
            f, g = harness.harmonic_band_data(cone, grid, j_max, j, velocity=velocity)
            ratios.append(harness.morawetz_ratio(cone, cfg, f, g, threads=threads).ratio)
    ratios.extend(r.ratio for r in morawetz_draws(cone, cfg, draws, j_max, rng, threads))
    coarse = max(ratios)
    return settings.BOUND_SAFETY * coarse, coarse


def check_morawetz(suite: str, rng: np.random.Generator, threads: Optional[int]) -> EstimateReport:
    quick = _quick(suite)
    cone = Cone(rho=2.0 / 3.0)
    cfg = MorawetzConfig(m=1, alpha_mz=0.3, t_max=20.0 if quick else 50.0)
    draws = 4 if quick else 20
    j_max = 4
    frozen, coarse = morawetz_coarse_constant(cone, cfg, j_max, 2 if quick else 8, rng, threads)
    results = morawetz_draws(cone, cfg, draws, j_max, rng, threads)
    ratios = [r.ratio for r in results]
    tails = [r.tail_estimate / max(r.lhs_frequency_side, 1e-300) for r in results]
    f, g = harness.random_band_data(cone, _morawetz_grid(cfg), j_max, cfg.m, rng)
    scaling = harness.scaling_invariance(cone, cfg, f, g, (0.5, 1.0, 2.0), threads=threads)
    spread = (max(scaling.values()) - min(scaling.values())) / min(scaling.values())
    passed = max(ratios) <= frozen and spread <= settings.MORAWETZ_SCALING_TOL
    return EstimateReport(check_name="morawetz_bound",
                          params={"m": cfg.m, "alpha": cfg.alpha_mz, "t_max": cfg.t_max, "draws": draws},
                          values={"max_ratio": max(ratios), "frozen_constant": frozen, "coarse_max": coarse,
                                  "analytic_bound": harness.morawetz_mode_bound(cone, cfg, j_max),
                                  "violations": sum(r > frozen for r in ratios),
                                  "max_relative_tail": max(tails), "scaling_spread": spread},
                          passed=passed, tolerances={"scaling_spread": settings.MORAWETZ_SCALING_TOL})


def check_morawetz_contrast(suite: str, rng: np.random.Generator, threads: Optional[int]) -> EstimateReport:
    cone = Cone(rho=2.0 / 3.0)
    cfg = MorawetzConfig(m=1, alpha_mz=0.3)
    grid = lambda_grid(2.0 * math.sqrt(2.0), r_max=10.0)
    f, g = harness.random_band_data(cone, grid, 4, cfg.m, rng)
    ratios = harness.morawetz_sharpness_contrast(cone, cfg, f, g)
    gaps = sorted(ratios)
    return EstimateReport(check_name="morawetz_alpha_contrast", params={"m": 1, "rho": cone.rho},
                          values={"ratios": {str(k): v for k, v in ratios.items()},
                                  "growth": ratios[gaps[0]] / ratios[gaps[-1]]})


# ---------------------------------------------------------------------------------
# wedge
# ---------------------------------------------------------------------------------

def wedge_source(w: Wedge, r0: float, theta0: float) -> ConePoint:
    """The source at angle theta0 when it lies strictly inside the wedge, else on the bisector."""
    return ConePoint(r=r0, theta=theta0 if 0.0 < theta0 < w.alpha else 0.5 * w.alpha)


def wedge_comparison(
    w: Wedge,
    t: float,
    points: List[ConePoint],
    sigma: float = 0.5,
    lambda_max: float = 15.0,
    source: Optional[ConePoint] = None,
) -> Tuple[List[float], Optional[List[float]], float]:
    """Spectral wedge solution at the points, the method of images where alpha = pi / N
    (None otherwise) and the boundary residual of the spectral solution."""
    source = source or ConePoint(r=2.0, theta=0.5 * w.alpha)
    if w.image_order is not None:
        data = oracles.image_data(w, source, sigma)
    else:
        data = gaussian_wedge_data(w, source, sigma).func
    r_max = source.r + 8.0 * sigma
    grid = lambda_grid(lambda_max, t_max=t, r_max=r_max)
    j_max = default_j_max(w.cone, lambda_max)
    g = wedge_field_from_function(w, data, r_max, grid, j_max)
    f = g.model_copy(update={"sine": np.zeros_like(g.sine), "cosine": np.zeros_like(g.cosine)})
    u = solve_wedge(w, f, g, t)
    spectral = [float(evaluate_wedge(w, u, p.r, p.theta)) for p in points]
    oracle = None
    if w.image_order is not None:
        oracle = [oracles.image_oracle(w, source, sigma, t, p) for p in points]
    return spectral, oracle, boundary_trace_check(w, u)


def check_wedge(suite: str, rng: np.random.Generator, threads: Optional[int]) -> EstimateReport:
    quick = _quick(suite)
    n_points = 6 if quick else 20
    lambda_max = 12.0 if quick else 15.0
    tol = settings.WEDGE_ORACLE_TOL_QUICK if quick else settings.WEDGE_ORACLE_TOL
    values: Dict[str, object] = {}
    passed = True
    for n in (1, 2, 3):
        for bc in (BoundaryCondition.DIRICHLET, BoundaryCondition.NEUMANN):
            w = Wedge(alpha=math.pi / n, bc=bc)
            points = [ConePoint(r=float(rng.uniform(0.5, 5.0)), theta=float(rng.uniform(0.1, 0.9) * w.alpha))
                      for _ in range(n_points)]
            spectral, oracle, residual = wedge_comparison(w, 2.0, points, lambda_max=lambda_max)
            scale = max(max(abs(v) for v in oracle), 1e-300)
            dev = max(abs(a - b) for a, b in zip(spectral, oracle)) / scale
            values[f"alpha=pi/{n},{bc.value}"] = {"max_relative_deviation": dev, "boundary_residual": residual / scale}
            passed = passed and dev <= tol

    w = Wedge(alpha=2.0 * math.pi / 3.0, bc=BoundaryCondition.DIRICHLET)
    source = ConePoint(r=2.0, theta=math.pi / 3.0)
    t = 6.0
    if quick:
        points = [ConePoint(r=float(r), theta=float(normalize_angle(w.cone.rho, a)))
                  for r in np.linspace(0.5, 8.0, 6) for a in (0.5, 1.0, 1.5)]
    else:
        points = None
    signature = diffraction_signature(w, source, 0.3, t, points=points, threads=threads)
    values["diffraction_signature"] = signature
    passed = passed and signature > settings.DIFFRACTION_SIGNATURE_MIN
    return EstimateReport(check_name="wedge", params={"t": 2.0, "points": n_points}, values=values, passed=passed,
                          tolerances={"relative": tol, "signature_min": settings.DIFFRACTION_SIGNATURE_MIN})


CHECKS: List[Tuple[str, Check]] = [
    ("special_functions", check_special_functions),
    ("plane_recovery", check_plane_recovery),
    ("quotient_recovery", check_quotient_recovery),
    ("cross_engine", check_cross_engine),
    ("diffractive_bound", check_diffractive_bound),
    ("geometric_composition", check_geometric_composition),
    ("dispersive_decay", check_dispersive),
    ("cosine_dispersive_decay", check_cosine_dispersive),
    ("hilbert_identity", check_hilbert),
    ("strichartz_scaling", check_strichartz),
    ("strichartz_pieces", check_strichartz_pieces),
    ("strichartz_nonadmissible_contrast", check_strichartz_contrast),
    ("morawetz_bound", check_morawetz),
    ("morawetz_alpha_contrast", check_morawetz_contrast),
    ("wedge", check_wedge),
]


def run_suite(suite: str, seed: int, threads: Optional[int] = None,
              only: Optional[List[str]] = None) -> Tuple[List[EstimateReport], bool]:
    """Run the checks in order; a check that raises is recorded as failed.

    Returns the reports and whether any check ran out of its accuracy budget.
    """
    reports = []
    budget_exceeded = False
    for index, (name, check) in enumerate(CHECKS):
        if only and name not in only:
            continue
        rng = np.random.default_rng([seed, index])
        logger.info(f"Running check {name} ({suite} suite)")
        try:
            reports.append(check(suite, rng, threads))
        except AccuracyBudgetError as e:
            logger.error(f"Check {name} exceeded its accuracy budget: {e}")
            budget_exceeded = True
            reports.append(EstimateReport(check_name=name, values={"error": str(e)}, passed=False))
        except (ConewaveError, ValueError, ArithmeticError) as e:
            logger.error(f"Check {name} failed: {e}")
            reports.append(EstimateReport(check_name=name, values={"error": str(e)}, passed=False))
    return reports, budget_exceeded

"""Dirichlet and Neumann wave problems on the planar wedge {0 < theta < alpha}.

The wedge problem is solved on the cone with rho = alpha / pi: Dirichlet data are extended
oddly and Neumann data evenly across theta = 0, the cone solution keeps that parity, and
its restriction to (0, alpha) satisfies the boundary condition on both walls.
"""
import logging
import math
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from conewave.core.exceptions import SymmetryViolationError
from conewave.models.fields import ConeData, RadialGrid, SpectralField, WedgeField
from conewave.models.schemas import BoundaryCondition, ConePoint, Wedge
from conewave.services.bessel_hankel import bessel_j
from conewave.services.cone_geometry import distance_arrays, normalize_angle
from conewave.services.propagator_kernel import SinePropagator
from conewave.services.spectral_calculus import energy, field_from_function, spectral_wave_solve

logger = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)


def _mixing(w: Wedge, f: WedgeField) -> float:
    """Relative size of the coefficients that do not belong to the boundary condition."""
    own, other = (f.sine, f.cosine) if w.bc == BoundaryCondition.DIRICHLET else (f.cosine, f.sine)
    scale = max(float(np.max(np.abs(own))) if own.size else 0.0, np.finfo(float).tiny)
    return float(np.max(np.abs(other))) / scale if other.size else 0.0


def extend_to_cone(w: Wedge, f: WedgeField) -> SpectralField:
    """Odd (Dirichlet) or even (Neumann) extension to the cone of parameter alpha / pi."""
    if abs(f.alpha - w.alpha) > 1e-14 or f.bc != w.bc:
        raise SymmetryViolationError("field belongs to a different wedge")
    if _mixing(w, f) > 1e-12:
        raise SymmetryViolationError(f"{w.bc.value} field carries coefficients of the other parity")

    j_max = f.j_max
    coeffs = np.zeros((2 * j_max + 1, f.lambda_grid.nodes.size), dtype=complex)
    if w.bc == BoundaryCondition.DIRICHLET:
        for j in range(1, j_max + 1):
            coeffs[j_max + j] = f.sine[j - 1] / (1j * SQRT2)
            coeffs[j_max - j] = -f.sine[j - 1] / (1j * SQRT2)
    else:
        coeffs[j_max] = f.cosine[0] * math.sqrt(2.0 * w.alpha)
        for j in range(1, j_max + 1):
            coeffs[j_max + j] = f.cosine[j] / SQRT2
            coeffs[j_max - j] = f.cosine[j] / SQRT2
    return SpectralField(rho=w.cone.rho, lambda_grid=f.lambda_grid, coefficients=coeffs,
                         j_max=j_max, r_max=f.r_max)


def restrict_to_wedge(w: Wedge, field: SpectralField) -> WedgeField:
    """Sine and cosine coefficients of the cone field on (0, alpha); exact inverse of extend_to_cone."""
    if abs(field.rho - w.cone.rho) > 1e-14:
        raise SymmetryViolationError(f"cone field has rho = {field.rho}, wedge needs {w.cone.rho}")
    if field.j_max < 1:
        raise ValueError("wedge fields need j_max >= 1")
    j_max = field.j_max
    plus = field.coefficients[j_max + 1:]
    minus = field.coefficients[j_max - 1::-1]
    sine = 1j * (plus - minus) / SQRT2
    cosine = np.vstack([field.coefficients[j_max] / math.sqrt(2.0 * w.alpha), (plus + minus) / SQRT2])
    return WedgeField(alpha=w.alpha, bc=w.bc, lambda_grid=field.lambda_grid, sine=sine, cosine=cosine,
                      j_max=j_max, r_max=field.r_max)


def extend_function(w: Wedge, func: Callable[[np.ndarray, np.ndarray], np.ndarray]):
    """g(r, theta) on (-alpha, alpha] from a wedge function on [0, alpha]."""
    sign = -1.0 if w.bc == BoundaryCondition.DIRICHLET else 1.0

    def extended(r, theta):
        theta = np.asarray(theta, dtype=float)
        upper = np.asarray(func(r, np.abs(theta)))
        return np.where(theta >= 0, upper, sign * upper)

    return extended


def wedge_field_from_function(
    w: Wedge,
    func: Callable[[np.ndarray, np.ndarray], np.ndarray],
    r_max: float,
    lambda_grid: RadialGrid,
    j_max: int,
    panel_width: Optional[float] = None,
) -> WedgeField:
    field = field_from_function(w.cone, extend_function(w, func), r_max, lambda_grid, j_max, panel_width)
    return _clean(w, restrict_to_wedge(w, field))


def _clean(w: Wedge, f: WedgeField) -> WedgeField:
    """Zero the rows of the wrong parity left behind by round-off."""
    if w.bc == BoundaryCondition.DIRICHLET:
        return f.model_copy(update={"cosine": np.zeros_like(f.cosine)})
    return f.model_copy(update={"sine": np.zeros_like(f.sine)})


def solve_wedge_state(w: Wedge, f: WedgeField, g: WedgeField, t: float) -> Tuple[WedgeField, WedgeField]:
    u, u_t = spectral_wave_solve(w.cone, extend_to_cone(w, f), extend_to_cone(w, g), t)
    return _clean(w, restrict_to_wedge(w, u)), _clean(w, restrict_to_wedge(w, u_t))


def solve_wedge(w: Wedge, f: WedgeField, g: WedgeField, t: float) -> WedgeField:
    return solve_wedge_state(w, f, g, t)[0]


def wedge_energy(w: Wedge, u: WedgeField, u_t: WedgeField) -> float:
    """Energy on the wedge: half the energy of the extension."""
    return 0.5 * energy(extend_to_cone(w, u), extend_to_cone(w, u_t))


def evaluate_wedge(w: Wedge, u: WedgeField, r, theta) -> np.ndarray:
    """u(r, theta) = c_0(r) + alpha^{-1/2} sum_j (c_j(r) cos(j pi theta / alpha) + s_j(r) sin(j pi theta / alpha))."""
    r, theta = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(theta, dtype=float))
    lam, weights = u.lambda_grid.nodes, u.lambda_grid.weights
    total = np.zeros(r.shape, dtype=complex)
    for j in range(u.j_max + 1):
        bessel = bessel_j(w.nu(j), np.multiply.outer(r, lam))
        cos_profile = bessel @ (u.cosine[j] * weights)
        if j == 0:
            total += cos_profile
            continue
        sin_profile = bessel @ (u.sine[j - 1] * weights)
        phase = j * math.pi * theta / w.alpha
        total += (cos_profile * np.cos(phase) + sin_profile * np.sin(phase)) / math.sqrt(w.alpha)
    return np.real(total)


def boundary_trace_check(w: Wedge, u: WedgeField, radii: Optional[Sequence[float]] = None) -> float:
    """max |u| (Dirichlet) or max |d_theta u| / r (Neumann) on both walls."""
    radii = np.asarray(radii if radii is not None else np.linspace(u.r_max / 200.0, u.r_max, 200), dtype=float)
    lam, weights = u.lambda_grid.nodes, u.lambda_grid.weights
    residual = 0.0
    for wall in (0.0, w.alpha):
        if w.bc == BoundaryCondition.DIRICHLET:
            values = evaluate_wedge(w, u, radii, np.full(radii.shape, wall))
        else:
            values = np.zeros(radii.shape)
            for j in range(1, u.j_max + 1):
                bessel = bessel_j(w.nu(j), np.outer(radii, lam))
                k = j * math.pi / w.alpha
                cos_profile = np.real(bessel @ (u.cosine[j] * weights))
                sin_profile = np.real(bessel @ (u.sine[j - 1] * weights))
                values += k * (-cos_profile * math.sin(k * wall) + sin_profile * math.cos(k * wall)) / math.sqrt(w.alpha)
            values = values / radii
        residual = max(residual, float(np.max(np.abs(values))))
    return residual


# ---------------------------------------------------------------------------------
# diffraction
# ---------------------------------------------------------------------------------

def gaussian_wedge_data(w: Wedge, source: ConePoint, sigma: float) -> ConeData:
    """Extension to the cone of a Gaussian bump at ``source`` and its mirror image across theta = 0.

    Distances are cone distances, so the data are a genuine function on the cone with the
    parity of the boundary condition.
    """
    cone = w.cone
    sign = -1.0 if w.bc == BoundaryCondition.DIRICHLET else 1.0

    def g(r, theta):
        direct = distance_arrays(cone, r, theta, source.r, source.theta)
        mirror = distance_arrays(cone, r, theta, source.r, -source.theta)
        return np.exp(-0.5 * (direct / sigma) ** 2) + sign * np.exp(-0.5 * (mirror / sigma) ** 2)

    return ConeData(func=g, r_support=source.r + 8.0 * sigma, r_inner=max(0.0, source.r - 8.0 * sigma),
                    feature_scale=0.5 * sigma)


def diffraction_signature(
    w: Wedge,
    source: ConePoint,
    sigma: float,
    t: float,
    points: Optional[Sequence[ConePoint]] = None,
    threads: Optional[int] = None,
) -> float:
    """max |diffracted part| at region-III points divided by max |u| over all points."""
    data = gaussian_wedge_data(w, source, sigma)
    if points is None:
        radii = np.linspace(0.25, t + source.r, 16)
        angles = np.linspace(0.0, w.alpha, 9)[1:-1]
        points = [ConePoint(r=float(r), theta=float(normalize_angle(w.cone.rho, a))) for r in radii for a in angles]
    shadow = [p for p in points if t > p.r + data.r_support]
    if not shadow:
        raise ValueError("no sample point lies behind the diffracted front")
    propagator = SinePropagator(w.cone, threads=threads)
    total = propagator.apply_many(t, data, list(points))
    diffracted = propagator.apply_many(t, data, shadow, parts="diffractive")
    peak = max(abs(v.value) for v in total)
    if peak == 0.0:
        return 0.0
    signature = max(abs(v.value) for v in diffracted) / peak
    logger.info(f"Diffraction signature on alpha={w.alpha}: {signature:.3e}")
    return signature

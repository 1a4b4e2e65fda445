"""Independent reference solutions built only from planar closed forms and adaptive quadrature.

Nothing here touches the cone kernel or the spectral solver, so each function can serve as
an oracle for them.
"""
import math
from functools import lru_cache
from typing import List, Tuple

import numpy as np
from scipy import integrate
from scipy.special import j0

from conewave.models.schemas import BoundaryCondition, ConePoint, Wedge

TWO_PI = 2.0 * math.pi


def free_plane_kernel(t: float, d: float) -> float:
    """(1/2 pi)(t^2 - d^2)_+^{-1/2}."""
    gap = t * t - d * d
    return 1.0 / (TWO_PI * math.sqrt(gap)) if gap > 0 else 0.0


def planar_distance(p1: ConePoint, p2: ConePoint) -> float:
    return math.sqrt(max(p1.r ** 2 + p2.r ** 2 - 2.0 * p1.r * p2.r * math.cos(p1.theta - p2.theta), 0.0))


def brute_force_psi(rho: float, t: float, r1: float, r2: float, dtheta: float, j_span: int = 10) -> float:
    """Psi summed over a wide j window with the clamp, without normalising dtheta first."""
    total = 0.0
    for j in range(-j_span, j_span + 1):
        angle = dtheta + TWO_PI * rho * j
        if -math.pi <= angle <= math.pi:
            bracket = t * t - r1 * r1 - r2 * r2 + 2.0 * r1 * r2 * math.cos(angle)
            if bracket > 0:
                total += bracket ** -0.5
    return total


def quotient_image_kernel(order: int, t: float, p1: ConePoint, p2: ConePoint) -> float:
    """Kernel on the plane modulo rotations by 2 pi / order, as a sum over rotated images."""
    total = 0.0
    for k in range(order):
        image = ConePoint(r=p2.r, theta=p2.theta + TWO_PI * k / order)
        total += free_plane_kernel(t, planar_distance(p1, image))
    return total


def diffractive_reference(rho: float, t: float, r1: float, r2: float, dtheta: float) -> float:
    """Diffractive term by adaptive quadrature with an algebraic endpoint weight (beta - s)^{-1/2}."""
    if t <= r1 + r2:
        return 0.0
    alpha = (t * t - r1 * r1 - r2 * r2) / (2.0 * r1 * r2)
    beta = math.acosh(alpha)
    phi1 = (math.pi + dtheta) / rho
    phi2 = (math.pi - dtheta) / rho

    def smooth_part(s: float) -> float:
        x = 0.5 * (beta - s)
        x_over_sinh = x / math.sinh(x) if x > 1e-8 else 1.0 - x * x / 6.0
        bracket = 0.0
        for phi in (phi1, phi2):
            bracket += math.sin(phi) / (math.cosh(s / rho) - math.cos(phi))
        return bracket * math.sqrt(x_over_sinh / math.sinh(0.5 * (beta + s)))

    value, _ = integrate.quad(smooth_part, 0.0, beta, weight="alg", wvar=(0.0, -0.5),
                              epsabs=0.0, epsrel=1e-12, limit=400)
    return -value / (4.0 * math.pi ** 2 * rho * math.sqrt(2.0 * r1 * r2))


# ---------------------------------------------------------------------------------
# free waves from Gaussian data and the method of images
# ---------------------------------------------------------------------------------

@lru_cache(maxsize=4096)
def gaussian_sine_wave(t: float, d: float, sigma: float) -> float:
    """u(t) at distance d from the centre, free planar wave with u(0) = 0, u_t(0) = exp(-|x|^2 / 2 sigma^2)."""
    cutoff = math.sqrt(2.0 * 45.0) / sigma

    def integrand(lam: float) -> float:
        sine = math.sin(t * lam) if lam > 0 else 0.0
        return sine * sigma ** 2 * math.exp(-0.5 * (sigma * lam) ** 2) * float(j0(lam * d))

    pieces = max(4, int(math.ceil(cutoff * (t + d) / math.pi)))
    edges = np.linspace(0.0, cutoff, pieces + 1)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        value, _ = integrate.quad(integrand, a, b, epsabs=1e-16, epsrel=1e-13, limit=200)
        total += value
    return total


def gaussian_hankel(lam, sigma: float):
    """Order-zero Hankel transform of exp(-r^2 / 2 sigma^2)."""
    return sigma ** 2 * np.exp(-0.5 * (sigma * np.asarray(lam)) ** 2)


def image_points(wedge: Wedge, source: ConePoint) -> List[Tuple[ConePoint, float]]:
    """Images of a wedge point under the dihedral group of order 2N with their signs (alpha = pi / N)."""
    order = wedge.image_order
    if order is None:
        raise ValueError(f"method of images needs alpha = pi / N, got {wedge.alpha}")
    reflect_sign = -1.0 if wedge.bc == BoundaryCondition.DIRICHLET else 1.0
    images = []
    for k in range(order):
        images.append((ConePoint(r=source.r, theta=source.theta + 2.0 * k * wedge.alpha), 1.0))
        images.append((ConePoint(r=source.r, theta=2.0 * k * wedge.alpha - source.theta), reflect_sign))
    return images


def image_oracle(wedge: Wedge, source: ConePoint, sigma: float, t: float, target: ConePoint) -> float:
    """Wedge solution for Gaussian initial velocity centred at ``source``, by the method of images."""
    total = 0.0
    for image, sign in image_points(wedge, source):
        total += sign * gaussian_sine_wave(t, round(planar_distance(target, image), 15), sigma)
    return total


def image_data(wedge: Wedge, source: ConePoint, sigma: float):
    """The signed sum of image Gaussians as a vectorised g(r, theta); it satisfies the wedge boundary condition."""
    images = image_points(wedge, source)

    def g(r, theta):
        r = np.asarray(r, dtype=float)
        theta = np.asarray(theta, dtype=float)
        total = np.zeros(np.broadcast(r, theta).shape)
        for image, sign in images:
            d2 = r * r + image.r ** 2 - 2.0 * r * image.r * np.cos(theta - image.theta)
            total = total + sign * np.exp(-0.5 * d2 / sigma ** 2)
        return total

    return g

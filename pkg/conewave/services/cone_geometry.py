"""Points, distance and spacetime regions on the flat cone C(S^1_rho).

Angles live on the circle of circumference 2 pi rho and are normalised into the
half-open interval (-pi rho, pi rho]. The Riemannian distance is the planar law of
cosines while the angular separation is at most pi and r1 + r2 beyond that.
"""
import math
from typing import Optional

import numpy as np

from conewave.core.config import settings
from conewave.models.schemas import Cone, ConePoint, Region, RegionTag


def normalize_angle(rho: float, theta):
    """Canonical representative of theta modulo 2 pi rho in (-pi rho, pi rho]."""
    period = 2.0 * math.pi * rho
    half = math.pi * rho
    x = np.mod(theta, period)
    x = np.where(x > half, x - period, x)
    if np.ndim(x) == 0:
        return float(x)
    return x


def cone_point(cone: Cone, r: float, theta: float) -> ConePoint:
    return ConePoint(r=r, theta=normalize_angle(cone.rho, theta))


def angular_separation(cone: Cone, theta1, theta2):
    """Circle distance between two angles, in [0, pi rho]; symmetric in its arguments."""
    return np.abs(normalize_angle(cone.rho, np.subtract(theta1, theta2)))


def planar_law_of_cosines(r1, r2, angle):
    return np.sqrt(np.maximum(np.square(r1) + np.square(r2) - 2.0 * np.multiply(r1, r2) * np.cos(angle), 0.0))


def distance_arrays(cone: Cone, r1, theta1, r2, theta2):
    """Vectorised d_g over broadcast arrays of polar coordinates."""
    sep = angular_separation(cone, theta1, theta2)
    through_tip = np.add(r1, r2)
    direct = np.minimum(planar_law_of_cosines(r1, r2, sep), through_tip)
    return np.where(sep < math.pi, direct, through_tip)


def distance(cone: Cone, p1: ConePoint, p2: ConePoint) -> float:
    return float(distance_arrays(cone, p1.r, p1.theta, p2.r, p2.theta))


def default_tolerance(t: float) -> float:
    return settings.BOUNDARY_TOL_FACTOR * max(1.0, t)


def classify_region(
    cone: Cone,
    t: float,
    p1: ConePoint,
    p2: ConePoint,
    tol: Optional[float] = None,
) -> Region:
    """Region I (t < d_g), II (d_g < t < r1 + r2) or III (t > r1 + r2), with boundary tags."""
    if t <= 0:
        raise ValueError(f"t must be positive, got {t}")
    if tol is None:
        tol = default_tolerance(t)
    if tol < 0:
        raise ValueError(f"tol must be nonnegative, got {tol}")

    d = distance(cone, p1, p2)
    through_tip = p1.r + p2.r

    if t < d - tol:
        tag = RegionTag.I
    elif t > through_tip + tol:
        tag = RegionTag.III
    elif abs(t - through_tip) <= tol:
        # d_g = r1 + r2 behind the tip: region II is empty and I meets III directly
        tag = RegionTag.BOUNDARY_II_III
    elif abs(t - d) <= tol:
        tag = RegionTag.BOUNDARY_I_II
    else:
        tag = RegionTag.II
    return Region(tag=tag, tol=tol)

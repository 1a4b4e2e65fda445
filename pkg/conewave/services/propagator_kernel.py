"""Closed-form Schwartz kernel of U(t) = sin(t sqrt(Delta)) / sqrt(Delta) on the cone.

The kernel is K = K_geom + K_diff. The geometric part is a finite sum of unwrapped
free-plane kernels (1/2pi)[t^2 - r1^2 - r2^2 + 2 r1 r2 cos(theta + 2 pi rho j)]_+^{-1/2}
over -pi <= theta + 2 pi rho j <= pi. The diffractive part lives where t > r1 + r2 and is
an integral over s in [0, beta]; its endpoint singularity at s = beta is removed by
s = beta - u^2 and the concentration near shadow boundaries is resolved with graded
panels.
"""
import logging
import math
from typing import Iterable, List, Optional, Tuple

import numpy as np

from conewave.core.config import settings
from conewave.core.exceptions import RefinementBudgetError
from conewave.models.fields import ConeData
from conewave.models.schemas import (
    Cone,
    ConePoint,
    DiffractiveParams,
    KernelEval,
    QuadratureEstimate,
    RegionTag,
)
from conewave.services.cone_geometry import angular_separation, classify_region, normalize_angle
from conewave.services.parallel import BatchRunner

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
_CHUNK = 4096


def _gauss(order: int) -> Tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(order)


def _panel_nodes(edges: np.ndarray, order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on panels given by the last axis of ``edges``."""
    x, w = _gauss(order)
    a = edges[..., :-1, None]
    b = edges[..., 1:, None]
    half = 0.5 * (b - a)
    nodes = a + half * (x + 1.0)
    weights = half * w
    shape = edges.shape[:-1] + (-1,)
    return nodes.reshape(shape), weights.reshape(shape)


def _split_panels(edges: np.ndarray) -> np.ndarray:
    mids = 0.5 * (edges[..., :-1] + edges[..., 1:])
    out = np.empty(edges.shape[:-1] + (2 * edges.shape[-1] - 1,))
    out[..., 0::2] = edges
    out[..., 1::2] = mids
    return out


# ---------------------------------------------------------------------------------
# geometric term
# ---------------------------------------------------------------------------------

def window_terms(rho: float, sep) -> Iterable[Tuple[int, np.ndarray, np.ndarray]]:
    """(j, angle theta + 2 pi rho j, membership mask) for the closed window [-pi, pi].

    At the exact antipode, where one j lands on +pi and another on -pi, only the
    smaller j is kept.
    """
    sep = np.asarray(sep, dtype=float)
    eps = 1e-12 * math.pi
    j_span = int(math.ceil(1.0 / rho)) + 1
    candidates = []
    for j in range(-j_span - 1, j_span + 2):
        angle = sep + TWO_PI * rho * j
        inside = (angle >= -math.pi - eps) & (angle <= math.pi + eps)
        candidates.append((j, angle, inside))
    at_minus_pi = np.zeros(sep.shape, dtype=bool)
    for _, angle, inside in candidates:
        at_minus_pi |= inside & (np.abs(angle + math.pi) <= eps)
    for j, angle, inside in candidates:
        duplicate = at_minus_pi & (np.abs(angle - math.pi) <= eps)
        yield j, angle, inside & ~duplicate


def psi_arrays(rho: float, t, r1, r2, sep):
    """Vectorised Psi with term counts and on-light-cone flags."""
    t, r1, r2, sep = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (t, r1, r2, sep)))
    base = t * t - r1 * r1 - r2 * r2
    scale = settings.LIGHT_CONE_TOL * (t * t + r1 * r1 + r2 * r2)
    total = np.zeros(t.shape)
    count = np.zeros(t.shape, dtype=int)
    on_cone = np.zeros(t.shape, dtype=bool)
    for _, angle, inside in window_terms(rho, sep):
        bracket = base + 2.0 * r1 * r2 * np.cos(angle)
        hit = inside & (np.abs(bracket) <= scale)
        live = inside & (bracket > scale)
        with np.errstate(divide="ignore", invalid="ignore"):
            total += np.where(live, 1.0 / np.sqrt(np.where(live, bracket, 1.0)), 0.0)
        count += live
        on_cone |= hit
    total = np.where(on_cone, np.inf, total)
    return total, count, on_cone


def psi(cone: Cone, t: float, r1: float, r2: float, dtheta: float) -> float:
    """Psi(t, r1, r2, dtheta); +inf when a bracket vanishes (point on a light cone)."""
    if t <= 0 or r1 <= 0 or r2 <= 0:
        raise ValueError("psi needs positive t, r1, r2")
    sep = abs(normalize_angle(cone.rho, dtheta))
    value, _, _ = psi_arrays(cone.rho, t, r1, r2, sep)
    return float(value)


def geometric_term_count(cone: Cone, t: float, r1: float, r2: float, dtheta: float) -> int:
    sep = abs(normalize_angle(cone.rho, dtheta))
    _, count, _ = psi_arrays(cone.rho, t, r1, r2, sep)
    return int(count)


# ---------------------------------------------------------------------------------
# diffractive term
# ---------------------------------------------------------------------------------

def diffractive_params(cone: Cone, t: float, r1: float, r2: float, dtheta: float) -> DiffractiveParams:
    alpha = (t * t - r1 * r1 - r2 * r2) / (2.0 * r1 * r2)
    excess = (t * t - (r1 + r2) ** 2) / (2.0 * r1 * r2)
    beta = 2.0 * math.asinh(math.sqrt(excess / 2.0)) if excess > 0 else 0.0
    return DiffractiveParams(
        alpha=alpha,
        beta=beta,
        phi1=(math.pi + dtheta) / cone.rho,
        phi2=(math.pi - dtheta) / cone.rho,
    )


def _wrap(phi: np.ndarray) -> np.ndarray:
    return phi - TWO_PI * np.round(phi / TWO_PI)


def _s_breakpoints(rho: float, beta: np.ndarray, width: np.ndarray) -> np.ndarray:
    n_base = settings.DIFFRACTION_BASE_PANELS
    levels = settings.DIFFRACTION_GRADED_LEVELS
    base = beta[:, None] * np.linspace(0.0, 1.0, n_base + 1)[None, :]
    start = np.minimum(beta, 10.0 * np.maximum(width, 0.0))
    graded = start[:, None] * 0.25 ** np.arange(levels)[None, :]
    # resolve cosh(s / rho) when beta spans many multiples of rho
    scale = np.minimum(beta, rho)[:, None] * np.arange(1, 4)[None, :]
    points = np.concatenate([base, graded, np.minimum(scale, beta[:, None])], axis=1)
    return np.sort(np.clip(points, 0.0, beta[:, None]), axis=1)


def diffraction_integral(rho: float, t, r1, r2, sep, refine: bool = False):
    """The s-integral of the diffractive term for points with t > r1 + r2.

    Returns the integral values and a per-point singular-denominator flag.
    """
    t, r1, r2, sep = (np.ravel(np.asarray(v, dtype=float)) for v in np.broadcast_arrays(t, r1, r2, sep))
    excess = (t * t - (r1 + r2) ** 2) / (2.0 * r1 * r2)
    beta = 2.0 * np.arcsinh(np.sqrt(np.maximum(excess, 0.0) / 2.0))

    phis = [_wrap((math.pi + sep) / rho), _wrap((math.pi - sep) / rho)]
    width = rho * np.minimum(np.abs(phis[0]), np.abs(phis[1]))

    s_edges = _s_breakpoints(rho, beta, width)
    u_edges = np.sqrt(np.maximum(beta[:, None] - s_edges, 0.0))[:, ::-1]
    if refine:
        u_edges = _split_panels(u_edges)
    u, w = _panel_nodes(u_edges, settings.GAUSS_ORDER)

    s = beta[:, None] - u * u
    v = 0.5 * u * u
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        sinhc = np.where(v > 1e-8, np.sinh(v) / np.where(v > 1e-8, v, 1.0), 1.0 + v * v / 6.0)
        jacobian = 2.0 / np.sqrt(np.sinh(0.5 * (beta[:, None] + s)) * sinhc)

        half_s = np.sinh(s / (2.0 * rho))
        bracket = np.zeros_like(s)
        singular = np.zeros(t.shape, dtype=bool)
        for phi in phis:
            denom = 2.0 * half_s * half_s + 2.0 * np.sin(0.5 * phi)[:, None] ** 2
            singular |= np.any(denom < 1e-14, axis=1)
            term = np.sin(phi)[:, None] / denom
            bracket += np.where(np.isfinite(term), term, 0.0)
        integrand = np.where(np.isfinite(jacobian), jacobian, 0.0) * bracket
    values = np.sum(integrand * w, axis=1)
    return values, singular


def diffractive_arrays(rho: float, t, r1, r2, sep, refine: bool = False):
    """Vectorised K_diff (zero outside t > r1 + r2 and for rho = 1/N)."""
    t, r1, r2, sep = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (t, r1, r2, sep)))
    out = np.zeros(t.shape)
    singular = np.zeros(t.shape, dtype=bool)
    if Cone(rho=rho).quotient_order is not None:
        return out, singular
    live = t > r1 + r2
    if not np.any(live):
        return out, singular
    idx = np.flatnonzero(live)
    flat_out = out.reshape(-1)
    flat_sing = singular.reshape(-1)
    tl, r1l, r2l, sl = (a.reshape(-1)[idx] for a in (t, r1, r2, sep))
    for start in range(0, idx.size, _CHUNK):
        part = slice(start, start + _CHUNK)
        values, sing = diffraction_integral(rho, tl[part], r1l[part], r2l[part], sl[part], refine)
        prefactor = -1.0 / (4.0 * math.pi ** 2 * rho * np.sqrt(2.0 * r1l[part] * r2l[part]))
        flat_out[idx[part]] = prefactor * values
        flat_sing[idx[part]] = sing
    return out, singular


def diffractive_estimate(cone: Cone, t: float, r1: float, r2: float, dtheta: float):
    """K_diff with node-doubling error estimate and singular-denominator flag."""
    if t <= 0 or r1 <= 0 or r2 <= 0:
        raise ValueError("diffractive_kernel needs positive t, r1, r2")
    sep = abs(normalize_angle(cone.rho, dtheta))
    coarse, singular = diffractive_arrays(cone.rho, t, r1, r2, sep)
    fine, _ = diffractive_arrays(cone.rho, t, r1, r2, sep, refine=True)
    coarse, fine = float(coarse), float(fine)
    error = abs(fine - coarse) / max(abs(fine), 1e-300) if fine != 0.0 else abs(coarse)
    warn = error > settings.ACCURACY_WARN_TOL
    if warn:
        logger.warning(f"Diffractive kernel at t={t}, r1={r1}, r2={r2}, dtheta={dtheta} "
                       f"disagrees under node doubling: {error:.3e}")
    if bool(singular):
        logger.warning(f"Singular denominator in diffractive kernel at t={t}, r1={r1}, r2={r2}, dtheta={dtheta}")
    return QuadratureEstimate(value=fine, error_estimate=error, accuracy_warning=warn), bool(singular)


def diffractive_kernel(cone: Cone, t: float, r1: float, r2: float, dtheta: float) -> float:
    estimate, _ = diffractive_estimate(cone, t, r1, r2, dtheta)
    return estimate.value


def sine_kernel(cone: Cone, t: float, p1: ConePoint, p2: ConePoint) -> KernelEval:
    """K_U(t)(p1; p2) split into geometric and diffractive parts with its region tag."""
    region = classify_region(cone, t, p1, p2)
    if region.tag == RegionTag.I:
        return KernelEval(geometric=0.0, diffractive=0.0, total=0.0, region=region, n_geom_terms=0)

    sep = float(angular_separation(cone, p1.theta, p2.theta))
    value, count, on_cone = psi_arrays(cone.rho, t, p1.r, p2.r, sep)
    geometric = float(value) / TWO_PI

    diffractive, error, warn, singular = 0.0, 0.0, False, False
    if t > p1.r + p2.r and p1.r > 0 and p2.r > 0:
        estimate, singular = diffractive_estimate(cone, t, p1.r, p2.r, sep)
        diffractive, error, warn = estimate.value, estimate.error_estimate, estimate.accuracy_warning

    return KernelEval(
        geometric=geometric,
        diffractive=diffractive,
        total=geometric + diffractive,
        region=region,
        n_geom_terms=int(count),
        on_light_cone=bool(on_cone),
        singular_denominator=singular,
        accuracy_warning=warn,
        error_estimate=error,
    )


def sine_kernel_arrays(cone: Cone, t, r1, theta1, r2, theta2):
    """Vectorised (K_geom, K_diff) over broadcast coordinates; no error estimates."""
    sep = angular_separation(cone, theta1, theta2)
    value, _, _ = psi_arrays(cone.rho, t, r1, r2, sep)
    diff, _ = diffractive_arrays(cone.rho, t, r1, r2, sep)
    return value / TWO_PI, diff


# ---------------------------------------------------------------------------------
# applying U(t) to data
# ---------------------------------------------------------------------------------

def _uniform_edges(lo: float, hi: float, width: float) -> np.ndarray:
    n = max(1, int(math.ceil((hi - lo) / width)))
    return np.linspace(lo, hi, n + 1)


def _graded_toward(edges: np.ndarray, point: float, delta: float, levels: int, side: str) -> np.ndarray:
    offsets = delta * 0.5 ** np.arange(levels)
    extra = []
    if side in ("left", "both"):
        extra.append(point - offsets)
    if side in ("right", "both"):
        extra.append(point + offsets)
    extra.append([point])
    merged = np.concatenate([edges] + [np.asarray(e) for e in extra])
    merged = merged[(merged >= edges[0]) & (merged <= edges[-1])]
    return np.unique(merged)


class SinePropagator:
    """Applies U(t) to data on the cone by quadrature against the closed-form kernel.

    The geometric part is integrated on the unfolded plane in polar coordinates centred
    at the target with radius t sin(psi), which clusters nodes toward the light cone
    and absorbs its inverse square-root singularity. The diffractive part is
    integrated in tip-centred coordinates with graded panels at the diffracted front
    and at the shadow boundaries.
    """

    def __init__(self, cone: Cone, threads: Optional[int] = None, node_cap: Optional[int] = None):
        self.cone = cone
        self.runner = BatchRunner(threads)
        self.node_cap = node_cap or settings.PROPAGATOR_NODE_CAP
        self.order = settings.GAUSS_ORDER

    # ---- geometric ----------------------------------------------------------------

    def _geometric(self, t: float, g: ConeData, target: ConePoint, h: float) -> float:
        r1, rho = target.r, self.cone.rho
        big_r, r_in = g.r_support, g.r_inner
        varrho_lo = max(0.0, r1 - big_r, r_in - r1)
        varrho_hi = min(t, r1 + big_r)
        if varrho_hi <= varrho_lo:
            return 0.0
        psi_lo = math.asin(min(1.0, varrho_lo / t))
        psi_hi = math.asin(min(1.0, varrho_hi / t))
        edges = _uniform_edges(psi_lo, psi_hi, h / t)
        if varrho_lo < r1 < varrho_hi:
            edges = np.unique(np.append(edges, math.asin(r1 / t)))
        psi_nodes, psi_w = _panel_nodes(edges, self.order)
        varrho = t * np.sin(psi_nodes)

        with np.errstate(divide="ignore", invalid="ignore"):
            denom = 2.0 * r1 * varrho
            c_out = np.where(denom > 0, (big_r ** 2 - r1 ** 2 - varrho ** 2) / denom, np.inf)
            c_in = np.where(denom > 0, (r_in ** 2 - r1 ** 2 - varrho ** 2) / denom, -np.inf)
        om_lo = np.arccos(np.clip(c_out, -1.0, 1.0))
        om_hi = np.arccos(np.clip(c_in, -1.0, 1.0))
        span = np.maximum(om_hi - om_lo, 0.0)

        n_om = max(1, int(math.ceil(float(np.max(varrho * span)) / h)))
        if psi_nodes.size * n_om * self.order * 2 > self.node_cap:
            raise RefinementBudgetError(
                f"geometric quadrature needs {psi_nodes.size * n_om * self.order * 2} nodes (cap {self.node_cap})")
        unit = np.linspace(0.0, 1.0, n_om + 1)
        om_edges = om_lo[:, None] + span[:, None] * unit[None, :]
        om, om_w = _panel_nodes(om_edges, self.order)

        total = 0.0
        for sign in (1.0, -1.0):
            x = r1 + varrho[:, None] * np.cos(om)
            y = sign * varrho[:, None] * np.sin(om)
            r = np.hypot(x, y)
            theta = normalize_angle(rho, target.theta + np.arctan2(y, x))
            values = g(r, theta)
            total += float(np.sum(psi_w * t * np.sin(psi_nodes) * np.sum(om_w * values, axis=1)))
        return total / TWO_PI

    # ---- diffractive --------------------------------------------------------------

    def _shadow_angles(self) -> List[float]:
        rho = self.cone.rho
        out = []
        k_lo = int(math.floor((1.0 - rho) / (2.0 * rho))) - 1
        k_hi = int(math.ceil((1.0 + rho) / (2.0 * rho))) + 1
        for k in range(k_lo, k_hi + 1):
            s = TWO_PI * rho * k - math.pi
            for cand in (s, -s):
                if -math.pi * rho < cand < math.pi * rho:
                    out.append(cand)
        return sorted(set(out))

    def _diffractive(self, t: float, g: ConeData, target: ConePoint, h: float) -> float:
        rho = self.cone.rho
        if self.cone.quotient_order is not None:
            return 0.0
        r1 = target.r
        front = t - r1
        r_lo, r_hi = g.r_inner, min(g.r_support, front)
        if r_hi <= r_lo:
            return 0.0
        r_edges = _uniform_edges(r_lo, r_hi, h)
        if r_hi == front:
            r_edges = _graded_toward(r_edges, front, h, settings.SHADOW_GRADED_LEVELS, "left")

        half = math.pi * rho
        arc = max(r_hi, h)
        s_edges = _uniform_edges(-half, half, h / arc)
        delta = 0.5 * (s_edges[1] - s_edges[0])
        for shadow in self._shadow_angles():
            s_edges = _graded_toward(s_edges, shadow, delta, settings.SHADOW_GRADED_LEVELS, "both")

        r_nodes, r_w = _panel_nodes(r_edges, self.order)
        s_nodes, s_w = _panel_nodes(s_edges, self.order)
        rr, ss = np.meshgrid(r_nodes, s_nodes, indexing="ij")
        values = g(rr, normalize_angle(rho, target.theta + ss))
        weights = (r_w * r_nodes)[:, None] * s_w[None, :]

        peak = float(np.max(np.abs(values))) if values.size else 0.0
        if peak == 0.0:
            return 0.0
        keep = np.abs(values) > settings.PROPAGATOR_PRUNE_TOL * peak
        n_keep = int(np.count_nonzero(keep))
        if n_keep > self.node_cap:
            raise RefinementBudgetError(
                f"diffractive quadrature needs {n_keep} kernel evaluations (cap {self.node_cap})")
        kernel, _ = diffractive_arrays(rho, t, r1, rr[keep], np.abs(ss[keep]))
        return float(np.sum(kernel * values[keep] * weights[keep]))

    # ---- public -------------------------------------------------------------------

    def _apply(self, t: float, g: ConeData, target: ConePoint, h: float, parts: str) -> float:
        total = 0.0
        if parts in ("all", "geometric"):
            total += self._geometric(t, g, target, h)
        if parts in ("all", "diffractive"):
            total += self._diffractive(t, g, target, h)
        return total

    def apply(
        self,
        t: float,
        g: ConeData,
        target: ConePoint,
        parts: str = "all",
        check_accuracy: bool = True,
    ) -> QuadratureEstimate:
        if t <= 0:
            raise ValueError(f"t must be positive, got {t}")
        if target.r <= 0:
            raise ValueError("target must lie off the cone tip")
        if parts not in ("all", "geometric", "diffractive"):
            raise ValueError(f"unknown kernel part {parts!r}")
        h = 2.0 * g.feature_scale
        value = self._apply(t, g, target, h, parts)
        if not check_accuracy:
            return QuadratureEstimate(value=value)
        fine = self._apply(t, g, target, 0.5 * h, parts)
        error = abs(fine - value) / max(abs(fine), 1e-300) if fine != 0.0 else abs(value)
        warn = error > settings.ACCURACY_WARN_TOL and abs(fine - value) > 1e-14
        if warn:
            logger.warning(f"U(t)g at t={t}, target=({target.r}, {target.theta}) disagrees under node doubling: {error:.3e}")
        return QuadratureEstimate(value=fine, error_estimate=error, accuracy_warning=warn)

    def apply_many(
        self,
        t: float,
        g: ConeData,
        targets: List[ConePoint],
        parts: str = "all",
        check_accuracy: bool = False,
    ) -> List[QuadratureEstimate]:
        return self.runner.map(lambda p: self.apply(t, g, p, parts, check_accuracy), targets)


def apply_sine_propagator(
    cone: Cone,
    t: float,
    g: ConeData,
    target: ConePoint,
    parts: str = "all",
    check_accuracy: bool = True,
) -> QuadratureEstimate:
    return SinePropagator(cone, threads=1).apply(t, g, target, parts, check_accuracy)

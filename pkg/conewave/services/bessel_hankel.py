"""Bessel functions of real order and quadrature Hankel transforms.

H_nu[b](lambda) = int_0^inf b(r) J_nu(lambda r) r dr is self-inverse. Radial and
spectral grids are composite Gauss-Legendre rules with weights for the measure
r dr; their truncation radius is always given explicitly.
"""
import logging
import math
from typing import Callable, Optional, Union

import numpy as np
import scipy.special as sp

from conewave.core.config import settings
from conewave.core.exceptions import BesselOverflowError
from conewave.models.fields import RadialFunction, RadialGrid
from conewave.models.schemas import BesselOrder, QuadratureEstimate

logger = logging.getLogger(__name__)

OrderLike = Union[BesselOrder, float]


def _order_value(order: OrderLike) -> float:
    nu = order.nu if isinstance(order, BesselOrder) else float(order)
    if nu < 0:
        raise ValueError(f"Bessel order must be nonnegative, got {nu}")
    return nu


def bessel_j(order: OrderLike, z):
    """J_nu(z) for nu >= 0, z >= 0 (scalar or array)."""
    nu = _order_value(order)
    z_arr = np.asarray(z, dtype=float)
    if np.any(z_arr < 0):
        raise ValueError("bessel_j is defined here for z >= 0")
    with np.errstate(over="ignore", invalid="ignore"):
        out = sp.jv(nu, z_arr)
    if not np.all(np.isfinite(out)):
        raise BesselOverflowError(f"J_{nu} overflowed for z in [{z_arr.min()}, {z_arr.max()}]")
    if out.ndim == 0:
        return float(out)
    return out


# ---------------------------------------------------------------------------------
# grids
# ---------------------------------------------------------------------------------

def _panel_rule(edges: np.ndarray, order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    a = edges[:-1, None]
    b = edges[1:, None]
    half = 0.5 * (b - a)
    nodes = (a + half * (x[None, :] + 1.0)).ravel()
    weights = (half * w[None, :]).ravel()
    return nodes, weights


def composite_grid(edges, order: Optional[int] = None) -> RadialGrid:
    """Gauss-Legendre panels on the given edges (first edge 0) for the measure r dr."""
    order = order or settings.RADIAL_PANEL_ORDER
    edges = np.asarray(edges, dtype=float)
    if edges[0] != 0.0 or np.any(np.diff(edges) <= 0):
        raise ValueError("panel edges must start at 0 and increase strictly")
    nodes, weights = _panel_rule(edges, order)
    return RadialGrid(nodes=nodes, weights=weights * nodes, r_max=float(edges[-1]),
                      panel_edges=edges, order=order)


def radial_grid(r_max: float, panel_width: float, order: Optional[int] = None) -> RadialGrid:
    if r_max <= 0 or panel_width <= 0:
        raise ValueError("r_max and panel_width must be positive")
    n_panels = max(1, int(math.ceil(r_max / panel_width)))
    return composite_grid(np.linspace(0.0, r_max, n_panels + 1), order)


def lambda_grid(
    lambda_max: float,
    t_max: float = 0.0,
    r_max: float = 0.0,
    nodes_per_unit: Optional[float] = None,
    order: Optional[int] = None,
) -> RadialGrid:
    """Uniform-panel spectral grid on (0, lambda_max].

    The node density is at least LAMBDA_NODES_PER_UNIT and grows with t_max + r_max so
    that cos(t lambda) J_nu(lambda r) stays resolved for every t <= t_max, r <= r_max.
    """
    order = order or settings.LAMBDA_PANEL_ORDER
    density = max(float(nodes_per_unit or settings.LAMBDA_NODES_PER_UNIT), 3.0 * (t_max + r_max))
    n_panels = max(1, int(math.ceil(lambda_max * density / order)))
    return composite_grid(np.linspace(0.0, lambda_max, n_panels + 1), order)


def refine_grid(grid: RadialGrid) -> RadialGrid:
    """The same rule with every panel halved (node doubling)."""
    if grid.panel_edges is None or grid.order is None:
        raise ValueError("only panel grids can be refined")
    edges = grid.panel_edges
    mids = 0.5 * (edges[:-1] + edges[1:])
    refined = np.empty(2 * edges.size - 1)
    refined[0::2] = edges
    refined[1::2] = mids
    return composite_grid(refined, grid.order)


def sample(grid: RadialGrid, func: Callable[[np.ndarray], np.ndarray]) -> RadialFunction:
    return RadialFunction(grid=grid, values=np.asarray(func(grid.nodes)), source=func)


# ---------------------------------------------------------------------------------
# transforms
# ---------------------------------------------------------------------------------

def hankel_matrix(nu: float, out_nodes: np.ndarray, in_grid: RadialGrid) -> np.ndarray:
    """Matrix M with (M @ f)[k] ~ int f(r) J_nu(out_k r) r dr over the in_grid rule."""
    return bessel_j(nu, np.outer(out_nodes, in_grid.nodes)) * in_grid.weights[None, :]


def _transform_values(nu: float, values: np.ndarray, in_grid: RadialGrid, out_grid: RadialGrid) -> np.ndarray:
    return hankel_matrix(nu, out_grid.nodes, in_grid) @ values


def hankel_transform(order: OrderLike, f: RadialFunction, out_grid: RadialGrid) -> RadialFunction:
    """H_nu f sampled on out_grid, with a node-doubling error estimate.

    When f carries its generating callable the estimate compares the rule with the
    refined rule; otherwise it is the relative size of f at the truncation radius.
    """
    nu = _order_value(order)
    values = _transform_values(nu, np.asarray(f.values), f.grid, out_grid)
    scale = max(float(np.max(np.abs(values))), np.finfo(float).tiny)

    if f.source is not None and f.grid.panel_edges is not None:
        fine = refine_grid(f.grid)
        fine_values = _transform_values(nu, np.asarray(f.source(fine.nodes)), fine, out_grid)
        error = float(np.max(np.abs(fine_values - values))) / scale
    else:
        f_abs = np.abs(np.asarray(f.values))
        error = float(f_abs[-1] / max(float(f_abs.max()), np.finfo(float).tiny))

    warn = error > settings.ACCURACY_WARN_TOL
    if warn:
        logger.warning(f"Hankel transform of order {nu} has estimated relative error {error:.3e}")
    return RadialFunction(grid=out_grid, values=values, error_estimate=error, accuracy_warning=warn)


def _kernel_integral(nu: float, G: Callable[[np.ndarray], np.ndarray], r1, r2, grid: RadialGrid) -> np.ndarray:
    lam = grid.nodes
    r1 = np.atleast_1d(np.asarray(r1, dtype=float))
    r2 = np.atleast_1d(np.asarray(r2, dtype=float))
    g = np.asarray(G(lam * lam), dtype=float) * grid.weights
    j1 = bessel_j(nu, np.outer(r1, lam))
    j2 = bessel_j(nu, np.outer(r2, lam))
    return (j1 * g[None, :]) @ j2.T


def radial_kernel_grid(lambda_max: float, r_max: float, order: Optional[int] = None) -> RadialGrid:
    """Spectral grid resolving J_nu(lambda r1) J_nu(lambda r2) for r <= r_max.

    At least 20 nodes per period 2 pi / r_max of the fastest oscillation, and at least
    LAMBDA_NODES_PER_UNIT per unit of lambda.
    """
    order = order or settings.LAMBDA_PANEL_ORDER
    density = max(float(settings.LAMBDA_NODES_PER_UNIT), 20.0 * 2.0 * r_max / (2.0 * math.pi))
    n_panels = max(2, int(math.ceil(lambda_max * density / order)))
    return composite_grid(np.linspace(0.0, lambda_max, n_panels + 1), order)


def radial_kernel_coefficient(
    order: OrderLike,
    G: Callable[[np.ndarray], np.ndarray],
    r1: float,
    r2: float,
    lambda_max: float,
) -> QuadratureEstimate:
    """int_0^lambda_max G(lambda^2) J_nu(lambda r1) J_nu(lambda r2) lambda d lambda.

    G must vanish beyond lambda_max. The value is exactly symmetric in (r1, r2).
    """
    nu = _order_value(order)
    if r1 <= 0 or r2 <= 0:
        raise ValueError("r1 and r2 must be positive")
    lo, hi = min(r1, r2), max(r1, r2)
    grid = radial_kernel_grid(lambda_max, hi)
    coarse = float(_kernel_integral(nu, G, lo, hi, grid)[0, 0])
    fine = float(_kernel_integral(nu, G, lo, hi, refine_grid(grid))[0, 0])
    scale = max(abs(fine), np.finfo(float).tiny)
    error = abs(fine - coarse) / scale
    warn = error > settings.ACCURACY_WARN_TOL and abs(fine) > 1e-300
    if warn:
        logger.warning(f"Radial kernel coefficient (nu={nu}, r1={r1}, r2={r2}) disagrees under node doubling: {error:.3e}")
    return QuadratureEstimate(value=fine, error_estimate=error, accuracy_warning=warn)


def radial_kernel_matrix(nu: float, G, r_out, r_in, lambda_max: float) -> np.ndarray:
    """Vectorised radial_kernel_coefficient over all (r_out, r_in) pairs (no doubling)."""
    grid = radial_kernel_grid(lambda_max, max(np.max(r_out), np.max(r_in)))
    return _kernel_integral(nu, G, r_out, r_in, grid)

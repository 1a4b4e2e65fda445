from typing import Any, Callable, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from conewave.models.schemas import BoundaryCondition, ModeIndex


def _frozen_array(a: Any, dtype=None) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


class RadialGrid(BaseModel):
    """Quadrature nodes on (0, r_max] with weights for the measure r dr (or lambda d lambda).

    Grids built from Gauss-Legendre panels keep ``panel_edges`` and ``order`` so they can
    be refined by halving every panel.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    nodes: np.ndarray
    weights: np.ndarray
    r_max: float = Field(..., gt=0)
    panel_edges: Optional[np.ndarray] = None
    order: Optional[int] = None

    @model_validator(mode="after")
    def _check(self) -> "RadialGrid":
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.ndim != 1 or nodes.shape != weights.shape:
            raise ValueError("nodes and weights must be 1-d arrays of equal length")
        if nodes.size == 0:
            raise ValueError("grid has no nodes")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("nodes must be strictly increasing")
        if nodes[0] <= 0 or nodes[-1] > self.r_max * (1 + 1e-14):
            raise ValueError("nodes must lie in (0, r_max]")
        if np.any(weights <= 0):
            raise ValueError("weights must be positive")
        object.__setattr__(self, "nodes", _frozen_array(nodes))
        object.__setattr__(self, "weights", _frozen_array(weights))
        if self.panel_edges is not None:
            object.__setattr__(self, "panel_edges", _frozen_array(self.panel_edges, float))
        return self

    def __len__(self) -> int:
        return self.nodes.size


class RadialFunction(BaseModel):
    """Samples of a radial function (or of its Hankel transform) on a RadialGrid."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    grid: RadialGrid
    values: np.ndarray
    source: Optional[Callable[[np.ndarray], np.ndarray]] = None
    error_estimate: float = 0.0
    accuracy_warning: bool = False

    @model_validator(mode="after")
    def _check(self) -> "RadialFunction":
        values = np.asarray(self.values)
        if values.shape != self.grid.nodes.shape:
            raise ValueError("values.length must equal grid.nodes.length")
        object.__setattr__(self, "values", _frozen_array(values))
        return self


class PolarSamples(BaseModel):
    """Values a(r_i, theta_k) of a field on a polar grid with uniform angles over one period."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    rho: float = Field(..., gt=0)
    r_grid: RadialGrid
    theta: np.ndarray
    values: np.ndarray

    @model_validator(mode="after")
    def _check(self) -> "PolarSamples":
        values = np.asarray(self.values)
        if values.shape != (self.r_grid.nodes.size, np.asarray(self.theta).size):
            raise ValueError("values must have shape (len(r_grid), len(theta))")
        object.__setattr__(self, "theta", _frozen_array(self.theta, float))
        object.__setattr__(self, "values", _frozen_array(values))
        return self


class ConeData(BaseModel):
    """Initial data given as a vectorised callable g(r, theta) on the cone.

    ``r_inner``/``r_support`` bound the radial support; ``feature_scale`` is the smallest
    length over which g varies and sets the quadrature panel size.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    func: Callable[[np.ndarray, np.ndarray], np.ndarray]
    r_support: float = Field(..., gt=0)
    r_inner: float = Field(0.0, ge=0)
    feature_scale: float = Field(0.1, gt=0)

    def __call__(self, r: np.ndarray, theta: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        out = np.asarray(self.func(r, np.asarray(theta, dtype=float)))
        return np.where((r <= self.r_support) & (r >= self.r_inner), out, 0.0)


class SpectralField(BaseModel):
    """A function on the cone held as Hankel-side angular coefficients a_j(lambda).

    Row ``j + j_max`` of ``coefficients`` holds mode j on ``lambda_grid``; ``r_max`` is the
    physical radius outside which the represented function is negligible.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    rho: float = Field(..., gt=0)
    lambda_grid: RadialGrid
    coefficients: np.ndarray
    j_max: int = Field(..., ge=0)
    r_max: float = Field(..., gt=0)

    @model_validator(mode="after")
    def _check(self) -> "SpectralField":
        coeffs = np.asarray(self.coefficients, dtype=complex)
        if coeffs.shape != (2 * self.j_max + 1, self.lambda_grid.nodes.size):
            raise ValueError("coefficients must have shape (2*j_max+1, len(lambda_grid))")
        object.__setattr__(self, "coefficients", _frozen_array(coeffs))
        return self

    @property
    def lambda_max(self) -> float:
        return self.lambda_grid.r_max

    @property
    def mode_numbers(self) -> np.ndarray:
        return np.arange(-self.j_max, self.j_max + 1)

    @property
    def nus(self) -> np.ndarray:
        return np.abs(self.mode_numbers) / self.rho

    def mode(self, j: int) -> np.ndarray:
        if abs(j) > self.j_max:
            return np.zeros(self.lambda_grid.nodes.size, dtype=complex)
        return self.coefficients[j + self.j_max]

    @property
    def modes(self) -> List[Tuple[ModeIndex, RadialFunction]]:
        return [
            (ModeIndex(j=int(j), nu=abs(int(j)) / self.rho),
             RadialFunction(grid=self.lambda_grid, values=self.mode(int(j))))
            for j in self.mode_numbers
        ]

    def with_coefficients(self, coefficients: np.ndarray) -> "SpectralField":
        return SpectralField(rho=self.rho, lambda_grid=self.lambda_grid,
                             coefficients=coefficients, j_max=self.j_max, r_max=self.r_max)


class LPDecomposition(BaseModel):
    """Dyadic pieces beta_k(sqrt Delta) f for k_lo <= k <= k_hi.

    ``leftover`` is the share of the field energy the pieces miss.
    """

    model_config = ConfigDict(frozen=True)

    k_range: Tuple[int, int]
    pieces: List[SpectralField]
    leftover: float = Field(0.0, ge=0)
    coverage_warning: bool = False

    @model_validator(mode="after")
    def _check(self) -> "LPDecomposition":
        if len(self.pieces) != self.k_range[1] - self.k_range[0] + 1:
            raise ValueError("one piece per dyadic level in k_range")
        return self

    @property
    def levels(self) -> List[int]:
        return list(range(self.k_range[0], self.k_range[1] + 1))

    def piece(self, k: int) -> SpectralField:
        return self.pieces[k - self.k_range[0]]


class WedgeField(BaseModel):
    """Hankel-side coefficients of a wedge function.

    The represented function is ``c_0 + alpha^{-1/2} sum_j (c_j cos(j pi theta / alpha)
    + s_j sin(j pi theta / alpha))``. A Dirichlet field has only sine rows, a Neumann field
    only cosine rows; other combinations are representable so that boundary residuals can
    be diagnosed.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    alpha: float = Field(..., gt=0)
    bc: BoundaryCondition
    lambda_grid: RadialGrid
    sine: np.ndarray
    cosine: np.ndarray
    j_max: int = Field(..., ge=1)
    r_max: float = Field(..., gt=0)

    @model_validator(mode="after")
    def _check(self) -> "WedgeField":
        n = self.lambda_grid.nodes.size
        sine = np.asarray(self.sine, dtype=complex)
        cosine = np.asarray(self.cosine, dtype=complex)
        if sine.shape != (self.j_max, n):
            raise ValueError("sine rows must have shape (j_max, len(lambda_grid)) for j = 1..j_max")
        if cosine.shape != (self.j_max + 1, n):
            raise ValueError("cosine rows must have shape (j_max+1, len(lambda_grid)) for j = 0..j_max")
        object.__setattr__(self, "sine", _frozen_array(sine))
        object.__setattr__(self, "cosine", _frozen_array(cosine))
        return self

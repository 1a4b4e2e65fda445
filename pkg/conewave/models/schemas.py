import math
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class RegionTag(str, Enum):
    I = "I"
    II = "II"
    III = "III"
    BOUNDARY_I_II = "BoundaryI_II"
    BOUNDARY_II_III = "BoundaryII_III"


class BoundaryCondition(str, Enum):
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"


class Cone(BaseModel):
    """The flat cone C(S^1_rho): R_+ x (R / 2 pi rho Z) with metric dr^2 + r^2 dtheta^2."""

    model_config = ConfigDict(frozen=True)

    rho: float = Field(..., gt=0, description="Cone parameter rho; rho = 1 is the plane")

    @field_validator("rho")
    @classmethod
    def _finite_rho(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("rho must be finite")
        return v

    @property
    def circumference(self) -> float:
        return 2.0 * math.pi * self.rho

    @property
    def quotient_order(self) -> Optional[int]:
        """N when rho = 1/N (the plane modulo rotations by 2 pi / N), else None."""
        inv = 1.0 / self.rho
        n = round(inv)
        if n >= 1 and abs(inv - n) <= 1e-12 * inv:
            return int(n)
        return None

    def nu(self, j: int) -> float:
        return abs(j) / self.rho


class ConePoint(BaseModel):
    """A point (r, theta) on a cone.

    The model does not know its cone, so ``theta`` is stored as given;
    :func:`conewave.services.cone_geometry.cone_point` is the normalising constructor. Every
    consumer reads angles modulo 2 pi rho, and the planar image oracles rely on raw angles.
    """

    model_config = ConfigDict(frozen=True)

    r: float = Field(..., ge=0, description="Radial distance from the cone tip")
    theta: float = Field(..., description="Angular coordinate, any representative modulo 2 pi rho")

    @field_validator("theta")
    @classmethod
    def _finite_theta(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("theta must be finite")
        return v


class Region(BaseModel):
    model_config = ConfigDict(frozen=True)

    tag: RegionTag
    tol: float = Field(..., ge=0)


class BesselOrder(BaseModel):
    model_config = ConfigDict(frozen=True)

    nu: float = Field(..., ge=0, description="Order of J_nu")


class QuadratureEstimate(BaseModel):
    """A quadrature value with its node-doubling error estimate."""

    model_config = ConfigDict(frozen=True)

    value: float
    error_estimate: float = 0.0
    accuracy_warning: bool = False

    def __float__(self) -> float:
        return self.value


class DiffractiveParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    alpha: float
    beta: float = Field(..., ge=0)
    phi1: float
    phi2: float


class KernelEval(BaseModel):
    model_config = ConfigDict(frozen=True)

    geometric: float
    diffractive: float
    total: float
    region: Region
    n_geom_terms: int = Field(..., ge=0)
    on_light_cone: bool = False
    singular_denominator: bool = False
    accuracy_warning: bool = False
    error_estimate: float = 0.0


class ModeIndex(BaseModel):
    model_config = ConfigDict(frozen=True)

    j: int
    nu: float = Field(..., ge=0)

    @classmethod
    def for_cone(cls, cone: Cone, j: int) -> "ModeIndex":
        return cls(j=j, nu=cone.nu(j))


class AdmissibleTriple(BaseModel):
    """Strichartz exponents (p, q, gamma); see :attr:`is_admissible`."""

    model_config = ConfigDict(frozen=True)

    p: float = Field(..., ge=2)
    q: float = Field(..., ge=2)
    gamma: float = Field(..., ge=0)

    @classmethod
    def from_pq(cls, p: float, q: float) -> "AdmissibleTriple":
        return cls(p=p, q=q, gamma=1.0 - 1.0 / p - 2.0 / q)

    @property
    def scaling_defect(self) -> float:
        return 1.0 / self.p + 2.0 / self.q - (1.0 - self.gamma)

    @property
    def is_admissible(self) -> bool:
        if abs(self.scaling_defect) > 1e-12:
            return False
        if 1.0 / self.p + 1.0 / (2.0 * self.q) > 0.25 + 1e-12:
            return False
        if self.p == 4 and math.isinf(self.q) and abs(self.gamma - 0.75) < 1e-12:
            return False
        return True


class DecayFit(BaseModel):
    times: List[float]
    sup_norms: List[float]
    slope: float
    slope_ci: Tuple[float, float]
    sampling_warning: bool = False

    @model_validator(mode="after")
    def _check_series(self) -> "DecayFit":
        if len(self.times) != len(self.sup_norms):
            raise ValueError("times and sup_norms differ in length")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("times must be strictly increasing")
        if any(v <= 0 for v in self.sup_norms):
            raise ValueError("sup_norms must be positive")
        return self


class MorawetzConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    m: int = Field(..., ge=1, description="Lowest retained angular harmonic")
    alpha_mz: float = Field(..., gt=0, description="Morawetz weight exponent")
    t_max: float = Field(50.0, gt=0, description="Time truncation of the space-time integral")

    def nu_m(self, cone: Cone) -> float:
        return cone.nu(self.m)

    def satisfies_hypothesis(self, cone: Cone) -> bool:
        return 0.0 < self.alpha_mz < 0.25 + 0.5 * self.nu_m(cone)


class Wedge(BaseModel):
    """Planar wedge {0 < theta < alpha}; solved on the cone with rho = alpha / pi."""

    model_config = ConfigDict(frozen=True)

    alpha: float = Field(..., gt=0, le=2 * math.pi)
    bc: BoundaryCondition

    @property
    def cone(self) -> Cone:
        return Cone(rho=self.alpha / math.pi)

    def nu(self, j: int) -> float:
        return j * math.pi / self.alpha

    @property
    def image_order(self) -> Optional[int]:
        """N when alpha = pi / N, i.e. when the method of images applies."""
        return self.cone.quotient_order


class HilbertResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    values: np.ndarray
    leakage: float
    leakage_warning: bool = False


class MorawetzResult(BaseModel):
    ratio: float
    lhs: float
    rhs: float
    lhs_frequency_side: float
    tail_estimate: float
    per_mode: Dict[int, float] = Field(default_factory=dict)


class EstimateReport(BaseModel):
    """Outcome of one verification check; serialised with the key ``pass``."""

    model_config = ConfigDict(populate_by_name=True)

    check_name: str
    params: Dict[str, object] = Field(default_factory=dict)
    values: Dict[str, object] = Field(default_factory=dict)
    slope: Optional[float] = None
    ci: Optional[Tuple[float, float]] = None
    passed: Optional[bool] = Field(None, alias="pass")
    tolerances: Dict[str, float] = Field(default_factory=dict)

    def to_json(self) -> str:
        return self.model_dump_json(by_alias=True, indent=2)


class RunConfig(BaseModel):
    """Merged command configuration (flags over config file over defaults).

    ``threads`` and the output locations do not enter the config hash.
    """

    model_config = ConfigDict(extra="forbid")

    command: str
    seed: int = 0
    threads: Optional[int] = Field(None, ge=1)
    output: Optional[str] = None
    output_dir: Optional[str] = None
    suite: str = Field("quick", pattern="^(quick|full)$")

    rho: Optional[float] = Field(None, gt=0)
    t: Optional[float] = Field(None, gt=0)
    r1: float = Field(1.0, gt=0)
    r2: float = Field(1.0, gt=0)
    theta1: float = 0.0
    dtheta: float = 0.0
    samples: int = Field(0, ge=0)

    r0: float = Field(3.0, gt=0)
    theta0: float = 0.0
    sigma: float = Field(0.4, gt=0)
    lambda_max: Optional[float] = Field(None, gt=0)
    j_max: Optional[int] = Field(None, ge=1)
    points: int = Field(20, ge=1)

    t_lo: float = Field(5.0, gt=0)
    t_hi: float = Field(50.0, gt=0)
    n_times: int = Field(8, ge=2)

    p: float = Field(6.0, ge=2)
    q: float = Field(6.0, ge=2)
    T: float = Field(5.0, gt=0)
    mus: List[float] = Field(default_factory=lambda: [0.25, 1.0, 4.0])

    m: int = Field(1, ge=1)
    alpha_mz: float = Field(0.3, gt=0)
    t_max: float = Field(50.0, gt=0)
    draws: int = Field(20, ge=1)
    coarse_draws: int = Field(8, ge=0)

    alpha: Optional[float] = Field(None, gt=0, le=2 * math.pi)
    bc: BoundaryCondition = BoundaryCondition.DIRICHLET

    @model_validator(mode="after")
    def _check_times(self) -> "RunConfig":
        if self.t_hi <= self.t_lo:
            raise ValueError("t_hi must exceed t_lo")
        if any(mu <= 0 for mu in self.mus):
            raise ValueError("scale factors must be positive")
        return self

    def hashed_fields(self) -> Dict[str, object]:
        return self.model_dump(mode="json", exclude={"threads", "output", "output_dir"})

from typing import Optional
from pydantic_settings import BaseSettings
from functools import lru_cache

class Settings(BaseSettings):
    # Project
    PROJECT_NAME: str = "conewave"
    VERSION: str = "1.0.0"

    # Geometry
    BOUNDARY_TOL_FACTOR: float = 1e-9
    LIGHT_CONE_TOL: float = 1e-12

    # Quadrature
    GAUSS_ORDER: int = 12
    RADIAL_PANEL_ORDER: int = 16
    LAMBDA_PANEL_ORDER: int = 10
    LAMBDA_NODES_PER_UNIT: int = 20
    ACCURACY_WARN_TOL: float = 1e-6
    DIFFRACTION_BASE_PANELS: int = 8
    DIFFRACTION_GRADED_LEVELS: int = 12
    SHADOW_GRADED_LEVELS: int = 16
    PROPAGATOR_NODE_CAP: int = 4_000_000
    PROPAGATOR_PRUNE_TOL: float = 1e-15

    # Spectral calculus
    J_MAX_MARGIN: int = 8
    J_MAX_PER_FREQUENCY: float = 4.0
    SOBOLEV_LAMBDA_MIN: float = 0.05
    SOBOLEV_LOW_FREQUENCY_TOL: float = 1e-10
    LP_COVERAGE_TOL: float = 1e-8
    WAVE_SERIES_THRESHOLD: float = 1e-4

    # Estimate harness
    DECAY_SLOPE_LO: float = -0.6
    DECAY_SLOPE_HI: float = -0.4
    HILBERT_TAPER_LENGTH: float = 300.0
    HILBERT_LEAKAGE_TOL: float = 1e-6
    HILBERT_IDENTITY_TOL: float = 1e-5
    STRICHARTZ_STABILITY: float = 0.2
    MORAWETZ_LEAKAGE_TOL: float = 1e-10
    MORAWETZ_SCALING_TOL: float = 0.02
    BOUND_SAFETY: float = 1.05

    # Acceptance tolerances (full suite / quick suite)
    CROSS_ENGINE_TOL: float = 1e-6
    CROSS_ENGINE_TOL_QUICK: float = 1e-4
    WEDGE_ORACLE_TOL: float = 1e-8
    WEDGE_ORACLE_TOL_QUICK: float = 1e-6
    DIFFRACTION_SIGNATURE_MIN: float = 1e-4
    ENERGY_DRIFT_TOL: float = 1e-10

    # Runtime
    CONEWAVE_THREADS: Optional[int] = None
    BATCH_SIZE: int = 16
    LOG_LEVEL: str = "INFO"
    CSV_DIGITS: int = 17

    class Config:
        env_file = ".env"
        extra = "ignore"

@lru_cache()
def get_settings() -> Settings:
    return Settings()

settings = get_settings()

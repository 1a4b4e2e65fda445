from conewave.models.schemas import (
    AdmissibleTriple,
    BesselOrder,
    BoundaryCondition,
    Cone,
    ConePoint,
    DecayFit,
    DiffractiveParams,
    EstimateReport,
    HilbertResult,
    KernelEval,
    ModeIndex,
    MorawetzConfig,
    MorawetzResult,
    QuadratureEstimate,
    Region,
    RegionTag,
    RunConfig,
    Wedge,
)
from conewave.models.fields import (
    ConeData,
    LPDecomposition,
    PolarSamples,
    RadialFunction,
    RadialGrid,
    SpectralField,
    WedgeField,
)

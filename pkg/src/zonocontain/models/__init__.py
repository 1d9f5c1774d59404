"""Models package."""

from .bodies import (
    BodySpec,
    BodyType,
    EllipsoidBody,
    HPolyBody,
    LpBallBody,
    PolarBody,
    PolarOfZonotopeBody,
    ScaledBody,
    body_dimension,
    dump_body,
    parse_body,
)
from .exceptions import (
    BadShape,
    BarrierStall,
    ContainmentError,
    DegenerateLog,
    DependentSubset,
    DimensionMismatch,
    EpsilonOutOfRange,
    InsufficientSamples,
    InvalidBody,
    InvalidParameter,
    LimitExceeded,
    LPInfeasible,
    LPNumerical,
    NoConvergence,
    NoWitnessFound,
    NumericalError,
    OracleInconsistent,
    RankDeficient,
    SampleBudgetOverflow,
    StartNotInterior,
    TooManyGenerators,
    TooManySubsets,
    TooManyVertices,
    Unbounded,
    UnboundedBody,
    UnsupportedBody,
    ValidationError,
    ZeroDirection,
)
from .experiment import ExperimentConfig, ExperimentRecord, GeneratorFamily, Scenario
from .results import (
    Contained,
    ContainmentVerdict,
    GapConfig,
    LewisState,
    NormBracket,
    OptBracket,
    OracleStats,
    Roundness,
    SparsificationMethod,
    SparsificationResult,
    WalkConfig,
    Witness,
)
from .zonotope import (
    DeltaModularityReport,
    FacetProfile,
    HPolytope,
    NormalizationResult,
    Zonotope,
)

__all__ = [
    "BodySpec",
    "BodyType",
    "EllipsoidBody",
    "HPolyBody",
    "LpBallBody",
    "PolarBody",
    "PolarOfZonotopeBody",
    "ScaledBody",
    "body_dimension",
    "dump_body",
    "parse_body",
    "ContainmentError",
    "ValidationError",
    "LimitExceeded",
    "NumericalError",
    "BadShape",
    "DimensionMismatch",
    "EpsilonOutOfRange",
    "InvalidBody",
    "InvalidParameter",
    "ZeroDirection",
    "StartNotInterior",
    "DependentSubset",
    "UnsupportedBody",
    "InsufficientSamples",
    "TooManyGenerators",
    "TooManySubsets",
    "TooManyVertices",
    "SampleBudgetOverflow",
    "RankDeficient",
    "LPNumerical",
    "LPInfeasible",
    "Unbounded",
    "UnboundedBody",
    "NoConvergence",
    "BarrierStall",
    "OracleInconsistent",
    "DegenerateLog",
    "NoWitnessFound",
    "ExperimentConfig",
    "ExperimentRecord",
    "GeneratorFamily",
    "Scenario",
    "Contained",
    "ContainmentVerdict",
    "GapConfig",
    "LewisState",
    "NormBracket",
    "OptBracket",
    "OracleStats",
    "Roundness",
    "SparsificationMethod",
    "SparsificationResult",
    "WalkConfig",
    "Witness",
    "DeltaModularityReport",
    "FacetProfile",
    "HPolytope",
    "NormalizationResult",
    "Zonotope",
]

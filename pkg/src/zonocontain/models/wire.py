from typing import Any, Dict, List, Literal, Optional, TypedDict, Union


# Sparsification payloads
class SparsificationResultDict(TypedDict):
    method: str
    epsilon: float
    indices: List[int]
    weights: List[float]
    certified_factors: List[float]


# Verdict payloads
class ContainedDict(TypedDict):
    verdict: Literal["contained"]
    trials_run: int
    queries: int
    gauge_bound: float
    n_sparsified: Optional[int]


class WitnessDict(TypedDict):
    verdict: Literal["witness"]
    point: List[float]
    gauge_bound: float
    trial_index: int
    verified: Optional[bool]
    exact_gauge: Optional[float]
    queries: int
    n_sparsified: Optional[int]
    gauge_certificate: Optional[float]


VerdictDict = Union[ContainedDict, WitnessDict]


class OptBracketDict(TypedDict):
    alpha_low: float
    alpha_high: Optional[float]
    ratio: Optional[float]
    gauge_bound: float
    tests_run: int
    degenerate: bool
    witness: Optional[WitnessDict]


class NormBracketDict(TypedDict):
    p: Union[float, str]
    lower: float
    upper: Optional[float]
    exact: Optional[float]


# Geometry payloads
class ZonotopeMetadataDict(TypedDict):
    d: int
    n: int
    dropped_zero_columns: List[int]


class DeltaReportDict(TypedDict):
    min_abs_det: float
    max_abs_det: float
    num_submatrices: int
    num_nonsingular: int
    is_delta_modular: bool


class NormalizationDict(TypedDict):
    transform: List[List[float]]
    generators: List[List[float]]
    split_map: Dict[str, List[int]]
    iterations: int
    splits: int


# Experiment payloads
class WitnessLineDict(TypedDict):
    scenario: str
    d: int
    seed: int
    instance: int
    point: List[float]
    gauge_bound: float
    trial_index: int
    verified: Optional[bool]
    exact_gauge: Optional[float]


class PolarCheckDict(TypedDict, total=False):
    outradius: float
    r: float
    containment_holds: bool
    equivalence_holds: bool
    directions_checked: int
    directions_failed: int
    long_vector: Optional[List[float]]
    details: Dict[str, Any]

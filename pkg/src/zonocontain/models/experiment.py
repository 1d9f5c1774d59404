from dataclasses import asdict, dataclass, fields
from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .bodies import BodySpec


class Scenario(Enum):
    """Experiment scenarios runnable over a (dims x seeds) grid."""

    HYPERCUBE_GAP_SWEEP = "hypercube_gap_sweep"
    DELTA_MODULAR_SWEEP = "delta_modular_sweep"
    NASZODI_SWEEP = "naszodi_sweep"
    VOLUME_RATIO = "volume_ratio"
    STRESS_SPLIT = "stress_split"
    POLAR_CHECK = "polar_check"


class GeneratorFamily(Enum):
    """Random generator-matrix families."""

    GAUSSIAN = "gaussian"
    TU_INCIDENCE = "tu_incidence"
    INTERVAL_ONES = "interval_ones"
    SPLIT_AXES = "split_axes"
    EXPLICIT_PATH = "explicit_path"


class ExperimentConfig(BaseModel):
    """
    Validated description of an experiment run.

    Attributes:
        scenario (Scenario): what to measure
        dims (List[int]): ambient dimensions of the grid
        generator_family (GeneratorFamily): family of the inner zonotopes
        seeds (List[int]): base seeds of the grid
        body (Optional[BodySpec]): outer body, required for polar_check
        output_path (str): CSV destination
        generators_per_dim (int): n = generators_per_dim * d for generated instances
        instances (int): instances per (d, seed) cell
        trials (Optional[int]): trial budget of each containment test
        epsilon (float): sparsification accuracy
        target_alpha (float): exact containment factor the sweep instances are scaled to
        s (float): Naszodi scale factor
        samples (int): Monte Carlo budget of stress and volume scenarios
        hull_points (int): number of sampled extreme points in volume_ratio
        explicit_path (Optional[str]): generator CSV for the explicit_path family
        record_timings (bool): fill wall_time_ms; off keeps reruns byte-identical
    """

    model_config = ConfigDict(frozen=True, extra="forbid", use_enum_values=False)

    scenario: Scenario
    dims: List[int] = Field(min_length=1)
    generator_family: GeneratorFamily = GeneratorFamily.GAUSSIAN
    seeds: List[int] = Field(min_length=1)
    body: Optional[BodySpec] = None
    output_path: str
    generators_per_dim: int = Field(default=2, ge=1)
    instances: int = Field(default=1, ge=1)
    trials: Optional[int] = Field(default=None, ge=1)
    epsilon: float = Field(default=1.0 / 3.0, gt=0.0, lt=1.0)
    target_alpha: float = Field(default=0.9, gt=0.0)
    s: float = Field(default=4.0, gt=1.0)
    samples: int = Field(default=10_000, ge=1)
    hull_points: int = Field(default=64, ge=3)
    explicit_path: Optional[str] = None
    record_timings: bool = False

    @model_validator(mode="after")
    def _check_scenario(self) -> "ExperimentConfig":
        if any(d < 1 for d in self.dims):
            raise ValueError("dims must be positive")
        if self.generator_family is GeneratorFamily.EXPLICIT_PATH:
            if self.explicit_path is None:
                raise ValueError("explicit_path family needs explicit_path")
        if self.scenario is Scenario.POLAR_CHECK and self.body is None:
            raise ValueError("polar_check needs a body")
        if self.scenario is Scenario.VOLUME_RATIO and any(
            d not in (2, 3) for d in self.dims
        ):
            raise ValueError("volume_ratio supports d in {2, 3}")
        delta_families = (
            GeneratorFamily.TU_INCIDENCE,
            GeneratorFamily.INTERVAL_ONES,
            GeneratorFamily.EXPLICIT_PATH,
        )
        if (
            self.scenario is Scenario.DELTA_MODULAR_SWEEP
            and self.generator_family not in delta_families
        ):
            raise ValueError(
                "delta_modular_sweep needs a Delta-modular family "
                "(tu_incidence, interval_ones or explicit_path)"
            )
        gap_epsilon_ok = 0 < self.epsilon <= 1 / 3 + 1e-12
        if self.scenario is Scenario.HYPERCUBE_GAP_SWEEP and not gap_epsilon_ok:
            raise ValueError("hypercube_gap_sweep needs epsilon in (0, 1/3]")
        return self


@dataclass(frozen=True)
class ExperimentRecord:
    """One CSV row; fields a scenario does not produce stay None."""

    scenario: str
    d: int
    n: Optional[int]
    n_sparsified: Optional[int]
    seed: int
    instance: int
    verdict: Optional[str]
    gauge_bound: Optional[float]
    exact_alpha: Optional[float]
    membership_queries: Optional[int]
    wall_time_ms: Optional[float]
    metric: Optional[float] = None
    detail: Optional[str] = None
    error: Optional[str] = None

    @classmethod
    def columns(cls) -> List[str]:
        return [f.name for f in fields(cls)]

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @property
    def sort_key(self) -> tuple[int, int, int]:
        return (self.d, self.seed, self.instance)

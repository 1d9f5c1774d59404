import math
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np
from numpy.typing import ArrayLike

from ..config import settings
from .exceptions import BadShape, EpsilonOutOfRange, InvalidParameter
from .wire import (
    ContainedDict,
    NormBracketDict,
    OptBracketDict,
    SparsificationResultDict,
    WitnessDict,
)
from .zonotope import FloatArray, as_matrix


class SparsificationMethod(Enum):
    """Generator-count reduction strategies."""

    LEWIS = "lewis"
    BSS = "bss"
    DELTA_MODULAR = "delta_modular"


@dataclass(frozen=True, eq=False)
class SparsificationResult:
    """
    Reweighted subset of generator columns.

    Attributes:
        indices (Tuple[int, ...]): kept columns of the input matrix, increasing
        weights (FloatArray): positive scale c_i applied to each kept column
        epsilon (float): accuracy parameter the result was built for
        method (SparsificationMethod): strategy that produced the result
        lower_factor (float): claimed a in a * Z <= Z' (support-function sense)
        upper_factor (float): claimed b in Z' <= b * Z
        pre_rescale_weights (Optional[FloatArray]): weights before a final global rescale
    """

    indices: Tuple[int, ...]
    weights: FloatArray
    epsilon: float
    method: SparsificationMethod
    lower_factor: float
    upper_factor: float
    pre_rescale_weights: Optional[FloatArray] = None

    def __post_init__(self) -> None:
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if len(self.indices) != weights.shape[0]:
            raise BadShape(
                f"{len(self.indices)} indices but {weights.shape[0]} weights"
            )
        if np.any(weights <= 0):
            raise InvalidParameter("Sparsification weights must be positive")
        if not self.lower_factor <= 1.0 <= self.upper_factor:
            raise InvalidParameter(
                f"Sandwich factors must satisfy lower <= 1 <= upper, got "
                f"({self.lower_factor}, {self.upper_factor})"
            )
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))
        object.__setattr__(self, "weights", weights)

    @property
    def size(self) -> int:
        return len(self.indices)

    def generators(self, matrix: ArrayLike) -> FloatArray:
        """Columns c_i * w_i of the sparsified zonotope."""
        W = as_matrix(matrix)
        return W[:, list(self.indices)] * self.weights

    def to_dict(self) -> SparsificationResultDict:
        return {
            "method": self.method.value,
            "epsilon": self.epsilon,
            "indices": list(self.indices),
            "weights": self.weights.tolist(),
            "certified_factors": [self.lower_factor, self.upper_factor],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SparsificationResult":
        lower, upper = data["certified_factors"]
        return cls(
            indices=tuple(data["indices"]),
            weights=np.asarray(data["weights"], dtype=float),
            epsilon=float(data["epsilon"]),
            method=SparsificationMethod(data["method"]),
            lower_factor=float(lower),
            upper_factor=float(upper),
        )


@dataclass(frozen=True, eq=False)
class LewisState:
    """Fixed point of the l1 Lewis weight iteration."""

    weights: FloatArray
    iterations: int
    residual: float

    @property
    def total(self) -> float:
        return float(self.weights.sum())


@dataclass(frozen=True)
class WalkConfig:
    """
    Schedule of a hit-and-run chain.

    Attributes:
        burn_in (int): steps discarded before the first kept point
        thin (int): steps per kept point
        seed (int): seed of the chain
        chord_tol (Optional[float]): bisection accuracy; None means 1e-9 * R of the body
    """

    burn_in: int = settings.WALK_BURN_IN_BASE
    thin: int = 1
    seed: int = 0
    chord_tol: Optional[float] = None

    def __post_init__(self) -> None:
        if self.burn_in < 0:
            raise InvalidParameter("burn_in must be non-negative")
        if self.thin < 1:
            raise InvalidParameter("thin must be at least 1")
        if self.chord_tol is not None and self.chord_tol <= 0:
            raise InvalidParameter("chord_tol must be positive")

    @classmethod
    def defaults(cls, dim: int, seed: int = 0) -> "WalkConfig":
        """Desk-scale schedule: burn-in 1000 + 50 d, one point every 2 d steps."""
        return cls(
            burn_in=settings.WALK_BURN_IN_BASE + settings.WALK_BURN_IN_PER_DIM * dim,
            thin=2 * dim,
            seed=seed,
        )


@dataclass(frozen=True)
class GapConfig:
    """
    Parameters of the hypercube-sampling gap test.

    Attributes:
        trials (Optional[int]): number of sign vectors T; None means min(1e4, 16 n'^2)
        seed (int): seed of the sign-vector stream
        sparsify_epsilon (float): accuracy of the sparsifier, at most 1/3
        scale_override (Optional[float]): test factor replacing 2 sqrt(n'/ln n')
        exponent_C (float): diagnostic exponent of the n^-C hit probability
        delta_modular (bool): caller asserts the generator matrix is Delta-modular
        verify_delta (bool): confirm Delta-modularity by a determinant scan first
        log_floor (Optional[float]): lower floor applied to ln n' in the test factor
        certify (bool): recompute the exact gauge of a witness when n is small
    """

    trials: Optional[int] = None
    seed: int = 0
    sparsify_epsilon: float = settings.GAP_DEFAULT_EPSILON
    scale_override: Optional[float] = None
    exponent_C: float = 3.0
    delta_modular: bool = False
    verify_delta: bool = False
    log_floor: Optional[float] = None
    certify: bool = True

    def __post_init__(self) -> None:
        if self.trials is not None and self.trials < 1:
            raise InvalidParameter("trials must be at least 1")
        if not 0 < self.sparsify_epsilon <= 1.0 / 3.0 + 1e-12:
            raise EpsilonOutOfRange(
                f"sparsify_epsilon must lie in (0, 1/3], got {self.sparsify_epsilon}"
            )
        if self.scale_override is not None and self.scale_override <= 0:
            raise InvalidParameter("scale_override must be positive")
        if self.exponent_C <= 0:
            raise InvalidParameter("exponent_C must be positive")

    def resolve_trials(self, n_sparsified: int) -> int:
        if self.trials is not None:
            return self.trials
        return min(
            settings.GAP_MAX_TRIALS,
            settings.GAP_TRIALS_PER_SQUARED_GENERATOR * n_sparsified**2,
        )


@dataclass(frozen=True)
class Contained:
    """No tested point left the outer body."""

    trials_run: int
    queries: int
    gauge_bound: float
    n_sparsified: Optional[int] = None

    @property
    def is_witness(self) -> bool:
        return False

    def to_dict(self) -> ContainedDict:
        return {
            "verdict": "contained",
            "trials_run": self.trials_run,
            "queries": self.queries,
            "gauge_bound": self.gauge_bound,
            "n_sparsified": self.n_sparsified,
        }


@dataclass(frozen=True, eq=False)
class Witness:
    """
    A point certified to lie in gauge_bound * K but outside Q.

    Attributes:
        point (FloatArray): the point outside Q
        gauge_bound (float): t with point in t * K
        trial_index (int): zero-based index of the trial that produced the point
        queries (int): membership queries spent up to and including the witness
        n_sparsified (Optional[int]): generators of the sparsified zonotope
        sample (Optional[FloatArray]): the unscaled sample of K, when sampled from K
        gauge_certificate (Optional[float]): exact gauge of point, when computed
    """

    point: FloatArray
    gauge_bound: float
    trial_index: int
    queries: int
    n_sparsified: Optional[int] = None
    sample: Optional[FloatArray] = None
    gauge_certificate: Optional[float] = None

    @property
    def is_witness(self) -> bool:
        return True

    def to_dict(self) -> WitnessDict:
        return {
            "verdict": "witness",
            "point": np.asarray(self.point).tolist(),
            "gauge_bound": self.gauge_bound,
            "trial_index": self.trial_index,
            "queries": self.queries,
            "n_sparsified": self.n_sparsified,
            "gauge_certificate": self.gauge_certificate,
        }


ContainmentVerdict = Union[Contained, Witness]


@dataclass(frozen=True)
class OptBracket:
    """
    Bracket [alpha_low, alpha_high] around max{alpha : alpha K <= Q}.

    alpha_low is the largest scale whose tested points all stayed inside Q and
    alpha_high carries a certified witness outside Q.
    """

    alpha_low: float
    alpha_high: float
    gauge_bound: float
    tests_run: int
    witness: Optional[Witness] = None
    degenerate: bool = False

    def __post_init__(self) -> None:
        if not 0 < self.alpha_low < self.alpha_high:
            raise InvalidParameter(
                f"Bracket must satisfy 0 < low < high, got "
                f"({self.alpha_low}, {self.alpha_high})"
            )

    @property
    def ratio(self) -> float:
        return self.alpha_high / self.alpha_low

    def contains(self, alpha: float, rel_tol: float = 1e-9) -> bool:
        return (
            self.alpha_low * (1 - rel_tol) <= alpha <= self.alpha_high * (1 + rel_tol)
        )

    def to_dict(self) -> OptBracketDict:
        return {
            "alpha_low": self.alpha_low,
            "alpha_high": None if math.isinf(self.alpha_high) else self.alpha_high,
            "ratio": None if math.isinf(self.alpha_high) else self.ratio,
            "gauge_bound": self.gauge_bound,
            "tests_run": self.tests_run,
            "degenerate": self.degenerate,
            "witness": None if self.witness is None else self.witness.to_dict(),
        }


@dataclass(frozen=True)
class NormBracket:
    """Bracket on ||A||_{inf -> p} = max over Z(A) of ||v||_p."""

    p: float
    lower: float
    upper: float
    exact: Optional[float] = None

    def to_dict(self) -> NormBracketDict:
        return {
            "p": "inf" if math.isinf(self.p) else self.p,
            "lower": self.lower,
            "upper": None if math.isinf(self.upper) else self.upper,
            "exact": self.exact,
        }


@dataclass(frozen=True)
class Roundness:
    """Radii with r * B_2 <= Q <= R * B_2; ``certified`` is False for sampled radii."""

    r: float
    R: float
    certified: bool = True

    @property
    def ratio(self) -> float:
        return self.R / self.r


def _utc_now() -> datetime:
    return datetime.now(timezone.utc)


@dataclass
class OracleStats:
    """Thread-safe membership query counter."""

    membership_queries: int = 0
    last_reset: datetime = field(default_factory=_utc_now)
    _lock: threading.Lock = field(
        default_factory=threading.Lock, repr=False, compare=False
    )

    def increment(self, count: int = 1) -> None:
        with self._lock:
            self.membership_queries += count

    def reset(self) -> None:
        with self._lock:
            self.membership_queries = 0
            self.last_reset = _utc_now()

    @property
    def queries(self) -> int:
        with self._lock:
            return self.membership_queries

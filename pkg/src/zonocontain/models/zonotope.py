from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .exceptions import BadShape, DimensionMismatch, InvalidBody
from .wire import DeltaReportDict, NormalizationDict, ZonotopeMetadataDict

FloatArray = NDArray[np.float64]


def as_matrix(values: ArrayLike) -> FloatArray:
    """Coerce ``values`` to a float matrix; a flat sequence is read as one row."""
    matrix = np.array(values, dtype=float)
    if matrix.ndim == 1:
        matrix = matrix.reshape(1, -1)
    if matrix.ndim != 2:
        raise BadShape(f"Expected a matrix, got an array with {matrix.ndim} axes")
    return matrix


def as_vector(values: ArrayLike, dim: int) -> FloatArray:
    """Coerce ``values`` to a float vector of length ``dim``."""
    vector = np.asarray(values, dtype=float).reshape(-1)
    if vector.shape[0] != dim:
        raise DimensionMismatch(
            f"Expected a vector of length {dim}, got {vector.shape[0]}"
        )
    return vector


@dataclass(frozen=True, eq=False)
class Zonotope:
    """
    Centrally symmetric zonotope Z(W) = {Wx : ||x||_inf <= 1}.

    Attributes:
        generators (FloatArray): d x n generator matrix, columns w_1..w_n
        dropped_zero_columns (Tuple[int, ...]): input columns removed because they were zero
    """

    generators: FloatArray
    dropped_zero_columns: Tuple[int, ...] = ()

    def __post_init__(self) -> None:
        """Validate the generator matrix and freeze a private copy of it."""
        matrix = as_matrix(self.generators)
        if matrix.shape[0] < 1 or matrix.shape[1] < 1:
            raise BadShape(
                f"Zonotope needs d >= 1 and n >= 1, got shape {matrix.shape}"
            )
        if not np.all(np.isfinite(matrix)):
            raise BadShape("Generator matrix contains non-finite entries")
        if np.any(np.all(matrix == 0.0, axis=0)):
            raise BadShape("Zero generators must be dropped, use Zonotope.from_matrix")
        matrix.setflags(write=False)
        object.__setattr__(self, "generators", matrix)
        dropped = tuple(self.dropped_zero_columns)
        object.__setattr__(self, "dropped_zero_columns", dropped)

    @classmethod
    def from_matrix(cls, values: ArrayLike) -> "Zonotope":
        """Build a zonotope, dropping zero columns and recording their indices."""
        matrix = as_matrix(values)
        zero = np.all(matrix == 0.0, axis=0)
        if zero.all():
            raise BadShape("Every generator is zero")
        dropped = tuple(int(i) for i in np.flatnonzero(zero))
        return cls(generators=matrix[:, ~zero], dropped_zero_columns=dropped)

    @property
    def dim(self) -> int:
        return int(self.generators.shape[0])

    @property
    def count(self) -> int:
        return int(self.generators.shape[1])

    @cached_property
    def rank(self) -> int:
        return int(np.linalg.matrix_rank(self.generators))

    @cached_property
    def column_norms(self) -> FloatArray:
        return np.linalg.norm(self.generators, axis=0)

    @property
    def is_full_dimensional(self) -> bool:
        return self.rank == self.dim

    def support(self, direction: ArrayLike) -> float:
        """Support function h_Z(a) = ||W^T a||_1."""
        a = as_vector(direction, self.dim)
        return float(np.abs(self.generators.T @ a).sum())

    def scaled(self, factor: float) -> "Zonotope":
        """Return factor * Z; a negative factor gives the same set as |factor|."""
        if factor == 0:
            raise InvalidBody("Scaling a zonotope by zero collapses it to a point")
        return Zonotope(generators=abs(factor) * self.generators)

    def transformed(self, transform: ArrayLike) -> "Zonotope":
        """Return the image T(Z), generated by T W."""
        matrix = as_matrix(transform)
        if matrix.shape[1] != self.dim:
            raise DimensionMismatch(
                f"Transform has {matrix.shape[1]} columns, zonotope has dimension {self.dim}"
            )
        return Zonotope.from_matrix(matrix @ self.generators)

    def metadata(self) -> ZonotopeMetadataDict:
        """Sidecar metadata stored next to generator CSV files."""
        return {
            "d": self.dim,
            "n": self.count,
            "dropped_zero_columns": list(self.dropped_zero_columns),
        }


@dataclass(frozen=True, eq=False)
class HPolytope:
    """
    Polytope {x : A x <= b} with the origin in its interior.

    Attributes:
        normals (FloatArray): m x d matrix A, one nonzero row per facet
        offsets (FloatArray): length-m vector b, all entries positive
    """

    normals: FloatArray
    offsets: FloatArray

    def __post_init__(self) -> None:
        A = as_matrix(self.normals)
        b = np.asarray(self.offsets, dtype=float).reshape(-1)
        if A.shape[0] != b.shape[0]:
            raise BadShape(f"{A.shape[0]} normals but {b.shape[0]} offsets")
        if np.any(b <= 0):
            raise InvalidBody("Offsets must be positive so the origin is interior")
        if np.any(np.all(A == 0.0, axis=1)):
            raise InvalidBody("Normals must be nonzero")
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "normals", A)
        object.__setattr__(self, "offsets", b)

    @classmethod
    def box(cls, dim: int, radius: float = 1.0) -> "HPolytope":
        """The cube radius * B_inf^d."""
        eye = np.eye(dim)
        offsets = np.full(2 * dim, float(radius))
        return cls(normals=np.vstack([eye, -eye]), offsets=offsets)

    @classmethod
    def symmetric(cls, normals: ArrayLike, offsets: ArrayLike) -> "HPolytope":
        """{x : |a_j . x| <= b_j}, stored with both signs of every row."""
        A = as_matrix(normals)
        b = np.asarray(offsets, dtype=float).reshape(-1)
        return cls(normals=np.vstack([A, -A]), offsets=np.concatenate([b, b]))

    @property
    def dim(self) -> int:
        return int(self.normals.shape[1])

    def scaled(self, factor: float) -> "HPolytope":
        if factor <= 0:
            raise InvalidBody("Scale factor must be positive")
        return HPolytope(normals=self.normals, offsets=factor * self.offsets)

    def contains(self, point: ArrayLike, tol: float) -> bool:
        x = as_vector(point, self.dim)
        slack = tol * np.linalg.norm(self.normals, axis=1)
        return bool(np.all(self.normals @ x <= self.offsets + slack))


@dataclass(frozen=True)
class DeltaModularityReport:
    """
    Result of scanning all d x d subdeterminants of a generator matrix.

    Attributes:
        min_abs_det (float): smallest |det| among nonsingular submatrices
        max_abs_det (float): largest |det|, the Delta of the matrix
        num_submatrices (int): number of d-subsets scanned
        num_nonsingular (int): number of nonsingular submatrices among them
        is_delta_modular (bool): whether min_abs_det >= 1 - tol
    """

    min_abs_det: float
    max_abs_det: float
    num_submatrices: int
    num_nonsingular: int
    is_delta_modular: bool

    @property
    def delta(self) -> float:
        return self.max_abs_det

    @property
    def ratio(self) -> float:
        """max |det| / min |det|, the spread that bounds every facet band."""
        return self.max_abs_det / self.min_abs_det

    def to_dict(self) -> DeltaReportDict:
        return {
            "min_abs_det": self.min_abs_det,
            "max_abs_det": self.max_abs_det,
            "num_submatrices": self.num_submatrices,
            "num_nonsingular": self.num_nonsingular,
            "is_delta_modular": self.is_delta_modular,
        }


@dataclass(frozen=True, eq=False)
class FacetProfile:
    """Band of |u . w_i| values for a normal u orthogonal to d-1 generators."""

    normal: FloatArray
    alpha: float
    beta: float
    zero_indices: Tuple[int, ...]

    @property
    def ratio(self) -> float:
        return self.beta / self.alpha

    def within(self, delta: float, tol: float = 1e-9) -> bool:
        return self.ratio <= delta + tol


@dataclass(frozen=True, eq=False)
class NormalizationResult:
    """
    Output of the whiten-and-split normalization loop.

    Attributes:
        transform (FloatArray): invertible d x d matrix T with T(Z) = normalized
        normalized (Zonotope): generators with orthonormal rows and short columns
        split_map (Dict[int, List[int]]): original column -> columns of the output
        iterations (int): number of whitening passes
        splits (int): number of column splits performed
    """

    transform: FloatArray
    normalized: Zonotope
    split_map: Dict[int, List[int]] = field(default_factory=dict)
    iterations: int = 0
    splits: int = 0

    def to_dict(self) -> NormalizationDict:
        return {
            "transform": self.transform.tolist(),
            "generators": self.normalized.generators.tolist(),
            "split_map": {str(k): list(v) for k, v in self.split_map.items()},
            "iterations": self.iterations,
            "splits": self.splits,
        }

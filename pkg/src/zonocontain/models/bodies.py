"""Declarative outer-body descriptions, serialized as JSON with a ``type`` tag."""

from enum import Enum
from typing import Annotated, Any, Dict, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, model_validator
from pydantic import ValidationError as PydanticValidationError

from .exceptions import InvalidBody
from .zonotope import FloatArray, HPolytope


class BodyType(Enum):
    """Supported outer-body variants."""

    HPOLY = "hpoly"
    LP_BALL = "lp_ball"
    ELLIPSOID = "ellipsoid"
    SCALED = "scaled"
    POLAR_OF_ZONOTOPE = "polar_of_zonotope"
    POLAR = "polar"


class _BodyModel(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid", ser_json_inf_nan="strings")


class HPolyBody(_BodyModel):
    """{x : A x <= b} with b > 0."""

    type: Literal["hpoly"] = "hpoly"
    normals: List[List[float]]
    offsets: List[float]

    @model_validator(mode="after")
    def _check(self) -> "HPolyBody":
        A = np.asarray(self.normals, dtype=float)
        b = np.asarray(self.offsets, dtype=float)
        if A.ndim != 2 or A.shape[0] == 0 or A.shape[0] != b.shape[0]:
            raise ValueError("normals must be an m x d matrix matching m offsets")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise ValueError("normals and offsets must be finite")
        if np.any(b <= 0):
            raise ValueError("offsets must be positive")
        if np.any(np.all(A == 0.0, axis=1)):
            raise ValueError("normals must be nonzero")
        return self

    @classmethod
    def from_polytope(cls, polytope: HPolytope) -> "HPolyBody":
        return cls(normals=polytope.normals.tolist(), offsets=polytope.offsets.tolist())

    @classmethod
    def box(cls, dim: int, radius: float = 1.0) -> "HPolyBody":
        return cls.from_polytope(HPolytope.box(dim, radius))

    @property
    def dim(self) -> int:
        return len(self.normals[0])

    def polytope(self) -> HPolytope:
        return HPolytope(
            normals=np.asarray(self.normals), offsets=np.asarray(self.offsets)
        )


class LpBallBody(_BodyModel):
    """radius * B_p; ``dim`` is needed only for roundness when p != 2."""

    type: Literal["lp_ball"] = "lp_ball"
    p: float = Field(ge=1.0)
    radius: float = Field(gt=0.0)
    dim: Optional[int] = Field(default=None, ge=1)


class EllipsoidBody(_BodyModel):
    """{x : x . M x <= 1} with M symmetric positive definite."""

    type: Literal["ellipsoid"] = "ellipsoid"
    shape: List[List[float]]

    @model_validator(mode="after")
    def _check(self) -> "EllipsoidBody":
        M = np.asarray(self.shape, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] == 0:
            raise ValueError("shape must be a square matrix")
        if not np.all(np.isfinite(M)):
            raise ValueError("shape must be finite")
        if not np.allclose(M, M.T, rtol=1e-12, atol=1e-12):
            raise ValueError("shape must be symmetric")
        if np.linalg.eigvalsh(M).min() <= 0:
            raise ValueError("shape must be positive definite")
        return self

    @classmethod
    def diagonal(cls, entries: List[float]) -> "EllipsoidBody":
        return cls(shape=np.diag(np.asarray(entries, dtype=float)).tolist())

    @property
    def dim(self) -> int:
        return len(self.shape)

    def matrix(self) -> FloatArray:
        return np.asarray(self.shape, dtype=float)


class ScaledBody(_BodyModel):
    """factor * inner."""

    type: Literal["scaled"] = "scaled"
    inner: "BodySpec"
    factor: float = Field(gt=0.0)


class PolarOfZonotopeBody(_BodyModel):
    """Polar of Z(W): {y : ||W^T y||_1 <= 1}."""

    type: Literal["polar_of_zonotope"] = "polar_of_zonotope"
    generators: List[List[float]]

    @model_validator(mode="after")
    def _check(self) -> "PolarOfZonotopeBody":
        W = np.asarray(self.generators, dtype=float)
        if W.ndim != 2 or W.size == 0:
            raise ValueError("generators must be a d x n matrix")
        if not np.all(np.isfinite(W)):
            raise ValueError("generators must be finite")
        return self

    @property
    def dim(self) -> int:
        return len(self.generators)

    def matrix(self) -> FloatArray:
        return np.asarray(self.generators, dtype=float)


class PolarBody(_BodyModel):
    """Polar of an arbitrary supported body: {y : h_inner(y) <= 1}."""

    type: Literal["polar"] = "polar"
    inner: "BodySpec"


BodySpec = Annotated[
    Union[
        HPolyBody,
        LpBallBody,
        EllipsoidBody,
        ScaledBody,
        PolarOfZonotopeBody,
        PolarBody,
    ],
    Field(discriminator="type"),
]

ScaledBody.model_rebuild()
PolarBody.model_rebuild()

_BODY_ADAPTER: TypeAdapter[Any] = TypeAdapter(BodySpec)


def parse_body(data: Union[str, bytes, Dict[str, Any]]) -> BodySpec:
    """
    Parse a body description from a JSON document or an already decoded dict.

    Raises:
        InvalidBody: If the document does not describe a valid body
    """
    try:
        if isinstance(data, (str, bytes)):
            return _BODY_ADAPTER.validate_json(data)  # type: ignore[no-any-return]
        return _BODY_ADAPTER.validate_python(data)  # type: ignore[no-any-return]
    except PydanticValidationError as e:
        raise InvalidBody(f"Invalid body specification: {e}") from e


def dump_body(body: BodySpec) -> str:
    """Serialize a body to JSON."""
    return body.model_dump_json()


def body_dimension(body: BodySpec) -> Optional[int]:
    """Ambient dimension of ``body``, or None for dimension-free balls."""
    if isinstance(body, (HPolyBody, EllipsoidBody, PolarOfZonotopeBody)):
        return body.dim
    if isinstance(body, LpBallBody):
        return body.dim
    return body_dimension(body.inner)

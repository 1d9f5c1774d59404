"""Membership oracles for the outer bodies described by ``BodySpec``."""

import logging
import math
from abc import ABC, abstractmethod
from typing import Optional

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..config import settings
from ..models.bodies import (
    BodySpec,
    EllipsoidBody,
    HPolyBody,
    LpBallBody,
    PolarBody,
    PolarOfZonotopeBody,
    ScaledBody,
    body_dimension,
)
from ..models.exceptions import (
    DimensionMismatch,
    InvalidBody,
    UnsupportedBody,
)
from ..models.results import OracleStats, Roundness
from ..models.zonotope import FloatArray, Zonotope, as_matrix, as_vector
from . import geometry
from .lp import solve_inequality_form

logger = logging.getLogger(__name__)

BoolArray = NDArray[np.bool_]


def dual_exponent(p: float) -> float:
    """q with 1/p + 1/q = 1."""
    if p == 1.0:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


class MembershipOracle(ABC):
    """
    Counting membership oracle of a centered convex body Q.

    Public ``membership`` calls add one query per tested point to ``stats``;
    composite oracles evaluate their parts through the uncounted ``_contains``.
    """

    def __init__(
        self, dim: Optional[int], tol: float = settings.MEMBERSHIP_TOL
    ) -> None:
        self._dim = dim
        self.tol = tol
        self.stats = OracleStats()

    @property
    def dim(self) -> Optional[int]:
        return self._dim

    def _check_point(self, x: ArrayLike) -> FloatArray:
        point = np.asarray(x, dtype=float).reshape(-1)
        if self._dim is not None and point.shape[0] != self._dim:
            raise DimensionMismatch(
                f"Body has dimension {self._dim}, point has {point.shape[0]}"
            )
        return point

    def _check_batch(self, X: ArrayLike) -> FloatArray:
        points = as_matrix(X)
        if self._dim is not None and points.shape[1] != self._dim:
            raise DimensionMismatch(
                f"Body has dimension {self._dim}, points have {points.shape[1]}"
            )
        return points

    def membership(self, x: ArrayLike) -> bool:
        """Whether x lies in Q up to the additive tolerance; counts one query."""
        point = self._check_point(x)
        self.stats.increment()
        return self._contains(point)

    def membership_batch(self, X: ArrayLike) -> BoolArray:
        """Membership of every row of X; counts one query per row."""
        points = self._check_batch(X)
        self.stats.increment(points.shape[0])
        return self._contains_batch(points)

    @abstractmethod
    def _contains(self, x: FloatArray) -> bool:
        pass

    def _contains_batch(self, X: FloatArray) -> BoolArray:
        return np.fromiter((self._contains(x) for x in X), dtype=bool, count=len(X))

    @abstractmethod
    def roundness(self) -> Roundness:
        """Radii with r B_2 <= Q <= R B_2."""
        pass

    def support(self, direction: ArrayLike) -> float:
        """Exact support function h_Q(a)."""
        raise UnsupportedBody(f"{type(self).__name__} has no exact support function")

    def _checked_roundness(self, radii: Roundness) -> Roundness:
        if radii.ratio > settings.ILL_ROUNDED_RATIO:
            logger.warning(
                "Body is ill-rounded: R / r = %.3g exceeds %.3g",
                radii.ratio,
                settings.ILL_ROUNDED_RATIO,
            )
        return radii

    @staticmethod
    def create(body: BodySpec, dim: Optional[int] = None) -> "MembershipOracle":
        """
        Factory method building the oracle of a body description.

        Args:
            body (BodySpec): the body
            dim (Optional[int]): ambient dimension for dimension-free balls
        """
        if isinstance(body, HPolyBody):
            return HPolyOracle(body)
        elif isinstance(body, LpBallBody):
            return LpBallOracle(body, dim)
        elif isinstance(body, EllipsoidBody):
            return EllipsoidOracle(body)
        elif isinstance(body, ScaledBody):
            return ScaledOracle(MembershipOracle.create(body.inner, dim), body.factor)
        elif isinstance(body, PolarOfZonotopeBody):
            return PolarOfZonotopeOracle(body)
        elif isinstance(body, PolarBody):
            return PolarOracle(MembershipOracle.create(body.inner, dim))
        raise UnsupportedBody(f"Unsupported body: {body!r}")


class HPolyOracle(MembershipOracle):
    """{x : A x <= b + tol ||a_j||}."""

    def __init__(self, body: HPolyBody) -> None:
        super().__init__(body.dim)
        self.polytope = body.polytope()
        self._slack = self.polytope.offsets + self.tol * np.linalg.norm(
            self.polytope.normals, axis=1
        )

    def _contains(self, x: FloatArray) -> bool:
        return bool(np.all(self.polytope.normals @ x <= self._slack))

    def _contains_batch(self, X: FloatArray) -> BoolArray:
        return np.all(X @ self.polytope.normals.T <= self._slack, axis=1)

    def support(self, direction: ArrayLike) -> float:
        """max a . x over Q by linear programming."""
        a = as_vector(direction, self.polytope.dim)
        if not np.any(a):
            return 0.0
        result = solve_inequality_form(-a, self.polytope.normals, self.polytope.offsets)
        result.require_optimal("H-polytope support program")
        return -result.value

    def roundness(self) -> Roundness:
        """r = min_j b_j / ||a_j||; R = sqrt(d) * largest coordinate bound over Q."""
        A, b = self.polytope.normals, self.polytope.offsets
        r = float((b / np.linalg.norm(A, axis=1)).min())
        d = self.polytope.dim
        bound = 0.0
        for i in range(d):
            e = np.zeros(d)
            e[i] = 1.0
            bound = max(bound, self.support(e), self.support(-e))
        return self._checked_roundness(Roundness(r=r, R=math.sqrt(d) * bound))


class LpBallOracle(MembershipOracle):
    """radius * B_p; ||x||_p <= radius + tol."""

    def __init__(self, body: LpBallBody, dim: Optional[int] = None) -> None:
        if body.dim is not None and dim is not None and body.dim != dim:
            raise DimensionMismatch(f"Ball has dimension {body.dim}, requested {dim}")
        super().__init__(body.dim if body.dim is not None else dim)
        self.p = body.p
        self.radius = body.radius

    def _contains(self, x: FloatArray) -> bool:
        return bool(np.linalg.norm(x, ord=self.p) <= self.radius + self.tol)

    def _contains_batch(self, X: FloatArray) -> BoolArray:
        return np.linalg.norm(X, ord=self.p, axis=1) <= self.radius + self.tol

    def support(self, direction: ArrayLike) -> float:
        """radius * ||a||_q with q the dual exponent."""
        a = self._check_point(direction)
        return self.radius * float(np.linalg.norm(a, ord=dual_exponent(self.p)))

    def roundness(self) -> Roundness:
        """Standard l_p / l_2 sandwich; needs the dimension unless p = 2."""
        if self.p == 2.0:
            return Roundness(r=self.radius, R=self.radius)
        if self._dim is None:
            raise InvalidBody("Roundness of an l_p ball with p != 2 needs its dimension")
        exponent = 0.5 - (0.0 if math.isinf(self.p) else 1.0 / self.p)
        factor = self._dim**exponent
        return self._checked_roundness(
            Roundness(
                r=self.radius * min(1.0, factor), R=self.radius * max(1.0, factor)
            )
        )


class EllipsoidOracle(MembershipOracle):
    """{x : x . M x <= 1 + tol}."""

    def __init__(self, body: EllipsoidBody) -> None:
        super().__init__(body.dim)
        self.shape = body.matrix()
        self._inverse = np.linalg.inv(self.shape)

    def _contains(self, x: FloatArray) -> bool:
        return bool(x @ self.shape @ x <= 1.0 + self.tol)

    def _contains_batch(self, X: FloatArray) -> BoolArray:
        return np.einsum("ij,jk,ik->i", X, self.shape, X) <= 1.0 + self.tol

    def support(self, direction: ArrayLike) -> float:
        a = self._check_point(direction)
        return math.sqrt(max(float(a @ self._inverse @ a), 0.0))

    def roundness(self) -> Roundness:
        eigenvalues = np.linalg.eigvalsh(self.shape)
        r = float(eigenvalues.max()) ** -0.5
        R = float(eigenvalues.min()) ** -0.5
        return self._checked_roundness(Roundness(r=r, R=R))


class ScaledOracle(MembershipOracle):
    """factor * inner; x is inside iff x / factor is inside the inner body."""

    def __init__(self, inner: MembershipOracle, factor: float) -> None:
        super().__init__(inner.dim, inner.tol)
        self.inner = inner
        self.factor = factor

    def _contains(self, x: FloatArray) -> bool:
        return self.inner._contains(x / self.factor)

    def _contains_batch(self, X: FloatArray) -> BoolArray:
        return self.inner._contains_batch(X / self.factor)

    def support(self, direction: ArrayLike) -> float:
        return self.factor * self.inner.support(direction)

    def roundness(self) -> Roundness:
        radii = self.inner.roundness()
        return Roundness(
            r=self.factor * radii.r, R=self.factor * radii.R, certified=radii.certified
        )


class PolarOfZonotopeOracle(MembershipOracle):
    """Polar of Z(W): {y : ||W^T y||_1 <= 1 + tol}."""

    def __init__(self, body: PolarOfZonotopeBody) -> None:
        super().__init__(body.dim)
        self.zonotope = Zonotope.from_matrix(body.matrix())

    def _contains(self, x: FloatArray) -> bool:
        return bool(np.abs(self.zonotope.generators.T @ x).sum() <= 1.0 + self.tol)

    def _contains_batch(self, X: FloatArray) -> BoolArray:
        return np.abs(X @ self.zonotope.generators).sum(axis=1) <= 1.0 + self.tol

    def support(self, direction: ArrayLike) -> float:
        """The support function of the polar is the gauge of Z."""
        return geometry.gauge(self.zonotope, direction)

    def roundness(self) -> Roundness:
        """
        R = 1 / sigma_min(W) is certified; r is the larger of the certified
        1 / sum ||w_i|| and a sphere-sampled estimate with a safety factor.
        """
        W = self.zonotope.generators
        sigma_min = float(np.linalg.svd(W, compute_uv=False).min())
        if sigma_min <= 0 or self.zonotope.rank < self.zonotope.dim:
            raise InvalidBody("Polar of a lower-dimensional zonotope is unbounded")
        certified_r = 1.0 / float(self.zonotope.column_norms.sum())
        rng = np.random.default_rng(0)
        directions = geometry.random_unit_directions(
            rng, settings.POLAR_ROUNDNESS_DIRECTIONS, self.zonotope.dim
        )
        sampled_max = float(np.abs(directions @ W).sum(axis=1).max())
        sampled_r = 1.0 / (settings.POLAR_ROUNDNESS_SAFETY * sampled_max)
        if sampled_r > certified_r:
            logger.warning(
                "Polar-of-zonotope inradius %.4g is a sampled estimate, not certified",
                sampled_r,
            )
            radii = Roundness(r=sampled_r, R=1.0 / sigma_min, certified=False)
        else:
            radii = Roundness(r=certified_r, R=1.0 / sigma_min)
        return self._checked_roundness(radii)


class PolarOracle(MembershipOracle):
    """Polar of an arbitrary supported body: {y : h_inner(y) <= 1 + tol}."""

    def __init__(self, inner: MembershipOracle) -> None:
        super().__init__(inner.dim, inner.tol)
        self.inner = inner

    def _contains(self, x: FloatArray) -> bool:
        return self.inner.support(x) <= 1.0 + self.tol

    def roundness(self) -> Roundness:
        radii = self.inner.roundness()
        return Roundness(r=1.0 / radii.R, R=1.0 / radii.r, certified=radii.certified)


def membership(body: BodySpec, x: ArrayLike) -> bool:
    """One-shot membership test of a body description."""
    point = np.asarray(x, dtype=float).reshape(-1)
    return MembershipOracle.create(body, dim=point.shape[0]).membership(point)


def roundness(body: BodySpec, dim: Optional[int] = None) -> Roundness:
    """Radii of a body description; ``dim`` fills in dimension-free balls."""
    return MembershipOracle.create(body, dim=dim or body_dimension(body)).roundness()


def support(body: BodySpec, direction: ArrayLike) -> float:
    """Exact support function of a body description."""
    a = np.asarray(direction, dtype=float).reshape(-1)
    return MembershipOracle.create(body, dim=a.shape[0]).support(a)

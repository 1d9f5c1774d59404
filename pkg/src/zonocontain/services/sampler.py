"""Hit-and-run sampling from bodies known only through a membership oracle."""

import itertools
import logging
from dataclasses import dataclass
from typing import Dict, Optional, Tuple, Union

import numpy as np
from numpy.typing import ArrayLike

from ..config import settings
from ..models.bodies import BodySpec, body_dimension
from ..models.exceptions import (
    InsufficientSamples,
    InvalidBody,
    InvalidParameter,
    OracleInconsistent,
    StartNotInterior,
)
from ..models.results import Roundness, WalkConfig
from ..models.zonotope import FloatArray, as_matrix
from .geometry import random_unit_directions
from .oracles import MembershipOracle

logger = logging.getLogger(__name__)

MIN_DIAGNOSTIC_POINTS = 1000


def _as_oracle(
    body: Union[BodySpec, MembershipOracle], dim: Optional[int]
) -> MembershipOracle:
    if isinstance(body, MembershipOracle):
        return body
    return MembershipOracle.create(body, dim=dim)


class HitAndRunChain:
    """
    A single seeded hit-and-run chain.

    Each step draws a uniform direction, locates both chord endpoints by ray
    doubling up to 2R followed by bisection, and moves to a uniform point of the chord.
    """

    def __init__(
        self,
        oracle: MembershipOracle,
        start: FloatArray,
        cfg: WalkConfig,
        radii: Optional[Roundness] = None,
    ) -> None:
        self.oracle = oracle
        self.cfg = cfg
        self.radii = radii or oracle.roundness()
        self.chord_tol = (
            cfg.chord_tol
            if cfg.chord_tol is not None
            else settings.WALK_CHORD_REL_TOL * self.radii.R
        )
        self.rng = np.random.default_rng(cfg.seed)
        self.position = np.asarray(start, dtype=float).copy()
        self._check_start()

    def _check_start(self) -> None:
        d = self.position.shape[0]
        margin = settings.WALK_START_MARGIN * self.radii.r
        offsets = margin * np.eye(d)
        points = np.vstack(
            [self.position, self.position + offsets, self.position - offsets]
        )
        if not self.oracle.membership_batch(points).all():
            raise StartNotInterior("Start point is not interior to the body")

    def chord(self, direction: FloatArray) -> Tuple[float, float]:
        """
        Distances to the boundary along -direction and +direction.

        Raises:
            OracleInconsistent: If a ray stays inside beyond 2R, or membership is
                not monotone along it (a point at half the inner distance is
                rejected, or one at twice the outer distance is accepted)
        """
        signs = np.array([1.0, -1.0])
        lo = np.zeros(2)
        hi = np.full(2, self.radii.r)
        limit = 2.0 * self.radii.R + self.chord_tol
        expanding = np.ones(2, dtype=bool)
        while expanding.any():
            idx = np.flatnonzero(expanding)
            points = self.position + (signs[idx] * hi[idx])[:, None] * direction
            inside = self.oracle.membership_batch(points)
            for k, ok in zip(idx, inside):
                if not ok:
                    expanding[k] = False
                    continue
                lo[k] = hi[k]
                hi[k] *= 2.0
                if lo[k] > limit:
                    raise OracleInconsistent(
                        f"Ray stays inside beyond 2R = {2.0 * self.radii.R:.4g}"
                    )
        for _ in range(settings.WALK_BISECTION_ROUNDS):
            active = np.flatnonzero(hi - lo > self.chord_tol)
            if active.size == 0:
                break
            mid = 0.5 * (lo[active] + hi[active])
            inside = self.oracle.membership_batch(
                self.position + (signs[active] * mid)[:, None] * direction
            )
            lo[active] = np.where(inside, mid, lo[active])
            hi[active] = np.where(inside, hi[active], mid)
        self._check_monotone(direction, signs * lo, signs * hi)
        return float(lo[1]), float(lo[0])

    def _check_monotone(
        self, direction: FloatArray, inner: FloatArray, outer: FloatArray
    ) -> None:
        steps = np.concatenate([0.5 * inner, 2.0 * outer])
        verdicts = self.oracle.membership_batch(
            self.position + steps[:, None] * direction
        )
        if not verdicts[:2].all() or verdicts[2:].any():
            raise OracleInconsistent("Membership is not monotone along the sampled ray")

    def step(self) -> FloatArray:
        direction = random_unit_directions(self.rng, 1, self.position.shape[0])[0]
        backward, forward = self.chord(direction)
        self.position = self.position + self.rng.uniform(-backward, forward) * direction
        return self.position

    def run(self, count: int) -> FloatArray:
        for _ in range(self.cfg.burn_in):
            self.step()
        points = np.empty((count, self.position.shape[0]))
        for i in range(count):
            for _ in range(self.cfg.thin):
                self.step()
            points[i] = self.position
        return points


def hit_and_run(
    body: Union[BodySpec, MembershipOracle],
    start: Optional[ArrayLike],
    count: int,
    cfg: WalkConfig,
    dim: Optional[int] = None,
) -> FloatArray:
    """
    Draw ``count`` approximately uniform points from a body.

    Args:
        body: body description or an existing oracle
        start (Optional[ArrayLike]): interior start, the origin when None
        count (int): number of points to keep
        cfg (WalkConfig): burn-in, thinning, seed and chord tolerance
        dim (Optional[int]): ambient dimension for dimension-free balls

    Returns:
        FloatArray: count x d array of points, fully determined by cfg.seed

    Raises:
        StartNotInterior: If the start fails membership with margin
        OracleInconsistent: If a ray stays inside beyond 2R or leaves and re-enters
    """
    if count < 0:
        raise InvalidParameter("count must be non-negative")
    if start is not None:
        origin = np.asarray(start, dtype=float).reshape(-1)
        dim = origin.shape[0]
    else:
        if dim is None and not isinstance(body, MembershipOracle):
            dim = body_dimension(body)
        if dim is None and isinstance(body, MembershipOracle):
            dim = body.dim
        if dim is None:
            raise InvalidBody("Sampling needs the dimension of the body")
        origin = np.zeros(dim)
    oracle = _as_oracle(body, dim)
    chain = HitAndRunChain(oracle, origin, cfg)
    points = chain.run(count)
    logger.debug(
        "hit-and-run drew %d points with %d membership queries",
        count,
        oracle.stats.queries,
    )
    return points


@dataclass(frozen=True, eq=False)
class UniformityReport:
    """
    Sanity statistics of a point cloud drawn from a centered body.

    Attributes:
        mean (FloatArray): per-coordinate mean
        variance (FloatArray): per-coordinate variance
        orthant_fractions (Optional[Dict[Tuple[int, ...], float]]): share of points per orthant, d <= 4
        symmetry (float): max |frac(o) - frac(-o)| over orthants, or the mean norm when d > 4
        membership_pass_rate (float): share of points accepted by the oracle
    """

    mean: FloatArray
    variance: FloatArray
    orthant_fractions: Optional[Dict[Tuple[int, ...], float]]
    symmetry: float
    membership_pass_rate: float


def uniformity_diagnostics(
    points: ArrayLike, body: Union[BodySpec, MembershipOracle]
) -> UniformityReport:
    """
    Moment, orthant and membership statistics of sampled points.

    Raises:
        InsufficientSamples: If fewer than 1000 points are given
    """
    P = as_matrix(points)
    count, d = P.shape
    if count < MIN_DIAGNOSTIC_POINTS:
        raise InsufficientSamples(
            f"Diagnostics need at least {MIN_DIAGNOSTIC_POINTS} points, got {count}"
        )
    oracle = _as_oracle(body, d)
    passed = float(oracle.membership_batch(P).mean())

    fractions: Optional[Dict[Tuple[int, ...], float]] = None
    if d <= 4:
        signs = np.where(P >= 0, 1, -1)
        fractions = {}
        for orthant in itertools.product((1, -1), repeat=d):
            fractions[orthant] = float(np.all(signs == orthant, axis=1).mean())
        symmetry = max(
            abs(fractions[o] - fractions[tuple(-s for s in o)]) for o in fractions
        )
    else:
        symmetry = float(np.linalg.norm(P.mean(axis=0)))
    return UniformityReport(
        mean=P.mean(axis=0),
        variance=P.var(axis=0),
        orthant_fractions=fractions,
        symmetry=float(symmetry),
        membership_pass_rate=passed,
    )

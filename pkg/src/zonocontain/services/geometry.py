"""Exact geometric primitives for zonotopes at desk scale."""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike
from scipy.spatial import ConvexHull, QhullError

from ..config import settings
from ..models.exceptions import (
    DependentSubset,
    InvalidParameter,
    NoConvergence,
    RankDeficient,
    TooManyGenerators,
    UnboundedBody,
    ZeroDirection,
)
from ..models.zonotope import (
    DeltaModularityReport,
    FacetProfile,
    FloatArray,
    HPolytope,
    NormalizationResult,
    Zonotope,
    as_matrix,
    as_vector,
)
from . import linalg
from .lp import LPStatus, zonotope_gauge_lp

logger = logging.getLogger(__name__)

SupportFunction = Callable[[FloatArray], float]

_DEDUP_DECIMALS = 9
_WIDTH_BATCH = 8192
_Point = Tuple[float, float]


@dataclass(frozen=True, eq=False)
class VertexSet:
    """Extreme points of a zonotope; ``degenerate`` marks rank(W) < d."""

    points: FloatArray
    degenerate: bool = False

    def __len__(self) -> int:
        return int(self.points.shape[0])

    def as_tuples(self, decimals: int = 9) -> List[Tuple[float, ...]]:
        rounded = np.round(self.points, decimals) + 0.0
        return [tuple(float(v) for v in row) for row in rounded]


def support_function(zonotope: Zonotope, direction: ArrayLike) -> float:
    """h_Z(a) = sum_i |w_i . a|."""
    return zonotope.support(direction)


def extreme_point(
    zonotope: Zonotope, direction: ArrayLike, tie_tol: float = settings.TIE_TOL
) -> Tuple[FloatArray, FloatArray]:
    """
    Vertex of Z maximizing a . x.

    Generators with |w_i . a| <= tie_tol are tied and take the sign +1.

    Returns:
        Tuple[FloatArray, FloatArray]: the point W s and the sign vector s

    Raises:
        ZeroDirection: If a = 0
    """
    a = as_vector(direction, zonotope.dim)
    if not np.any(a):
        raise ZeroDirection("Extreme point needs a nonzero direction")
    products = zonotope.generators.T @ a
    signs = np.where(products < -tie_tol, -1.0, 1.0)
    return zonotope.generators @ signs, signs


def gauge(
    zonotope: Zonotope, point: ArrayLike, tol: float = settings.GAUGE_TOL
) -> float:
    """
    Minkowski functional min{t >= 0 : p in t Z}, solved as a linear program.

    Raises:
        RankDeficient: If p lies outside the column span of W
        LPNumerical: If the solver stops without an optimum
    """
    p = as_vector(point, zonotope.dim)
    if not np.any(p):
        return 0.0
    result = zonotope_gauge_lp(zonotope.generators, p, tol=tol)
    if result.status is LPStatus.INFEASIBLE:
        raise RankDeficient("Point lies outside the span of the generators")
    result.require_optimal("gauge program")
    return max(result.value, 0.0)


def _dedup_rows(points: FloatArray) -> FloatArray:
    scale = max(1.0, float(np.abs(points).max(initial=0.0)))
    keys = np.round(points / scale, _DEDUP_DECIMALS)
    _, index = np.unique(keys, axis=0, return_index=True)
    return points[np.sort(index)]


def _span_basis(columns: FloatArray) -> FloatArray:
    left, singular, _ = np.linalg.svd(columns, full_matrices=False)
    cutoff = 1e-10 * max(float(singular[0]), 1.0)
    return left[:, singular > cutoff]


def _hull_vertices(points: FloatArray, basis: FloatArray) -> FloatArray:
    coords = points @ basis
    if basis.shape[1] == 1:
        return points[[int(np.argmax(coords[:, 0])), int(np.argmin(coords[:, 0]))]]
    try:
        hull = ConvexHull(coords)
    except QhullError:
        logger.debug("Qhull rejected %d candidates, retrying with joggle", len(points))
        hull = ConvexHull(coords, qhull_options="QJ")
    return points[np.sort(hull.vertices)]


def enumerate_vertices(
    zonotope: Zonotope, limit: int = settings.VERTEX_GENERATOR_LIMIT
) -> VertexSet:
    """
    Extreme points of Z as an incremental Minkowski sum of segments.

    Each step adds +-w_i to the current vertex set and keeps only the hull
    vertices in the span of the generators seen so far.

    Raises:
        TooManyGenerators: If n > limit
    """
    if zonotope.count > limit:
        raise TooManyGenerators(
            f"Vertex enumeration supports at most {limit} generators, got {zonotope.count}"
        )
    W = zonotope.generators
    points = np.vstack([W[:, 0], -W[:, 0]])
    for i in range(1, zonotope.count):
        w = W[:, i]
        candidates = _dedup_rows(np.vstack([points + w, points - w]))
        points = _hull_vertices(candidates, _span_basis(W[:, : i + 1]))
    degenerate = zonotope.rank < zonotope.dim
    if degenerate:
        logger.warning(
            "Zonotope has rank %d < %d, vertex set is lower dimensional",
            zonotope.rank,
            zonotope.dim,
        )
    order = np.lexsort(points.T[::-1])
    return VertexSet(points=points[order], degenerate=degenerate)


def enumerate_facet_normals(
    zonotope: Zonotope, limit: int = settings.SUBSET_LIMIT
) -> FloatArray:
    """
    Unit facet normals of Z, one per antipodal pair, first nonzero entry positive.

    Raises:
        RankDeficient: If rank(W) < d
        TooManySubsets: If C(n, d - 1) > limit
    """
    W = zonotope.generators
    d, n = W.shape
    linalg.require_full_row_rank(W)
    if d == 1:
        return np.ones((1, 1))
    linalg.check_subset_limit(n, d - 1, limit)
    found: Dict[Tuple[float, ...], FloatArray] = {}
    for chunk in linalg.iter_subset_chunks(n, d - 1):
        stack = np.transpose(W[:, chunk], (1, 0, 2))
        left, singular, _ = np.linalg.svd(stack, full_matrices=True)
        cutoff = 1e-10 * np.maximum(singular[:, 0], 1.0)
        independent = singular[:, -1] > cutoff
        for u in left[independent, :, -1]:
            u = linalg.canonical_sign(u)
            key = tuple(np.round(u, _DEDUP_DECIMALS) + 0.0)
            found.setdefault(key, u)
    return np.vstack(list(found.values()))


def volume(zonotope: Zonotope, limit: int = settings.SUBSET_LIMIT) -> float:
    """
    Vol(Z) = 2^d * sum over d-subsets S of |det W_S|.

    Raises:
        TooManySubsets: If C(n, d) > limit
    """
    W = zonotope.generators
    d, n = W.shape
    linalg.check_subset_limit(n, d, limit)
    if n < d:
        return 0.0
    threshold = linalg.nonsingular_threshold(W)
    total = 0.0
    for chunk in linalg.iter_subset_chunks(n, d):
        dets = linalg.batched_abs_det(W, chunk)
        total += float(dets[dets > threshold].sum())
    return 2.0**d * total


def exact_opt_containment(
    inner_support: SupportFunction, outer: HPolytope, strict: bool = False
) -> float:
    """
    max{alpha : alpha K <= Q} = min_j b_j / h_K(a_j) for an H-polytope Q.

    Normals with h_K(a_j) = 0 do not constrain alpha.

    Args:
        inner_support (SupportFunction): h_K, positively homogeneous
        outer (HPolytope): Q with the origin in its interior
        strict (bool): raise instead of returning +inf when no normal constrains K

    Raises:
        UnboundedBody: If strict and every h_K(a_j) is zero
    """
    best = math.inf
    for normal, offset in zip(outer.normals, outer.offsets):
        h = float(inner_support(normal))
        if h > 0:
            best = min(best, float(offset) / h)
    if math.isinf(best):
        if strict:
            raise UnboundedBody("No facet normal of Q constrains K")
        logger.warning("No facet normal of Q constrains K, every scale fits")
    return best


def delta_of(
    matrix: ArrayLike, limit: int = settings.SUBSET_LIMIT
) -> DeltaModularityReport:
    """
    Scan every d x d subdeterminant of W.

    Raises:
        RankDeficient: If rank(W) < d
        TooManySubsets: If C(n, d) > limit
    """
    W = as_matrix(matrix)
    d, n = W.shape
    linalg.require_full_row_rank(W)
    total = linalg.check_subset_limit(n, d, limit)
    threshold = linalg.nonsingular_threshold(W)
    low, high, nonsingular = math.inf, 0.0, 0
    for chunk in linalg.iter_subset_chunks(n, d):
        dets = linalg.batched_abs_det(W, chunk)
        kept = dets[dets > threshold]
        if kept.size:
            low = min(low, float(kept.min()))
            high = max(high, float(kept.max()))
            nonsingular += int(kept.size)
    return DeltaModularityReport(
        min_abs_det=low,
        max_abs_det=high,
        num_submatrices=total,
        num_nonsingular=nonsingular,
        is_delta_modular=low >= 1.0 - settings.DELTA_LOWER_TOL,
    )


def facet_profile(
    matrix: ArrayLike, subset: Sequence[int], delta: Optional[float] = None
) -> FacetProfile:
    """
    Band of |u . w_i| for the normal u of the span of ``subset``.

    Args:
        matrix (ArrayLike): d x n generator matrix
        subset (Sequence[int]): d - 1 column indices
        delta (Optional[float]): when given, the band ratio must not exceed it

    Raises:
        DependentSubset: If the selected columns are dependent
        InvalidParameter: If delta is given and beta / alpha > delta + 1e-9
    """
    W = as_matrix(matrix)
    u = linalg.orthogonal_complement_vector(W[:, list(subset)])
    values = np.abs(u @ W)
    scale = np.maximum(np.linalg.norm(W, axis=0), 1.0)
    zero = values <= settings.ZERO_PRODUCT_TOL * scale
    if zero.all():
        raise DependentSubset("Every generator is orthogonal to the subset normal")
    band = values[~zero]
    profile = FacetProfile(
        normal=u,
        alpha=float(band.min()),
        beta=float(band.max()),
        zero_indices=tuple(int(i) for i in np.flatnonzero(zero)),
    )
    if delta is not None and not profile.within(delta):
        raise InvalidParameter(
            f"Band ratio {profile.ratio:.6g} exceeds Delta = {delta:.6g}; "
            "the matrix is not Delta-modular"
        )
    return profile


def _normalized(W: FloatArray) -> Tuple[bool, FloatArray, float]:
    d, n = W.shape
    bound = 2.0 * math.sqrt(d / n)
    long = np.linalg.norm(W, axis=0) > bound * (1 + 1e-12)
    frob = float(np.linalg.norm(W @ W.T - np.eye(d)))
    return (frob <= settings.NORMALIZE_FROB_TOL and not long.any()), long, frob


def normalize(
    zonotope: Zonotope, max_iter: int = settings.NORMALIZE_MAX_ITER
) -> NormalizationResult:
    """
    Whiten and split until W has orthonormal rows and columns of norm <= 2 sqrt(d/n).

    Splitting w into two copies of w/2 keeps Z unchanged, so T(Z) equals the
    normalized zonotope exactly.

    Raises:
        RankDeficient: If rank(W) < d
        NoConvergence: If the conditions still fail after max_iter whitenings
    """
    W = zonotope.generators.copy()
    linalg.require_full_row_rank(W)
    transform = np.eye(zonotope.dim)
    owners = list(range(zonotope.count))
    iterations = splits = 0
    while True:
        if iterations >= max_iter:
            raise NoConvergence(
                f"Normalization did not converge in {max_iter} iterations"
            )
        root = linalg.inverse_sqrt_psd(W @ W.T)
        W = root @ W
        transform = root @ transform
        iterations += 1
        done, long, frob = _normalized(W)
        logger.debug(
            "normalize pass %d: n=%d frobenius=%.3e long=%d",
            iterations,
            W.shape[1],
            frob,
            int(long.sum()),
        )
        if done:
            break
        if not long.any():
            continue
        columns: List[FloatArray] = []
        new_owners: List[int] = []
        for j in range(W.shape[1]):
            copies = 2 if long[j] else 1
            for _ in range(copies):
                columns.append(W[:, j] / copies)
                new_owners.append(owners[j])
        splits += int(long.sum())
        W = np.column_stack(columns)
        owners = new_owners

    split_map: Dict[int, List[int]] = {i: [] for i in range(zonotope.count)}
    for j, owner in enumerate(owners):
        split_map[owner].append(j)
    return NormalizationResult(
        transform=transform,
        normalized=Zonotope(generators=W),
        split_map=split_map,
        iterations=iterations,
        splits=splits,
    )


def random_unit_directions(
    rng: np.random.Generator, count: int, dim: int
) -> FloatArray:
    """Uniform points on the unit sphere S^{dim-1}."""
    g = rng.standard_normal((count, dim))
    norms = np.linalg.norm(g, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return g / norms


def mean_width_estimate(
    zonotope: Zonotope, num_dirs: int, seed: int
) -> Tuple[float, float]:
    """
    Monte Carlo mean width 2 E[h_Z(u)] over uniform unit directions.

    Returns:
        Tuple[float, float]: estimate and its standard error

    Raises:
        InvalidParameter: If num_dirs < 100
    """
    if num_dirs < 100:
        raise InvalidParameter("Mean width needs at least 100 directions")
    rng = np.random.default_rng(seed)
    values = []
    remaining = num_dirs
    while remaining > 0:
        batch = min(remaining, _WIDTH_BATCH)
        u = random_unit_directions(rng, batch, zonotope.dim)
        values.append(np.abs(u @ zonotope.generators).sum(axis=1))
        remaining -= batch
    widths = 2.0 * np.concatenate(values)
    return float(widths.mean()), float(widths.std(ddof=1) / math.sqrt(num_dirs))


def _monotone_chain(points: FloatArray) -> FloatArray:
    ordered = sorted({(float(x), float(y)) for x, y in points})
    if len(ordered) <= 2:
        return np.asarray(ordered)

    def cross(o: _Point, a: _Point, b: _Point) -> float:
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: List[_Point] = []
    for p in ordered:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: List[_Point] = []
    for p in reversed(ordered):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.asarray(lower[:-1] + upper[:-1])


def polygon_area(points: ArrayLike) -> float:
    """Shoelace area of the convex hull of planar points."""
    hull = _monotone_chain(as_matrix(points))
    if len(hull) < 3:
        return 0.0
    x, y = hull[:, 0], hull[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def hull_volume(points: ArrayLike) -> float:
    """Volume of conv(points): shoelace for d = 2, Qhull for d >= 3."""
    P = as_matrix(points)
    dim = P.shape[1]
    if dim == 1:
        return float(P.max() - P.min())
    if dim == 2:
        return polygon_area(P)
    if P.shape[0] <= dim:
        return 0.0
    try:
        return float(ConvexHull(P).volume)
    except QhullError:
        return 0.0

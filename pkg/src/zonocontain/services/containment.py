"""
Containment decision procedures.

Hypercube sampling for zonotopes, sampling-based gap containment for general
bodies, binary-search brackets of the optimal scale and their diagnostics.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from numpy.typing import ArrayLike

from ..config import settings
from ..models.bodies import (
    BodySpec,
    EllipsoidBody,
    HPolyBody,
    LpBallBody,
    PolarBody,
    body_dimension,
)
from ..models.exceptions import (
    DegenerateLog,
    InvalidBody,
    InvalidParameter,
    NoWitnessFound,
    SampleBudgetOverflow,
    TooManyVertices,
    UnsupportedBody,
)
from ..models.results import (
    Contained,
    ContainmentVerdict,
    GapConfig,
    NormBracket,
    OptBracket,
    SparsificationResult,
    WalkConfig,
    Witness,
)
from ..models.wire import PolarCheckDict
from ..models.zonotope import FloatArray, Zonotope
from . import geometry, linalg
from .generators import split_axes_matrix
from .oracles import MembershipOracle
from .sampler import hit_and_run
from .seeding import derive_rng, random_signs
from .sparsify import lewis_sample_count, sparsify_delta_modular, sparsify_lewis

logger = logging.getLogger(__name__)

TRIAL_BATCH = 1024

# Stream keys under GapConfig.seed.
_SPARSIFY_STREAM = 0
_TRIAL_STREAM = 1


def gap_factor(n_sparsified: int, log_floor: Optional[float] = None) -> float:
    """
    Test factor 2 sqrt(n' / ln n') with the natural logarithm.

    Raises:
        DegenerateLog: If n' < 2
    """
    if n_sparsified < 2:
        raise DegenerateLog(
            f"Need at least 2 generators after sparsification, got {n_sparsified}"
        )
    log_n = math.log(n_sparsified)
    if log_floor is not None:
        log_n = max(log_n, log_floor)
    return 2.0 * math.sqrt(n_sparsified / log_n)


class GapTester:
    """
    Hypercube-sampling test for a zonotope, sparsified once and reusable at any scale.

    ``run(scale)`` tests the points scale * factor * W' y for seeded sign vectors y,
    where Z' = Z(W') satisfies Z' <= Z.
    """

    def __init__(self, zonotope: Zonotope, cfg: GapConfig) -> None:
        linalg.require_full_row_rank(zonotope.generators)
        self.zonotope = zonotope
        self.cfg = cfg
        self.sparsification: Optional[SparsificationResult] = None
        self.sparse_generators = self._sparsify()
        self.n_sparsified = int(self.sparse_generators.shape[1])
        if cfg.scale_override is not None:
            self.factor = cfg.scale_override
        else:
            self.factor = gap_factor(self.n_sparsified, cfg.log_floor)
        self.trials = cfg.resolve_trials(self.n_sparsified)
        logger.info(
            "Gap test on n=%d generators (n'=%d), factor %.4f, %d trials",
            zonotope.count,
            self.n_sparsified,
            self.factor,
            self.trials,
        )

    def _sparsify(self) -> FloatArray:
        W = self.zonotope.generators
        d, n = W.shape
        eps = self.cfg.sparsify_epsilon
        if self.cfg.delta_modular:
            delta = None
            if self.cfg.verify_delta:
                report = geometry.delta_of(W)
                if not report.is_delta_modular:
                    raise InvalidParameter(
                        "Matrix is not Delta-modular: smallest |det| is "
                        f"{report.min_abs_det:.6g}"
                    )
                delta = report.ratio
            result = sparsify_delta_modular(W, eps, delta)
            self.sparsification = result
            return result.generators(W) / result.upper_factor
        if n <= lewis_sample_count(d, eps):
            return W
        seed = int(derive_rng(self.cfg.seed, _SPARSIFY_STREAM).integers(2**63))
        result = sparsify_lewis(W, eps, seed)
        self.sparsification = result
        return result.generators(W) / result.upper_factor

    def run(self, oracle: MembershipOracle, scale: float = 1.0) -> ContainmentVerdict:
        """Run the trials against ``oracle`` with test points scaled by ``scale``."""
        step = scale * self.factor
        W_sparse = self.sparse_generators
        for batch, start in enumerate(range(0, self.trials, TRIAL_BATCH)):
            size = min(TRIAL_BATCH, self.trials - start)
            rng = derive_rng(self.cfg.seed, _TRIAL_STREAM, batch)
            points = step * (random_signs(rng, size, self.n_sparsified) @ W_sparse.T)
            inside = oracle.membership_batch(points)
            if inside.all():
                continue
            first = int(np.argmin(inside))
            return self._witness(points[first], step, start + first)
        return Contained(
            trials_run=self.trials,
            queries=self.trials,
            gauge_bound=step,
            n_sparsified=self.n_sparsified,
        )

    def _witness(self, point: FloatArray, bound: float, trial: int) -> Witness:
        certificate = None
        small = self.zonotope.count <= settings.GAUGE_CERTIFY_MAX_GENERATORS
        if self.cfg.certify and small:
            certificate = geometry.gauge(self.zonotope, point)
            if certificate > bound + 1e-6:
                logger.warning(
                    "Witness gauge %.6g exceeds the sampling bound %.6g; "
                    "reporting the certified gauge",
                    certificate,
                    bound,
                )
                bound = certificate
        logger.info("Witness found on trial %d", trial)
        return Witness(
            point=point,
            gauge_bound=bound,
            trial_index=trial,
            queries=trial + 1,
            n_sparsified=self.n_sparsified,
            gauge_certificate=certificate,
        )


def hypercube_gap(
    zonotope: Zonotope, outer: BodySpec, cfg: GapConfig
) -> ContainmentVerdict:
    """
    Hypercube-sampling gap containment for a zonotope inner body.

    A Witness certifies gauge_bound * Z is not inside Q. Contained asserts
    Z inside Q with high probability.

    Args:
        zonotope (Zonotope): inner body, rank d
        outer (BodySpec): outer body Q
        cfg (GapConfig): trial budget, seed and sparsification settings

    Raises:
        RankDeficient: If rank(W) < d
        DegenerateLog: If fewer than 2 generators remain after sparsification
    """
    tester = GapTester(zonotope, cfg)
    oracle = MembershipOracle.create(outer, dim=zonotope.dim)
    return tester.run(oracle)


class SamplingMode(Enum):
    EXHAUSTIVE = "exhaustive"
    SAMPLED = "sampled"


def _signed_sums(values: FloatArray) -> FloatArray:
    """All 2^k sums sum_i y_i v_i over y in {+-1}^k."""
    sums = np.zeros(1)
    for v in values:
        sums = np.concatenate([sums + v, sums - v])
    return sums


def anticoncentration_fraction(
    a: ArrayLike,
    mode: SamplingMode = SamplingMode.EXHAUSTIVE,
    samples: int = 100_000,
    seed: int = 0,
) -> float:
    """
    Share of y in {+-1}^n with a . y >= ||a||_1 sqrt(ln n / n).

    Exhaustive mode counts by meeting in the middle; sampled mode is Monte Carlo.

    Raises:
        InvalidParameter: If n < 2 or samples < 1
        TooManyVertices: If exhaustive and n > 24
    """
    vector = np.asarray(a, dtype=float).reshape(-1)
    n = vector.shape[0]
    if n < 2:
        raise InvalidParameter("Anti-concentration needs n >= 2")
    l1 = float(np.abs(vector).sum())
    threshold = l1 * math.sqrt(math.log(n) / n) - 1e-12 * max(l1, 1.0)
    if mode is SamplingMode.EXHAUSTIVE:
        if n > settings.VERTEX_GENERATOR_LIMIT:
            raise TooManyVertices(
                f"Exhaustive mode supports n <= {settings.VERTEX_GENERATOR_LIMIT}, got {n}"
            )
        left = _signed_sums(vector[: n // 2])
        right = np.sort(_signed_sums(vector[n // 2 :]))
        below = np.searchsorted(right, threshold - left, side="left")
        hits = int((right.shape[0] - below).sum())
        return hits / 2.0**n
    if samples < 1:
        raise InvalidParameter("samples must be positive")
    rng = np.random.default_rng(seed)
    hits = 0
    remaining = samples
    while remaining > 0:
        size = min(remaining, 65_536)
        hits += int((random_signs(rng, size, n) @ vector >= threshold).sum())
        remaining -= size
    return hits / samples


@dataclass(frozen=True)
class StressResult:
    """Monte Carlo tail probability of the split-generator cube against its bound."""

    empirical: float
    hoeffding_bound: float
    stderr: float


def split_generator_stress(
    dim: int, n: int, s: float, samples: int, seed: int
) -> StressResult:
    """
    Estimate P[<W y, 1> >= d / s] for the split-axes generators.

    Raises:
        BadShape: If n is not a multiple of d
        InvalidParameter: If s <= 0 or samples < 2
    """
    if s <= 0:
        raise InvalidParameter("s must be positive")
    if samples < 2:
        raise InvalidParameter("samples must be at least 2")
    W = split_axes_matrix(dim, n)
    threshold = dim / s - 1e-12
    rng = np.random.default_rng(seed)
    ones = np.ones(dim)
    hits = 0
    remaining = samples
    while remaining > 0:
        size = min(remaining, 65_536)
        sums = (random_signs(rng, size, n) @ W.T) @ ones
        hits += int((sums >= threshold).sum())
        remaining -= size
    empirical = hits / samples
    return StressResult(
        empirical=empirical,
        hoeffding_bound=math.exp(-n / (2.0 * s**2)),
        stderr=math.sqrt(empirical * (1.0 - empirical) / samples),
    )


def naszodi_gap(
    inner: BodySpec,
    outer: BodySpec,
    s: float,
    trials: int,
    cfg: WalkConfig,
    dim: Optional[int] = None,
) -> ContainmentVerdict:
    """
    Gap containment for a samplable inner body.

    Draws ``trials`` points x_i of K by hit-and-run; a point with s x_i outside Q
    certifies s K not inside Q. The ``queries`` of the verdict count calls to the
    oracle of Q only; the calls hit-and-run makes to K are logged at debug level.

    Raises:
        InvalidParameter: If s <= 1 or trials < 1
    """
    if not s > 1:
        raise InvalidParameter(f"s must exceed 1, got {s}")
    if trials < 1:
        raise InvalidParameter("trials must be at least 1")
    dim = dim or body_dimension(inner) or body_dimension(outer)
    if dim is None:
        raise InvalidBody("Cannot infer the dimension of the bodies")
    inner_oracle = MembershipOracle.create(inner, dim=dim)
    samples = hit_and_run(inner_oracle, None, trials, cfg, dim=dim)
    logger.debug(
        "Sampling K for the Naszodi test used %d membership queries",
        inner_oracle.stats.queries,
    )
    oracle = MembershipOracle.create(outer, dim=dim)
    inside = oracle.membership_batch(s * samples)
    if inside.all():
        return Contained(trials_run=trials, queries=trials, gauge_bound=s)
    first = int(np.argmin(inside))
    return Witness(
        point=s * samples[first],
        gauge_bound=s,
        trial_index=first,
        queries=first + 1,
        sample=samples[first],
    )


def recommended_T(dim: int, s: float) -> int:
    """
    ceil(C_N d (1 - 1/s)^-d max(1, ln(1 / (1 - 1/s)))), evaluated in log space.

    Raises:
        InvalidParameter: If s <= 1
        SampleBudgetOverflow: If the count exceeds 2^62
    """
    if not s > 1:
        raise InvalidParameter(f"s must exceed 1, got {s}")
    keep = 1.0 - 1.0 / s
    log_inverse = -math.log(keep)
    log_value = (
        math.log(settings.NASZODI_CONSTANT)
        + math.log(dim)
        + dim * log_inverse
        + math.log(max(1.0, log_inverse))
    )
    if log_value > 62 * math.log(2):
        raise SampleBudgetOverflow(
            f"Recommended sample count exp({log_value:.1f}) exceeds 2^62"
        )
    value = math.exp(log_value)
    return max(1, math.ceil(value * (1.0 - 1e-12)))


def opt_containment_search(
    zonotope: Zonotope,
    outer: BodySpec,
    cfg: GapConfig,
    rel_tol: float = 0.05,
    max_tests: int = 200,
    strict: bool = False,
) -> OptBracket:
    """
    Bracket max{alpha : alpha Z inside Q} by geometric bisection over gap tests.

    alpha_low is the largest scale whose gap test returned Contained; alpha_high is
    the gauge bound of a Witness. The search stops once the test scales are
    within a factor 1 + rel_tol, so the bracket ratio is at most factor * (1 + rel_tol).

    Args:
        zonotope (Zonotope): inner body
        outer (BodySpec): outer body
        cfg (GapConfig): gap test settings, shared by every test
        rel_tol (float): relative width of the final scale interval
        max_tests (int): cap on the number of gap tests
        strict (bool): raise NoWitnessFound instead of returning a degenerate bracket

    Raises:
        NoWitnessFound: If strict and no scale up to 2 R_Q / sigma_min(W) separates
    """
    if rel_tol <= 0:
        raise InvalidParameter("rel_tol must be positive")
    oracle = MembershipOracle.create(outer, dim=zonotope.dim)
    radii = oracle.roundness()
    tester = GapTester(zonotope, cfg)
    sigma_min, _ = linalg.singular_extremes(zonotope.generators)
    ceiling = 2.0 * radii.R / sigma_min

    lo = radii.r / float(zonotope.column_norms.sum())
    tests = 1
    verdict = tester.run(oracle, lo)
    while verdict.is_witness and tests < max_tests:
        lo /= 2.0
        verdict = tester.run(oracle, lo)
        tests += 1

    witness: Optional[Witness] = None
    hi = lo
    while hi <= ceiling and tests < max_tests:
        hi *= 2.0
        verdict = tester.run(oracle, hi)
        tests += 1
        if isinstance(verdict, Witness):
            witness = verdict
            break
        lo = hi

    if witness is None:
        if strict:
            raise NoWitnessFound(
                f"No witness up to scale {ceiling:.6g}; the bracket is unbounded"
            )
        logger.warning(
            "No witness found up to scale %.6g, bracket is open above", ceiling
        )
        return OptBracket(
            alpha_low=lo,
            alpha_high=math.inf,
            gauge_bound=tester.factor,
            tests_run=tests,
            degenerate=True,
        )

    while hi / lo > 1.0 + rel_tol and tests < max_tests:
        mid = math.sqrt(lo * hi)
        verdict = tester.run(oracle, mid)
        tests += 1
        if isinstance(verdict, Witness):
            hi, witness = mid, verdict
        else:
            lo = mid
        logger.debug("bracket search: [%.6g, %.6g] after %d tests", lo, hi, tests)

    return OptBracket(
        alpha_low=lo,
        alpha_high=witness.gauge_bound,
        gauge_bound=tester.factor,
        tests_run=tests,
        witness=witness,
    )


def infinity_to_p_norm_exact(matrix: ArrayLike, p: float) -> float:
    """max of ||v||_p over the vertices of Z(A); at most 24 columns."""
    zonotope = Zonotope.from_matrix(matrix)
    vertices = geometry.enumerate_vertices(zonotope)
    return float(np.linalg.norm(vertices.points, ord=p, axis=1).max())


def norm_bracket(
    matrix: ArrayLike, p: float, cfg: GapConfig, rel_tol: float = 0.05
) -> NormBracket:
    """
    Bracket ||A||_{inf -> p} as [1 / alpha_high, 1 / alpha_low] of Z(A) inside B_p.

    The exact value is attached when A has at most 24 columns.
    """
    zonotope = Zonotope.from_matrix(matrix)
    ball = LpBallBody(p=p, radius=1.0, dim=zonotope.dim)
    bracket = opt_containment_search(zonotope, ball, cfg, rel_tol)
    exact = None
    if zonotope.count <= settings.VERTEX_GENERATOR_LIMIT:
        exact = infinity_to_p_norm_exact(zonotope.generators, p)
    return NormBracket(
        p=p,
        lower=1.0 / bracket.alpha_high,
        upper=1.0 / bracket.alpha_low,
        exact=exact,
    )


def _box_half_widths(body: HPolyBody) -> Optional[FloatArray]:
    polytope = body.polytope()
    A, b = polytope.normals, polytope.offsets
    d = polytope.dim
    plus = np.full(d, math.inf)
    minus = np.full(d, math.inf)
    for row, offset in zip(A, b):
        support = np.flatnonzero(row)
        if support.size != 1:
            return None
        i = int(support[0])
        bound = offset / abs(row[i])
        if row[i] > 0:
            plus[i] = min(plus[i], bound)
        else:
            minus[i] = min(minus[i], bound)
    if np.any(np.isinf(plus)) or not np.allclose(plus, minus, rtol=1e-12, atol=0.0):
        return None
    return plus


class _PolarCheckBody:
    """Exact outradius, radial boundary points and support maximizers of P."""

    def __init__(self, body: BodySpec, dim: Optional[int]) -> None:
        self.body = body
        if isinstance(body, LpBallBody):
            self.dim = body.dim or dim
            if self.dim is None:
                raise InvalidBody("Polar check of an l_p ball needs its dimension")
            exponent = 0.5 - (0.0 if math.isinf(body.p) else 1.0 / body.p)
            self.outradius = body.radius * max(1.0, self.dim**exponent)
        elif isinstance(body, HPolyBody):
            widths = _box_half_widths(body)
            if widths is None:
                raise UnsupportedBody(
                    "Polar check supports axis-aligned symmetric boxes only"
                )
            self.widths = widths
            self.dim = body.dim
            self.outradius = float(np.linalg.norm(widths))
        elif isinstance(body, EllipsoidBody):
            self.dim = body.dim
            self.shape = body.matrix()
            self.outradius = float(np.linalg.eigvalsh(self.shape).min()) ** -0.5
        else:
            raise UnsupportedBody(
                "Polar check supports lp balls, boxes and ellipsoids, "
                f"got {type(body).__name__}"
            )

    def gauge(self, v: FloatArray) -> float:
        if isinstance(self.body, LpBallBody):
            return float(np.linalg.norm(v, ord=self.body.p)) / self.body.radius
        if isinstance(self.body, HPolyBody):
            return float(np.max(np.abs(v) / self.widths))
        return math.sqrt(float(v @ self.shape @ v))

    def special_directions(self) -> FloatArray:
        d = self.dim
        rows = [np.eye(d), -np.eye(d)]
        if d <= 10:
            signs = np.array(np.meshgrid(*[[-1.0, 1.0]] * d)).reshape(d, -1).T
            if isinstance(self.body, HPolyBody):
                signs = signs * self.widths
            rows.append(signs)
        if isinstance(self.body, EllipsoidBody):
            _, vectors = np.linalg.eigh(self.shape)
            rows.extend([vectors.T, -vectors.T])
        return np.vstack(rows)

    def maximizer(self, x: FloatArray) -> FloatArray:
        """A point y of P with x . y = h_P(x)."""
        if isinstance(self.body, HPolyBody):
            return np.sign(x) * self.widths
        if isinstance(self.body, EllipsoidBody):
            solved = np.linalg.solve(self.shape, x)
            return solved / math.sqrt(float(x @ solved))
        p = self.body.p
        radius = self.body.radius
        if math.isinf(p):
            return radius * np.sign(x)
        if p == 1.0:
            y = np.zeros_like(x)
            i = int(np.argmax(np.abs(x)))
            y[i] = radius * np.sign(x[i])
            return y
        q = p / (p - 1.0)
        y = np.sign(x) * np.abs(x) ** (q - 1.0)
        return radius * y / np.linalg.norm(y, ord=p)


def body_outradius(body: BodySpec, dim: Optional[int] = None) -> float:
    """
    Exact Euclidean circumradius of an lp ball, symmetric box or ellipsoid.

    Raises:
        UnsupportedBody: For other body types
    """
    return _PolarCheckBody(body, dim).outradius


@dataclass(frozen=True, eq=False)
class PolarCheckReport:
    """
    Outcome of checking OutRad(P) <= r  <=>  P inside r^2 P-polar on sampled points.

    Attributes:
        outradius (float): exact Euclidean circumradius of P
        r (float): radius under test
        containment_holds (bool): every sampled x of P satisfies x / r^2 in the polar
        equivalence_holds (bool): both directions agree with the exact outradius
        directions_checked (int): number of boundary points tested
        directions_failed (int): points outside r^2 times the polar
        long_vector (Optional[FloatArray]): a point of P of norm > r, when one was found
    """

    outradius: float
    r: float
    containment_holds: bool
    equivalence_holds: bool
    directions_checked: int
    directions_failed: int
    long_vector: Optional[FloatArray] = None

    def to_dict(self) -> PolarCheckDict:
        return {
            "outradius": self.outradius,
            "r": self.r,
            "containment_holds": self.containment_holds,
            "equivalence_holds": self.equivalence_holds,
            "directions_checked": self.directions_checked,
            "directions_failed": self.directions_failed,
            "long_vector": (
                None if self.long_vector is None else self.long_vector.tolist()
            ),
        }


def polar_reduction_check(
    body: BodySpec, r: float, dirs: int, seed: int, dim: Optional[int] = None
) -> PolarCheckReport:
    """
    Check the circumradius / polar containment equivalence on a body with known OutRad.

    K = P and Q = polar(P); x / r^2 is tested against Q for boundary points x of P
    in random, axis, sign-vector and (for ellipsoids) principal directions.

    Raises:
        UnsupportedBody: If P is not an lp ball, symmetric box or ellipsoid
        InvalidParameter: If r <= 0 or dirs < 1
    """
    if r <= 0:
        raise InvalidParameter("r must be positive")
    if dirs < 1:
        raise InvalidParameter("dirs must be at least 1")
    check = _PolarCheckBody(body, dim)
    polar = MembershipOracle.create(PolarBody(inner=body), dim=check.dim)
    rng = np.random.default_rng(seed)
    directions = np.vstack(
        [
            geometry.random_unit_directions(rng, dirs, check.dim),
            check.special_directions(),
        ]
    )

    failed = 0
    long_vector: Optional[FloatArray] = None
    best_norm = -1.0
    for v in directions:
        x = v / check.gauge(v)
        if polar.membership(x / r**2):
            continue
        failed += 1
        y = check.maximizer(x)
        candidate = x if np.linalg.norm(x) >= np.linalg.norm(y) else y
        norm = float(np.linalg.norm(candidate))
        if norm > best_norm:
            best_norm, long_vector = norm, candidate

    containment = failed == 0
    exhibited = long_vector is not None and best_norm > r
    equivalence = (check.outradius <= r * (1 + 1e-9)) == containment and (
        containment or exhibited
    )
    return PolarCheckReport(
        outradius=check.outradius,
        r=r,
        containment_holds=containment,
        equivalence_holds=equivalence,
        directions_checked=int(directions.shape[0]),
        directions_failed=failed,
        long_vector=long_vector,
    )


def verify_witness(
    zonotope: Zonotope, outer: BodySpec, witness: Witness, tol: float = 1e-6
) -> Tuple[bool, float]:
    """
    Re-check a witness: outside Q and within its gauge bound.

    Returns:
        Tuple[bool, float]: whether both conditions hold, and the exact gauge of the point
    """
    oracle = MembershipOracle.create(outer, dim=zonotope.dim)
    outside = not oracle.membership(witness.point)
    exact = geometry.gauge(zonotope, witness.point)
    return outside and exact <= witness.gauge_bound + tol, exact


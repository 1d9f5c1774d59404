import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zonocontain.models import (
    DependentSubset,
    EllipsoidBody,
    GeneratorFamily,
    HPolyBody,
    HPolytope,
    LpBallBody,
    ScaledBody,
    WalkConfig,
    Witness,
    Zonotope,
)
from zonocontain.services import containment, geometry, linalg, oracles, sparsify
from zonocontain.services.generators import (
    gen_random_zonotope,
    interval_ones_matrix,
    tu_incidence_matrix,
)
from zonocontain.services.oracles import MembershipOracle
from zonocontain.services.sampler import HitAndRunChain

SEEDS = st.integers(min_value=0, max_value=2**31 - 1)
LP_EXPONENTS = [1.0, 1.5, 2.0, 3.0, math.inf]

DELTA_TWO_MATRICES = [
    [[1.0, 0.0, 1.0, 1.0], [0.0, 1.0, 1.0, -1.0]],
    [[2.0, 0.0, 1.0], [0.0, 1.0, 1.0]],
    [[1.0, 0.0, 0.0, 1.0], [0.0, 1.0, 0.0, 1.0], [0.0, 0.0, 1.0, 2.0]],
]


@st.composite
def symmetric_bodies(draw):
    """
    A centrally symmetric body with its dimension.

    Returns:
        Tuple of (BodySpec, dim)
    """
    dim = draw(st.integers(min_value=2, max_value=4))
    kind = draw(st.sampled_from(["box", "hpoly", "lp_ball", "ellipsoid"]))
    rng = np.random.default_rng(draw(SEEDS))
    if kind == "box":
        body = HPolyBody.box(dim, float(rng.uniform(0.5, 3.0)))
    elif kind == "hpoly":
        normals = rng.standard_normal((dim + 3, dim))
        offsets = rng.uniform(0.5, 2.0, size=dim + 3)
        body = HPolyBody.from_polytope(HPolytope.symmetric(normals, offsets))
    elif kind == "lp_ball":
        p = draw(st.sampled_from(LP_EXPONENTS))
        body = LpBallBody(p=p, radius=float(rng.uniform(0.5, 3.0)), dim=dim)
    else:
        body = EllipsoidBody.diagonal(rng.uniform(0.25, 4.0, size=dim).tolist())
    return body, dim


@st.composite
def gaussian_zonotopes(draw, max_dim=3, max_per_dim=3):
    dim = draw(st.integers(min_value=2, max_value=max_dim))
    n = draw(st.integers(min_value=dim, max_value=max_per_dim * dim))
    return gen_random_zonotope(dim, n, GeneratorFamily.GAUSSIAN, draw(SEEDS))


def spread_points(rng, radius, count, dim):
    """Points at distances up to 1.5 radius, so both verdicts occur."""
    directions = geometry.random_unit_directions(rng, count, dim)
    return directions * rng.uniform(0.0, 1.5 * radius, size=(count, 1))


def spectral_band(W, result):
    kept = W[:, list(result.indices)]
    target = (kept * result.weights) @ kept.T
    return linalg.generalized_eigenvalues(target, W @ W.T)


class TestOracleProperties:
    """
    Test suite for membership oracle invariants over random bodies and points.
    """

    @given(symmetric_bodies(), SEEDS)
    @settings(max_examples=40, deadline=None)
    def test_membership_is_symmetric(self, body_and_dim, seed):
        """
        Story: Symmetric bodies answer the same for x and -x
        Given a random symmetric body and 1000 random points
        When asking membership of x and of -x
        Then the answers agree point by point
        """
        body, dim = body_and_dim
        oracle = MembershipOracle.create(body, dim=dim)
        X = spread_points(np.random.default_rng(seed), oracle.roundness().R, 1000, dim)

        np.testing.assert_array_equal(
            oracle.membership_batch(X), oracle.membership_batch(-X)
        )

    @given(symmetric_bodies(), SEEDS)
    @settings(max_examples=40, deadline=None)
    def test_roundness_is_sound(self, body_and_dim, seed):
        """
        Story: The certified radii sandwich the body
        Given a random body and 1000 unit directions u
        When testing r u and (R + tol) u
        Then every r u is inside and every (R + tol) u is outside
        """
        body, dim = body_and_dim
        oracle = MembershipOracle.create(body, dim=dim)
        radii = oracle.roundness()
        U = geometry.random_unit_directions(np.random.default_rng(seed), 1000, dim)

        assert radii.certified
        assert oracle.membership_batch(radii.r * U).all()
        assert not oracle.membership_batch(radii.R * (1 + 1e-6) * U).any()

    @given(symmetric_bodies(), st.floats(min_value=0.1, max_value=10.0), SEEDS)
    @settings(max_examples=40, deadline=None)
    def test_scaled_composition(self, body_and_dim, factor, seed):
        """
        Story: Scaling is membership of the shrunk point
        Given a random body Q, a factor c and 1000 random points x
        When asking Scaled{Q, c} about x
        Then the answer equals Q's answer about x / c
        """
        body, dim = body_and_dim
        inner = MembershipOracle.create(body, dim=dim)
        scaled = MembershipOracle.create(ScaledBody(inner=body, factor=factor), dim=dim)
        X = spread_points(
            np.random.default_rng(seed), factor * inner.roundness().R, 1000, dim
        )

        np.testing.assert_array_equal(
            scaled.membership_batch(X), inner.membership_batch(X / factor)
        )


class TestZonotopeProperties:
    """
    Test suite for support, vertex and normalization invariants of random zonotopes.
    """

    @given(gaussian_zonotopes(max_dim=4), SEEDS)
    @settings(max_examples=30, deadline=None)
    def test_normalized_ball_sandwich(self, zonotope, seed):
        """
        Story: A normalized zonotope sits between two balls
        Given a normalized zonotope with n generators in dimension d
        When evaluating its support function on 1000 unit directions
        Then every value lies in [(1/2) sqrt(n/d), sqrt(n)]
        """
        normalized = geometry.normalize(zonotope).normalized
        d, n = normalized.dim, normalized.count
        U = geometry.random_unit_directions(np.random.default_rng(seed), 1000, d)
        h = np.abs(U @ normalized.generators).sum(axis=1)

        assert h.min() >= 0.5 * math.sqrt(n / d) * (1 - 1e-6)
        assert h.max() <= math.sqrt(n) * (1 + 1e-6)

    @given(gaussian_zonotopes(max_per_dim=2), SEEDS)
    @settings(max_examples=20, deadline=None)
    def test_support_matches_vertices(self, zonotope, seed):
        """
        Story: Three views of the same support function
        Given a random zonotope and 1000 unit directions
        When comparing ||W^T u||_1, the best vertex and the extreme point
        Then all three agree
        """
        vertices = geometry.enumerate_vertices(zonotope).points
        U = geometry.random_unit_directions(
            np.random.default_rng(seed), 1000, zonotope.dim
        )
        h = np.abs(U @ zonotope.generators).sum(axis=1)
        extreme = np.vstack([geometry.extreme_point(zonotope, u)[0] for u in U])

        np.testing.assert_allclose((U @ vertices.T).max(axis=1), h, rtol=1e-9)
        np.testing.assert_allclose((extreme * U).sum(axis=1), h, rtol=1e-9)

    @given(gaussian_zonotopes(max_per_dim=2))
    @settings(max_examples=20, deadline=None)
    def test_vertices_have_unit_gauge(self, zonotope):
        """
        Story: Vertices lie on the boundary
        Given a random zonotope
        When computing the gauge of every enumerated vertex
        Then each gauge is 1
        """
        vertices = geometry.enumerate_vertices(zonotope).points

        for vertex in vertices:
            assert geometry.gauge(zonotope, vertex) == pytest.approx(1.0, abs=1e-7)

    @given(
        st.sampled_from(["tu_incidence", "interval_ones"]),
        st.integers(min_value=2, max_value=4),
        SEEDS,
        st.data(),
    )
    @settings(max_examples=30, deadline=None)
    def test_unimodular_facet_band(self, family, dim, seed, data):
        """
        Story: Facet bands of unimodular matrices are flat
        Given a random incidence or interval matrix
        When profiling every independent (d - 1)-subset
        Then the band ratio is 1
        """
        rng = np.random.default_rng(seed)
        # both families top out at d (d + 1) / 2 columns
        n = data.draw(st.integers(min_value=dim, max_value=math.comb(dim + 1, 2)))
        if family == "tu_incidence":
            W = tu_incidence_matrix(dim, n, rng)
        else:
            W = interval_ones_matrix(dim, n, rng)

        profiled = 0
        for subset in itertools.combinations(range(n), dim - 1):
            try:
                profile = geometry.facet_profile(W, subset)
            except DependentSubset:
                continue
            profiled += 1
            assert profile.ratio <= 1.0 + 1e-9
        assert profiled > 0


class TestSparsificationProperties:
    """
    Test suite for spectral and facet sandwiches of sparsified generators.
    """

    @given(
        st.integers(min_value=2, max_value=5),
        st.sampled_from([0.3, 0.5]),
        SEEDS,
        st.data(),
    )
    @settings(max_examples=20, deadline=None)
    def test_barrier_spectral_band(self, dim, epsilon, seed, data):
        """
        Story: Barrier sparsification keeps the spectrum
        Given a random Gaussian d x n matrix
        When sparsifying by barriers
        Then every generalized eigenvalue is in [(1 - eps)^2, (1 + eps)^2]
        And at most ceil(16 d / eps^2) columns are kept
        """
        n = data.draw(st.integers(min_value=dim + 1, max_value=8 * dim))
        W = np.random.default_rng(seed).standard_normal((dim, n))

        result = sparsify.sparsify_bss(W, epsilon)
        eigenvalues = spectral_band(W, result)

        assert eigenvalues.min() >= (1 - epsilon) ** 2 - 1e-8
        assert eigenvalues.max() <= (1 + epsilon) ** 2 + 1e-8
        assert result.size <= sparsify.bss_size_cap(dim, epsilon)

    @pytest.mark.parametrize("matrix", DELTA_TWO_MATRICES)
    def test_delta_two_facet_sandwich(self, matrix):
        """
        Story: Sparsifying a matrix with minors 1 and 2
        Given a hand-built matrix with Delta = 2 and eps = 0.4
        When sparsifying in Delta-modular mode
        Then every facet ratio lies in [(1 - eps)^2, Delta^2 (1 + eps)^2]
        """
        W = np.asarray(matrix)
        report = geometry.delta_of(W)
        result = sparsify.sparsify_delta_modular(W, 0.4)
        normals = geometry.enumerate_facet_normals(Zonotope.from_matrix(W))

        low, high = sparsify.verify_sandwich(W, result, normals)

        assert report.ratio == pytest.approx(2.0)
        assert low >= 0.6**2 - 1e-6
        assert high <= 4.0 * 1.4**2 + 1e-6


class TestSamplingProperties:
    """
    Test suite for chord geometry and the sampling-based gap test.
    """

    @given(st.integers(min_value=2, max_value=4), SEEDS)
    @settings(max_examples=25, deadline=None)
    def test_chord_endpoints(self, dim, seed):
        """
        Story: Chord endpoints of an ellipsoid
        Given a random axis-aligned ellipsoid, an interior point and 50 directions
        When measuring each chord
        Then both ends match the roots of the quadratic and straddle the boundary
        """
        rng = np.random.default_rng(seed)
        entries = rng.uniform(0.25, 4.0, size=dim)
        M = np.diag(entries)
        oracle = MembershipOracle.create(EllipsoidBody.diagonal(entries.tolist()))
        v = geometry.random_unit_directions(rng, 1, dim)[0]
        start = 0.5 * v / math.sqrt(v @ M @ v)
        chain = HitAndRunChain(
            oracle, start, WalkConfig(burn_in=0, seed=seed, chord_tol=1e-8)
        )

        for u in geometry.random_unit_directions(rng, 50, dim):
            backward, forward = chain.chord(u)
            a, b, c = u @ M @ u, start @ M @ u, start @ M @ start - 1.0
            root = math.sqrt(b * b - a * c)

            assert forward == pytest.approx((-b + root) / a, abs=1e-6)
            assert backward == pytest.approx((b + root) / a, abs=1e-6)
            assert oracle.membership(start + forward * u)
            assert oracle.membership(start - backward * u)
            assert not oracle.membership(start + (forward + 1e-6) * u)
            assert not oracle.membership(start - (backward + 1e-6) * u)

    @pytest.mark.slow
    @pytest.mark.parametrize(
        "alpha,minimum_rate,maximum_rate", [(0.9, 0.95, 1.0), (4.4, 0.0, 0.0)]
    )
    def test_naszodi_polytope_sweep(self, alpha, minimum_rate, maximum_rate):
        """
        Story: The sampling test on random symmetric polytopes
        Given 25 H-polytopes K over d in {2..5}, Q a box with exact scale alpha and s = 4
        When running the sampling test with the recommended sample count
        Then alpha = 0.9 gives at least 95% witnesses and alpha = 4.4 gives none
        And every witness leaves Q while its sample stays in K
        """
        s = 4.0
        witnesses = 0
        for k in range(25):
            dim = 2 + k % 4
            rng = np.random.default_rng(k)
            normals = rng.standard_normal((2 * dim, dim))
            normals /= np.linalg.norm(normals, axis=1, keepdims=True)
            inner = HPolyBody.from_polytope(
                HPolytope.symmetric(normals, np.ones(2 * dim))
            )
            box = HPolytope.box(dim)
            exact = geometry.exact_opt_containment(
                lambda a: oracles.support(inner, a), box
            )
            outer = HPolyBody.from_polytope(box.scaled(alpha / exact))
            walk = WalkConfig(burn_in=200, thin=2, seed=k, chord_tol=1e-6)

            verdict = containment.naszodi_gap(
                inner, outer, s, containment.recommended_T(dim, s), walk
            )

            if isinstance(verdict, Witness):
                witnesses += 1
                assert not oracles.membership(outer, verdict.point)
                assert oracles.membership(inner, verdict.sample)
        assert minimum_rate <= witnesses / 25 <= maximum_rate

import numpy as np
import pytest

from zonocontain.models import (
    EpsilonOutOfRange,
    RankDeficient,
    SparsificationMethod,
    SparsificationResult,
    TooManyGenerators,
    Zonotope,
    ZeroDirection,
)
from zonocontain.services import geometry, linalg, sparsify
from zonocontain.services.generators import tu_incidence_matrix
from zonocontain.services.sparsify import (
    BSSSparsifier,
    DeltaModularSparsifier,
    LewisSparsifier,
    Sparsifier,
)

HEXAGON = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]])


def spectral_band(W, result):
    """Generalized eigenvalues of (W_S D W_S^T, W W^T) for the kept columns S."""
    kept = W[:, list(result.indices)]
    target = (kept * result.weights) @ kept.T
    return linalg.generalized_eigenvalues(target, W @ W.T)


def directions(dim, count=1000, seed=0):
    return geometry.random_unit_directions(np.random.default_rng(seed), count, dim)


class TestLewisWeights:
    """
    Test suite for the l1 Lewis weight fixed point.
    """

    @pytest.mark.parametrize("dim", [1, 2, 5])
    def test_identity_weights(self, dim):
        """
        Story: Lewis weights of an orthonormal basis
        Given W = I_d
        When computing Lewis weights
        Then every weight is 1
        """
        state = sparsify.lewis_weights(np.eye(dim))

        np.testing.assert_allclose(state.weights, np.ones(dim), atol=1e-6)
        assert state.total == pytest.approx(dim, abs=1e-6)

    def test_duplicated_column_shares_weight(self):
        """
        Story: A generator repeated twice
        Given W = [e_1, e_1, e_2]
        When computing Lewis weights
        Then the copies split the weight: (1/2, 1/2, 1)
        """
        state = sparsify.lewis_weights([[1.0, 1.0, 0.0], [0.0, 0.0, 1.0]])

        np.testing.assert_allclose(state.weights, [0.5, 0.5, 1.0], atol=1e-6)

    def test_orthogonal_columns_ignore_scale(self):
        """
        Story: Rescaling orthogonal generators
        Given W = [2 e_1, e_2]
        When computing Lewis weights
        Then both weights are 1
        """
        state = sparsify.lewis_weights(np.diag([2.0, 1.0]))

        np.testing.assert_allclose(state.weights, [1.0, 1.0], atol=1e-6)

    def test_parallel_columns_split_by_length(self):
        """
        Story: Parallel generators of different lengths
        Given W = [3 e_1, e_1, e_2]
        When computing Lewis weights
        Then the e_1 weight splits in proportion to length: (3/4, 1/4, 1)
        """
        state = sparsify.lewis_weights([[3.0, 1.0, 0.0], [0.0, 0.0, 1.0]])

        np.testing.assert_allclose(state.weights, [0.75, 0.25, 1.0], atol=1e-6)

    def test_weights_sum_to_dimension(self):
        """
        Story: Lewis weights always total d
        Given a seeded Gaussian 4 x 30 matrix
        When computing Lewis weights
        Then they sum to 4
        """
        W = np.random.default_rng(1).standard_normal((4, 30))

        assert sparsify.lewis_weights(W).total == pytest.approx(4.0, abs=1e-5)

    def test_rank_deficient(self):
        """
        Story: A flat generator matrix
        Given two parallel columns in the plane
        When computing Lewis weights
        Then RankDeficient is raised
        """
        with pytest.raises(RankDeficient):
            sparsify.lewis_weights([[1.0, 2.0], [1.0, 2.0]])


class TestLewisSampling:
    """
    Test suite for Lewis-weight column sampling.
    """

    def test_identity_sample(self):
        """
        Story: Sampling an orthonormal basis
        Given W = I_3 and eps = 0.3
        When sampling by Lewis weights
        Then every column is kept and support ratios stay within 1 +- eps
        """
        W = np.eye(3)
        result = sparsify.sparsify_lewis(W, 0.3, seed=0)
        low, high = sparsify.verify_sandwich(W, result, directions(3))

        assert result.indices == (0, 1, 2)
        assert 0.7 <= low <= high <= 1.3

    def test_duplicate_columns(self):
        """
        Story: Many copies of two generators
        Given 100 copies each of e_1 and e_2 and eps = 0.25
        When sampling
        Then at most m columns are kept and the axis ratios stay within 1 +- eps
        """
        W = np.repeat(np.eye(2), 100, axis=1)
        result = sparsify.sparsify_lewis(W, 0.25, seed=3)
        low, high = sparsify.verify_sandwich(W, result, np.eye(2))

        assert result.size <= sparsify.lewis_sample_count(2, 0.25)
        assert 0.75 <= low <= high <= 1.25

    def test_gaussian_sandwich(self):
        """
        Story: A generic generator matrix
        Given a seeded Gaussian 4 x 64 matrix and eps = 0.3
        When sampling
        Then support ratios on 1000 directions stay within [0.65, 1.35]
        """
        W = np.random.default_rng(42).standard_normal((4, 64))
        result = sparsify.sparsify_lewis(W, 0.3, seed=7)
        low, high = sparsify.verify_sandwich(W, result, directions(4, seed=9))

        assert 0.65 <= low <= high <= 1.35
        assert (result.lower_factor, result.upper_factor) == (0.7, 1.3)

    def test_same_seed_same_sample(self):
        """
        Story: Reproducible sampling
        Given the same matrix and seed twice
        When sampling
        Then the results are identical
        """
        W = np.random.default_rng(2).standard_normal((3, 40))
        first = sparsify.sparsify_lewis(W, 0.4, seed=5)
        second = sparsify.sparsify_lewis(W, 0.4, seed=5)

        assert first.indices == second.indices
        np.testing.assert_array_equal(first.weights, second.weights)

    @pytest.mark.parametrize("epsilon", [0.0, 0.6])
    def test_epsilon_range(self, epsilon):
        """
        Story: Accuracy outside (0, 1/2]
        Given eps = 0 or eps = 0.6
        When sampling
        Then EpsilonOutOfRange is raised
        """
        with pytest.raises(EpsilonOutOfRange):
            sparsify.sparsify_lewis(np.eye(2), epsilon, seed=0)


class TestBarrierSparsification:
    """
    Test suite for deterministic barrier sparsification.
    """

    def test_identity_keeps_every_column(self):
        """
        Story: Nothing can be dropped from a basis
        Given W = I_3 and eps = 0.5
        When sparsifying
        Then all columns are kept and the spectrum lies in [(1-eps)^2, (1+eps)^2]
        """
        W = np.eye(3)
        result = sparsify.sparsify_bss(W, 0.5)
        eigenvalues = spectral_band(W, result)

        assert result.indices == (0, 1, 2)
        assert eigenvalues.min() >= 0.25 - 1e-8
        assert eigenvalues.max() <= 2.25 + 1e-8

    def test_duplicated_axes(self):
        """
        Story: Eight copies of each axis
        Given a 2 x 16 matrix and eps = 0.5
        When sparsifying
        Then the size respects the cap and the spectrum lies in [0.25, 2.25]
        """
        W = np.repeat(np.eye(2), 8, axis=1)
        result = sparsify.sparsify_bss(W, 0.5)
        eigenvalues = spectral_band(W, result)

        assert result.size <= sparsify.bss_size_cap(2, 0.5)
        assert 0.25 - 1e-8 <= eigenvalues.min() <= eigenvalues.max() <= 2.25 + 1e-8

    def test_gaussian_spectrum(self):
        """
        Story: A generic generator matrix
        Given a seeded Gaussian 3 x 50 matrix and eps = 0.3
        When sparsifying
        Then the spectrum lies in [0.49, 1.69]
        """
        W = np.random.default_rng(11).standard_normal((3, 50))
        result = sparsify.sparsify_bss(W, 0.3)
        eigenvalues = spectral_band(W, result)

        assert result.size <= sparsify.bss_size_cap(3, 0.3)
        assert 0.49 - 1e-8 <= eigenvalues.min() <= eigenvalues.max() <= 1.69 + 1e-8

    def test_deterministic(self):
        """
        Story: Barrier selection uses no randomness
        Given the same matrix twice
        When sparsifying
        Then the results are identical
        """
        W = np.random.default_rng(12).standard_normal((2, 20))

        first = sparsify.sparsify_bss(W, 0.4)
        second = sparsify.sparsify_bss(W, 0.4)

        assert first.indices == second.indices
        np.testing.assert_array_equal(first.weights, second.weights)

    def test_epsilon_must_be_below_one(self):
        """
        Story: Barrier sparsification needs eps < 1
        Given eps = 1
        When sparsifying
        Then EpsilonOutOfRange is raised
        """
        with pytest.raises(EpsilonOutOfRange):
            sparsify.sparsify_bss(np.eye(2), 1.0)


class TestDeltaModularSparsification:
    """
    Test suite for sparsification of Delta-modular generators.
    """

    def facet_ratios(self, W, result):
        normals = geometry.enumerate_facet_normals(Zonotope.from_matrix(W))
        return sparsify.verify_sandwich(W, result, normals)

    def test_identity(self):
        """
        Story: The identity is unimodular
        Given W = I_2 and eps = 0.1
        When sparsifying
        Then facet ratios lie in [0.81, 1.21]
        """
        W = np.eye(2)
        result = sparsify.sparsify_delta_modular(W, 0.1)
        low, high = self.facet_ratios(W, result)

        assert 0.81 - 1e-9 <= low <= high <= 1.21 + 1e-9
        assert result.method is SparsificationMethod.DELTA_MODULAR

    def test_duplicated_hexagon(self):
        """
        Story: Eight copies of the hexagon generators
        Given n = 24, eps = 0.4 and Delta = 1
        When sparsifying
        Then the size respects the cap and facet ratios lie in [0.36, 1.96]
        """
        W = np.tile(HEXAGON, 8)
        result = sparsify.sparsify_delta_modular(W, 0.4)
        low, high = self.facet_ratios(W, result)

        assert result.size <= sparsify.bss_size_cap(2, 0.4)
        assert 0.36 - 1e-9 <= low <= high <= 1.96 + 1e-9
        assert result.upper_factor == pytest.approx(1.96)

    def test_graph_incidence(self):
        """
        Story: A graphical zonotope
        Given the reduced incidence matrix of K_4 (d = 3, n = 6) and eps = 0.4
        When sparsifying
        Then Delta = 1 and every facet ratio lies within the certified band
        """
        W = tu_incidence_matrix(3, 6, np.random.default_rng(0))
        result = sparsify.sparsify_delta_modular(W, 0.4)
        low, high = self.facet_ratios(W, result)

        assert geometry.delta_of(W).delta == pytest.approx(1.0)
        assert result.lower_factor - 1e-9 <= low <= high <= result.upper_factor + 1e-9

    def test_delta_rescale(self):
        """
        Story: An explicit Delta rescales the barrier weights
        Given W = I_2 and Delta = 2
        When sparsifying
        Then weights are twice the barrier weights and the upper factor carries Delta^2
        """
        result = sparsify.sparsify_delta_modular(np.eye(2), 0.2, delta=2.0)

        np.testing.assert_allclose(result.weights, 2.0 * result.pre_rescale_weights)
        assert result.upper_factor == pytest.approx(4.0 * 1.44)


class TestSandwichAndSplitting:
    """
    Test suite for sandwich verification and weighted splitting.
    """

    def result(self, weights):
        return SparsificationResult(
            indices=tuple(range(len(weights))),
            weights=np.asarray(weights, dtype=float),
            epsilon=0.1,
            method=SparsificationMethod.BSS,
            lower_factor=1.0,
            upper_factor=max(1.0, max(weights)),
        )

    def test_identity_result(self):
        """
        Story: Keeping every column unchanged
        Given unit weights
        When verifying the sandwich
        Then both ratios are 1
        """
        result = self.result([1, 1, 1])
        low, high = sparsify.verify_sandwich(HEXAGON, result, directions(2))

        assert (low, high) == (pytest.approx(1.0), pytest.approx(1.0))

    def test_doubled_result(self):
        """
        Story: Every column doubled
        Given weights 2
        When verifying the sandwich
        Then both ratios are 2
        """
        result = self.result([2, 2, 2])
        low, high = sparsify.verify_sandwich(HEXAGON, result, directions(2))

        assert (low, high) == (pytest.approx(2.0), pytest.approx(2.0))

    def test_zero_direction(self):
        """
        Story: A zero direction has no ratio
        Given the zero vector
        When verifying
        Then ZeroDirection is raised
        """
        with pytest.raises(ZeroDirection):
            sparsify.verify_sandwich(HEXAGON, self.result([1, 1, 1]), [[0.0, 0.0]])

    def test_split_columns_keep_the_zonotope(self):
        """
        Story: Integer weights become repeated columns
        Given the hexagon with counts (2, 0, 1)
        When splitting
        Then the split zonotope has the support of W diag(2, 0, 1)
        """
        matrix, owners = sparsify.split_weighted_columns(HEXAGON, [2, 0, 1])
        weighted = HEXAGON * np.array([2.0, 0.0, 1.0])

        assert owners == [0, 0, 2]
        for u in directions(2, count=50):
            assert np.abs(u @ matrix).sum() == pytest.approx(np.abs(u @ weighted).sum())

    def test_split_cap(self):
        """
        Story: Splitting must not explode the column count
        Given counts totalling more than the cap
        When splitting
        Then TooManyGenerators is raised
        """
        with pytest.raises(TooManyGenerators):
            sparsify.split_weighted_columns(np.eye(2), [60_000, 60_000])

    @pytest.mark.parametrize(
        "method,cls",
        [
            (SparsificationMethod.LEWIS, LewisSparsifier),
            (SparsificationMethod.BSS, BSSSparsifier),
            (SparsificationMethod.DELTA_MODULAR, DeltaModularSparsifier),
        ],
    )
    def test_factory(self, method, cls):
        """
        Story: Choosing a strategy by name
        Given a sparsification method
        When creating a sparsifier
        Then the matching strategy runs
        """
        sparsifier = Sparsifier.create(method)
        result = sparsifier.sparsify(np.eye(2), 0.3)

        assert isinstance(sparsifier, cls)
        assert result.method is method

    def test_result_round_trip(self):
        """
        Story: Results are stored as JSON
        Given a barrier result
        When converting to a dict and back
        Then indices, weights and factors survive
        """
        original = sparsify.sparsify_bss(np.eye(2), 0.5)
        restored = SparsificationResult.from_dict(original.to_dict())

        assert restored.indices == original.indices
        np.testing.assert_allclose(restored.weights, original.weights)
        assert restored.upper_factor == original.upper_factor

"""Generator-count reduction by l1 Lewis-weight sampling and barrier (BSS) selection."""

import logging
import math
from abc import ABC, abstractmethod
from typing import List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike

from ..config import settings
from ..models.exceptions import (
    BadShape,
    BarrierStall,
    EpsilonOutOfRange,
    NoConvergence,
    RankDeficient,
    TooManyGenerators,
    ZeroDirection,
)
from ..models.results import LewisState, SparsificationMethod, SparsificationResult
from ..models.zonotope import FloatArray, as_matrix
from . import geometry, linalg

logger = logging.getLogger(__name__)


def lewis_weights(
    matrix: ArrayLike,
    tol: float = settings.LEWIS_TOL,
    max_iter: int = settings.LEWIS_MAX_ITER,
) -> LewisState:
    """
    l1 Lewis weights of the columns of W.

    Fixed point of w_i = (w_i^T M^{-1} w_i)^{1/2} with M = sum_j w_j w_j^T / w_j,
    reached by the damped update w <- sqrt(w * tau) from the uniform start d / n.

    Raises:
        RankDeficient: If rank(W) < d
        NoConvergence: If the relative change stays above tol after max_iter passes
    """
    W = as_matrix(matrix)
    d, n = W.shape
    linalg.require_full_row_rank(W)
    weights = np.full(n, d / n)
    residual = math.inf
    for iteration in range(1, max_iter + 1):
        M = (W / weights) @ W.T
        tau = np.sqrt(np.maximum(np.einsum("ij,ij->j", W, np.linalg.solve(M, W)), 0.0))
        updated = np.sqrt(weights * tau)
        residual = float(np.max(np.abs(updated - weights) / weights))
        weights = updated
        if residual <= tol:
            logger.debug("Lewis weights converged in %d passes", iteration)
            return LewisState(weights=weights, iterations=iteration, residual=residual)
    raise NoConvergence(
        f"Lewis iteration residual {residual:.3e} above {tol:.1e} after {max_iter} passes"
    )


def _check_epsilon(epsilon: float, upper: float, closed: bool) -> None:
    inside = 0 < epsilon <= upper if closed else 0 < epsilon < upper
    if not inside:
        bracket = "]" if closed else ")"
        raise EpsilonOutOfRange(
            f"epsilon must lie in (0, {upper:g}{bracket}, got {epsilon}"
        )


def lewis_sample_count(dim: int, epsilon: float) -> int:
    """m = ceil(C_L * d * ln(d / eps) / eps^2)."""
    return math.ceil(
        settings.LEWIS_SAMPLING_CONSTANT * dim * math.log(dim / epsilon) / epsilon**2
    )


def sparsify_lewis(
    matrix: ArrayLike,
    epsilon: float,
    seed: int,
    state: Optional[LewisState] = None,
) -> SparsificationResult:
    """
    Sample columns with probability proportional to their Lewis weights.

    Args:
        matrix (ArrayLike): d x n generator matrix of full row rank
        epsilon (float): accuracy in (0, 1/2]
        seed (int): seed of the sampler
        state (Optional[LewisState]): precomputed Lewis weights of ``matrix``

    Returns:
        SparsificationResult: kept columns scaled by count_i / (m p_i)

    Raises:
        EpsilonOutOfRange: If epsilon is outside (0, 1/2]
        RankDeficient: If the sample does not span R^d
    """
    _check_epsilon(epsilon, 0.5, closed=True)
    W = as_matrix(matrix)
    d = W.shape[0]
    if state is None:
        state = lewis_weights(W)
    probabilities = state.weights / state.weights.sum()
    m = lewis_sample_count(d, epsilon)
    counts = np.random.default_rng(seed).multinomial(m, probabilities)
    indices = np.flatnonzero(counts)
    weights = counts[indices] / (m * probabilities[indices])
    if np.linalg.matrix_rank(W[:, indices]) < d:
        raise RankDeficient("Lewis sample does not span the ambient space")
    logger.info(
        "Lewis sampling kept %d of %d generators (m=%d)", indices.size, W.shape[1], m
    )
    return SparsificationResult(
        indices=tuple(int(i) for i in indices),
        weights=weights,
        epsilon=epsilon,
        method=SparsificationMethod.LEWIS,
        lower_factor=1.0 - epsilon,
        upper_factor=1.0 + epsilon,
    )


def bss_size_cap(dim: int, epsilon: float) -> int:
    """ceil(C_B * d / eps^2)."""
    return math.ceil(settings.BSS_SIZE_CONSTANT * dim / epsilon**2)


def _barrier_scores(
    eigenvalues: FloatArray,
    projections: FloatArray,
    shift: float,
    base: float,
    upper: bool,
) -> FloatArray:
    """
    U_A(v) for the upper wall or L_A(v) for the lower wall, for every column at once.

    ``projections`` holds Q^T v for the eigenvectors Q of the current sum.
    """
    if upper:
        gaps_new, gaps_old = shift - eigenvalues, base - eigenvalues
    else:
        gaps_new, gaps_old = eigenvalues - shift, eigenvalues - base
    # Phi(old wall) - Phi(new wall) for the upper barrier, reversed for the lower one.
    potential_drop = float(np.sum(1.0 / gaps_old) - np.sum(1.0 / gaps_new))
    if not upper:
        potential_drop = -potential_drop
    squared = projections**2
    second = (squared / gaps_new[:, None] ** 2).sum(axis=0)
    first = (squared / gaps_new[:, None]).sum(axis=0)
    if upper:
        return second / potential_drop + first
    return second / potential_drop - first


def sparsify_bss(matrix: ArrayLike, epsilon: float) -> SparsificationResult:
    """
    Deterministic barrier sparsification.

    Runs ceil(d / eps^2) barrier rounds on the whitened columns, then rescales
    so every generalized eigenvalue of (W D W^T, W W^T) lies in
    [(1 - eps)^2, (1 + eps)^2].

    Raises:
        EpsilonOutOfRange: If epsilon is outside (0, 1)
        RankDeficient: If rank(W) < d
        BarrierStall: If no column keeps both barrier potentials bounded
    """
    _check_epsilon(epsilon, 1.0, closed=False)
    W = as_matrix(matrix)
    d, n = W.shape
    linalg.require_full_row_rank(W)
    V = linalg.inverse_sqrt_psd(W @ W.T) @ W

    b = 1.0 / epsilon**2
    root_b = math.sqrt(b)
    delta_lower = 1.0
    delta_upper = (root_b + 1.0) / (root_b - 1.0) if root_b > 1.0 else math.inf
    if math.isinf(delta_upper):
        raise EpsilonOutOfRange("epsilon must be below 1 for barrier sparsification")
    lower = -d * root_b
    upper = d * (b + root_b) / (root_b - 1.0)
    rounds = math.ceil(d * b)

    scale = np.zeros(n)
    A = np.zeros((d, d))
    for step in range(rounds):
        eigenvalues, eigenvectors = np.linalg.eigh(A)
        projections = eigenvectors.T @ V
        U = _barrier_scores(
            eigenvalues, projections, upper + delta_upper, upper, upper=True
        )
        L = _barrier_scores(
            eigenvalues, projections, lower + delta_lower, lower, upper=False
        )
        margin = L - U
        best = int(np.argmax(margin))
        if margin[best] < -1e-12 * max(abs(float(L[best])), abs(float(U[best])), 1.0):
            raise BarrierStall(f"No admissible column at barrier round {step}")
        t = 2.0 / (float(U[best]) + float(L[best]))
        scale[best] += t
        A += t * np.outer(V[:, best], V[:, best])
        upper += delta_upper
        lower += delta_lower
        logger.debug("BSS round %d picked column %d with weight %.4g", step, best, t)

    eigenvalues = np.linalg.eigvalsh(A)
    gamma = (1.0 - epsilon**2) / math.sqrt(float(eigenvalues.min() * eigenvalues.max()))
    indices = np.flatnonzero(scale > 0)
    cap = bss_size_cap(d, epsilon)
    if indices.size > cap:
        raise BarrierStall(
            f"Barrier selection kept {indices.size} columns, cap is {cap}"
        )
    logger.info("BSS kept %d of %d generators in %d rounds", indices.size, n, rounds)
    return SparsificationResult(
        indices=tuple(int(i) for i in indices),
        weights=gamma * scale[indices],
        epsilon=epsilon,
        method=SparsificationMethod.BSS,
        lower_factor=(1.0 - epsilon) ** 2,
        upper_factor=(1.0 + epsilon) ** 2,
    )


def sparsify_delta_modular(
    matrix: ArrayLike, epsilon: float, delta: Optional[float] = None
) -> SparsificationResult:
    """
    Barrier sparsification of a Delta-modular matrix, columns rescaled by Delta.

    The output generators Delta c_i w_i satisfy
    (1 - eps)^2 h_Z(u) <= h_Z'(u) <= Delta^2 (1 + eps)^2 h_Z(u) at every facet normal u.

    Args:
        matrix (ArrayLike): Delta-modular d x n matrix
        epsilon (float): accuracy in (0, 1)
        delta (Optional[float]): Delta; computed by a determinant scan when omitted
    """
    W = as_matrix(matrix)
    if delta is None:
        delta = geometry.delta_of(W).ratio
    bss = sparsify_bss(W, epsilon)
    return SparsificationResult(
        indices=bss.indices,
        weights=delta * bss.weights,
        epsilon=epsilon,
        method=SparsificationMethod.DELTA_MODULAR,
        lower_factor=(1.0 - epsilon) ** 2,
        upper_factor=delta**2 * (1.0 + epsilon) ** 2,
        pre_rescale_weights=bss.weights,
    )


def split_weighted_columns(
    matrix: ArrayLike, counts: Sequence[int]
) -> Tuple[FloatArray, List[int]]:
    """
    Repeat column i counts[i] times; Z(W diag(c)) equals Z of the split matrix.

    Returns:
        Tuple[FloatArray, List[int]]: split matrix and the source column of each output column

    Raises:
        BadShape: If counts do not match the columns or are negative
        TooManyGenerators: If the split matrix would exceed the column cap
    """
    W = as_matrix(matrix)
    repeats = np.asarray(counts, dtype=np.int64).reshape(-1)
    if repeats.shape[0] != W.shape[1] or np.any(repeats < 0):
        raise BadShape("Need one nonnegative integer count per column")
    total = int(repeats.sum())
    if total > settings.WEIGHTED_COLUMN_CAP:
        raise TooManyGenerators(
            f"Splitting produces {total} columns, cap is {settings.WEIGHTED_COLUMN_CAP}"
        )
    owners = np.repeat(np.arange(W.shape[1]), repeats)
    return W[:, owners], [int(i) for i in owners]


def verify_sandwich(
    matrix: ArrayLike, result: SparsificationResult, directions: ArrayLike
) -> Tuple[float, float]:
    """
    Smallest and largest ratio h_Z'(u) / h_Z(u) over the given directions.

    Raises:
        ZeroDirection: If a direction is zero
    """
    W = as_matrix(matrix)
    U = as_matrix(directions)
    if U.shape[1] != W.shape[0]:
        U = U.T
    if U.shape[0] == 0:
        raise ZeroDirection("At least one direction is required")
    if np.any(np.all(U == 0.0, axis=1)):
        raise ZeroDirection("Directions must be nonzero")
    original = np.abs(U @ W).sum(axis=1)
    sparse = np.abs(U @ result.generators(W)).sum(axis=1)
    ratios = sparse / original
    return float(ratios.min()), float(ratios.max())


class Sparsifier(ABC):
    """Strategy interface over the sparsification methods."""

    @abstractmethod
    def sparsify(self, matrix: ArrayLike, epsilon: float) -> SparsificationResult:
        pass

    @staticmethod
    def create(
        method: SparsificationMethod, seed: int = 0, delta: Optional[float] = None
    ) -> "Sparsifier":
        """Factory method to create the sparsifier of a method."""
        if method == SparsificationMethod.LEWIS:
            return LewisSparsifier(seed)
        elif method == SparsificationMethod.BSS:
            return BSSSparsifier()
        elif method == SparsificationMethod.DELTA_MODULAR:
            return DeltaModularSparsifier(delta)
        raise ValueError(f"Unsupported sparsification method: {method}")


class LewisSparsifier(Sparsifier):
    def __init__(self, seed: int = 0) -> None:
        self.seed = seed

    def sparsify(self, matrix: ArrayLike, epsilon: float) -> SparsificationResult:
        return sparsify_lewis(matrix, epsilon, self.seed)


class BSSSparsifier(Sparsifier):
    def sparsify(self, matrix: ArrayLike, epsilon: float) -> SparsificationResult:
        return sparsify_bss(matrix, epsilon)


class DeltaModularSparsifier(Sparsifier):
    def __init__(self, delta: Optional[float] = None) -> None:
        self.delta = delta

    def sparsify(self, matrix: ArrayLike, epsilon: float) -> SparsificationResult:
        return sparsify_delta_modular(matrix, epsilon, self.delta)

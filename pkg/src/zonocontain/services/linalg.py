"""Dense linear-algebra helpers shared by the geometry and sparsification services."""

import itertools
import math
from typing import Iterator, Tuple

import numpy as np
from numpy.typing import NDArray

from ..config import settings
from ..models.exceptions import DependentSubset, RankDeficient, TooManySubsets
from ..models.zonotope import FloatArray

IndexArray = NDArray[np.int64]

SUBSET_CHUNK = 4096


def check_subset_limit(n: int, k: int, limit: int) -> int:
    """
    Number of k-subsets of n items, refusing scans above ``limit``.

    Raises:
        TooManySubsets: If C(n, k) exceeds limit
    """
    count = math.comb(n, k)
    if count > limit:
        raise TooManySubsets(f"C({n}, {k}) = {count} exceeds the limit {limit}")
    return count


def iter_subset_chunks(
    n: int, k: int, chunk: int = SUBSET_CHUNK
) -> Iterator[IndexArray]:
    """Yield the k-subsets of range(n) in lexicographic order, ``chunk`` at a time."""
    combos = itertools.combinations(range(n), k)
    while True:
        block = list(itertools.islice(combos, chunk))
        if not block:
            return
        yield np.asarray(block, dtype=np.int64).reshape(len(block), k)


def _cofactor_det(stack: FloatArray) -> FloatArray:
    size = stack.shape[-1]
    if size == 1:
        return stack[..., 0, 0]
    if size == 2:
        return stack[..., 0, 0] * stack[..., 1, 1] - stack[..., 0, 1] * stack[..., 1, 0]
    total = np.zeros(stack.shape[:-2])
    rest = stack[..., 1:, :]
    for j in range(size):
        minor = np.delete(rest, j, axis=-1)
        total = total + (-1) ** j * stack[..., 0, j] * _cofactor_det(minor)
    return total


def batched_abs_det(matrix: FloatArray, subsets: IndexArray) -> FloatArray:
    """
    |det W_S| for every row S of ``subsets``.

    Exact cofactor expansion for d <= 4, LU with partial pivoting above.
    """
    stack = np.transpose(matrix[:, subsets], (1, 0, 2))
    if matrix.shape[0] <= 4:
        return np.abs(_cofactor_det(stack))
    return np.abs(np.linalg.det(stack))


def nonsingular_threshold(matrix: FloatArray) -> float:
    """|det| above this value counts as nonsingular."""
    scale = float(np.linalg.norm(matrix, axis=0).max())
    return settings.NONSINGULAR_REL_TOL * scale ** matrix.shape[0]


def require_full_row_rank(matrix: FloatArray) -> None:
    rank = int(np.linalg.matrix_rank(matrix))
    if rank < matrix.shape[0]:
        raise RankDeficient(
            f"Generator matrix has rank {rank}, full dimension {matrix.shape[0]} required"
        )


def inverse_sqrt_psd(gram: FloatArray) -> FloatArray:
    """
    (W W^T)^{-1/2} through a symmetric eigendecomposition.

    Raises:
        RankDeficient: If an eigenvalue falls below 1e-12 * lambda_max
    """
    eigenvalues, eigenvectors = np.linalg.eigh(gram)
    top = float(eigenvalues.max())
    if top <= 0 or float(eigenvalues.min()) < settings.EIGEN_REL_FLOOR * top:
        raise RankDeficient("Gram matrix is singular, cannot whiten")
    return (eigenvectors / np.sqrt(eigenvalues)) @ eigenvectors.T


def canonical_sign(vector: FloatArray, tol: float = 1e-12) -> FloatArray:
    """Flip ``vector`` so that its first non-negligible entry is positive."""
    nonzero = np.flatnonzero(np.abs(vector) > tol)
    if nonzero.size and vector[nonzero[0]] < 0:
        return -vector
    return vector


def orthogonal_complement_vector(columns: FloatArray) -> FloatArray:
    """
    Unit vector orthogonal to the span of d - 1 independent columns.

    Raises:
        DependentSubset: If the columns do not span a hyperplane
    """
    dim, count = columns.shape
    if count != dim - 1:
        raise DependentSubset(f"Need {dim - 1} columns in dimension {dim}, got {count}")
    if dim == 1:
        return np.ones(1)
    left, singular, _ = np.linalg.svd(columns, full_matrices=True)
    scale = max(float(singular[0]), 1.0)
    if float(singular[-1]) <= 1e-10 * scale:
        raise DependentSubset("Selected generators are linearly dependent")
    return canonical_sign(left[:, -1])


def generalized_eigenvalues(target: FloatArray, reference: FloatArray) -> FloatArray:
    """Eigenvalues of (target, reference) for symmetric target and PD reference."""
    root = inverse_sqrt_psd(reference)
    return np.linalg.eigvalsh(root @ target @ root)


def singular_extremes(matrix: FloatArray) -> Tuple[float, float]:
    values = np.linalg.svd(matrix, compute_uv=False)
    return float(values.min()), float(values.max())

"""Seeded instance families for experiments and tests."""

import itertools
import logging
import math
from typing import List, Optional, Tuple

import networkx as nx
import numpy as np

from ..models.exceptions import BadShape
from ..models.experiment import GeneratorFamily
from ..models.zonotope import FloatArray, Zonotope
from .io import read_matrix_csv
from .seeding import derive_rng

logger = logging.getLogger(__name__)


def split_axes_matrix(dim: int, n: int) -> FloatArray:
    """(d/n) times each unit vector repeated n/d times; Z equals [-1, 1]^d."""
    if n < dim or n % dim != 0:
        raise BadShape(f"n = {n} must be a positive multiple of d = {dim}")
    return (dim / n) * np.repeat(np.eye(dim), n // dim, axis=1)


def tu_incidence_matrix(dim: int, n: int, rng: np.random.Generator) -> FloatArray:
    """
    Oriented incidence matrix of a random connected subgraph of K_{d+1}, last row dropped.

    A random Hamiltonian path keeps the graph connected, so the reduced matrix has
    rank d; extra edges are drawn without replacement from the rest of K_{d+1}.

    Raises:
        BadShape: If n is outside [d, C(d+1, 2)]
    """
    max_edges = math.comb(dim + 1, 2)
    if not dim <= n <= max_edges:
        raise BadShape(f"tu_incidence needs d <= n <= {max_edges}, got n = {n}")
    order = rng.permutation(dim + 1)
    path = [(int(u), int(v)) for u, v in zip(order[:-1], order[1:])]
    graph = nx.DiGraph()
    graph.add_nodes_from(range(dim + 1))
    graph.add_edges_from(path)
    taken = {frozenset(e) for e in path}
    pairs = itertools.combinations(range(dim + 1), 2)
    rest = [e for e in pairs if frozenset(e) not in taken]
    for k in rng.permutation(len(rest))[: n - dim]:
        u, v = rest[int(k)]
        graph.add_edge(*((u, v) if rng.random() < 0.5 else (v, u)))
    incidence = nx.incidence_matrix(
        graph,
        nodelist=list(range(dim + 1)),
        edgelist=list(graph.edges()),
        oriented=True,
    )
    return np.asarray(incidence.todense(), dtype=float)[:-1]


def interval_ones_matrix(dim: int, n: int, rng: np.random.Generator) -> FloatArray:
    """
    Consecutive-ones columns: the d unit intervals plus n - d distinct longer intervals.

    Raises:
        BadShape: If n is outside [d, d(d+1)/2]
    """
    intervals: List[Tuple[int, int]] = [
        (a, b) for a in range(dim) for b in range(a + 1, dim)
    ]
    if not dim <= n <= dim + len(intervals):
        raise BadShape(
            f"interval_ones needs d <= n <= {dim + len(intervals)}, got n = {n}"
        )
    chosen = [(i, i) for i in range(dim)]
    chosen += [intervals[int(k)] for k in rng.permutation(len(intervals))[: n - dim]]
    W = np.zeros((dim, n))
    for col, (a, b) in enumerate(chosen):
        W[a : b + 1, col] = 1.0
    return W[:, rng.permutation(n)]


def gen_random_zonotope(
    dim: int,
    n: int,
    family: GeneratorFamily,
    seed: int,
    path: Optional[str] = None,
) -> Zonotope:
    """
    Generate a zonotope of the given family, deterministic in ``seed``.

    Args:
        dim (int): ambient dimension d
        n (int): number of generators
        family (GeneratorFamily): instance family
        seed (int): seed of the instance stream
        path (Optional[str]): generator CSV, required by explicit_path

    Raises:
        BadShape: If (d, n) does not fit the family
    """
    if dim < 1 or n < 1:
        raise BadShape(f"d and n must be positive, got d = {dim}, n = {n}")
    rng = derive_rng(seed)
    if family is GeneratorFamily.GAUSSIAN:
        if n < dim:
            raise BadShape(f"gaussian needs n >= d, got n = {n}")
        W = rng.standard_normal((dim, n))
    elif family is GeneratorFamily.TU_INCIDENCE:
        W = tu_incidence_matrix(dim, n, rng)
    elif family is GeneratorFamily.INTERVAL_ONES:
        W = interval_ones_matrix(dim, n, rng)
    elif family is GeneratorFamily.SPLIT_AXES:
        W = split_axes_matrix(dim, n)
    else:
        if path is None:
            raise BadShape("explicit_path family needs a generator CSV path")
        W = read_matrix_csv(path)
        if W.shape[0] != dim:
            raise BadShape(f"{path} has {W.shape[0]} rows, expected d = {dim}")
    logger.debug(
        "generated %s zonotope d=%d n=%d seed=%d", family.value, dim, W.shape[1], seed
    )
    return Zonotope.from_matrix(W)

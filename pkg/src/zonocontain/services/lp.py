"""
Small exact linear programs: witness gauges and H-polytope support values.

Thin layer over ``scipy.optimize.linprog`` (HiGHS) that maps solver status codes
onto the package's exception hierarchy.
"""

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
from numpy.typing import ArrayLike
from scipy.optimize import linprog

from ..config import settings
from ..models.exceptions import LPInfeasible, LPNumerical, Unbounded
from ..models.zonotope import FloatArray, as_matrix

logger = logging.getLogger(__name__)


class LPStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"
    NUMERICAL = "numerical"


_STATUS = {
    0: LPStatus.OPTIMAL,
    1: LPStatus.ITERATION_LIMIT,
    2: LPStatus.INFEASIBLE,
    3: LPStatus.UNBOUNDED,
    4: LPStatus.NUMERICAL,
}


@dataclass(frozen=True, eq=False)
class LPResult:
    """Outcome of a linear program; ``x`` is meaningful only when optimal."""

    x: FloatArray
    value: float
    status: LPStatus
    iterations: int

    def require_optimal(self, context: str = "linear program") -> "LPResult":
        """
        Return self when optimal, otherwise raise the matching error.

        Raises:
            LPInfeasible: If the program has no feasible point
            Unbounded: If the objective decreases without bound
            LPNumerical: If the solver hit its iteration cap or lost precision
        """
        if self.status is LPStatus.INFEASIBLE:
            raise LPInfeasible(f"{context} is infeasible")
        if self.status is LPStatus.UNBOUNDED:
            raise Unbounded(f"{context} is unbounded")
        if self.status is not LPStatus.OPTIMAL:
            raise LPNumerical(
                f"{context} stopped with status {self.status.value} "
                f"after {self.iterations} iterations"
            )
        return self


def _solve(c: FloatArray, tol: float, max_iter: int, **constraints: object) -> LPResult:
    result = linprog(
        c,
        method="highs",
        options={
            "maxiter": max_iter,
            "primal_feasibility_tolerance": tol,
            "dual_feasibility_tolerance": tol,
        },
        **constraints,
    )
    status = _STATUS.get(int(result.status), LPStatus.NUMERICAL)
    iterations = int(getattr(result, "nit", 0) or 0)
    if status is not LPStatus.OPTIMAL:
        logger.debug("linprog stopped: %s", result.message)
        return LPResult(np.full(c.shape[0], np.nan), float("nan"), status, iterations)
    return LPResult(
        np.asarray(result.x, dtype=float), float(result.fun), status, iterations
    )


def solve_inequality_form(
    c: ArrayLike,
    A_ub: ArrayLike,
    b_ub: ArrayLike,
    tol: float = settings.GAUGE_TOL,
    max_iter: int = settings.LP_MAX_ITER,
) -> LPResult:
    """Minimize c . x subject to A_ub x <= b_ub with x free."""
    cost = np.asarray(c, dtype=float).reshape(-1)
    return _solve(
        cost,
        tol,
        max_iter,
        A_ub=as_matrix(A_ub),
        b_ub=np.asarray(b_ub, dtype=float).reshape(-1),
        bounds=[(None, None)] * cost.shape[0],
    )


def zonotope_gauge_lp(
    generators: FloatArray,
    point: FloatArray,
    tol: float = settings.GAUGE_TOL,
    max_iter: int = settings.LP_MAX_ITER,
) -> LPResult:
    """
    min t subject to W x = p and -t <= x_i <= t.

    Variable order is (x, t); the optimum value is the gauge of p.
    """
    d, n = generators.shape
    c = np.zeros(n + 1)
    c[-1] = 1.0
    eye = np.eye(n)
    bound_rows = np.vstack(
        [np.hstack([eye, -np.ones((n, 1))]), np.hstack([-eye, -np.ones((n, 1))])]
    )
    return _solve(
        c,
        tol,
        max_iter,
        A_ub=bound_rows,
        b_ub=np.zeros(2 * n),
        A_eq=np.hstack([generators, np.zeros((d, 1))]),
        b_eq=np.asarray(point, dtype=float),
        bounds=[(None, None)] * n + [(0, None)],
    )

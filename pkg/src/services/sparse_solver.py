"""Sparse linear solves with a residual check and an iterative fallback."""

import warnings

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import MatrixRankWarning, cg, spsolve

from ..lib.config import SOLVER_MAX_ITERATIONS, SOLVER_RTOL
from ..lib.errors import SolverFailure
from ..lib.logging import get_logger

logger = get_logger(__name__)


def _relative_residual(matrix: sparse.spmatrix, x: np.ndarray, rhs: np.ndarray) -> float:
    rhs_norm = np.linalg.norm(rhs)
    residual = np.linalg.norm(matrix @ x - rhs)
    if rhs_norm == 0.0:
        return float(residual)
    return float(residual / rhs_norm)


def solve_symmetric(
    matrix: sparse.spmatrix,
    rhs: np.ndarray,
    rtol: float = SOLVER_RTOL,
    stage: str = "solver",
) -> np.ndarray:
    """
    Solve a sparse symmetric positive definite system.

    A direct factorisation is tried first; if its relative residual exceeds
    ``rtol`` each right-hand side is re-solved with conjugate gradients.

    Args:
        matrix: (n, n) sparse SPD matrix
        rhs: (n,) or (n, k) right-hand side
        rtol: Required relative residual
        stage: Stage name attached to a SolverFailure

    Returns:
        Solution with the shape of ``rhs``

    Raises:
        SolverFailure: If no method reaches the tolerance
    """
    matrix = sparse.csc_matrix(matrix)
    rhs = np.asarray(rhs, dtype=float)
    if matrix.shape[0] == 0:
        return np.zeros_like(rhs)

    columns = rhs.reshape(len(rhs), -1)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", MatrixRankWarning)
            solution = np.asarray(spsolve(matrix, columns)).reshape(columns.shape)
    except (MatrixRankWarning, RuntimeError) as e:
        logger.debug("direct_solve_failed", error=str(e))
        solution = np.full(columns.shape, np.nan)

    for k in range(columns.shape[1]):
        x = solution[:, k]
        if np.all(np.isfinite(x)) and _relative_residual(matrix, x, columns[:, k]) <= rtol:
            continue
        logger.debug("iterative_fallback", column=k, size=matrix.shape[0])
        x0 = x if np.all(np.isfinite(x)) else None
        x, info = cg(matrix, columns[:, k], x0=x0, rtol=rtol, atol=0.0, maxiter=SOLVER_MAX_ITERATIONS)
        residual = _relative_residual(matrix, x, columns[:, k])
        if info != 0 or not np.all(np.isfinite(x)) or residual > rtol:
            raise SolverFailure(
                f"linear system did not converge (relative residual {residual:.3e} > {rtol:.1e})",
                stage=stage,
                residual=residual,
            )
        solution[:, k] = x

    return solution.reshape(rhs.shape)

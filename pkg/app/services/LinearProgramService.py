# app/services/LinearProgramService.py
import logging
from typing import List, Optional, Tuple

import numpy as np
from numpy.typing import NDArray

from app.constants.constants import LinearProgramStatus
from app.core.config import settings
from app.core.errors import InfeasibleProgramError, LinearProgramError, UnboundedProgramError
from app.models.linear_program import LinearProgramResult

logger = logging.getLogger(__name__)


class _Tableau:
    """Dense simplex tableau in the row-sign-normalized standard form."""

    def __init__(self, matrix: NDArray[np.float64], rhs: NDArray[np.float64], basis: List[int]):
        self.matrix = matrix
        self.rhs = rhs
        self.basis = basis

    def pivot(self, row: int, column: int) -> None:
        pivot = self.matrix[row, column]
        self.matrix[row] /= pivot
        self.rhs[row] /= pivot
        factors = self.matrix[:, column].copy()
        factors[row] = 0.0
        self.matrix -= np.outer(factors, self.matrix[row])
        self.rhs -= factors * self.rhs[row]
        np.maximum(self.rhs, 0.0, out=self.rhs)
        self.basis[row] = column


class LinearProgramService:
    """
    Dense two-phase primal simplex with Bland's anti-cycling rule.

    Solves min cᵀx over x ≥ 0 with ≤ rows, = rows and finite upper bounds,
    reporting optimal primal values and row marginals.
    """

    def __init__(
        self,
        feasibility_tol: Optional[float] = None,
        pivot_tol: Optional[float] = None,
        max_iterations: Optional[int] = None,
    ):
        """
        Initialize the LinearProgramService.

        Args:
            feasibility_tol: phase-one residual and reduced-cost tolerance
            pivot_tol: smallest admissible pivot magnitude
            max_iterations: total pivot budget over both phases
        """
        self.feasibility_tol = feasibility_tol or settings.WEIGHTFORGE_FEASIBILITY_TOL
        self.pivot_tol = pivot_tol or settings.WEIGHTFORGE_PIVOT_TOL
        self.max_iterations = max_iterations or settings.WEIGHTFORGE_LP_MAX_ITERATIONS

    def _run(self, tableau: _Tableau, cost: NDArray[np.float64], allowed: NDArray[np.bool_], budget: int) -> Tuple[LinearProgramStatus, int]:
        iterations = 0
        scale = max(1.0, float(np.max(np.abs(cost))))
        while True:
            if iterations >= budget:
                return LinearProgramStatus.iteration_limit, iterations
            reduced = cost - cost[tableau.basis] @ tableau.matrix
            candidates = np.flatnonzero(allowed & (reduced < -self.feasibility_tol * scale))
            if candidates.size == 0:
                return LinearProgramStatus.optimal, iterations
            entering = int(candidates[0])
            column = tableau.matrix[:, entering]
            rows = np.flatnonzero(column > self.pivot_tol)
            if rows.size == 0:
                return LinearProgramStatus.unbounded, iterations
            ratios = tableau.rhs[rows] / column[rows]
            best = ratios.min()
            ties = rows[ratios <= best + 1e-12 * max(1.0, abs(best))]
            leaving = int(min(ties, key=lambda r: tableau.basis[r]))
            tableau.pivot(leaving, entering)
            iterations += 1

    def solve(
        self,
        c: NDArray[np.float64],
        A_ub: Optional[NDArray[np.float64]] = None,
        b_ub: Optional[NDArray[np.float64]] = None,
        A_eq: Optional[NDArray[np.float64]] = None,
        b_eq: Optional[NDArray[np.float64]] = None,
        upper: Optional[NDArray[np.float64]] = None,
    ) -> LinearProgramResult:
        """
        Minimize cᵀx subject to A_ub x ≤ b_ub, A_eq x = b_eq, 0 ≤ x ≤ upper.

        Args:
            c: objective, length n
            A_ub, b_ub: inequality rows
            A_eq, b_eq: equality rows
            upper: per-variable upper bounds (inf for none)

        Returns:
            LinearProgramResult with status optimal / infeasible / unbounded / iteration_limit
        """
        c = np.asarray(c, dtype=np.float64)
        n = c.size
        A_ub = np.zeros((0, n)) if A_ub is None else np.atleast_2d(np.asarray(A_ub, dtype=np.float64))
        b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=np.float64).ravel()
        A_eq = np.zeros((0, n)) if A_eq is None else np.atleast_2d(np.asarray(A_eq, dtype=np.float64))
        b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=np.float64).ravel()
        if A_ub.shape != (b_ub.size, n) or A_eq.shape != (b_eq.size, n):
            raise LinearProgramError(
                f"Inconsistent program: c has {n} entries, A_ub {A_ub.shape}, b_ub {b_ub.size}, A_eq {A_eq.shape}, b_eq {b_eq.size}"
            )

        bounded = np.zeros(0, dtype=np.int64)
        if upper is not None:
            upper = np.asarray(upper, dtype=np.float64).ravel()
            if upper.size != n:
                raise LinearProgramError(f"upper has {upper.size} entries, expected {n}")
            bounded = np.flatnonzero(np.isfinite(upper))
        A_upper = np.zeros((bounded.size, n))
        A_upper[np.arange(bounded.size), bounded] = 1.0
        b_upper = upper[bounded] if bounded.size else np.zeros(0)

        inequality = np.vstack([A_ub, A_upper])
        inequality_rhs = np.concatenate([b_ub, b_upper])
        m_le = inequality.shape[0]
        m = m_le + A_eq.shape[0]
        rows = np.vstack([inequality, A_eq])
        rhs = np.concatenate([inequality_rhs, b_eq])
        signs = np.where(rhs < 0, -1.0, 1.0)

        # columns: originals | one slack per ≤ row | artificials
        needs_artificial = np.ones(m, dtype=bool)
        needs_artificial[:m_le] = signs[:m_le] < 0
        artificial_rows = np.flatnonzero(needs_artificial)
        width = n + m_le + artificial_rows.size
        standard = np.zeros((m, width))
        standard[:, :n] = rows
        standard[np.arange(m_le), n + np.arange(m_le)] = 1.0
        standard *= signs[:, None]
        standard[artificial_rows, n + m_le + np.arange(artificial_rows.size)] = 1.0
        original = standard.copy()

        basis = [0] * m
        for row in range(m_le):
            if not needs_artificial[row]:
                basis[row] = n + row
        for offset, row in enumerate(artificial_rows):
            basis[row] = n + m_le + offset
        tableau = _Tableau(standard, rhs * signs, basis)

        is_artificial = np.zeros(width, dtype=bool)
        is_artificial[n + m_le:] = True
        iterations = 0
        empty = np.zeros(0)

        def failed(status: LinearProgramStatus) -> LinearProgramResult:
            return LinearProgramResult(status, None, None, np.zeros(b_ub.size), np.zeros(b_eq.size), np.zeros(n), iterations)

        if artificial_rows.size:
            phase_one = is_artificial.astype(np.float64)
            status, used = self._run(tableau, phase_one, np.ones(width, dtype=bool), self.max_iterations)
            iterations += used
            if status == LinearProgramStatus.iteration_limit:
                return failed(status)
            residual = float(phase_one[tableau.basis] @ tableau.rhs)
            if residual > self.feasibility_tol * max(1.0, float(np.max(np.abs(rhs), initial=0.0))):
                logger.debug(f"phase one residual {residual:.3e}: infeasible")
                return failed(LinearProgramStatus.infeasible)
            for row in range(m):
                if is_artificial[tableau.basis[row]]:
                    entries = np.flatnonzero((~is_artificial) & (np.abs(tableau.matrix[row]) > self.pivot_tol))
                    if entries.size:
                        tableau.pivot(row, int(entries[0]))

        cost = np.zeros(width)
        cost[:n] = c
        status, used = self._run(tableau, cost, ~is_artificial, self.max_iterations - iterations)
        iterations += used
        if status != LinearProgramStatus.optimal:
            return failed(status)

        values = np.zeros(width)
        values[tableau.basis] = tableau.rhs
        x = np.where(values[:n] < 0, 0.0, values[:n])

        marginals = empty
        if m:
            basis_matrix = original[:, tableau.basis]
            marginals = np.linalg.solve(basis_matrix.T, cost[tableau.basis]) * signs
        return LinearProgramResult(
            status=LinearProgramStatus.optimal,
            x=x,
            fun=float(c @ x),
            marginals_ub=marginals[: b_ub.size],
            marginals_eq=marginals[m_le:],
            marginals_upper=self._expand_upper(marginals[b_ub.size:m_le], bounded, n),
            iterations=iterations,
        )

    @staticmethod
    def _expand_upper(values: NDArray[np.float64], bounded: NDArray[np.int64], n: int) -> NDArray[np.float64]:
        expanded = np.zeros(n)
        expanded[bounded] = values
        return expanded

    def solve_or_raise(self, *args, **kwargs) -> LinearProgramResult:
        """solve, raising InfeasibleProgramError / UnboundedProgramError instead of returning them."""
        result = self.solve(*args, **kwargs)
        if result.status == LinearProgramStatus.infeasible:
            raise InfeasibleProgramError("Linear program is infeasible")
        if result.status == LinearProgramStatus.unbounded:
            raise UnboundedProgramError("Linear program is unbounded")
        if result.status == LinearProgramStatus.iteration_limit:
            raise LinearProgramError("Simplex iteration limit reached")
        return result

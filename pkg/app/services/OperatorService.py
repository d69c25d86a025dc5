# app/services/OperatorService.py
import logging
import math
from typing import Optional, Tuple

import numpy as np
from numpy.typing import NDArray

from app.core.config import settings
from app.core.errors import DimensionMismatchError
from app.models.operator import OperatorModel
from app.models.space import OperatorNormEstimate, conjugate_exponent
from app.services.SpaceService import SpaceService
from app.utils.lattice_utils import LatticeUtils
from app.utils.random_utils import best_by_value, derive_rng, parallel_map

logger = logging.getLogger(__name__)

_POWER_ITERATIONS = 300


class OperatorService:
    """
    Dense operators between weighted spaces: application, adjoints, moduli,
    compositions and operator-norm estimates with witnesses.
    """

    def __init__(self, space_service: Optional[SpaceService] = None, enumeration_limit: Optional[int] = None):
        """
        Initialize the OperatorService.

        Args:
            space_service: shared SpaceService (a new one if None)
            enumeration_limit: largest dimension for exact sign enumeration
        """
        self.spaces = space_service or SpaceService(enumeration_limit)
        self.enumeration_limit = enumeration_limit or settings.WEIGHTFORGE_ENUMERATION_LIMIT

    # ------------------------------
    # Algebra
    # ------------------------------
    @staticmethod
    def apply(T: OperatorModel, f: NDArray[np.float64]) -> NDArray[np.float64]:
        """T f for a vector, or row-wise for a batch."""
        array = np.asarray(f, dtype=np.float64)
        if array.shape[-1:] != (T.domain.dimension,):
            raise DimensionMismatchError(
                f"Operator expects {T.domain.dimension} entries, got trailing size {array.shape[-1:] or 0}"
            )
        return array @ T.matrix.T

    def adjoint(self, T: OperatorModel) -> OperatorModel:
        """
        T* with ⟨Tf, g⟩_ν = ⟨f, T*g⟩_μ, i.e. D_μ^{-1} Tᵀ D_ν, between the Köthe duals.
        """
        mu = T.domain.masses
        nu = T.codomain.masses
        matrix = (T.matrix.T * nu[None, :]) / mu[:, None]
        return OperatorModel(
            matrix,
            domain=self.spaces.kothe_dual(T.codomain),
            codomain=self.spaces.kothe_dual(T.domain),
        )

    @staticmethod
    def modulus(T: OperatorModel) -> OperatorModel:
        return T.with_matrix(np.abs(T.matrix))

    @staticmethod
    def positive_part(T: OperatorModel) -> OperatorModel:
        return T.with_matrix((np.abs(T.matrix) + T.matrix) / 2.0)

    @staticmethod
    def negative_part(T: OperatorModel) -> OperatorModel:
        return T.with_matrix((np.abs(T.matrix) - T.matrix) / 2.0)

    @staticmethod
    def scale(T: OperatorModel, factor: float) -> OperatorModel:
        return T.with_matrix(factor * T.matrix)

    @staticmethod
    def compose(outer: OperatorModel, inner: OperatorModel) -> OperatorModel:
        """outer ∘ inner."""
        if inner.codomain.dimension != outer.domain.dimension:
            raise DimensionMismatchError(
                f"Cannot compose: inner maps into {inner.codomain.dimension} atoms, outer expects {outer.domain.dimension}"
            )
        return OperatorModel(outer.matrix @ inner.matrix, inner.domain, outer.codomain)

    # ------------------------------
    # Norm estimation
    # ------------------------------
    @staticmethod
    def reduced_matrix(T: OperatorModel) -> NDArray[np.float64]:
        """A = D_β T D_α^{-1}, so that ‖T‖ is the unweighted ℓ^s → ℓ^q norm of A."""
        alpha = T.domain.reduction_scale()
        beta = T.codomain.reduction_scale()
        return (beta[:, None] * T.matrix) / alpha[None, :]

    @staticmethod
    def _power_iteration(A: NDArray[np.float64], s: float, q: float, start: NDArray[np.float64]) -> Tuple[float, NDArray[np.float64]]:
        s_dual = conjugate_exponent(s)
        norm = float(LatticeUtils.lp_norm(start, s))
        if norm == 0:
            return 0.0, start
        u = start / norm
        best = float(LatticeUtils.lp_norm(A @ u, q))
        for _ in range(_POWER_ITERATIONS):
            image = A @ u
            if not np.any(image):
                break
            back = A.T @ LatticeUtils.dual_direction(image, q)
            if not np.any(back):
                break
            candidate = LatticeUtils.dual_direction(back, s_dual)
            value = float(LatticeUtils.lp_norm(A @ candidate, q))
            if value <= best * (1.0 + 1e-14):
                if value >= best:
                    u, best = candidate, value
                break
            u, best = candidate, value
        return best, u

    def reduced_norm(
        self,
        A: NDArray[np.float64],
        s: float,
        q: float,
        budget: int,
        seed: int,
    ) -> Tuple[float, NDArray[np.float64], bool, str]:
        """
        ‖A‖ from unweighted ℓ^s to ℓ^q.

        Exact for s = 1, q = inf, s = q = 2, and by sign enumeration for s = inf
        or q = 1 in small dimension; otherwise multistart power iteration (lower bound).

        Returns:
            (value, witness u, exact, method)
        """
        m, n = A.shape
        if not np.any(A):
            witness = np.zeros(n)
            witness[0] = 1.0
            return 0.0, witness, True, "zero"
        if s == 1.0:
            columns = LatticeUtils.lp_norm(A, q, axis=0)
            index = int(np.argmax(columns))
            witness = np.zeros(n)
            witness[index] = 1.0
            return float(columns[index]), witness, True, "column"
        s_dual = conjugate_exponent(s)
        if math.isinf(q):
            rows = LatticeUtils.lp_norm(A, s_dual, axis=1)
            index = int(np.argmax(rows))
            return float(rows[index]), LatticeUtils.dual_direction(A[index], s_dual), True, "row"
        if s == 2.0 and q == 2.0:
            _, singular, vt = np.linalg.svd(A)
            witness = vt[0]
            if witness.sum() < 0:
                witness = -witness
            return float(singular[0]), witness, True, "spectral"
        if math.isinf(s) and n <= self.enumeration_limit:
            signs = LatticeUtils.sign_vectors(n)
            values = LatticeUtils.lp_norm(signs @ A.T, q, axis=-1)
            index = int(np.argmax(values))
            return float(values[index]), signs[index], True, "sign-enumeration"
        if q == 1.0 and m <= self.enumeration_limit:
            signs = LatticeUtils.sign_vectors(m)
            backs = signs @ A
            values = LatticeUtils.lp_norm(backs, s_dual, axis=-1)
            index = int(np.argmax(values))
            return float(values[index]), LatticeUtils.dual_direction(backs[index], s_dual), True, "dual-sign-enumeration"

        starts = [np.ones(n), np.zeros(n)]
        starts[1][int(np.argmax(LatticeUtils.lp_norm(A, q, axis=0)))] = 1.0
        for restart in range(max(1, budget)):
            rng = derive_rng(seed, "operator-norm", restart)
            starts.append(rng.standard_normal(n))
        results = parallel_map(lambda start: self._power_iteration(A, s, q, start), starts)
        value, witness = best_by_value(results, key=lambda item: item[0])
        return value, witness, False, "power-iteration"

    def operator_norm(self, T: OperatorModel, budget: Optional[int] = None, seed: int = 0) -> OperatorNormEstimate:
        """
        Lower bound for ‖T‖ achieved by a witness; exact in the closed-form cases.

        Args:
            T: operator
            budget: multistart restarts
            seed: base seed

        Returns:
            OperatorNormEstimate
        """
        budget = budget or settings.WEIGHTFORGE_DEFAULT_BUDGET
        A = self.reduced_matrix(T)
        value, u, exact, method = self.reduced_norm(A, T.domain.exponent, T.codomain.exponent, budget, seed)
        witness = u / T.domain.reduction_scale()
        logger.debug(f"operator norm {value:.8g} via {method} ({'exact' if exact else 'lower bound'})")
        return OperatorNormEstimate(value=value, witness=witness, exact=exact, method=method, upper=value if exact else None)

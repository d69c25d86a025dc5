# app/services/RegularityService.py
import logging
import math
from typing import List, Optional, Tuple

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import minimize

from app.constants.constants import ANCHOR_LAMBDA, ANCHOR_RHO, BracketStatus
from app.core.config import settings
from app.core.errors import InvalidParameterError
from app.models.certificates import ConstantBracket, Family
from app.models.operator import OperatorModel
from app.models.space import SpaceDescriptor, parse_exponent
from app.services.WeightSynthesisService import WeightSynthesisService
from app.utils.lattice_utils import LatticeUtils
from app.utils.random_utils import best_by_value, derive_rng, parallel_map

logger = logging.getLogger(__name__)

_ASCENT_ITERATIONS = 200


class RegularityService:
    """
    Lower and upper bounds for the p-regular norm ρ_p(T) and the lattice
    p-summing norm λ_p(T).

    Lower bounds come from explicit families; upper bounds from certified
    domination weights and Pietsch measures at the top corner of the codomain.
    """

    def __init__(self, synthesis_service: Optional[WeightSynthesisService] = None):
        """
        Initialize the RegularityService.

        Args:
            synthesis_service: shared WeightSynthesisService
        """
        self.synthesis = synthesis_service or WeightSynthesisService()
        self.operators = self.synthesis.operators
        self.spaces = self.synthesis.spaces

    # ------------------------------
    # Ratios
    # ------------------------------
    def _lattice_value_and_gradient(self, space: SpaceDescriptor, rows: NDArray[np.float64], p: float) -> Tuple[float, NDArray[np.float64]]:
        """‖(Σ_i |r_i|^p)^{1/p}‖ and its gradient with respect to the rows."""
        square = LatticeUtils.square_function(rows, p)
        value = self.spaces.norm_eval(space, square)
        if value == 0:
            return 0.0, np.zeros_like(rows)
        if space.is_inf:
            outer = np.zeros_like(square)
            index = int(np.argmax(space.weight * square))
            outer[index] = space.weight[index]
        else:
            q = space.exponent
            outer = space.weight * space.masses * square ** (q - 1.0) * value ** (1.0 - q)
        with np.errstate(divide="ignore", invalid="ignore"):
            factor = np.where(square > 0, outer * square ** (1.0 - p), 0.0)
        gradient = factor[None, :] * np.abs(rows) ** (p - 1.0) * np.sign(rows)
        return value, gradient

    def rho_ratio(self, T: OperatorModel, family: NDArray[np.float64], p: float) -> float:
        """‖(Σ|T x_i|^p)^{1/p}‖_Y / ‖(Σ|x_i|^p)^{1/p}‖_X."""
        family = np.atleast_2d(family)
        denominator = self.spaces.lattice_norm(T.domain, family, p)
        if denominator == 0:
            return 0.0
        return self.spaces.lattice_norm(T.codomain, family @ T.matrix.T, p) / denominator

    def lambda_ratio(self, T: OperatorModel, family: NDArray[np.float64], p: float) -> float:
        """‖(Σ|T x_i|^p)^{1/p}‖_Y / weak ℓ^p norm of the family (exact or an upper bound)."""
        family = np.atleast_2d(family)
        weak, _ = self.spaces.weak_lp_norm(T.domain, family, p)
        if weak == 0:
            return 0.0
        return self.spaces.lattice_norm(T.codomain, family @ T.matrix.T, p) / weak

    def _ascend(self, T: OperatorModel, p: float, start: NDArray[np.float64]) -> NDArray[np.float64]:
        shape = start.shape

        def objective(flat: NDArray[np.float64]):
            family = flat.reshape(shape)
            top, top_gradient = self._lattice_value_and_gradient(T.codomain, family @ T.matrix.T, p)
            bottom, bottom_gradient = self._lattice_value_and_gradient(T.domain, family, p)
            if bottom == 0:
                return 0.0, np.zeros_like(flat)
            gradient = (top_gradient @ T.matrix * bottom - top * bottom_gradient) / bottom ** 2
            return -top / bottom, -gradient.ravel()

        result = minimize(objective, start.ravel(), jac=True, method="L-BFGS-B", options={"maxiter": _ASCENT_ITERATIONS})
        family = result.x.reshape(shape)
        return family if np.all(np.isfinite(family)) else start

    def _structured_families(self, T: OperatorModel, seed: int) -> List[NDArray[np.float64]]:
        n = T.domain.dimension
        witness = self.operators.operator_norm(T, seed=seed).witness
        return [
            witness[None, :],
            np.eye(n) / self.spaces.coordinate_norms(T.domain)[:, None],
            LatticeUtils.walsh_family(n) / T.domain.reduction_scale()[None, :],
        ]

    def _ascent_families(self, T: OperatorModel, p: float, family_size: int, budget: int, seed: int) -> List[NDArray[np.float64]]:
        n = T.domain.dimension
        alpha = T.domain.reduction_scale()
        tasks = [(size, restart) for size in range(1, family_size + 1) for restart in range(budget)]

        def run(task):
            size, restart = task
            rng = derive_rng(seed, "rho", size, restart)
            start = rng.standard_normal((size, n)) / alpha[None, :]
            return self._ascend(T, p, start)

        return parallel_map(run, tasks)

    # ------------------------------
    # Lower bounds
    # ------------------------------
    def _check(self, p: float, family_size: int, budget: int) -> float:
        p = parse_exponent(p)
        if math.isinf(p):
            raise InvalidParameterError("Regularity constants need a finite p")
        if family_size < 1 or budget < 1:
            raise InvalidParameterError("family_size and budget must be >= 1")
        return p

    def rho_lower(self, T: OperatorModel, p: float, family_size: int = 3, budget: Optional[int] = None, seed: int = 0) -> Tuple[float, Family]:
        """
        Best ratio ‖(Σ|T x_i|^p)^{1/p}‖ / ‖(Σ|x_i|^p)^{1/p}‖ found, a lower bound for ρ_p(T).

        Runs L-BFGS-B on the ratio for every family size up to `family_size`
        with `budget` seeded restarts each, plus the operator-norm witness,
        the coordinate family and the Walsh family.

        Args:
            T: operator
            p: exponent
            family_size: largest family size searched
            budget: restarts per family size
            seed: base seed

        Returns:
            (ratio, witness family)
        """
        budget = budget or settings.WEIGHTFORGE_DEFAULT_BUDGET
        p = self._check(p, family_size, budget)
        if T.is_zero:
            return 0.0, [np.eye(T.domain.dimension)[0]]
        families = self._structured_families(T, seed) + self._ascent_families(T, p, family_size, budget, seed)
        scored = [(self.rho_ratio(T, family, p), family) for family in families]
        value, family = best_by_value(scored, key=lambda item: item[0])
        logger.info(f"rho_{p:g} lower bound {value:.8g} from a family of {family.shape[0]}")
        return value, list(family)

    def lambda_lower(self, T: OperatorModel, p: float, family_size: int = 3, budget: Optional[int] = None, seed: int = 0) -> Tuple[float, Family]:
        """
        Best ratio of ‖(Σ|T x_i|^p)^{1/p}‖ to the weak ℓ^p norm of (x_i), a lower bound for λ_p(T).

        Scores the families searched by rho_lower (so it never falls below it),
        random sign families and the all-ones singleton.

        Returns:
            (ratio, witness family)
        """
        budget = budget or settings.WEIGHTFORGE_DEFAULT_BUDGET
        p = self._check(p, family_size, budget)
        n = T.domain.dimension
        if T.is_zero:
            return 0.0, [np.eye(n)[0]]
        families = self._structured_families(T, seed) + self._ascent_families(T, p, family_size, budget, seed)
        families.append(np.ones((1, n)))
        for restart in range(budget):
            rng = derive_rng(seed, "lambda-signs", restart)
            size = int(rng.integers(1, max(2, n) + 1))
            families.append(rng.choice([-1.0, 1.0], size=(size, n)) / T.domain.reduction_scale()[None, :])
        scored = [(self.lambda_ratio(T, family, p), family) for family in families]
        value, family = best_by_value(scored, key=lambda item: item[0])
        logger.info(f"lambda_{p:g} lower bound {value:.8g} from a family of {family.shape[0]}")
        return value, list(family)

    # ------------------------------
    # Upper bounds
    # ------------------------------
    def rho_upper(self, T: OperatorModel, p: float, tol: Optional[float] = None, seed: int = 0) -> ConstantBracket:
        """
        Certified upper bound for ρ_p(T) from the minimal domination constant at the top corner.

        Requires a weighted L^p codomain, whose (Y_[p])'-ball is a box with maximal element b;
        any family then has ‖(Σ|T x_i|^p)^{1/p}‖^p = Σ_i ⟨|T x_i|^p, b⟩.
        """
        p = self._check(p, 1, 1)
        top = self.synthesis.top_corner(T.codomain, p)
        bracket = self.synthesis.min_constant_domination(T, p, top, tol=tol, seed=seed)
        bracket.anchor = ANCHOR_RHO
        return bracket

    def lambda_upper(self, T: OperatorModel, p: float, pool_size: int = 0, tol: Optional[float] = None, seed: int = 0) -> ConstantBracket:
        """
        Certified upper bound for λ_p(T) from the minimal Pietsch constant at the top corner.

        Args:
            pool_size: extra norming functionals of random unit vectors added to the starting pool
                (ignored when the pool already holds every extreme point of B_{X'})
        """
        p = self._check(p, 1, 1)
        top = self.synthesis.top_corner(T.codomain, p)
        pool, complete = self.synthesis.pietsch_pool(T.domain)
        if not complete and pool_size > 0:
            rng = derive_rng(seed, "pietsch-pool")
            for f in self.spaces.sample_unit_vectors(T.domain, pool_size, rng):
                pool.append(self.spaces.norming_functional(T.domain, f))
        bracket = self.synthesis.min_constant_pietsch(T, p, top, tol=tol, seed=seed, pool=pool, complete=complete)
        bracket.anchor = ANCHOR_LAMBDA
        return bracket

    # ------------------------------
    # Brackets
    # ------------------------------
    @staticmethod
    def _merge(bracket: ConstantBracket, lower: float, witness: Family, tol: float) -> ConstantBracket:
        if lower > bracket.lower:
            bracket.lower = min(lower, bracket.upper) if bracket.upper is not None else lower
            bracket.lower_witness = witness
        if bracket.upper is not None and bracket.upper - bracket.lower <= tol * max(bracket.upper, 1e-12):
            bracket.status = BracketStatus.certified
        return bracket

    def rho_bracket(
        self,
        T: OperatorModel,
        p: float,
        family_size: int = 3,
        budget: Optional[int] = None,
        tol: Optional[float] = None,
        seed: int = 0,
    ) -> ConstantBracket:
        """rho_lower merged with rho_upper."""
        tol = tol or settings.WEIGHTFORGE_DEFAULT_TOL
        lower, witness = self.rho_lower(T, p, family_size, budget, seed)
        return self._merge(self.rho_upper(T, p, tol, seed), lower, witness, tol)

    def lambda_bracket(
        self,
        T: OperatorModel,
        p: float,
        family_size: int = 3,
        budget: Optional[int] = None,
        tol: Optional[float] = None,
        seed: int = 0,
        pool_size: int = 0,
    ) -> ConstantBracket:
        """lambda_lower merged with lambda_upper."""
        tol = tol or settings.WEIGHTFORGE_DEFAULT_TOL
        lower, witness = self.lambda_lower(T, p, family_size, budget, seed)
        return self._merge(self.lambda_upper(T, p, pool_size, tol, seed), lower, witness, tol)

# app/services/SpaceService.py
import logging
import math
from typing import Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray

from app.constants.constants import DualBallKind
from app.core.config import settings
from app.core.errors import DimensionMismatchError, InvalidSpaceError
from app.models.space import (
    INF,
    DualBallDescriptor,
    MeasureSpace,
    SpaceDescriptor,
    conjugate_exponent,
    parse_exponent,
)
from app.utils.lattice_utils import LatticeUtils
from app.utils.random_utils import derive_rng

logger = logging.getLogger(__name__)


class SpaceService:
    """
    Norms, p-th powers, Köthe duals and lattice quantities of weighted L^p spaces.
    All pairings are ⟨f, g⟩ = Σ f_i g_i μ_i over the base measure of the space.
    """

    def __init__(self, enumeration_limit: Optional[int] = None):
        """
        Initialize the SpaceService.

        Args:
            enumeration_limit: largest dimension for exact sign enumeration
        """
        self.enumeration_limit = enumeration_limit or settings.WEIGHTFORGE_ENUMERATION_LIMIT

    # ------------------------------
    # Norms
    # ------------------------------
    @staticmethod
    def _check(space: SpaceDescriptor, f: NDArray[np.float64]) -> NDArray[np.float64]:
        array = np.asarray(f, dtype=np.float64)
        if array.shape[-1:] != (space.dimension,):
            raise DimensionMismatchError(
                f"Vector with trailing size {array.shape[-1:] or 0} does not match {space.dimension} atoms"
            )
        return array

    def norm_eval(self, space: SpaceDescriptor, f: NDArray[np.float64]):
        """
        Evaluate ‖f‖ = (Σ |f_i|^p a_i μ_i)^{1/p}, or max a_i |f_i| for INF.

        Args:
            space: weighted space descriptor
            f: vector, or batch of vectors along the last axis

        Returns:
            float for a single vector, array for a batch
        """
        array = self._check(space, f)
        values = LatticeUtils.lp_norm(array * space.reduction_scale(), space.exponent, axis=-1)
        if np.ndim(values) == 0:
            return float(values)
        return values

    def normalize(self, space: SpaceDescriptor, f: NDArray[np.float64]) -> NDArray[np.float64]:
        norm = self.norm_eval(space, f)
        if norm == 0:
            raise InvalidSpaceError("Cannot normalize the zero vector")
        return np.asarray(f, dtype=np.float64) / norm

    @staticmethod
    def pairing(measure: MeasureSpace, f: NDArray[np.float64], g: NDArray[np.float64]) -> float:
        """⟨f, g⟩ = Σ f_i g_i μ_i."""
        return float(np.sum(np.asarray(f) * np.asarray(g) * measure.masses))

    @staticmethod
    def coordinate_norms(space: SpaceDescriptor) -> NDArray[np.float64]:
        """κ_i = ‖e_i‖."""
        return space.reduction_scale()

    # ------------------------------
    # Power spaces and duals
    # ------------------------------
    @staticmethod
    def pth_power_space(space: SpaceDescriptor, p: float) -> SpaceDescriptor:
        """
        Descriptor of X_[p], normed by ‖|f|^{1/p}‖^p.

        Args:
            space: X with exponent q >= p
            p: power

        Returns:
            L^{q/p}(a) for finite q, L^inf(a^p) for INF
        """
        p = parse_exponent(p)
        if math.isinf(p):
            raise InvalidSpaceError("The p-th power space needs a finite p")
        if space.exponent < p:
            raise InvalidSpaceError(
                f"X has exponent {space.exponent:g} < p = {p:g}: it is not p-convex, so X_[p] is not normable"
            )
        if space.is_inf:
            return SpaceDescriptor(space.measure, INF, space.weight ** p)
        return SpaceDescriptor(space.measure, space.exponent / p, space.weight)

    @staticmethod
    def kothe_dual(space: SpaceDescriptor) -> SpaceDescriptor:
        """
        Köthe dual under the μ-pairing.

        L^p(a) -> L^{p'}(a^{1-p'}), L^1(a) -> L^inf(1/a), L^inf(a) -> L^1(1/a).
        """
        p = space.exponent
        if p == 1.0 or space.is_inf:
            return SpaceDescriptor(space.measure, conjugate_exponent(p), 1.0 / space.weight)
        q = conjugate_exponent(p)
        return SpaceDescriptor(space.measure, q, space.weight ** (1.0 - q))

    def kothe_dual_ball(self, space: SpaceDescriptor) -> DualBallDescriptor:
        dual = self.kothe_dual(space)
        if dual.is_inf:
            kind = DualBallKind.box
        elif dual.exponent == 1.0:
            kind = DualBallKind.l1_ball
        else:
            kind = DualBallKind.lp_ball
        return DualBallDescriptor(primal=space, dual=dual, kind=kind)

    def dual_norm(self, space: SpaceDescriptor, g: NDArray[np.float64]):
        return self.norm_eval(self.kothe_dual(space), g)

    def ball_contains(self, ball: DualBallDescriptor, g: NDArray[np.float64], tol: float = 1e-12) -> bool:
        return self.norm_eval(ball.dual, g) <= 1.0 + tol

    def ball_project(self, ball: DualBallDescriptor, g: NDArray[np.float64]) -> NDArray[np.float64]:
        """Clip entrywise for a box, radial retraction otherwise."""
        g = np.asarray(g, dtype=np.float64)
        if ball.kind == DualBallKind.box:
            bound = ball.maximal_element()
            return np.clip(g, -bound, bound)
        norm = self.norm_eval(ball.dual, g)
        return g / norm if norm > 1.0 else g.copy()

    def norming_functional(self, space: SpaceDescriptor, f: NDArray[np.float64]) -> NDArray[np.float64]:
        """
        g in the unit ball of X' with ⟨f, g⟩ = ‖f‖.

        Args:
            space: X
            f: vector of X

        Returns:
            norming functional (zeros for f = 0)
        """
        f = self._check(space, f)
        norm = self.norm_eval(space, f)
        g = np.zeros_like(f)
        if norm == 0:
            return g
        if space.is_inf:
            index = int(np.argmax(space.weight * np.abs(f)))
            g[index] = np.sign(f[index]) * space.weight[index] / space.masses[index]
            return g
        if space.exponent == 1.0:
            return np.sign(f) * space.weight
        scaled = f / norm
        return np.sign(scaled) * np.abs(scaled) ** (space.exponent - 1.0) * space.weight

    def unit_coordinate_functionals(self, space: SpaceDescriptor) -> NDArray[np.float64]:
        """Rows e_i / ‖e_i‖_{X'}."""
        dual = self.kothe_dual(space)
        return np.diag(1.0 / self.coordinate_norms(dual))

    def dual_extreme_points(self, space: SpaceDescriptor) -> Optional[NDArray[np.float64]]:
        """
        Extreme points of B_{X'} up to sign, when finitely many and few.

        INF spaces give the unit coordinate functionals, L^1 spaces the box
        corners ε·a (one per ± pair, n within the enumeration limit).
        """
        if space.is_inf:
            return self.unit_coordinate_functionals(space)
        if space.exponent == 1.0 and space.dimension <= min(self.enumeration_limit, 10):
            return LatticeUtils.sign_vectors(space.dimension) * space.weight
        return None

    # ------------------------------
    # Lattice quantities
    # ------------------------------
    def lattice_norm(self, space: SpaceDescriptor, family: NDArray[np.float64], p: float) -> float:
        """‖(Σ_i |x_i|^p)^{1/p}‖ for a k × n family."""
        family = np.atleast_2d(self._check(space, family))
        return float(self.norm_eval(space, LatticeUtils.square_function(family, p)))

    def strong_lp_sum(self, space: SpaceDescriptor, family: NDArray[np.float64], p: float) -> float:
        """(Σ_i ‖x_i‖^p)^{1/p}."""
        norms = self.norm_eval(space, np.atleast_2d(family))
        return float(LatticeUtils.lp_norm(np.atleast_1d(norms), p))

    def weak_lp_norm(self, space: SpaceDescriptor, family: NDArray[np.float64], p: float) -> Tuple[float, bool]:
        """
        sup over (α_i) in the unit ball of ℓ^{p'} of ‖Σ α_i x_i‖.

        Exact for INF spaces, p = 1, L^1 spaces, p = inf and p = 2 on L^2
        (within the enumeration limit); otherwise the upper bound
        min(lattice norm, strong ℓ^p sum), so that ratios built on it stay lower bounds.

        Args:
            space: X
            family: k × n array of vectors
            p: exponent in [1, inf]

        Returns:
            (value, exact)
        """
        family = np.atleast_2d(self._check(space, family))
        p = parse_exponent(p)
        k, n = family.shape
        if math.isinf(p):
            return float(np.max(self.norm_eval(space, family))), True
        if space.is_inf:
            rows = LatticeUtils.lp_norm(family, p, axis=0)
            return float(np.max(space.weight * rows)), True
        if p == 1.0 and k <= self.enumeration_limit:
            signs = LatticeUtils.sign_vectors(k)
            return float(np.max(self.norm_eval(space, signs @ family))), True
        if space.exponent == 1.0 and n <= self.enumeration_limit:
            signs = LatticeUtils.sign_vectors(n)
            combined = (signs * (space.weight * space.masses)) @ family.T
            return float(np.max(LatticeUtils.lp_norm(combined, p, axis=-1))), True
        if p == 2.0 and space.exponent == 2.0:
            scaled = family * space.reduction_scale()
            return float(np.linalg.norm(scaled, 2)), True
        upper = min(self.lattice_norm(space, family, p), self.strong_lp_sum(space, family, p))
        return upper, False

    def p_convexity_lower_bound(self, space: SpaceDescriptor, p: float, budget: int, seed: int) -> float:
        """
        Randomized lower bound for the p-convexity constant M_(p)(X).

        Args:
            space: X
            p: convexity exponent
            budget: number of random families
            seed: base seed

        Returns:
            best ratio ‖(Σ|f_i|^p)^{1/p}‖ / (Σ‖f_i‖^p)^{1/p} found
        """
        p = parse_exponent(p)
        n = space.dimension
        candidates = [
            np.eye(n),
            LatticeUtils.walsh_family(n) / space.reduction_scale(),
            np.ones((1, n)),
        ]
        for restart in range(max(1, budget)):
            rng = derive_rng(seed, "p-convexity", restart)
            size = int(rng.integers(1, max(2, n) + 1))
            family = rng.standard_normal((size, n))
            if restart % 2:
                family = np.abs(family) * (rng.random((size, n)) < 0.5)
                family[np.all(family == 0, axis=1), 0] = 1.0
            candidates.append(family)

        best = 0.0
        for family in candidates:
            denominator = self.strong_lp_sum(space, family, p)
            if denominator > 0:
                best = max(best, self.lattice_norm(space, family, p) / denominator)
        logger.debug(f"p-convexity lower bound of {space.describe()} at p={p:g}: {best:.6g}")
        return best

    def sample_unit_vectors(self, space: SpaceDescriptor, count: int, rng: np.random.Generator) -> NDArray[np.float64]:
        """`count` random vectors normalized to the unit sphere of the space."""
        samples = rng.standard_normal((count, space.dimension))
        sparse = rng.random((count, space.dimension)) < 0.3
        samples[: count // 3] *= sparse[: count // 3]
        norms = np.atleast_1d(self.norm_eval(space, samples))
        zero = norms == 0
        samples[zero, 0] = 1.0
        norms = np.atleast_1d(self.norm_eval(space, samples))
        return samples / norms[:, None]

    @staticmethod
    def family_matrix(vectors: Sequence[NDArray[np.float64]]) -> NDArray[np.float64]:
        return np.vstack([np.asarray(v, dtype=np.float64) for v in vectors])

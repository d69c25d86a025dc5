# app/services/FactorizationService.py
import logging
import math
from typing import Dict, List, Optional, Tuple

import numpy as np
from numpy.typing import NDArray

from app.core.config import settings
from app.core.errors import DimensionMismatchError, InvalidSpaceError, WeightForgeError
from app.models.certificates import DominationCertificate, FactorizationRecord
from app.models.operator import OperatorModel
from app.models.space import SpaceDescriptor, conjugate_exponent
from app.services.WeightSynthesisService import WeightSynthesisService
from app.utils.lattice_utils import LatticeUtils
from app.utils.random_utils import derive_rng

logger = logging.getLogger(__name__)

_RESIDUAL_TRIALS = 64


class FactorizationService:
    """
    Builds operator chains through weighted L^p spaces from domination certificates
    and measures p-domination of composites.
    """

    def __init__(self, synthesis_service: Optional[WeightSynthesisService] = None):
        """
        Initialize the FactorizationService.

        Args:
            synthesis_service: shared WeightSynthesisService
        """
        self.synthesis = synthesis_service or WeightSynthesisService()
        self.operators = self.synthesis.operators
        self.spaces = self.synthesis.spaces

    def _residual(self, stages: List[OperatorModel], target: NDArray[np.float64], space: SpaceDescriptor, out_space: SpaceDescriptor, seed: int) -> float:
        """max over random f of ‖composite(f) − target f‖ / ‖f‖."""
        composite = stages[0].matrix
        for stage in stages[1:]:
            composite = stage.matrix @ composite
        rng = derive_rng(seed, "reconstruction")
        F = np.vstack([np.eye(space.dimension), rng.standard_normal((_RESIDUAL_TRIALS, space.dimension))])
        differences = F @ (composite - target).T
        numerators = np.atleast_1d(self.spaces.norm_eval(out_space, differences))
        denominators = np.atleast_1d(self.spaces.norm_eval(space, F))
        return float(np.max(numerators / denominators))

    def factor_through_weighted_lp(self, T: OperatorModel, p: float, y_star, certificate: DominationCertificate, seed: int = 0) -> FactorizationRecord:
        """
        Factor j ∘ T = T̃ ∘ i through the middle space L^p(z* dμ).

        i: X → L^p(z* dμ) is the formal inclusion (null atoms of z* dropped),
        T̃ the same matrix into L^p(y* dν) and j: Y → L^p(y* dν) the codomain inclusion.

        Args:
            T: operator
            p: exponent
            y_star: codomain functional of the certificate
            certificate: domination certificate for (T, p, y*)
            seed: seed of the reconstruction trials

        Returns:
            FactorizationRecord with stages [i, T̃] against [j] and the inclusion norms
        """
        y_star = np.asarray(getattr(y_star, "values", y_star), dtype=np.float64)
        z = np.asarray(certificate.z_star, dtype=np.float64)
        if z.shape != (T.domain.dimension,) or y_star.shape != (T.codomain.dimension,):
            raise DimensionMismatchError("Certificate does not match the operator")
        support = np.flatnonzero(z > 0)
        rows = np.flatnonzero(y_star > 0)
        if support.size == 0 or rows.size == 0:
            raise InvalidSpaceError("The certificate weights vanish: the factorization is the zero map")

        middle = SpaceDescriptor(T.domain.measure.restrict(support), p, z[support])
        target = SpaceDescriptor(T.codomain.measure.restrict(rows), p, y_star[rows])
        inclusion = OperatorModel(np.eye(T.domain.dimension)[support], T.domain, middle)
        middle_map = OperatorModel(T.matrix[np.ix_(rows, support)], middle, target)
        codomain_inclusion = OperatorModel(np.eye(T.codomain.dimension)[rows], T.codomain, target)

        z_space = self.spaces.kothe_dual(self.spaces.pth_power_space(T.domain, p))
        inclusion_norms = [self.spaces.norm_eval(z_space, z) ** (1.0 / p)]
        try:
            y_space = self.spaces.kothe_dual(self.spaces.pth_power_space(T.codomain, p))
            inclusion_norms.append(self.spaces.norm_eval(y_space, y_star) ** (1.0 / p))
        except InvalidSpaceError:
            inclusion_norms.append(math.nan)

        residual = self._residual(
            [inclusion, middle_map], codomain_inclusion.matrix @ T.matrix, T.domain, target, seed
        )
        middle_norm = self.operators.operator_norm(middle_map, seed=seed)
        logger.info(
            f"✅ factored through L^{p:g}(z*) on {support.size}/{T.domain.dimension} atoms: "
            f"residual {residual:.2e}, middle norm {middle_norm.value:.6g} (certified <= {certificate.C:.6g})"
        )
        return FactorizationRecord(
            stages=[inclusion, middle_map, codomain_inclusion],
            stage_names=["inclusion X -> L^p(z*)", "T~ L^p(z*) -> L^p(y*)", "inclusion Y -> L^p(y*)"],
            inclusion_norms=inclusion_norms,
            reconstruction_residual=residual,
            constants={"C": certificate.C, "middle_norm_lower": middle_norm.value},
        )

    def _certified_lambda(self, T: OperatorModel, p: float, tol: float, seed: int) -> Optional[float]:
        if math.isinf(p):
            return None
        try:
            top = self.synthesis.top_corner(T.codomain, p)
            return self.synthesis.min_constant_pietsch(T, p, top, tol=tol, seed=seed).upper
        except WeightForgeError as exc:
            logger.warning(f"⚠️ lattice {p:g}-summing constant not certified: {exc}")
            return None

    def maurey_rosenthal_pipeline(
        self,
        S0: OperatorModel,
        T0: OperatorModel,
        R0: OperatorModel,
        p: float,
        tol: Optional[float] = None,
        seed: int = 0,
    ) -> FactorizationRecord:
        """
        Factor R0 ∘ T0 ∘ S0 as R₁ ∘ T₁ ∘ S₁ through unweighted L^p spaces.

        With z the minimal-constant certificate of T0 at the top corner b of its codomain:
        S₁ = M_{z^{1/p}} S0, T₁ = M_{b^{1/p}} T0 M_{z^{-1/p}} on the support of z, R₁ = R0 M_{b^{-1/p}}.

        Args:
            S0: E → X, the lattice p-summing factor
            T0: X → Y, the p-regular factor (Y a weighted L^p space)
            R0: Y → F, the factor whose adjoint is lattice p'-summing
            p: exponent
            tol: bisection tolerance for the certified constants
            seed: base seed

        Returns:
            FactorizationRecord with stages [S₁, T₁, R₁] and the certified constants
        """
        tol = tol or settings.WEIGHTFORGE_DEFAULT_TOL
        if S0.codomain.dimension != T0.domain.dimension or T0.codomain.dimension != R0.domain.dimension:
            raise DimensionMismatchError("S0, T0 and R0 do not compose")
        b = self.synthesis.top_corner(T0.codomain, p)
        bracket = self.synthesis.min_constant_domination(T0, p, b, tol=tol, seed=seed)
        z = np.asarray(bracket.certificate.z_star, dtype=np.float64)
        support = np.flatnonzero(z > 0)
        if support.size == 0:
            # zero T0: any positive weight factors it
            z_space = self.spaces.kothe_dual(self.spaces.pth_power_space(T0.domain, p))
            z = np.ones(T0.domain.dimension) / self.spaces.norm_eval(z_space, np.ones(T0.domain.dimension))
            support = np.arange(T0.domain.dimension)

        middle_in = SpaceDescriptor(T0.domain.measure.restrict(support), p)
        middle_out = SpaceDescriptor(T0.codomain.measure, p)
        root_z = z[support] ** (1.0 / p)
        root_b = b ** (1.0 / p)
        S1 = OperatorModel(root_z[:, None] * S0.matrix[support], S0.domain, middle_in)
        T1 = OperatorModel(root_b[:, None] * T0.matrix[:, support] / root_z[None, :], middle_in, middle_out)
        R1 = OperatorModel(R0.matrix / root_b[None, :], middle_out, R0.codomain)

        target = R0.matrix @ T0.matrix @ S0.matrix
        residual = self._residual([S1, T1, R1], target, S0.domain, R0.codomain, seed)

        constants: Dict[str, Optional[float]] = {"rho_T0": bracket.upper}
        constants["lambda_S0"] = self._certified_lambda(S0, p, tol, seed)
        R0_adjoint = self.operators.adjoint(R0)
        constants["lambda_R0_adjoint"] = self._certified_lambda(R0_adjoint, conjugate_exponent(p), tol, seed)
        if all(value is not None for value in constants.values()):
            constants["dominated_bound"] = constants["rho_T0"] * constants["lambda_S0"] * constants["lambda_R0_adjoint"]
        logger.info(f"✅ Maurey-Rosenthal chain built: residual {residual:.2e}, constants {constants}")
        return FactorizationRecord(
            stages=[S1, T1, R1],
            stage_names=["S1 = M_z^(1/p) S0", "T1 = M_b^(1/p) T0 M_z^(-1/p)", "R1 = R0 M_b^(-1/p)"],
            inclusion_norms=[self.spaces.norm_eval(
                self.spaces.kothe_dual(self.spaces.pth_power_space(T0.domain, p)), z
            ) ** (1.0 / p)],
            reconstruction_residual=residual,
            constants=constants,
        )

    def _dominated_ratio(self, T: OperatorModel, p: float, family: NDArray[np.float64], functionals: NDArray[np.float64]) -> float:
        nu = T.codomain.masses
        images = family @ T.matrix.T
        numerator = float(np.sum(np.abs(np.sum(images * functionals * nu[None, :], axis=1))))
        if numerator == 0:
            return 0.0
        weak_x, _ = self.spaces.weak_lp_norm(T.domain, family, p)
        weak_y, _ = self.spaces.weak_lp_norm(self.spaces.kothe_dual(T.codomain), functionals, conjugate_exponent(p))
        if weak_x <= 0 or weak_y <= 0:
            return 0.0
        return numerator / (weak_x * weak_y)

    def _matched_functionals(self, T: OperatorModel, p: float, family: NDArray[np.float64]) -> NDArray[np.float64]:
        """y_i* = |⟨T x_i, g_i⟩|^{p-1} g_i with g_i norming T x_i."""
        rows = []
        for image in family @ T.matrix.T:
            g = self.spaces.norming_functional(T.codomain, image)
            value = abs(self.spaces.pairing(T.codomain.measure, image, g))
            rows.append(value ** (p - 1.0) * g if value > 0 else g)
        return np.vstack(rows)

    def p_dominated_check(self, T: OperatorModel, p: float, trials: int = 64, seed: int = 0) -> Tuple[float, NDArray[np.float64]]:
        """
        Empirical lower bound for the p-dominated constant of T.

        Σ_i |⟨T x_i, y_i*⟩| / (weak_p(x) · weak_{p'}(y*)) over structured and random
        families; weak norms are exact or upper bounds, so every ratio is a valid lower bound.

        Args:
            T: operator X → Y
            p: exponent
            trials: random families
            seed: base seed

        Returns:
            (best ratio, best family)
        """
        if T.is_zero:
            return 0.0, np.zeros((1, T.domain.dimension))
        n = T.domain.dimension
        families = [
            np.eye(n) / self.spaces.coordinate_norms(T.domain)[:, None],
            LatticeUtils.walsh_family(n) / T.domain.reduction_scale()[None, :],
            self.operators.operator_norm(T, seed=seed).witness[None, :],
        ]
        for trial in range(trials):
            rng = derive_rng(seed, "p-dominated", trial)
            families.append(rng.standard_normal((int(rng.integers(1, n + 1)), n)))

        best, best_family = 0.0, families[0]
        for index, family in enumerate(families):
            candidates = [self._matched_functionals(T, p, family)]
            rng = derive_rng(seed, "p-dominated-functionals", index)
            candidates.append(rng.standard_normal((family.shape[0], T.codomain.dimension)))
            for functionals in candidates:
                ratio = self._dominated_ratio(T, p, family, functionals)
                if ratio > best:
                    best, best_family = ratio, family
        logger.info(f"p-dominated lower bound at p={p:g}: {best:.6g}")
        return best, best_family

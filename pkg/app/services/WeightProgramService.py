# app/services/WeightProgramService.py
import logging
import math
from typing import List, Optional, Sequence

import numpy as np
from numpy.typing import NDArray

from app.constants.constants import KRIVINE_BOUND
from app.core.config import settings
from app.core.errors import (
    DimensionMismatchError,
    InvalidSpaceError,
    SynthesisInfeasibleError,
    SynthesisUnknownError,
)
from app.models.certificates import DominationCertificate, Family
from app.models.operator import OperatorModel
from app.models.space import INF, SpaceDescriptor, parse_exponent
from app.models.weights import EndoWeightReport, InterpolationReport, WeightedNormCheck
from app.services.WeightSynthesisService import WeightSynthesisService
from app.utils.random_utils import derive_rng

logger = logging.getLogger(__name__)


def _step_seed(seed: int, step: int) -> int:
    return int(derive_rng(seed, "endo-step", step).integers(0, 2 ** 31 - 1))


class WeightProgramService:
    """
    Single-weight programs for endomorphisms: the geometric-series weight,
    the L² weight for operators on L^p and the interpolation weight for
    regular operators.
    """

    def __init__(self, synthesis_service: Optional[WeightSynthesisService] = None, truncation: Optional[int] = None):
        """
        Initialize the WeightProgramService.

        Args:
            synthesis_service: shared WeightSynthesisService
            truncation: default number N of series terms
        """
        self.synthesis = synthesis_service or WeightSynthesisService()
        self.operators = self.synthesis.operators
        self.spaces = self.synthesis.spaces
        self.truncation = truncation or settings.WEIGHTFORGE_TRUNCATION

    # ------------------------------
    # Weighted norms
    # ------------------------------
    def weighted_norm_verify(
        self,
        T: OperatorModel,
        w,
        v,
        p: float,
        trials: Optional[int] = None,
        seed: int = 0,
    ) -> WeightedNormCheck:
        """
        ‖T‖ from L^p(w dμ) to L^p(v dν).

        Exact at p ∈ {1, 2, inf} (and by enumeration for small INF domains);
        a multistart lower bound otherwise. Flags the infeasible direction
        when a column on a null atom of w reaches the support of v.

        Args:
            T: operator (only its matrix and measures are used)
            w: domain weight, nonnegative
            v: codomain weight, nonnegative
            p: exponent
            trials: multistart restarts
            seed: base seed

        Returns:
            WeightedNormCheck
        """
        p = parse_exponent(p)
        w = np.asarray(getattr(w, "values", w), dtype=np.float64)
        v = np.asarray(getattr(v, "values", v), dtype=np.float64)
        if w.shape != (T.domain.dimension,) or v.shape != (T.codomain.dimension,):
            raise DimensionMismatchError("Weights do not match the operator's measures")
        support = np.flatnonzero(w > 0)
        rows = np.flatnonzero(v > 0)
        if rows.size == 0:
            return WeightedNormCheck(constant=0.0, exact=True)
        escaping = [i for i in range(T.domain.dimension) if w[i] <= 0 and np.any(T.matrix[rows, i])]
        if escaping:
            witness = np.zeros(T.domain.dimension)
            witness[escaping[0]] = 1.0
            logger.warning(f"⚠️ atom {escaping[0]} is null for w but T moves it into the support of v")
            return WeightedNormCheck(constant=math.inf, exact=True, infeasible_direction=True, witness=witness)
        if support.size == 0:
            return WeightedNormCheck(constant=0.0, exact=True)

        domain = SpaceDescriptor(T.domain.measure.restrict(support), p, w[support])
        codomain = SpaceDescriptor(T.codomain.measure.restrict(rows), p, v[rows])
        reduced = OperatorModel(T.matrix[np.ix_(rows, support)], domain, codomain)
        estimate = self.operators.operator_norm(reduced, budget=trials, seed=seed)
        witness = np.zeros(T.domain.dimension)
        witness[support] = estimate.witness
        return WeightedNormCheck(constant=estimate.value, exact=estimate.exact, witness=witness)

    # ------------------------------
    # Endomorphism weight
    # ------------------------------
    def _same_space(self, T: OperatorModel) -> None:
        X, Y = T.domain, T.codomain
        if not T.is_square or X.exponent != Y.exponent or not np.allclose(X.masses, Y.masses) or not np.allclose(X.weight, Y.weight):
            raise InvalidSpaceError("The endomorphism weight needs domain = codomain")

    def _step(
        self,
        T: OperatorModel,
        p: float,
        g: NDArray[np.float64],
        C: Optional[float],
        backing: Optional[DominationCertificate],
        cuts: Family,
        tol: float,
        seed: int,
        notes: List[str],
    ) -> DominationCertificate:
        if C is None:
            bracket = self.synthesis.min_constant_domination(T, p, g, tol=tol, seed=seed, cuts=cuts)
            return bracket.certificate
        outcome = self.synthesis.synthesize_dominating_weight(T, p, g, C, seed=seed, cuts=cuts)
        if outcome.feasible:
            return outcome.certificate
        if outcome.infeasible:
            raise SynthesisInfeasibleError(
                f"No dominating weight at C={C:.6g}: the constant is below rho_{p:g}",
                witness=outcome.witness,
                ratio=outcome.witness_ratio,
            )
        if backing is not None:
            # y* <= b pointwise, so the top-corner weight dominates every step
            notes.append("step backed by the top-corner certificate")
            return DominationCertificate(
                p=p, C=backing.C, y_star=g.copy(), z_star=backing.z_star.copy(),
                method=backing.method, exact=backing.exact, tight_direction=backing.tight_direction,
            )
        raise SynthesisUnknownError(f"Step at C={C:.6g} is neither certified nor refuted: {outcome.message}")

    def endomorphism_weight(
        self,
        T: OperatorModel,
        p: float,
        C: Optional[float] = None,
        N: Optional[int] = None,
        tol: Optional[float] = None,
        seed: int = 0,
    ) -> EndoWeightReport:
        """
        Strictly positive g with ∫|Tf|^p g dμ ≤ 2·inflation·C^p ∫|f|^p g dμ.

        g_0 is the normalized constant function; g_{i+1} is the dominating
        weight of g_i at C, and g = Σ_{i≤N} 2^{-i} g_i (normalized), with one
        extra step g_{N+1} to bound the series tail.

        Args:
            T: operator with domain = codomain
            p: exponent (X must be p-convex)
            C: certified upper bound for ρ_p(T); computed when omitted
            N: truncation
            tol: bisection tolerance when C is computed
            seed: base seed

        Returns:
            EndoWeightReport
        """
        p = parse_exponent(p)
        self._same_space(T)
        N = N if N is not None else self.truncation
        tol = tol or settings.WEIGHTFORGE_DEFAULT_TOL
        X = T.domain
        z_space = self.spaces.kothe_dual(self.spaces.pth_power_space(X, p))
        notes: List[str] = []
        cuts: Family = []
        g0 = np.ones(X.dimension) / self.spaces.norm_eval(z_space, np.ones(X.dimension))
        if T.is_zero:
            logger.info("✅ zero operator: the constant weight works with constant 0")
            return EndoWeightReport(
                p=p, C=0.0, g=g0, steps=[g0], truncation=0, tail_bound=0.0, inflation=1.0,
                certified_constant=0.0, exact_weighted_norm=0.0 if p == 2.0 else None, notes=["zero operator"],
            )

        backing = None
        if C is None:
            try:
                top = self.synthesis.top_corner(T.codomain, p)
                bracket = self.synthesis.min_constant_domination(T, p, top, tol=tol, seed=seed, cuts=cuts)
                C, backing = bracket.upper, bracket.certificate
                notes.append(f"C = certified top-corner constant {C:.8g}")
            except InvalidSpaceError:
                notes.append("C = maximum of the per-step minimal constants")

        steps = [g0]
        certificates: List[DominationCertificate] = []
        for i in range(N + 1):
            certificate = self._step(T, p, steps[-1], C, backing, cuts, tol, _step_seed(seed, i), notes)
            certificates.append(certificate)
            steps.append(np.asarray(certificate.z_star, dtype=np.float64))
            logger.debug(f"endomorphism step {i + 1}: constant {certificate.C:.8g}")
        constant = max(c.C for c in certificates)

        coefficients = 2.0 ** -np.arange(N + 1)
        G = coefficients @ np.vstack(steps[: N + 1])
        tail = 2.0 ** -(N + 1) * steps[N + 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            excess = np.where(G > 0, (tail - g0) / G, np.where(tail - g0 > 0, np.inf, 0.0))
        inflation = 1.0 + max(0.0, float(np.max(excess)))
        power = 2.0 * inflation * constant ** p

        # G >= g_0 > 0 since every step is nonnegative
        g = G / self.spaces.norm_eval(z_space, G)
        certified = power ** (1.0 / p)

        chain_residual = 0.0
        for certificate in certificates:
            audit = self.synthesis.verify_certificate(T, certificate, seed=seed)
            chain_residual = max(chain_residual, audit.residual)

        exact_norm = None
        if p == 2.0:
            exact_norm = self.weighted_norm_verify(T, g, g, 2.0, seed=seed).constant
        rng = derive_rng(seed, "endo-batch")
        batch = self.spaces.sample_unit_vectors(X, self.synthesis.verify_batch, rng)
        weights = g * X.masses
        top = (np.abs(batch @ T.matrix.T) ** p) @ weights
        bottom = (np.abs(batch) ** p) @ weights
        positive = bottom > 0
        batch_ratio = float(np.max(top[positive] / bottom[positive]) ** (1.0 / p)) if np.any(positive) else 0.0

        marker = "✅" if batch_ratio <= certified * (1.0 + 1e-9) else "❌"
        logger.info(
            f"{marker} endomorphism weight at p={p:g}: certified {certified:.6g} (C={constant:.6g}, "
            f"inflation {inflation:.6g}), batch ratio {batch_ratio:.6g}"
        )
        return EndoWeightReport(
            p=p,
            C=constant,
            g=g,
            steps=steps,
            truncation=N,
            tail_bound=2.0 ** -(N + 1) * self.spaces.norm_eval(z_space, steps[N + 1]),
            inflation=inflation,
            certified_constant=certified,
            exact_weighted_norm=exact_norm,
            batch_ratio=batch_ratio,
            chain_residual=chain_residual,
            exact=all(c.exact for c in certificates),
            notes=notes,
        )

    # ------------------------------
    # Corollaries
    # ------------------------------
    def jj_weis_l2_weight(self, T: OperatorModel, N: Optional[int] = None, tol: Optional[float] = None, seed: int = 0) -> EndoWeightReport:
        """
        Weight g with T bounded on L²(g dμ) for T acting on a weighted L^p space.

        p ≥ 2: the endomorphism weight at exponent 2 (L^p is 2-convex).
        p < 2: the exponent-2 weight g' of T* on the dual space, returned as g = 1/g'.
        The L² norm of T on the final weight is computed exactly.
        """
        self._same_space(T)
        p = T.domain.exponent
        krivine = KRIVINE_BOUND * self.operators.operator_norm(T, seed=seed).value
        if p >= 2.0:
            report = self.endomorphism_weight(T, 2.0, N=N, tol=tol, seed=seed)
            report.notes.append(f"Krivine reference 1.783 * ||T|| >= {krivine:.6g}")
            return report

        adjoint = self.operators.adjoint(T)
        report = self.endomorphism_weight(adjoint, 2.0, N=N, tol=tol, seed=seed)
        g = 1.0 / report.g
        g = g / g.max()
        report.exact_weighted_norm = self.weighted_norm_verify(T, g, g, 2.0, seed=seed).constant
        report.notes.append(f"weight induced through the adjoint on L^{T.domain.exponent:g}'; g = 1/g'")
        report.notes.append(f"Krivine reference 1.783 * ||T|| >= {krivine:.6g}")
        report.g = g
        logger.info(f"✅ L2 weight via the adjoint: ||T||_L2(g) = {report.exact_weighted_norm:.6g}")
        return report

    @staticmethod
    def _weighted_column_sum(matrix: NDArray[np.float64], g: NDArray[np.float64], mu: NDArray[np.float64]) -> float:
        """‖T‖ on L¹(g dμ): max_i Σ_j g_j μ_j |T_ji| / (g_i μ_i)."""
        return float(np.max((np.abs(matrix).T @ (g * mu)) / (g * mu)))

    def regular_operator_all_p_weight(
        self,
        T: OperatorModel,
        p_grid: Sequence = (1.0, 1.5, 2.0, 4.0, INF),
        N: Optional[int] = None,
        tol: Optional[float] = None,
        seed: int = 0,
    ) -> InterpolationReport:
        """
        One weight g making T bounded on every L^p(g dμ) of the grid.

        g = (g₁ + g_∞)/2 with g₁ the p = 1 endomorphism weight of T on L¹(μ) and
        g_∞ that of T*. The endpoint norms M₁ (weighted max column sum) and M_∞
        (max row sum) are exact; each grid point is checked against M₁^{1/p} M_∞^{1-1/p}.
        The factor-two flags compare ‖T‖ on L¹(g dμ) and ‖T*‖ on L¹(g dμ) with
        twice the norms under g₁ and g_∞.

        Returns:
            InterpolationReport
        """
        tol = tol or settings.WEIGHTFORGE_DEFAULT_TOL
        if not T.is_square or not np.allclose(T.domain.masses, T.codomain.masses):
            raise InvalidSpaceError("The interpolation weight needs an endomorphism of one measure space")
        measure = T.domain.measure
        mu = measure.masses
        L1 = SpaceDescriptor(measure, 1.0)
        on_l1 = OperatorModel(T.matrix, L1, L1)
        adjoint = OperatorModel((T.matrix.T * mu[None, :]) / mu[:, None], L1, L1)

        one = self.endomorphism_weight(on_l1, 1.0, N=N, tol=tol, seed=seed)
        infinity = self.endomorphism_weight(adjoint, 1.0, N=N, tol=tol, seed=seed)
        g = (one.g + infinity.g) / 2.0
        g = g / g.max()

        M1 = self._weighted_column_sum(T.matrix, g, mu)
        M_inf = float(np.max(np.abs(T.matrix).sum(axis=1)))
        M1_single = self._weighted_column_sum(T.matrix, one.g, mu)
        M_inf_single = self._weighted_column_sum(adjoint.matrix, infinity.g, mu)
        M_inf_mixed = self._weighted_column_sum(adjoint.matrix, g, mu)

        grid = {}
        all_verified = True
        for raw in p_grid:
            p = parse_exponent(raw)
            bound = M_inf if math.isinf(p) else M1 ** (1.0 / p) * M_inf ** (1.0 - 1.0 / p)
            # L^inf(g dμ) is L^inf(μ) for strictly positive g
            weight = np.ones_like(g) if math.isinf(p) else g
            check = self.weighted_norm_verify(T, weight, weight, p, seed=seed)
            verified = check.constant <= bound * (1.0 + tol)
            all_verified = all_verified and verified
            grid[p] = {"estimate": check.constant, "bound": bound, "exact": float(check.exact), "verified": float(verified)}
            logger.debug(f"interpolation grid p={p:g}: {check.constant:.6g} <= {bound:.6g}: {verified}")

        flags = {
            "endpoint_one_within_factor_two": M1 <= 2.0 * M1_single * (1.0 + tol),
            "endpoint_infinity_within_factor_two": M_inf_mixed <= 2.0 * M_inf_single * (1.0 + tol),
        }
        marker = "✅" if all_verified else "❌"
        logger.info(f"{marker} interpolation weight: M1={M1:.6g}, Minf={M_inf:.6g}, grid verified {all_verified}")
        return InterpolationReport(
            g=g,
            g_one=one.g,
            g_infinity=infinity.g,
            endpoint_one=M1,
            endpoint_infinity=M_inf,
            endpoint_one_single=M1_single,
            endpoint_infinity_single=M_inf_single,
            endpoint_infinity_mixed=M_inf_mixed,
            grid=grid,
            all_verified=all_verified,
            factor_two_flags=flags,
        )

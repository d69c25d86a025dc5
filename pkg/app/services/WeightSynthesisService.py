# app/services/WeightSynthesisService.py
import logging
import math
from abc import ABC, abstractmethod
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray

from app.constants.constants import (
    ANCHOR_DOMINATION,
    ANCHOR_PIETSCH,
    DUPLICATE_CUT_COSINE,
    BracketStatus,
    CertificateKind,
    CertificateMethod,
    DualBallKind,
    OracleKind,
    SynthesisStatus,
)
from app.core.config import settings
from app.core.errors import InvalidParameterError, InvalidSpaceError, OutsideDualBallError
from app.models.certificates import (
    CertificateAudit,
    ConstantBracket,
    DominationCertificate,
    Family,
    PietschCertificate,
    SynthesisOutcome,
)
from app.models.operator import OperatorModel
from app.models.oracle import DominationForm
from app.models.space import SpaceDescriptor
from app.services.LinearProgramService import LinearProgramService
from app.services.OperatorService import OperatorService
from app.services.SeparationOracleService import SeparationOracleService
from app.utils.lattice_utils import LatticeUtils
from app.utils.random_utils import derive_rng

logger = logging.getLogger(__name__)

_BALL_SLACK = 1e-9


class _SynthesisProblem(ABC):
    """Right-hand side model shared by the cutting-plane engine.

    Subclasses describe the variable vector x (a weight z or a measure η),
    its convex domain and how a candidate x turns into a DominationForm.
    """

    kind: CertificateKind
    ball: Optional[SpaceDescriptor] = None

    def __init__(self, service: "WeightSynthesisService", T: OperatorModel, p: float, y_star: NDArray[np.float64], C: float):
        self.service = service
        self.T = T
        self.p = p
        self.y_star = y_star
        self.w = y_star * T.codomain.masses
        self.C = C
        self.space = T.domain

    def lhs(self, f: NDArray[np.float64]) -> float:
        return float(np.sum(self.w * np.abs(self.T.matrix @ f) ** self.p))

    @abstractmethod
    def size(self) -> int:
        """Number of LP variables."""

    @abstractmethod
    def coefficients(self, f: NDArray[np.float64]) -> NDArray[np.float64]:
        """Right side at C = 1 as a linear function of x, evaluated at f."""

    @abstractmethod
    def form(self, x: NDArray[np.float64], C: float) -> DominationForm:
        pass

    @abstractmethod
    def upper(self) -> NDArray[np.float64]:
        pass

    @abstractmethod
    def rows(self) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
        """Domain rows A x <= b."""

    @abstractmethod
    def mass(self) -> NDArray[np.float64]:
        pass

    @abstractmethod
    def witness(self, weights: NDArray[np.float64], cuts: Family) -> Tuple[float, Family]:
        """Ratio and family of the cut combination with the given weights."""

    @abstractmethod
    def certificate(self, x, C, direction, cuts, method, residual):
        pass

    def add_tangent(self, x: NDArray[np.float64]) -> None:
        raise NotImplementedError

    def finalize(self, x: NDArray[np.float64]) -> NDArray[np.float64]:
        return x

    def on_cut(self, f: NDArray[np.float64]) -> None:
        return None

    def augment(self, weights: NDArray[np.float64], cuts: Family) -> bool:
        return False


class _DominationProblem(_SynthesisProblem):
    """x = z in the positive unit ball of (X_[p])'."""

    kind = CertificateKind.domination

    def __init__(self, service, T, p, y_star, C):
        super().__init__(service, T, p, y_star, C)
        spaces = service.spaces
        self.power_space = spaces.pth_power_space(self.space, p)
        self.z_ball = spaces.kothe_dual_ball(self.power_space)
        self.z_space = self.z_ball.dual
        self.mu = self.space.masses
        self.identity = np.eye(self.space.dimension)
        self.tangents: List[NDArray[np.float64]] = []
        if self.z_ball.kind == DualBallKind.lp_ball:
            self.ball = self.z_space
            self.add_tangent(np.ones(self.space.dimension))

    def size(self) -> int:
        return self.space.dimension

    def coefficients(self, f):
        return self.mu * np.abs(f) ** self.p

    def form(self, x, C):
        return DominationForm(self.T.matrix, self.w, self.identity, C ** self.p * x * self.mu, self.p, self.space)

    def upper(self):
        weight, exponent = self.z_space.weight, self.z_space.exponent
        if self.z_ball.kind == DualBallKind.box:
            return 1.0 / weight
        if self.z_ball.kind == DualBallKind.lp_ball:
            return (weight * self.mu) ** (-1.0 / exponent)
        return np.full(self.size(), np.inf)

    def rows(self):
        if self.z_ball.kind == DualBallKind.l1_ball:
            return (self.z_space.weight * self.mu)[None, :], np.ones(1)
        if self.tangents:
            return np.vstack(self.tangents), np.ones(len(self.tangents))
        return np.zeros((0, self.size())), np.zeros(0)

    def add_tangent(self, x):
        x = np.maximum(np.asarray(x, dtype=np.float64), 0.0)
        norm = self.service.spaces.norm_eval(self.z_space, x)
        if norm <= 0:
            return
        x = x / norm
        exponent = self.z_space.exponent
        self.tangents.append(self.z_space.weight * self.mu * x ** (exponent - 1.0))

    def mass(self):
        return self.mu

    def witness(self, weights, cuts):
        active = np.flatnonzero(weights > 1e-15)
        numerator = float(sum(weights[k] * self.lhs(cuts[k]) for k in active))
        power_sum = sum(weights[k] * np.abs(cuts[k]) ** self.p for k in active)
        denominator = self.service.spaces.norm_eval(self.power_space, power_sum)
        family = [weights[k] ** (1.0 / self.p) * cuts[k] for k in active]
        if denominator <= 0:
            return 0.0, family
        return (numerator / denominator) ** (1.0 / self.p), family

    def certificate(self, x, C, direction, cuts, method, residual):
        return DominationCertificate(
            p=self.p,
            C=C,
            y_star=self.y_star.copy(),
            z_star=np.maximum(x, 0.0),
            method=method,
            exact=True,
            residual=residual,
            cuts=[np.array(f) for f in cuts],
            tight_direction=direction,
        )


class _PietschProblem(_SynthesisProblem):
    """x = η over a pool of unit functionals of X', Σ η ≤ 1 during the search."""

    kind = CertificateKind.pietsch

    def __init__(self, service, T, p, y_star, C, pool: List[NDArray[np.float64]], complete: bool):
        super().__init__(service, T, p, y_star, C)
        self.pool = pool
        self.complete = complete
        self.mu = self.space.masses

    def _pool_matrix(self) -> NDArray[np.float64]:
        return np.vstack(self.pool)

    def size(self) -> int:
        return len(self.pool)

    def coefficients(self, f):
        return np.abs(self._pool_matrix() @ (self.mu * f)) ** self.p

    def form(self, x, C):
        G = self._pool_matrix() * self.mu[None, :]
        return DominationForm(self.T.matrix, self.w, G, C ** self.p * x, self.p, self.space)

    def upper(self):
        return np.full(self.size(), np.inf)

    def rows(self):
        return np.ones((1, self.size())), np.ones(1)

    def mass(self):
        return np.ones(self.size())

    def finalize(self, x):
        total = float(np.sum(x))
        return x / total if total > 0 else x

    def _add_functional(self, f) -> bool:
        g = self.service.spaces.norming_functional(self.space, f)
        if not np.any(g) or LatticeUtils.is_duplicate(g, self.pool, DUPLICATE_CUT_COSINE):
            return False
        self.pool.append(g)
        return True

    def on_cut(self, f):
        if not self.complete:
            self._add_functional(f)

    def augment(self, weights, cuts):
        if self.complete:
            return False
        added = False
        for k in np.flatnonzero(weights > 1e-15):
            added = self._add_functional(cuts[k]) or added
        return added

    def witness(self, weights, cuts):
        active = np.flatnonzero(weights > 1e-15)
        numerator = float(sum(weights[k] * self.lhs(cuts[k]) for k in active))
        family = [weights[k] ** (1.0 / self.p) * cuts[k] for k in active]
        weak, _ = self.service.spaces.weak_lp_norm(self.space, np.vstack(family), self.p)
        if weak <= 0:
            return 0.0, family
        return numerator ** (1.0 / self.p) / weak, family

    def certificate(self, x, C, direction, cuts, method, residual):
        eta = np.maximum(x, 0.0)
        eta = eta / eta.sum() if eta.sum() > 0 else eta
        support = np.flatnonzero(eta > 0)
        return PietschCertificate(
            p=self.p,
            C=C,
            y_star=self.y_star.copy(),
            support=self._pool_matrix()[support],
            eta=eta[support],
            method=method,
            exact=True,
            residual=residual,
            cuts=[np.array(f) for f in cuts],
        )


class WeightSynthesisService:
    """
    Dominating-weight and Pietsch-measure synthesis by cutting planes,
    Schur-test certificates, minimal-constant bisection and certificate audits.
    """

    def __init__(
        self,
        operator_service: Optional[OperatorService] = None,
        lp_service: Optional[LinearProgramService] = None,
        max_cuts: Optional[int] = None,
        oracle_tol: Optional[float] = None,
        verify_tol: Optional[float] = None,
        verify_batch: Optional[int] = None,
        bisection_steps: Optional[int] = None,
        budget: Optional[int] = None,
    ):
        """
        Initialize the WeightSynthesisService.

        Args:
            operator_service: shared OperatorService (its SpaceService is reused)
            lp_service: simplex solver
            max_cuts: cut bound per synthesis call; hitting it yields Unknown
            oracle_tol: relative violation below which a candidate passes
            verify_tol: residual bound of certificate audits
            verify_batch: fresh random vectors per audit
            bisection_steps: bound on bisection steps
            budget: multistart restarts for ascent oracles and norm estimates
        """
        self.operators = operator_service or OperatorService()
        self.spaces = self.operators.spaces
        self.lp = lp_service or LinearProgramService()
        self.budget = budget or settings.WEIGHTFORGE_DEFAULT_BUDGET
        self.oracle = SeparationOracleService(self.spaces, self.budget)
        self.max_cuts = max_cuts or settings.WEIGHTFORGE_MAX_CUTS
        self.oracle_tol = oracle_tol or settings.WEIGHTFORGE_ORACLE_TOL
        self.verify_tol = verify_tol or settings.WEIGHTFORGE_VERIFY_TOL
        self.verify_batch = verify_batch or settings.WEIGHTFORGE_VERIFY_BATCH
        self.bisection_steps = bisection_steps or settings.WEIGHTFORGE_BISECTION_STEPS

    # ------------------------------
    # Validation helpers
    # ------------------------------
    def top_corner(self, codomain: SpaceDescriptor, p: float) -> NDArray[np.float64]:
        """
        Maximal element of B_{(Y_[p])'}⁺, which exists when that ball is a box.

        Args:
            codomain: Y, a weighted L^p space over its measure
            p: power

        Returns:
            the weight b of Y = L^p(b)
        """
        ball = self.spaces.kothe_dual_ball(self.spaces.pth_power_space(codomain, p))
        if ball.kind != DualBallKind.box:
            raise InvalidSpaceError(
                f"The dual ball of ({codomain.describe()})_[{p:g}] is a {ball.kind.value}, not a box; "
                "upper certification needs a weighted L^p codomain"
            )
        return ball.maximal_element()

    def _validate(self, T: OperatorModel, p: float, y_star, C: Optional[float], enforce_ball: bool) -> NDArray[np.float64]:
        if not (p >= 1.0 and math.isfinite(p)):
            raise InvalidParameterError(f"p must be a finite exponent >= 1, got {p}")
        if C is not None and not (C > 0 and math.isfinite(C)):
            raise InvalidParameterError(f"The constant C must be positive and finite, got {C}")
        y_star = np.asarray(getattr(y_star, "values", y_star), dtype=np.float64)
        if y_star.shape != (T.codomain.dimension,):
            raise OutsideDualBallError(
                f"y* has shape {y_star.shape}, the codomain has {T.codomain.dimension} atoms"
            )
        if np.any(y_star < 0) or not np.all(np.isfinite(y_star)):
            raise OutsideDualBallError("y* must be a finite nonnegative functional")
        # the domain must be p-convex for the z-ball to exist
        self.spaces.pth_power_space(T.domain, p)
        if enforce_ball:
            dual = self.spaces.kothe_dual(self.spaces.pth_power_space(T.codomain, p))
            norm = self.spaces.norm_eval(dual, y_star)
            if norm > 1.0 + _BALL_SLACK:
                raise OutsideDualBallError(f"y* has dual-power norm {norm:.6g} > 1")
        return y_star

    def initial_cuts(self, space: SpaceDescriptor) -> Family:
        """Normalized coordinate vectors and Walsh rows of the reduced space."""
        n = space.dimension
        candidates = list(np.eye(n)) + list(LatticeUtils.walsh_family(n) / space.reduction_scale())
        cuts: Family = []
        for candidate in candidates:
            f = self.spaces.normalize(space, candidate)
            if not LatticeUtils.is_duplicate(f, cuts, DUPLICATE_CUT_COSINE):
                cuts.append(f)
        return cuts

    def _trim(self, cuts: Family) -> None:
        if len(cuts) > self.max_cuts:
            del cuts[: len(cuts) - self.max_cuts]

    @staticmethod
    def _oracle_kind(form: DominationForm) -> OracleKind:
        if form.p == 2.0:
            return OracleKind.eigen
        if form.p == 1.0 and form.separable:
            return OracleKind.coordinate
        return OracleKind.multistart

    # ------------------------------
    # Exact certified constants
    # ------------------------------
    def certified_constant(self, T: OperatorModel, p: float, y_star, z: NDArray[np.float64]) -> Optional[Tuple[float, Optional[NDArray[np.float64]]]]:
        """
        Smallest C with ⟨|Tf|^p, y*⟩ ≤ C^p ⟨|f|^p, z⟩ for all f, when computable exactly.

        Returns:
            (C, tight direction), C = inf when z misses part of the support; None for p ∉ {1, 2}
        """
        y_star = np.asarray(getattr(y_star, "values", y_star), dtype=np.float64)
        problem = _DominationProblem(self, T, p, y_star, 1.0)
        ratio = self.oracle.exact_ratio(problem.form(np.asarray(z, dtype=np.float64), 1.0))
        if ratio is None:
            return None
        return ratio.ratio ** (1.0 / p), ratio.direction

    # ------------------------------
    # Schur-test certificates
    # ------------------------------
    @staticmethod
    def _schur_coefficients(absolute: NDArray[np.float64], w: NDArray[np.float64], h: NDArray[np.float64], p: float) -> NDArray[np.float64]:
        if p == 1.0:
            return absolute.T @ w
        image = absolute @ h
        return h ** (1.0 - p) * (absolute.T @ (w * image ** (p - 1.0)))

    def _schur_tests(self, T: OperatorModel, p: float, w: NDArray[np.float64], extra: Optional[Sequence[NDArray[np.float64]]], seed: int) -> List[NDArray[np.float64]]:
        X = T.domain
        alpha = X.reduction_scale()
        reduced = (w ** (1.0 / p))[:, None] * np.abs(T.matrix) / alpha[None, :]
        _, u, _, _ = self.operators.reduced_norm(reduced, X.exponent, p, self.budget, seed)
        tests = [np.ones(X.dimension), np.abs(u) / alpha]
        for vector in extra or []:
            tests.append(np.abs(np.asarray(vector, dtype=np.float64)))
        regularized = []
        for h in tests:
            top = float(np.max(h))
            if top > 0:
                regularized.append(h + 1e-12 * top)
        return regularized

    def _schur_best(self, T, p, y_star, test_vectors, seed, score: Callable[[NDArray[np.float64]], float]):
        w = y_star * T.codomain.masses
        absolute = np.abs(T.matrix)
        best = None
        for h in self._schur_tests(T, p, w, test_vectors, seed):
            s = self._schur_coefficients(absolute, w, h, p)
            value = score(s)
            if best is None or value < best[0]:
                best = (value, s, h)
        return best

    def schur_certificate(
        self,
        T: OperatorModel,
        p: float,
        y_star,
        test_vectors: Optional[Sequence[NDArray[np.float64]]] = None,
        seed: int = 0,
    ) -> DominationCertificate:
        """
        Analytic domination certificate from Hölder's inequality with a positive test vector h.

        With s = h^{1-p} |T|ᵀ(y*ν (|T|h)^{p-1}), every f has ⟨|Tf|^p, y*⟩ ≤ Σ s_i |f_i|^p,
        so z = s / (C^p μ) with C^p = ‖s/μ‖ in (X_[p])' is a valid certificate.
        Tight for positive T with h the Perron vector.

        Args:
            T: operator
            p: exponent
            y_star: codomain functional
            test_vectors: extra candidates for h
            seed: seed of the Perron estimate

        Returns:
            DominationCertificate with method schur (method zero for vanishing lhs)
        """
        y_star = np.asarray(getattr(y_star, "values", y_star), dtype=np.float64)
        problem = _DominationProblem(self, T, p, y_star, 1.0)
        mu = T.domain.masses
        if not np.any(problem.w @ np.abs(T.matrix)):
            return problem.certificate(np.zeros(T.domain.dimension), 0.0, None, [], CertificateMethod.zero, 0.0)

        best = self._schur_best(T, p, y_star, test_vectors, seed, lambda s: self.spaces.norm_eval(problem.z_space, s / mu))
        power, s, h = best
        C = power ** (1.0 / p)
        direction = self.spaces.normalize(T.domain, h)
        return problem.certificate(s / (power * mu), C, direction, [], CertificateMethod.schur, 0.0)

    def pietsch_schur_certificate(
        self,
        T: OperatorModel,
        p: float,
        y_star,
        test_vectors: Optional[Sequence[NDArray[np.float64]]] = None,
        seed: int = 0,
    ) -> PietschCertificate:
        """
        Schur certificate over the unit coordinate functionals: η ∝ s / κ^p, C^p = Σ s_i / κ_i^p.
        """
        y_star = np.asarray(getattr(y_star, "values", y_star), dtype=np.float64)
        coordinates = list(self.spaces.unit_coordinate_functionals(T.domain))
        problem = _PietschProblem(self, T, p, y_star, 1.0, coordinates, complete=False)
        kappa = self.spaces.coordinate_norms(T.domain)
        if not np.any(problem.w @ np.abs(T.matrix)):
            eta = np.full(T.domain.dimension, 1.0 / T.domain.dimension)
            return problem.certificate(eta, 0.0, None, [], CertificateMethod.zero, 0.0)

        best = self._schur_best(T, p, y_star, test_vectors, seed, lambda s: float(np.sum(s / kappa ** p)))
        power, s, _ = best
        return problem.certificate(s / kappa ** p / power, power ** (1.0 / p), None, [], CertificateMethod.schur, 0.0)

    # ------------------------------
    # Cutting-plane engine
    # ------------------------------
    def _outcome(self, status: SynthesisStatus, problem: _SynthesisProblem, oracle: OracleKind, rounds: int, added: int, **kwargs) -> SynthesisOutcome:
        return SynthesisOutcome(status=status, C=problem.C, oracle=oracle, rounds=rounds, cut_count=added, **kwargs)

    def _min_mass(self, problem, coefficients, lhs_values, margin, A_dom, b_dom, upper) -> Optional[NDArray[np.float64]]:
        A = np.vstack([-coefficients, A_dom])
        b = np.concatenate([-(lhs_values + margin), b_dom])
        result = self.lp.solve(problem.mass(), A, b, upper=upper)
        return result.x if result.optimal else None

    def _cutting_plane(
        self,
        problem: _SynthesisProblem,
        cuts: Family,
        seed: int,
        hints: Sequence[NDArray[np.float64]] = (),
        fallbacks: Sequence[object] = (),
    ) -> SynthesisOutcome:
        C, p = problem.C, problem.p
        self._trim(cuts)
        if not cuts:
            cuts.extend(self.initial_cuts(problem.space))
        oracle = self._oracle_kind(problem.form(np.zeros(problem.size()), C))
        exact = oracle != OracleKind.multistart
        added, rounds = 0, 0
        tangent_budget = 4 * self.max_cuts
        best: Optional[object] = None
        pending_hints = [np.asarray(h, dtype=np.float64) for h in hints]

        def fallback_or(outcome: SynthesisOutcome) -> SynthesisOutcome:
            for certificate in fallbacks:
                if certificate is not None and certificate.C <= C * (1.0 + self.oracle_tol):
                    logger.info(f"✅ {problem.kind.value} at C={C:.6g} certified by the {certificate.method.value} certificate")
                    return self._outcome(SynthesisStatus.feasible, problem, oracle, rounds, added, certificate=certificate, best_certificate=best)
            return outcome

        while True:
            rounds += 1
            lhs_values = np.array([problem.lhs(f) for f in cuts])
            coefficients = C ** p * np.vstack([problem.coefficients(f) for f in cuts])
            A_dom, b_dom = problem.rows()
            upper = problem.upper()
            k, size = coefficients.shape
            top = max(float(lhs_values.max()), 0.0)

            slack_rows = np.vstack([
                np.hstack([-coefficients, np.ones((k, 1))]),
                np.hstack([A_dom, np.zeros((A_dom.shape[0], 1))]),
            ])
            objective = np.zeros(size + 1)
            objective[-1] = -1.0
            centre = self.lp.solve(
                objective,
                slack_rows,
                np.concatenate([top - lhs_values, b_dom]),
                upper=np.concatenate([upper, [np.inf]]),
            )
            if not centre.optimal:
                return fallback_or(self._outcome(
                    SynthesisStatus.unknown, problem, oracle, rounds, added, best_certificate=best,
                    message=f"max-slack program ended {centre.status.value}",
                ))
            slack = float(centre.x[-1]) - top

            if slack < -self.lp.feasibility_tol * max(1.0, top):
                weights = np.maximum(-centre.marginals_ub[:k], 0.0)
                if weights.sum() > 0:
                    weights = weights / weights.sum()
                    ratio, family = problem.witness(weights, cuts)
                    if ratio > C * (1.0 + 1e-12):
                        logger.info(f"❌ {problem.kind.value} infeasible at C={C:.6g}: witness ratio {ratio:.6g} after {rounds} rounds")
                        return self._outcome(
                            SynthesisStatus.infeasible, problem, oracle, rounds, added,
                            witness=family, witness_ratio=ratio, best_certificate=best,
                        )
                    if problem.augment(weights, cuts):
                        continue
                return fallback_or(self._outcome(
                    SynthesisStatus.unknown, problem, oracle, rounds, added, best_certificate=best,
                    message="cut program empty but the dual family does not beat C",
                ))

            candidates = pending_hints
            pending_hints = []
            lowest = self._min_mass(problem, coefficients, lhs_values, 0.0, A_dom, b_dom, upper)
            if lowest is not None:
                candidates.append(lowest)
            if slack > 0:
                half = self._min_mass(problem, coefficients, lhs_values, slack / 2.0, A_dom, b_dom, upper)
                if half is not None:
                    candidates.append(half)
            candidates.append(centre.x[:size])

            if problem.ball is not None:
                norms = [self.spaces.norm_eval(problem.ball, np.maximum(x, 0.0)) for x in candidates]
                outside = [x for x, norm in zip(candidates, norms) if norm > 1.0 + _BALL_SLACK]
                if outside and tangent_budget > 0:
                    for x in outside:
                        problem.add_tangent(x)
                    tangent_budget -= len(outside)
                    continue
                candidates = [x / max(1.0, norm) for x, norm in zip(candidates, norms)]

            new_cuts: Family = []
            empirical = None
            for x in candidates:
                x = problem.finalize(np.maximum(x, 0.0))
                if exact:
                    ratio = self.oracle.exact_ratio(problem.form(x, 1.0))
                    constant = ratio.ratio ** (1.0 / p)
                    if math.isfinite(constant) and (best is None or constant < best.C):
                        best = problem.certificate(x, constant, ratio.direction, cuts, CertificateMethod.cutting_plane, 0.0)
                    if constant <= C * (1.0 + self.oracle_tol):
                        logger.info(f"✅ {problem.kind.value} feasible at C={C:.6g} (certified {constant:.8g}) after {rounds} rounds")
                        return self._outcome(SynthesisStatus.feasible, problem, oracle, rounds, added, certificate=best, best_certificate=best)
                    cut = ratio.direction
                    if cut is None:
                        cut = self.oracle.find_violation(problem.form(x, C)).cut
                else:
                    result = self.oracle.find_violation(problem.form(x, C), seed, starts=cuts[-8:], round_index=rounds)
                    if not result.violated(self.oracle_tol):
                        empirical = x
                        break
                    cut = result.cut
                if cut is not None and not LatticeUtils.is_duplicate(cut, cuts + new_cuts, DUPLICATE_CUT_COSINE):
                    new_cuts.append(cut)

            if empirical is not None:
                logger.info(f"⚠️ {problem.kind.value} at C={C:.6g}: no violation found but the oracle is inexact")
                return fallback_or(self._outcome(
                    SynthesisStatus.unknown, problem, oracle, rounds, added, best_certificate=best,
                    empirical_candidate=empirical, message="nonconvex oracle found no violation; not certified",
                ))
            if not new_cuts:
                return fallback_or(self._outcome(
                    SynthesisStatus.unknown, problem, oracle, rounds, added, best_certificate=best,
                    message="cutting plane stalled on duplicate cuts",
                ))
            for f in new_cuts:
                problem.on_cut(f)
            cuts.extend(new_cuts)
            added += len(new_cuts)
            logger.debug(f"{problem.kind.value} round {rounds}: slack {slack:.3e}, {len(cuts)} cuts")
            if added >= self.max_cuts:
                logger.info(f"⚠️ {problem.kind.value} at C={C:.6g}: cut limit {self.max_cuts} reached")
                return fallback_or(self._outcome(
                    SynthesisStatus.unknown, problem, oracle, rounds, added, best_certificate=best,
                    message=f"cut limit {self.max_cuts} reached",
                ))

    # ------------------------------
    # Domination
    # ------------------------------
    def synthesize_dominating_weight(
        self,
        T: OperatorModel,
        p: float,
        y_star,
        C: float,
        seed: int = 0,
        cuts: Optional[Family] = None,
        hint: Optional[NDArray[np.float64]] = None,
        enforce_ball: bool = True,
    ) -> SynthesisOutcome:
        """
        Find z in B_{(X_[p])'}⁺ with ⟨|Tf|^p, y*⟩ ≤ C^p ⟨|f|^p, z⟩ for every f.

        Args:
            T: operator X → Y, X p-convex
            p: exponent
            y_star: functional in B_{(Y_[p])'}⁺
            C: candidate constant
            seed: seed of the oracle restarts
            cuts: shared cut pool, extended in place
            hint: candidate z tried first
            enforce_ball: reject y* outside B_{(Y_[p])'}⁺

        Returns:
            SynthesisOutcome (Feasible with a DominationCertificate, Infeasible with a witness family, or Unknown)
        """
        y_star = self._validate(T, p, y_star, C, enforce_ball)
        problem = _DominationProblem(self, T, p, y_star, C)
        cuts = cuts if cuts is not None else []
        if not np.any(problem.w @ np.abs(T.matrix)):
            certificate = problem.certificate(np.zeros(T.domain.dimension), 0.0, None, [], CertificateMethod.zero, 0.0)
            return SynthesisOutcome(SynthesisStatus.feasible, C, certificate=certificate, best_certificate=certificate)

        schur = self.schur_certificate(T, p, y_star, seed=seed)
        if not self.oracle.is_exact(problem.form(np.zeros(T.domain.dimension), C)) and schur.C <= C:
            logger.info(f"✅ domination at C={C:.6g} certified by the Schur test ({schur.C:.8g})")
            return SynthesisOutcome(SynthesisStatus.feasible, C, certificate=schur, best_certificate=schur, oracle=OracleKind.multistart)
        hints = [] if hint is None else [np.asarray(hint, dtype=np.float64)]
        return self._cutting_plane(problem, cuts, seed, hints=hints, fallbacks=[schur])

    def _singleton_lower(self, T: OperatorModel, p: float, y_star: NDArray[np.float64], seed: int) -> Tuple[float, Family]:
        """‖T‖ into L^p(y* dν): the ratio of one-vector families."""
        w = y_star * T.codomain.masses
        alpha = T.domain.reduction_scale()
        reduced = (w ** (1.0 / p))[:, None] * T.matrix / alpha[None, :]
        value, u, _, _ = self.operators.reduced_norm(reduced, T.domain.exponent, p, self.budget, seed)
        f = u / alpha
        norm = self.spaces.norm_eval(T.domain, f)
        return value, [f / norm] if norm > 0 else []

    def _bisect(
        self,
        p: float,
        anchor: str,
        synthesize: Callable[[float], SynthesisOutcome],
        lower: float,
        lower_witness: Family,
        upper_certificate,
        tol: float,
    ) -> ConstantBracket:
        hi = upper_certificate.C
        certificate = upper_certificate
        lo = min(lower, hi)
        witness = lower_witness
        probe = hi
        empirical = None
        steps = 0

        def settled() -> bool:
            return hi - lo <= tol * max(hi, 1e-12) or probe - lo <= tol * max(probe, 1e-12)

        while steps < self.bisection_steps and not settled():
            steps += 1
            mid = (lo + probe) / 2.0
            outcome = synthesize(mid)
            best = outcome.best_certificate
            if best is not None and best.C < hi:
                hi, certificate = best.C, best
            if outcome.feasible:
                if outcome.certificate.C < hi:
                    hi, certificate = outcome.certificate.C, outcome.certificate
                probe = min(probe, hi)
            elif outcome.infeasible:
                if outcome.witness_ratio > lo:
                    lo, witness = min(outcome.witness_ratio, hi), outcome.witness
            else:
                if outcome.empirical_candidate is not None:
                    empirical = mid if empirical is None else min(empirical, mid)
                probe = mid
            probe = min(probe, hi)
            logger.debug(f"bisection step {steps}: [{lo:.8g}, {hi:.8g}] probe {probe:.8g} -> {outcome.status.value}")

        status = BracketStatus.certified if hi - lo <= tol * max(hi, 1e-12) else BracketStatus.unknown
        marker = "✅" if status == BracketStatus.certified else "⚠️"
        logger.info(f"{marker} constant bracket [{lo:.8g}, {hi:.8g}] after {steps} steps ({status.value})")
        return ConstantBracket(
            p=p,
            lower=lo,
            upper=hi,
            status=status,
            anchor=anchor,
            lower_witness=witness,
            certificate=certificate,
            empirical_upper=empirical,
            steps=steps,
        )

    def min_constant_domination(
        self,
        T: OperatorModel,
        p: float,
        y_star,
        tol: Optional[float] = None,
        seed: int = 0,
        cuts: Optional[Family] = None,
        hint: Optional[NDArray[np.float64]] = None,
        enforce_ball: bool = True,
    ) -> ConstantBracket:
        """
        Bisection for the least C at which synthesize_dominating_weight is Feasible.

        The upper end starts at the Schur certificate and only moves to
        certified constants; the lower end starts at the one-vector ratio and
        only moves to witness ratios, so [lower, upper] always contains the
        true minimal constant.

        Returns:
            ConstantBracket whose certificate is a DominationCertificate at `upper`
        """
        tol = tol or settings.WEIGHTFORGE_DEFAULT_TOL
        y_star = self._validate(T, p, y_star, None, enforce_ball)
        cuts = cuts if cuts is not None else []
        tests = [hint] if hint is not None else None
        schur = self.schur_certificate(T, p, y_star, test_vectors=tests, seed=seed)
        if schur.method == CertificateMethod.zero:
            return ConstantBracket(p, 0.0, 0.0, BracketStatus.certified, ANCHOR_DOMINATION, certificate=schur)
        upper = schur
        if hint is not None:
            exact = self.certified_constant(T, p, y_star, hint)
            if exact is not None and exact[0] < upper.C:
                upper = _DominationProblem(self, T, p, y_star, exact[0]).certificate(
                    np.asarray(hint, dtype=np.float64), exact[0], exact[1], [], CertificateMethod.cutting_plane, 0.0
                )
        lower, witness = self._singleton_lower(T, p, y_star, seed)

        def synthesize(C: float) -> SynthesisOutcome:
            return self.synthesize_dominating_weight(T, p, y_star, C, seed=seed, cuts=cuts, hint=hint, enforce_ball=enforce_ball)

        return self._bisect(p, ANCHOR_DOMINATION, synthesize, lower, witness, upper, tol)

    # ------------------------------
    # Pietsch measures
    # ------------------------------
    def pietsch_pool(self, space: SpaceDescriptor) -> Tuple[List[NDArray[np.float64]], bool]:
        """
        Starting pool of unit functionals of X' and whether it already holds every extreme point.
        """
        extremes = self.spaces.dual_extreme_points(space)
        if extremes is not None:
            return [np.array(g) for g in extremes], True
        pool = [np.array(g) for g in self.spaces.unit_coordinate_functionals(space)]
        for f in self.initial_cuts(space):
            g = self.spaces.norming_functional(space, f)
            if not LatticeUtils.is_duplicate(g, pool, DUPLICATE_CUT_COSINE):
                pool.append(g)
        return pool, False

    def synthesize_pietsch_measure(
        self,
        T: OperatorModel,
        p: float,
        y_star,
        C: float,
        pool: Optional[List[NDArray[np.float64]]] = None,
        seed: int = 0,
        cuts: Optional[Family] = None,
        complete: Optional[bool] = None,
    ) -> SynthesisOutcome:
        """
        Find a probability η on unit functionals x'_k with
        ⟨|Tf|^p, y*⟩ ≤ C^p Σ_k η_k |⟨f, x'_k⟩|^p for every f.

        Args:
            T: operator
            p: exponent
            y_star: functional in B_{(Y_[p])'}⁺
            C: candidate constant
            pool: unit functionals of X' (default: extreme points, or coordinates plus norming functionals); grown in place
            seed: oracle seed
            cuts: shared cut pool
            complete: whether the pool holds every extreme point of B_{X'} (no growth then)

        Returns:
            SynthesisOutcome with a PietschCertificate when Feasible
        """
        y_star = self._validate(T, p, y_star, C, True)
        if pool is None:
            pool, default_complete = self.pietsch_pool(T.domain)
            complete = default_complete if complete is None else complete
        else:
            for g in pool:
                if self.spaces.dual_norm(T.domain, g) > 1.0 + _BALL_SLACK:
                    raise OutsideDualBallError("Pietsch pool functionals must lie in the unit ball of X'")
            complete = bool(complete)
        if not pool:
            raise InvalidParameterError("The Pietsch pool must not be empty")
        problem = _PietschProblem(self, T, p, y_star, C, pool, complete)
        cuts = cuts if cuts is not None else []
        if not np.any(problem.w @ np.abs(T.matrix)):
            eta = np.zeros(len(pool))
            eta[0] = 1.0
            certificate = problem.certificate(eta, 0.0, None, [], CertificateMethod.zero, 0.0)
            return SynthesisOutcome(SynthesisStatus.feasible, C, certificate=certificate, best_certificate=certificate)

        schur = self.pietsch_schur_certificate(T, p, y_star, seed=seed)
        if not self.oracle.is_exact(problem.form(np.zeros(len(pool)), C)) and schur.C <= C:
            logger.info(f"✅ Pietsch measure at C={C:.6g} certified by the Schur test ({schur.C:.8g})")
            return SynthesisOutcome(SynthesisStatus.feasible, C, certificate=schur, best_certificate=schur, oracle=OracleKind.multistart)
        return self._cutting_plane(problem, cuts, seed, fallbacks=[schur])

    def min_constant_pietsch(
        self,
        T: OperatorModel,
        p: float,
        y_star,
        tol: Optional[float] = None,
        seed: int = 0,
        pool: Optional[List[NDArray[np.float64]]] = None,
        complete: Optional[bool] = None,
    ) -> ConstantBracket:
        """Bisection for the least C with a Pietsch measure at y*; same bracket discipline as domination."""
        tol = tol or settings.WEIGHTFORGE_DEFAULT_TOL
        y_star = self._validate(T, p, y_star, None, True)
        if pool is None:
            pool, complete = self.pietsch_pool(T.domain)
        cuts: Family = []
        schur = self.pietsch_schur_certificate(T, p, y_star, seed=seed)
        if schur.method == CertificateMethod.zero:
            return ConstantBracket(p, 0.0, 0.0, BracketStatus.certified, ANCHOR_PIETSCH, certificate=schur)
        lower, witness = self._singleton_lower(T, p, y_star, seed)

        def synthesize(C: float) -> SynthesisOutcome:
            return self.synthesize_pietsch_measure(T, p, y_star, C, pool=pool, seed=seed, cuts=cuts, complete=complete)

        return self._bisect(p, ANCHOR_PIETSCH, synthesize, lower, witness, schur, tol)

    # ------------------------------
    # Audit
    # ------------------------------
    def verify_certificate(self, T: OperatorModel, certificate, seed: int = 0, batch: Optional[int] = None) -> CertificateAudit:
        """
        Re-check a domination or Pietsch certificate independently of how it was found.

        Exact forms (p = 2, or p = 1 with a separable right side) are checked by
        their eigenvalue / coordinate test; all others on a fresh random batch
        plus the stored cuts and tight direction.

        Args:
            T: the certified operator
            certificate: DominationCertificate or PietschCertificate
            seed: seed of the fresh batch
            batch: batch size (default from settings)

        Returns:
            CertificateAudit
        """
        batch = batch or self.verify_batch
        p, C = certificate.p, certificate.C
        y_star = np.asarray(certificate.y_star, dtype=np.float64)
        details = {}
        if certificate.kind == CertificateKind.domination:
            problem = _DominationProblem(self, T, p, y_star, C)
            z = np.asarray(certificate.z_star, dtype=np.float64)
            norm = self.spaces.norm_eval(problem.z_space, np.abs(z))
            in_ball = bool(np.all(z >= 0) and norm <= 1.0 + _BALL_SLACK)
            details["z_norm"] = norm
            form = problem.form(z, C)
        else:
            support = np.atleast_2d(np.asarray(certificate.support, dtype=np.float64))
            eta = np.asarray(certificate.eta, dtype=np.float64)
            norms = np.atleast_1d(self.spaces.dual_norm(T.domain, support))
            in_ball = bool(np.all(eta >= 0) and abs(eta.sum() - 1.0) <= 1e-12 * max(1, eta.size) and np.all(norms <= 1.0 + _BALL_SLACK))
            details["eta_total"] = float(eta.sum())
            details["support_norm"] = float(norms.max())
            form = DominationForm(T.matrix, y_star * T.codomain.masses, support * T.domain.masses[None, :], C ** p * eta, p, T.domain)

        exact = self.oracle.is_exact(form)
        if exact:
            residual = self.oracle.find_violation(form).violation
            checked = 0
        else:
            rng = derive_rng(seed, "verify")
            samples = [self.spaces.sample_unit_vectors(T.domain, batch, rng)]
            extra = list(certificate.cuts)
            if getattr(certificate, "tight_direction", None) is not None:
                extra.append(certificate.tight_direction)
            if extra:
                samples.append(np.vstack([self.spaces.normalize(T.domain, f) for f in extra if np.any(f)]))
            F = np.vstack(samples)
            scale = float(np.max(form.lhs(F)))
            residual = max(0.0, float(np.max(form.gap(F)))) / scale if scale > 0 else 0.0
            checked = F.shape[0]
        passed = in_ball and residual <= self.verify_tol
        marker = "✅" if passed else "❌"
        logger.info(f"{marker} {certificate.kind.value} certificate audit: residual {residual:.3e}, in ball {in_ball}")
        return CertificateAudit(passed=passed, residual=residual, in_ball=in_ball, exact=exact, batch=checked, details=details)

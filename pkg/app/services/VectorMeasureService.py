# app/services/VectorMeasureService.py
import logging
import math
from dataclasses import replace
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import minimize

from app.constants.constants import ConjugateStatus
from app.core.config import settings
from app.core.errors import DimensionMismatchError, InvalidParameterError, InvalidSpaceError
from app.models.certificates import DominationCertificate
from app.models.operator import OperatorModel
from app.models.space import MeasureSpace, SpaceDescriptor, parse_exponent
from app.models.vectormeasure import (
    AdditivityCheck,
    ConjugateFamilyReport,
    PositivelyNormingReport,
    PthConjugateReport,
    PthFactorReport,
    ReplayResult,
    VectorMeasureModel,
)
from app.models.weights import WeightFamily
from app.services.LinearProgramService import LinearProgramService
from app.services.WeightProgramService import WeightProgramService
from app.utils.lattice_utils import LatticeUtils
from app.utils.random_utils import derive_rng, parallel_map

logger = logging.getLogger(__name__)

_RYBAKOV_CANDIDATES = 16
_FLIP_PASSES = 50

MeasureSource = Union[OperatorModel, VectorMeasureModel]


class VectorMeasureService:
    """
    Finite vector measures m_V and m_T, their L^p norms, and the conjugate
    weight families that extend an operator through weighted L^p spaces.
    """

    def __init__(self, program_service: Optional[WeightProgramService] = None, lp_service: Optional[LinearProgramService] = None):
        """
        Initialize the VectorMeasureService.

        Args:
            program_service: shared WeightProgramService (its synthesis service is reused)
            lp_service: simplex solver for the norming-constant programs
        """
        self.programs = program_service or WeightProgramService()
        self.synthesis = self.programs.synthesis
        self.spaces = self.synthesis.spaces
        self.operators = self.synthesis.operators
        self.lp = lp_service or self.synthesis.lp
        self.enumeration_limit = self.operators.enumeration_limit

    # ------------------------------
    # Construction
    # ------------------------------
    def build_mV(self, V: WeightFamily) -> VectorMeasureModel:
        """m_V({j}) = (v_j μ_j)_{v ∈ V}, controlled by the member average."""
        values = V.matrix * V.base.masses[None, :]
        control = V.matrix.mean(axis=0)
        return VectorMeasureModel(source=V.base, values=values, control_density=control, family=V)

    def _rybakov_density(self, values: NDArray[np.float64], codomain: SpaceDescriptor, source: MeasureSpace, seed: int) -> NDArray[np.float64]:
        """
        |⟨m({j}), φ⟩| / ν_j for a unit φ of the codomain dual sharing the null atoms of m.

        Candidates are the norming functional of m(Ω) and norming functionals of
        random positive combinations; the one with the largest worst-atom ratio
        |⟨m({j}), φ⟩| / ‖m({j})‖ wins.
        """
        atom_norms = np.atleast_1d(self.spaces.norm_eval(codomain, values.T))
        live = atom_norms > 0
        if not np.any(live):
            return np.zeros(source.atom_count)
        targets = [values.sum(axis=1)]
        for attempt in range(_RYBAKOV_CANDIDATES):
            rng = derive_rng(seed, "rybakov", attempt)
            signs = rng.choice([-1.0, 1.0], size=values.shape[1]) if attempt % 2 else np.ones(values.shape[1])
            targets.append(values @ (signs * rng.random(values.shape[1])))

        best, best_score = None, -1.0
        for target in targets:
            phi = self.spaces.norming_functional(codomain, target)
            if not np.any(phi):
                continue
            pairings = np.abs((phi * codomain.masses) @ values)
            score = float(np.min(pairings[live] / atom_norms[live]))
            if score > best_score:
                best, best_score = pairings, score
        if best is None or best_score <= 0:
            logger.warning("⚠️ no control functional separates every non-null atom; some atoms are treated as null")
        density = best / source.masses if best is not None else np.zeros(source.atom_count)
        return density

    def build_mT(self, T: OperatorModel, seed: int = 0) -> VectorMeasureModel:
        """
        m_T(A) = T(χ_A), so m_T({j}) is column j of T.

        The control density is the Rybakov density of a unit functional of the codomain dual.
        """
        values = np.array(T.matrix, dtype=np.float64)
        control = self._rybakov_density(values, T.codomain, T.domain.measure, seed)
        return VectorMeasureModel(source=T.domain.measure, values=values, control_density=control, codomain=T.codomain)

    def kernel_vector_measure(
        self,
        K,
        x_measure: MeasureSpace,
        y_measure: MeasureSpace,
        V: Optional[WeightFamily] = None,
        p: float = 1.0,
    ) -> Tuple[OperatorModel, VectorMeasureModel]:
        """
        Kernel integration map (Tf)(y) = Σ_x f(x) K(x, y) ν_x and its measure m_K(A)(y) = ∫_A K(x, y) dx.

        Args:
            K: nonnegative grid, x-atoms × y-atoms
            x_measure: quadrature masses of the x grid
            y_measure: masses of the y grid
            V: optional weight family over the y grid
            p: exponent of the L^p spaces on both sides

        Returns:
            (operator L^p(x) → L^p(y), m_K)
        """
        grid = np.asarray(K, dtype=np.float64)
        if grid.shape != (x_measure.atom_count, y_measure.atom_count):
            raise DimensionMismatchError(
                f"Kernel grid {grid.shape} does not match {x_measure.atom_count} x-atoms and {y_measure.atom_count} y-atoms"
            )
        if np.any(grid < 0) or not np.all(np.isfinite(grid)):
            raise InvalidParameterError("Kernel values must be finite and nonnegative")
        if V is not None and V.base.atom_count != y_measure.atom_count:
            raise DimensionMismatchError("The weight family must live on the y grid")
        matrix = grid.T * x_measure.masses[None, :]
        T = OperatorModel(matrix, SpaceDescriptor(x_measure, p), SpaceDescriptor(y_measure, p))
        return T, self.build_mT(T)

    # ------------------------------
    # Norms
    # ------------------------------
    @staticmethod
    def lpmv_norm(f, p: float, V: WeightFamily) -> float:
        """‖f‖_{L^p(m_V)} = max over v ∈ V of ‖f‖_{L^p(v dμ)}."""
        p = parse_exponent(p)
        f = np.asarray(f, dtype=np.float64)
        if f.shape[-1:] != (V.base.atom_count,):
            raise DimensionMismatchError("f does not match the family's base measure")
        if math.isinf(p):
            live = np.any(V.matrix > 0, axis=0)
            return float(np.max(np.abs(f[live]), initial=0.0))
        densities = V.matrix * V.base.masses[None, :]
        return float(np.max(densities @ np.abs(f) ** p) ** (1.0 / p))

    def _measure_norms(self, m: VectorMeasureModel, vectors: NDArray[np.float64]) -> NDArray[np.float64]:
        """Norms in the target of m of the rows of `vectors`."""
        if m.codomain is not None:
            return np.atleast_1d(self.spaces.norm_eval(m.codomain, vectors))
        return np.max(np.abs(vectors), axis=-1)

    def l1m_norm(
        self,
        f,
        m: VectorMeasureModel,
        dual_pool: Optional[Sequence[NDArray[np.float64]]] = None,
        budget: Optional[int] = None,
        seed: int = 0,
    ) -> Tuple[float, str]:
        """
        ‖f‖_{L¹(m)} = sup over x* in the dual unit ball of ∫|f| d|⟨m, x*⟩|.

        The supremum equals max over signs ε of ‖Σ_j ε_j |f_j| m({j})‖, which is
        enumerated exactly up to the enumeration limit; past it, random signs
        improved by single flips give a lower bound. Functionals in `dual_pool`
        contribute their own (lower-bound) integrals.

        Returns:
            (value, note)
        """
        budget = budget or settings.WEIGHTFORGE_DEFAULT_BUDGET
        magnitude = np.abs(np.asarray(f, dtype=np.float64))
        if magnitude.shape != (m.source_atoms,):
            raise DimensionMismatchError("f does not match the source atoms of m")
        active = np.flatnonzero((magnitude > 0) & ~m.null_atoms)
        note = "exact: f vanishes off the null atoms"
        value = 0.0
        if active.size:
            columns = m.values[:, active] * magnitude[active][None, :]
            if active.size <= self.enumeration_limit:
                signs = LatticeUtils.sign_vectors(active.size)
                value = float(np.max(self._measure_norms(m, signs @ columns.T)))
                note = "exact: sign enumeration"
            else:
                value = self._flip_search(m, columns, budget, seed)
                note = "lower bound: sign search"

        for functional in dual_pool or []:
            functional = np.asarray(functional, dtype=np.float64)
            weights = functional * m.codomain.masses if m.codomain is not None else functional
            value = max(value, float(np.sum(magnitude * np.abs(weights @ m.values))))
        return value, note

    def _flip_search(self, m: VectorMeasureModel, columns: NDArray[np.float64], budget: int, seed: int) -> float:
        best = 0.0
        k = columns.shape[1]
        for restart in range(budget):
            rng = derive_rng(seed, "l1m-signs", restart)
            signs = rng.choice([-1.0, 1.0], size=k)
            current = float(self._measure_norms(m, (columns @ signs)[None, :])[0])
            for _ in range(_FLIP_PASSES):
                flipped = signs[None, :] * np.where(np.eye(k, dtype=bool), -1.0, 1.0)
                values = self._measure_norms(m, flipped @ columns.T)
                index = int(np.argmax(values))
                if values[index] <= current * (1.0 + 1e-12):
                    break
                signs, current = flipped[index], float(values[index])
            best = max(best, current)
        return best

    def lpm_norm(self, f, m: VectorMeasureModel, p: float, budget: Optional[int] = None, seed: int = 0) -> float:
        """‖f‖_{L^p(m)} = ‖|f|^p‖_{L¹(m)}^{1/p}."""
        value, _ = self.l1m_norm(np.abs(np.asarray(f, dtype=np.float64)) ** p, m, budget=budget, seed=seed)
        return value ** (1.0 / p)

    def countable_additivity_check(
        self,
        m: VectorMeasureModel,
        p: Optional[float] = None,
        V: Optional[WeightFamily] = None,
        sequence: Optional[Sequence[Sequence[int]]] = None,
    ) -> AdditivityCheck:
        """
        Tails ‖m(∪_{i≥n} A_i)‖ of a disjoint sequence (default: the single atoms in order).

        With V and p the tails are measured in L^p(m_V); otherwise in the target of m.
        Passes when the sequence is disjoint and the last tail is zero.
        """
        sequence = [list(cell) for cell in sequence] if sequence is not None else [[j] for j in range(m.source_atoms)]
        seen = set()
        for cell in sequence:
            if seen.intersection(cell):
                raise InvalidParameterError("The sets of the sequence must be disjoint")
            seen.update(cell)

        tails: List[float] = []
        for n in range(len(sequence) + 1):
            union = [j for cell in sequence[n:] for j in cell]
            vector = m.evaluate(union)
            if V is not None and p is not None:
                tails.append(self.lpmv_norm(vector, p, V))
            else:
                tails.append(float(self._measure_norms(m, vector[None, :])[0]))
        passed = tails[-1] == 0.0
        return AdditivityCheck(passed=passed, tails=tails)

    # ------------------------------
    # Conjugate families
    # ------------------------------
    def _integration_operator(self, source: MeasureSource, p: float) -> Tuple[OperatorModel, NDArray[np.int64], OperatorModel, NDArray[np.float64]]:
        """
        (synthesis operator, support, full operator, control density).

        An operator is used on its own domain; a measure m becomes its
        integration map on L^p(h_φ dν), the Rybakov realization of L^p(m),
        with the m-null atoms dropped.
        """
        if isinstance(source, OperatorModel):
            control = self.build_mT(source).control_density
            return source, np.arange(source.domain.dimension), source, control
        if source.codomain is None:
            raise InvalidSpaceError("The integration map needs a measure with a space-valued target")
        support = np.flatnonzero(source.control_density > 0)
        if support.size == 0:
            raise InvalidSpaceError("The measure vanishes: every atom is null")
        domain = SpaceDescriptor(source.source.restrict(support), p, source.control_density[support])
        reduced = OperatorModel(source.values[:, support], domain, source.codomain)
        full = OperatorModel(source.values, SpaceDescriptor(source.source, p), source.codomain)
        return reduced, support, full, source.control_density

    @staticmethod
    def _expand(vector: Optional[NDArray[np.float64]], support: NDArray[np.int64], size: int) -> Optional[NDArray[np.float64]]:
        if vector is None:
            return None
        full = np.zeros(size)
        full[support] = vector
        return full

    def conjugate_family_synthesize(
        self,
        source: MeasureSource,
        V: WeightFamily,
        p: float,
        C: Optional[float] = None,
        tol: Optional[float] = None,
        seed: int = 0,
        hint=None,
    ) -> ConjugateFamilyReport:
        """
        For every v ∈ V a weight w_v with ‖T‖_{L^p(w_v dν) → L^p(v dμ)} ≤ C.

        w_v is the dominating weight of T at y* = v. Without C each member gets
        its minimal certified constant and C is their maximum; with C every
        member is synthesized at C and a refuted member makes the family
        NOT_CONJUGATABLE.

        Args:
            source: operator (on its own domain) or vector measure (integration map on L^p(m))
            V: target weight family over the codomain measure
            p: exponent
            C: uniform constant to certify (optional)
            tol: bisection and acceptance tolerance
            seed: base seed
            hint: candidate weight offered as a single conjugate weight for every member

        Returns:
            ConjugateFamilyReport
        """
        p = parse_exponent(p)
        tol = tol or settings.WEIGHTFORGE_DEFAULT_TOL
        T, support, full, control = self._integration_operator(source, p)
        n = full.domain.dimension
        if V.base.atom_count != T.codomain.dimension:
            raise DimensionMismatchError("V must live on the codomain measure of the operator")
        z_space = self.spaces.kothe_dual(self.spaces.pth_power_space(T.domain, p))

        def synthesize(index: int):
            v = V.members[index].values
            member_seed = int(derive_rng(seed, "conjugate", index).integers(0, 2 ** 31 - 1))
            if C is None:
                bracket = self.synthesis.min_constant_domination(T, p, v, tol=tol, seed=member_seed, enforce_ball=False)
                return ConjugateStatus.conjugate, bracket.certificate, None
            outcome = self.synthesis.synthesize_dominating_weight(T, p, v, C, seed=member_seed, enforce_ball=False)
            if outcome.feasible:
                return ConjugateStatus.conjugate, outcome.certificate, None
            if outcome.infeasible:
                return ConjugateStatus.not_conjugatable, None, outcome
            return ConjugateStatus.unknown, None, outcome

        results = parallel_map(synthesize, range(len(V)))
        notes: List[str] = []
        for index, (status, _, outcome) in enumerate(results):
            if status == ConjugateStatus.not_conjugatable:
                logger.warning(f"❌ member {index} has no conjugate weight at C={C:.6g} (witness ratio {outcome.witness_ratio:.6g})")
                return ConjugateFamilyReport(
                    status=status, p=p, uniform_constant=None, inclusion_bound=None, assignment=[], nu_weights=[],
                    member_constants=[], certificates=[], verification=[], control_density=control,
                    witness=[self._expand(f, support, n) for f in outcome.witness], witness_member=index,
                    notes=[f"witness ratio {outcome.witness_ratio:.8g} > C"],
                )
        unknown = [index for index, (status, _, _) in enumerate(results) if status == ConjugateStatus.unknown]
        if unknown:
            logger.warning(f"⚠️ members {unknown} neither certified nor refuted at C={C:.6g}")
            return ConjugateFamilyReport(
                status=ConjugateStatus.unknown, p=p, uniform_constant=None, inclusion_bound=None, assignment=[],
                nu_weights=[], member_constants=[], certificates=[], verification=[], control_density=control,
                notes=[f"members {unknown}: {results[unknown[0]][2].message}"],
            )

        certificates: List[DominationCertificate] = []
        nu_weights, assignment, inclusions = [], [], []
        for _, certificate, _ in results:
            z = np.maximum(np.asarray(certificate.z_star, dtype=np.float64), 0.0)
            inclusions.append(self.spaces.norm_eval(z_space, z) ** (1.0 / p))
            full_z = self._expand(z, support, n)
            nu_weights.append(full_z)
            with np.errstate(divide="ignore", invalid="ignore"):
                assignment.append(np.where(control > 0, full_z / control, 0.0))
            certificates.append(replace(
                certificate,
                z_star=full_z,
                tight_direction=self._expand(certificate.tight_direction, support, n),
                cuts=[self._expand(f, support, n) for f in certificate.cuts],
            ))
        member_constants = [c.C for c in certificates]
        uniform = C if C is not None else max(member_constants)
        verification = [
            self.programs.weighted_norm_verify(full, w, member.values, p, seed=seed)
            for w, member in zip(nu_weights, V.members)
        ]
        worst = max(check.constant for check in verification)
        if worst > uniform * (1.0 + tol):
            notes.append(f"verified norm {worst:.8g} exceeds the constant {uniform:.8g}")

        hint_constant = hint_accepted = None
        if hint is not None:
            hint_vector = np.asarray(getattr(hint, "values", hint), dtype=np.float64)
            hint_constant = max(
                self.programs.weighted_norm_verify(full, hint_vector, member.values, p, seed=seed).constant
                for member in V.members
            )
            in_ball = self.spaces.norm_eval(z_space, hint_vector[support]) <= 1.0 + 1e-9
            hint_accepted = bool(in_ball and math.isfinite(hint_constant) and (C is None or hint_constant <= C * (1.0 + tol)))
            notes.append(f"hint weight: constant {hint_constant:.8g}, accepted {hint_accepted}")

        marker = "✅" if worst <= uniform * (1.0 + tol) else "❌"
        logger.info(f"{marker} conjugate family for {len(V)} weights at p={p:g}: C={uniform:.8g}, verified max {worst:.8g}")
        return ConjugateFamilyReport(
            status=ConjugateStatus.conjugate,
            p=p,
            uniform_constant=uniform,
            inclusion_bound=max(inclusions),
            assignment=assignment,
            nu_weights=nu_weights,
            member_constants=member_constants,
            certificates=certificates,
            verification=verification,
            control_density=control,
            hint_constant=hint_constant,
            hint_accepted=hint_accepted,
            notes=notes,
        )

    def conjugate_family_implies_regularity(
        self,
        source: MeasureSource,
        V: WeightFamily,
        report: ConjugateFamilyReport,
        p: float,
        batch: int = 256,
        tol: float = 1e-6,
        seed: int = 0,
    ) -> ReplayResult:
        """
        Replay the square-function chain of a conjugate family on random families.

        For each family the worst member v is picked; then
        Σ_i ∫|T f_i|^p v dμ ≤ C^p Σ_i ∫|f_i|^p w_v dν ≤ C^p ‖(Σ|f_i|^p)^{1/p}‖^p.
        assignment_ratio measures the first inequality, regularity_ratio the whole chain.

        Returns:
            ReplayResult, flagged when either ratio exceeds C(1+tol)
        """
        if report.status != ConjugateStatus.conjugate:
            raise InvalidParameterError("Only a conjugate report can be replayed")
        p = parse_exponent(p)
        T, support, _, _ = self._integration_operator(source, p)
        weights = np.vstack([np.asarray(w, dtype=np.float64)[support] for w in report.nu_weights])
        densities = V.matrix * V.base.masses[None, :]
        mu = T.domain.masses
        n = T.domain.dimension

        families = [
            np.asarray(c.tight_direction, dtype=np.float64)[support][None, :]
            for c in report.certificates if c.tight_direction is not None
        ]
        families += [np.eye(n)]
        for trial in range(batch):
            rng = derive_rng(seed, "replay", trial)
            family = rng.standard_normal((int(rng.integers(1, 4)), n))
            families.append(np.abs(family) if trial % 2 else family)

        assignment_ratio = regularity_ratio = 0.0
        checked = 0
        for family in families:
            if not np.any(family):
                continue
            images = np.abs(family @ T.matrix.T) ** p
            per_member = densities @ images.sum(axis=0)
            worst = int(np.argmax(per_member))
            numerator = float(per_member[worst])
            if numerator <= 0:
                continue
            checked += 1
            assigned = float((weights[worst] * mu) @ (np.abs(family) ** p).sum(axis=0))
            ratio = math.inf if assigned <= 0 else (numerator / assigned) ** (1.0 / p)
            assignment_ratio = max(assignment_ratio, ratio)
            denominator = self.spaces.lattice_norm(T.domain, family, p)
            regularity_ratio = max(regularity_ratio, numerator ** (1.0 / p) / denominator)

        bound = report.uniform_constant
        flagged = max(assignment_ratio, regularity_ratio) > bound * (1.0 + tol)
        marker = "❌" if flagged else "✅"
        logger.info(f"{marker} replay over {checked} families: assignment {assignment_ratio:.8g}, regularity {regularity_ratio:.8g}, C {bound:.8g}")
        return ReplayResult(
            assignment_ratio=assignment_ratio,
            regularity_ratio=regularity_ratio,
            bound=bound,
            families_checked=checked,
            flagged=flagged,
        )

    # ------------------------------
    # p-th power factorization
    # ------------------------------
    def pth_power_factorable_check(
        self,
        T: OperatorModel,
        X: Optional[SpaceDescriptor] = None,
        p: float = 1.0,
        budget: Optional[int] = None,
        seed: int = 0,
        bound: Optional[float] = None,
        tol: float = 1e-9,
    ) -> PthFactorReport:
        """
        K = sup ‖Tf‖ / ‖|f|^{1/p}‖_X^p and the inclusion constant of X in L^p(m_T).

        K is the norm of T on X_[p] when X is p-convex (exact where the norm
        estimate is); otherwise a sampled lower bound. The inclusion constant
        sup ‖f‖_{L^p(m_T)} / ‖f‖_X equals K^{1/p}; it is estimated from below
        independently through l1m_norm.

        Args:
            T: operator
            X: domain lattice (default T's domain)
            p: exponent
            budget: restarts
            seed: base seed
            bound: K to compare against
            tol: relative slack of the comparison

        Returns:
            PthFactorReport
        """
        p = parse_exponent(p)
        budget = budget or settings.WEIGHTFORGE_DEFAULT_BUDGET
        X = X or T.domain
        if X.dimension != T.domain.dimension:
            raise DimensionMismatchError("X must have the atoms of T's domain")
        operator = OperatorModel(T.matrix, X, T.codomain)
        if T.is_zero:
            return PthFactorReport(K=0.0, K_exact=True, inclusion_lower=0.0, inclusion_upper=0.0, bound=bound,
                                   passed=None if bound is None else True)

        rng = derive_rng(seed, "pth-power")
        samples = np.vstack([np.eye(X.dimension), self.spaces.sample_unit_vectors(X, 4 * budget, rng)])
        try:
            power = self.spaces.pth_power_space(X, p)
            estimate = self.operators.operator_norm(OperatorModel(T.matrix, power, T.codomain), budget=budget, seed=seed)
            K, K_exact, witness = estimate.value, estimate.exact, estimate.witness
        except InvalidSpaceError:
            powered = np.abs(samples) ** (1.0 / p)
            ratios = np.atleast_1d(self.spaces.norm_eval(T.codomain, samples @ T.matrix.T)) / (
                np.atleast_1d(self.spaces.norm_eval(X, powered)) ** p
            )
            index = int(np.argmax(ratios))
            K, K_exact, witness = float(ratios[index]), False, samples[index]

        m = self.build_mT(operator, seed=seed)
        candidates = [np.abs(witness) ** (1.0 / p)] + list(np.abs(samples[: X.dimension + budget]))
        inclusion_lower = 0.0
        for f in candidates:
            norm = self.spaces.norm_eval(X, f)
            if norm > 0:
                inclusion_lower = max(inclusion_lower, self.lpm_norm(f, m, p, budget=budget, seed=seed) / norm)
        inclusion_upper = K ** (1.0 / p) if K_exact else None
        passed = None if bound is None else bool(K <= bound * (1.0 + tol))
        logger.info(f"p-th power factorization at p={p:g}: K={K:.8g} (exact {K_exact}), inclusion >= {inclusion_lower:.8g}")
        return PthFactorReport(
            K=K,
            K_exact=K_exact,
            inclusion_lower=inclusion_lower,
            inclusion_upper=inclusion_upper,
            bound=bound,
            passed=passed,
            witness=witness,
        )

    # ------------------------------
    # Positively norming sets
    # ------------------------------
    def positively_norming_constants(
        self,
        N: Sequence,
        X: SpaceDescriptor,
        budget: Optional[int] = None,
        seed: int = 0,
    ) -> PositivelyNormingReport:
        """
        Constants c₁, c₂ with c₁‖x‖ ≤ sup_{n ∈ N} ⟨|x|, n⟩ ≤ c₂‖x‖.

        c₂ is the largest dual norm in N. c₁ is bracketed: the lower end is
        the max-min program over convex combinations of N, the upper end the
        smallest value found on the positive unit sphere (exact for L¹ and
        L^inf spaces). The sign-pattern products S·N are checked to norm X
        with the same values.

        Returns:
            PositivelyNormingReport
        """
        budget = budget or settings.WEIGHTFORGE_DEFAULT_BUDGET
        rows = np.vstack([np.asarray(getattr(n, "values", n), dtype=np.float64) for n in N])
        if rows.shape[1] != X.dimension:
            raise DimensionMismatchError("Norming functionals must have one entry per atom")
        if np.any(rows < 0):
            raise InvalidParameterError("A positively norming set holds positive functionals")
        coefficients = rows * X.masses[None, :]
        kappa = self.spaces.coordinate_norms(X)
        c_upper = float(np.max(np.atleast_1d(self.spaces.dual_norm(X, rows))))

        def phi(x: NDArray[np.float64]) -> NDArray[np.float64]:
            return np.max(np.abs(np.atleast_2d(x)) @ coefficients.T, axis=1)

        scaled = coefficients / kappa[None, :]
        k, n = scaled.shape
        # max t with Σ_k λ_k scaled[k, i] >= t for every atom, λ a probability vector
        result = self.lp.solve(
            c=np.concatenate([np.zeros(k), [-1.0]]),
            A_ub=np.hstack([-scaled.T, np.ones((n, 1))]),
            b_ub=np.zeros(n),
            A_eq=np.concatenate([np.ones(k), [0.0]])[None, :],
            b_eq=np.ones(1),
        )
        lower = float(result.x[-1]) if result.optimal else 0.0

        if X.is_inf:
            upper = float(np.min(np.max(scaled, axis=0)))
            exact = True
        elif X.exponent == 1.0:
            # min s with coefficients x <= s and Σ κ_i x_i = 1 over x >= 0
            program = self.lp.solve(
                c=np.concatenate([np.zeros(n), [1.0]]),
                A_ub=np.hstack([coefficients, -np.ones((k, 1))]),
                b_ub=np.zeros(k),
                A_eq=np.concatenate([kappa, [0.0]])[None, :],
                b_eq=np.ones(1),
            )
            upper = float(program.fun) if program.optimal else float(np.min(np.max(scaled, axis=0)))
            exact = program.optimal
        else:
            upper = self._sphere_minimum(X, phi, budget, seed)
            exact = False
        upper = max(upper, lower)
        if upper - lower <= 1e-9 * max(1.0, upper):
            exact = True

        rng = derive_rng(seed, "sign-patterns")
        samples = np.vstack([np.eye(n) / kappa[:, None], self.spaces.sample_unit_vectors(X, 4 * budget, rng)])
        deviation = 0.0
        for x in samples:
            if n <= self.enumeration_limit:
                patterns = LatticeUtils.sign_vectors(n)
            else:
                patterns = np.vstack([np.sign(x) + (x == 0), rng.choice([-1.0, 1.0], size=(4 * budget, n))])
            products = np.abs((patterns * x[None, :]) @ coefficients.T)
            deviation = max(deviation, abs(float(products.max()) - float(phi(x)[0])) / self.spaces.norm_eval(X, x))

        positively_norming = lower > 0
        marker = "✅" if positively_norming else "⚠️"
        logger.info(f"{marker} norming constants on {X.describe()}: c1 in [{lower:.6g}, {upper:.6g}], c2 = {c_upper:.6g}")
        return PositivelyNormingReport(
            c_lower=upper,
            c_lower_interval=[lower, upper],
            c_upper=c_upper,
            c_lower_exact=exact,
            positively_norming=positively_norming,
            sign_pattern_deviation=deviation,
        )

    def _sphere_minimum(self, X: SpaceDescriptor, phi, budget: int, seed: int) -> float:
        """Smallest Φ(x)/‖x‖ found over x >= 0 by Powell searches from coordinates and random points."""
        n = X.dimension
        kappa = self.spaces.coordinate_norms(X)
        starts = list(np.eye(n) / kappa[:, None]) + [np.ones(n) / self.spaces.norm_eval(X, np.ones(n))]
        for restart in range(budget):
            starts.append(np.abs(self.spaces.sample_unit_vectors(X, 1, derive_rng(seed, "norming-sphere", restart))[0]))

        def ratio(x: NDArray[np.float64]) -> float:
            x = np.maximum(x, 0.0)
            norm = self.spaces.norm_eval(X, x)
            return float(phi(x)[0]) / norm if norm > 0 else np.inf

        best = min(ratio(x) for x in starts)
        for x in starts:
            result = minimize(ratio, x, method="Powell", bounds=[(0.0, None)] * n, options={"maxiter": 200 * n})
            if np.isfinite(result.fun):
                best = min(best, float(result.fun))
        return best

    def conjugate_family_pth(
        self,
        T: OperatorModel,
        X: Optional[SpaceDescriptor],
        V: WeightFamily,
        p: float,
        tol: Optional[float] = None,
        seed: int = 0,
    ) -> PthConjugateReport:
        """
        Full extension pipeline for T: X → L^p(m_V).

        Builds m_T, checks p-th power factorability (X ⊆ L^p(m_T)), synthesizes
        a conjugate family for the extension T̃ on L^p(m_T) (whose weights lie
        in B_{(L¹(m_T))'} by construction) and audits that family as a
        positively norming set of X.

        Returns:
            PthConjugateReport with the constants block
        """
        p = parse_exponent(p)
        X = X or T.domain
        operator = OperatorModel(T.matrix, X, T.codomain)
        m = self.build_mT(operator, seed=seed)
        factorable = self.pth_power_factorable_check(operator, X, p, seed=seed)
        conjugate = self.conjugate_family_synthesize(m, V, p, tol=tol, seed=seed)

        norming = None
        constants = {
            "K": factorable.K,
            "inclusion": factorable.inclusion_upper if factorable.inclusion_upper is not None else factorable.inclusion_lower,
            "C": conjugate.uniform_constant,
            "W_in_X_dual": None,
            "c_lower": None,
            "c_upper": None,
        }
        live = [w for w in conjugate.nu_weights if np.any(w > 0)]
        if conjugate.status == ConjugateStatus.conjugate and live:
            norming = self.positively_norming_constants(live, X, seed=seed)
            constants["W_in_X_dual"] = float(max(self.spaces.dual_norm(X, w) for w in live))
            constants["c_lower"] = norming.c_lower
            constants["c_upper"] = norming.c_upper
        logger.info(f"p-th power conjugate pipeline at p={p:g}: {constants}")
        return PthConjugateReport(measure=m, factorable=factorable, conjugate=conjugate, norming=norming, constants=constants)

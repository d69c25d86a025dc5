# app/services/CommandService.py
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np
from pydantic import ValidationError

from app.constants.constants import (
    ANCHOR_CONJUGATE,
    ANCHOR_COUNTEREXAMPLE,
    ANCHOR_DOMINATION,
    ANCHOR_ENDO,
    ANCHOR_KERNEL,
    ANCHOR_LAMBDA,
    ANCHOR_PIETSCH,
    ANCHOR_RHO,
    PROBLEM_FILE_VERSION,
    BracketStatus,
    CertificateKind,
    CommandName,
    ConjugateStatus,
    EndoVariant,
    ExitCode,
    SynthesisStatus,
)
from app.core.errors import ProblemFileError, SynthesisInfeasibleError, SynthesisUnknownError
from app.models.operator import OperatorModel
from app.models.space import MeasureSpace, parse_exponent
from app.models.weights import WeightFamily
from app.schemas.problemSchema import CounterexampleSchema, ProblemFile
from app.schemas.reportSchema import CommandReport
from app.services.FactorizationService import FactorizationService
from app.services.RegularityService import RegularityService
from app.services.StableEmbeddingService import StableEmbeddingService
from app.services.VectorMeasureService import VectorMeasureService
from app.services.WeightProgramService import WeightProgramService
from app.services.WeightSynthesisService import WeightSynthesisService
from app.utils.operator_builders import OperatorBuilders
from app.utils.report_utils import content_id, to_jsonable

logger = logging.getLogger(__name__)

_CONJUGATE_EXIT = {
    ConjugateStatus.conjugate: ExitCode.ok,
    ConjugateStatus.not_conjugatable: ExitCode.infeasible,
    ConjugateStatus.unknown: ExitCode.unknown,
}
_SYNTHESIS_EXIT = {
    SynthesisStatus.feasible: ExitCode.ok,
    SynthesisStatus.infeasible: ExitCode.infeasible,
    SynthesisStatus.unknown: ExitCode.unknown,
}


def load_problem(source: Union[str, Path, Dict[str, Any]]) -> ProblemFile:
    """
    Read and validate a problem file.

    Args:
        source: path to a JSON file, or the already parsed payload

    Returns:
        ProblemFile

    Raises:
        ProblemFileError: unreadable JSON or schema violation
    """
    try:
        if isinstance(source, dict):
            payload = source
        else:
            with open(source, "r", encoding="utf-8") as stream:
                payload = json.load(stream)
        return ProblemFile.model_validate(payload)
    except (OSError, json.JSONDecodeError) as e:
        raise ProblemFileError(f"Cannot read problem file: {e}") from e
    except ValidationError as e:
        raise ProblemFileError(f"Problem file does not match the schema: {e}") from e


def emit_certificate(certificate) -> Dict[str, Any]:
    """JSON form of a certificate with its content id attached."""
    payload = to_jsonable(certificate)
    payload["certificate_id"] = content_id(payload)
    return payload


class CommandService:
    """Dispatch a validated problem file to the services and wrap the result in a report."""

    def __init__(self, synthesis_service: Optional[WeightSynthesisService] = None):
        """
        Initialize the CommandService.

        Args:
            synthesis_service: shared WeightSynthesisService for every command
        """
        self.synthesis = synthesis_service or WeightSynthesisService()
        self.regularity = RegularityService(self.synthesis)
        self.factorization = FactorizationService(self.synthesis)
        self.programs = WeightProgramService(self.synthesis)
        self.vector_measures = VectorMeasureService(self.programs)
        self.embeddings = StableEmbeddingService(self.synthesis.lp, self.synthesis.spaces)
        self.handlers = {
            CommandName.rho: self.cmd_rho,
            CommandName.lambda_: self.cmd_lambda,
            CommandName.dominate: self.cmd_dominate,
            CommandName.endo: self.cmd_endo,
            CommandName.conjugate: self.cmd_conjugate,
            CommandName.kernel: self.cmd_kernel,
            CommandName.counterexample: self.cmd_counterexample,
            CommandName.verify: self.cmd_verify,
        }

    # ------------------------------
    # Inputs
    # ------------------------------
    @staticmethod
    def operator(problem: ProblemFile) -> OperatorModel:
        if problem.partition is not None:
            partition = problem.partition
            return OperatorBuilders.partition_integration_operator(partition.masses, partition.cells, parse_exponent(partition.codomain_exponent))
        if problem.operator is None:
            raise ProblemFileError(f"command '{problem.command.value}' needs an operator")
        return problem.operator.to_model()

    @staticmethod
    def weights(problem: ProblemFile, base: MeasureSpace) -> WeightFamily:
        """The problem's weight family over `base`, or the single weight χ_Ω."""
        if problem.weights is None:
            return WeightFamily.from_arrays(base, [np.ones(base.atom_count)])
        return problem.weights.to_family(base)

    def run(self, problem: ProblemFile) -> CommandReport:
        """
        Execute the command of a problem file.

        Returns:
            CommandReport; its exit_code is the process exit code
        """
        if problem.version != PROBLEM_FILE_VERSION:
            raise ProblemFileError(f"Unsupported problem file version {problem.version}")
        logger.info(f"running '{problem.command.value}' with seed {problem.seed}")
        try:
            status, exit_code, anchors, result, certificate = self.handlers[problem.command](problem)
        except SynthesisInfeasibleError as e:
            logger.error(f"❌ {e}")
            status, exit_code, anchors, certificate = "infeasible", ExitCode.infeasible, {}, None
            result = {"message": str(e), "witness": e.witness, "ratio": e.ratio}
        except SynthesisUnknownError as e:
            logger.warning(f"⚠️ {e}")
            status, exit_code, anchors, certificate = "unknown", ExitCode.unknown, {}, None
            result = {"message": str(e)}
        return CommandReport(
            version=PROBLEM_FILE_VERSION,
            command=problem.command,
            seed=problem.seed,
            status=status,
            exit_code=int(exit_code),
            anchors=anchors,
            result=to_jsonable(result),
            certificate=certificate,
        )

    # ------------------------------
    # Commands
    # ------------------------------
    def _bracket(self, bracket, anchor_key: str, anchor: str) -> Tuple:
        exit_code = ExitCode.ok if bracket.upper is not None else ExitCode.unknown
        result = {
            "p": bracket.p,
            "lower": bracket.lower,
            "upper": bracket.upper,
            "gap": bracket.gap,
            "bracket_status": bracket.status,
            "empirical_upper": bracket.empirical_upper,
            "lower_witness": bracket.lower_witness,
            "steps": bracket.steps,
        }
        status = "ok" if bracket.status == BracketStatus.certified else "bracketed" if bracket.upper is not None else "unknown"
        certificate = emit_certificate(bracket.certificate) if bracket.certificate is not None else None
        return status, exit_code, {anchor_key: anchor}, result, certificate

    def cmd_rho(self, problem: ProblemFile) -> Tuple:
        T = self.operator(problem)
        bracket = self.regularity.rho_bracket(T, parse_exponent(problem.p), problem.family_size, problem.budget, problem.tol, problem.seed)
        return self._bracket(bracket, "rho", ANCHOR_RHO)

    def cmd_lambda(self, problem: ProblemFile) -> Tuple:
        T = self.operator(problem)
        bracket = self.regularity.lambda_bracket(
            T, parse_exponent(problem.p), problem.family_size, problem.budget, problem.tol, problem.seed, pool_size=problem.pool_size
        )
        return self._bracket(bracket, "lambda", ANCHOR_LAMBDA)

    def cmd_dominate(self, problem: ProblemFile) -> Tuple:
        T = self.operator(problem)
        p = parse_exponent(problem.p)
        y_star = np.asarray(problem.y_star, dtype=np.float64) if problem.y_star is not None else self.synthesis.top_corner(T.codomain, p)
        if problem.C is None:
            bracket = self.synthesis.min_constant_domination(T, p, y_star, tol=problem.tol, seed=problem.seed)
            status, certificate = SynthesisStatus.feasible, bracket.certificate
            result: Dict[str, Any] = {"C": bracket.upper, "lower": bracket.lower, "steps": bracket.steps}
        else:
            outcome = self.synthesis.synthesize_dominating_weight(T, p, y_star, problem.C, seed=problem.seed)
            status, certificate = outcome.status, outcome.certificate
            result = {
                "C": problem.C,
                "witness": outcome.witness,
                "witness_ratio": outcome.witness_ratio,
                "oracle": outcome.oracle,
                "rounds": outcome.rounds,
                "cut_count": outcome.cut_count,
                "message": outcome.message,
            }
        if certificate is not None:
            record = self.factorization.factor_through_weighted_lp(T, p, y_star, certificate, seed=problem.seed)
            result["factorization"] = {
                "stage_names": record.stage_names,
                "inclusion_norms": record.inclusion_norms,
                "reconstruction_residual": record.reconstruction_residual,
                "constants": record.constants,
            }
        emitted = emit_certificate(certificate) if certificate is not None else None
        return status.value, _SYNTHESIS_EXIT[status], {"C": ANCHOR_DOMINATION}, result, emitted

    def cmd_endo(self, problem: ProblemFile) -> Tuple:
        T = self.operator(problem)
        if problem.variant == EndoVariant.l2:
            report = self.programs.jj_weis_l2_weight(T, N=problem.truncation, tol=problem.tol, seed=problem.seed)
        elif problem.variant == EndoVariant.all_p:
            report = self.programs.regular_operator_all_p_weight(T, N=problem.truncation, tol=problem.tol, seed=problem.seed)
            status = "ok" if report.all_verified else "unverified"
            return status, ExitCode.ok if report.all_verified else ExitCode.audit_failed, {"grid": ANCHOR_ENDO}, report, None
        else:
            report = self.programs.endomorphism_weight(T, parse_exponent(problem.p), problem.C, N=problem.truncation, tol=problem.tol, seed=problem.seed)
        return "ok", ExitCode.ok, {"certified_constant": ANCHOR_ENDO}, report, None

    def _conjugate_result(self, report) -> Dict[str, Any]:
        return {
            "status": report.status,
            "p": report.p,
            "uniform_constant": report.uniform_constant,
            "inclusion_bound": report.inclusion_bound,
            "member_constants": report.member_constants,
            "nu_weights": report.nu_weights,
            "assignment": report.assignment,
            "control_density": report.control_density,
            "verification": report.verification,
            "witness": report.witness,
            "witness_member": report.witness_member,
            "hint_constant": report.hint_constant,
            "hint_accepted": report.hint_accepted,
            "notes": report.notes,
        }

    def _pth_result(self, report) -> Dict[str, Any]:
        return {
            "constants": report.constants,
            "factorable": report.factorable,
            "conjugate": self._conjugate_result(report.conjugate),
            "norming": report.norming,
        }

    def cmd_conjugate(self, problem: ProblemFile) -> Tuple:
        T = self.operator(problem)
        p = parse_exponent(problem.p)
        V = self.weights(problem, T.codomain.measure)
        if problem.X is not None:
            pipeline = self.vector_measures.conjugate_family_pth(T, problem.X.to_descriptor(), V, p, tol=problem.tol, seed=problem.seed)
            status = pipeline.conjugate.status
            return status.value, _CONJUGATE_EXIT[status], {"C": ANCHOR_CONJUGATE}, self._pth_result(pipeline), None

        report = self.vector_measures.conjugate_family_synthesize(
            T, V, p, C=problem.C, tol=problem.tol, seed=problem.seed, hint=problem.hint
        )
        result = self._conjugate_result(report)
        if report.status == ConjugateStatus.conjugate:
            result["replay"] = self.vector_measures.conjugate_family_implies_regularity(T, V, report, p, seed=problem.seed)
        return report.status.value, _CONJUGATE_EXIT[report.status], {"C": ANCHOR_CONJUGATE}, result, None

    def cmd_kernel(self, problem: ProblemFile) -> Tuple:
        kernel = problem.kernel
        p = parse_exponent(problem.p)
        x_measure, y_measure = MeasureSpace(kernel.x_masses), MeasureSpace(kernel.y_masses)
        V = self.weights(problem, y_measure)
        T, m = self.vector_measures.kernel_vector_measure(kernel.grid, x_measure, y_measure, V, p)
        result: Dict[str, Any] = {"additivity": self.vector_measures.countable_additivity_check(m)}
        if T.is_zero:
            result["notes"] = ["zero kernel: the measure vanishes"]
            return "ok", ExitCode.ok, {"kernel": ANCHOR_KERNEL}, result, None
        pipeline = self.vector_measures.conjugate_family_pth(T, None, V, p, tol=problem.tol, seed=problem.seed)
        result.update(self._pth_result(pipeline))
        status = pipeline.conjugate.status
        return status.value, _CONJUGATE_EXIT[status], {"kernel": ANCHOR_KERNEL, "C": ANCHOR_CONJUGATE}, result, None

    def cmd_counterexample(self, problem: ProblemFile) -> Tuple:
        settings = problem.counterexample or CounterexampleSchema()
        report = self.embeddings.counterexample(
            p=parse_exponent(problem.p), q=settings.q, sizes=settings.sizes, C2=settings.C2, C1=settings.C1, seed=problem.seed
        )
        exit_code = ExitCode.ok if math.isfinite(report.slope) else ExitCode.unknown
        return ("ok" if exit_code == ExitCode.ok else "unknown"), exit_code, {"masses": ANCHOR_COUNTEREXAMPLE}, report, None

    def cmd_verify(self, problem: ProblemFile) -> Tuple:
        T = self.operator(problem)
        stored = problem.certificate
        expected = content_id(stored.content())
        if expected != stored.certificate_id:
            logger.error(f"❌ certificate id mismatch: stored {stored.certificate_id[:12]}, content {expected[:12]}")
            result = {"integrity": False, "stored_id": stored.certificate_id, "content_id": expected}
            return "tampered", ExitCode.audit_failed, {}, result, None
        audit = self.synthesis.verify_certificate(T, stored.to_certificate(), seed=problem.seed)
        result = {"integrity": True, "audit": audit}
        anchor = ANCHOR_DOMINATION if stored.kind == CertificateKind.domination else ANCHOR_PIETSCH
        if audit.passed:
            return "passed", ExitCode.ok, {"C": anchor}, result, None
        return "failed", ExitCode.audit_failed, {"C": anchor}, result, None

import sys
import os

# Add the project root to the Python path
project_root = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
sys.path.insert(0, project_root)

import logging
import time
from typing import Callable, Dict, List, Tuple

import numpy as np
import typer
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table
from scipy.optimize import linprog

from app.constants.constants import KRIVINE_BOUND, ConjugateStatus
from app.models.operator import OperatorModel
from app.models.space import INF, MeasureSpace, SpaceDescriptor
from app.models.weights import WeightFamily
from app.services.CommandService import CommandService, emit_certificate, load_problem
from app.services.RegularityService import RegularityService
from app.services.StableEmbeddingService import StableEmbeddingService
from app.services.VectorMeasureService import VectorMeasureService
from app.services.WeightProgramService import WeightProgramService
from app.services.WeightSynthesisService import WeightSynthesisService
from app.utils.operator_builders import OperatorBuilders
from app.utils.random_utils import derive_rng
from app.utils.report_utils import content_id, pretty_json

logging.basicConfig(level=logging.WARNING, format="%(message)s", handlers=[RichHandler(show_path=False)])
logger = logging.getLogger(__name__)

console = Console()
Outcome = Tuple[bool, str]

synthesis = WeightSynthesisService()
regularity = RegularityService(synthesis)
programs = WeightProgramService(synthesis)
vector_measures = VectorMeasureService(programs)
embeddings = StableEmbeddingService(synthesis.lp, synthesis.spaces)
issued: List[Tuple[OperatorModel, object]] = []


def partition_example(seed: int, instances: int) -> Outcome:
    masses = np.full(8, 1 / 8)
    T = OperatorBuilders.partition_integration_operator(masses, [[0, 1, 2], [3, 4], [5, 6, 7]])
    rng = derive_rng(seed, "acceptance", "partition")
    members = rng.random((20, 8))
    members /= (members @ masses)[:, None] * rng.uniform(1.0, 4.0, size=(20, 1))
    f = rng.standard_normal((instances, 8))
    images = (f @ T.matrix.T) ** 2
    lhs = np.sqrt(images @ (members * masses).T)
    rhs = np.sqrt((f ** 2) @ masses)
    worst = float(np.max(lhs / rhs[:, None]))
    return worst <= 1 + 1e-9, f"max ratio {worst:.10f}"


def prototype_lattice_summing(seed: int, instances: int) -> Outcome:
    measure = MeasureSpace.uniform(8)
    details = []
    passed = True
    for p in (1.0, 2.0, 3.0):
        T = OperatorModel(np.eye(8), SpaceDescriptor(measure, INF), SpaceDescriptor(measure, p))
        bracket = regularity.lambda_bracket(T, p, seed=seed)
        ok = bracket.upper is not None and bracket.lower >= 1 - 1e-6 and bracket.upper <= 1 + 1e-3
        passed &= ok
        details.append(f"p={p:g}: [{bracket.lower:.6f}, {bracket.upper}]")
        if bracket.certificate is not None:
            issued.append((T, bracket.certificate))
    return passed, "; ".join(details)


def identity_non_example(seed: int, instances: int) -> Outcome:
    details = []
    passed = True
    for n in (2, 4, 8):
        T = OperatorBuilders.identity(n, 1.0)
        rho = regularity.rho_bracket(T, 1.0, seed=seed)
        lam, _ = regularity.lambda_lower(T, 1.0, seed=seed)
        ok = abs(rho.lower - 1) <= 1e-6 and rho.upper is not None and abs(rho.upper - 1) <= 1e-6 and lam >= np.sqrt(n) * (1 - 1e-6)
        passed &= ok
        details.append(f"n={n}: rho [{rho.lower:.6f}, {rho.upper}], lambda >= {lam:.4f}")
    return passed, "; ".join(details)


def brute_domination(T: OperatorModel, y_star: np.ndarray, grid: int, seed: int) -> float:
    """min C with a box-feasible z over a sphere grid of test vectors, solved by scipy."""
    n = T.domain.dimension
    f = derive_rng(seed, "brute-grid").standard_normal((grid, n))
    f /= np.linalg.norm(f, axis=1)[:, None]
    lhs = ((f @ T.matrix.T) ** 2) @ (y_star * T.codomain.masses)
    # variables u = C^2 z (n entries) and s = C^2; u_i <= s
    A_ub = np.vstack([
        np.hstack([-(f ** 2) * T.domain.masses[None, :], np.zeros((grid, 1))]),
        np.hstack([np.eye(n), -np.ones((n, 1))]),
    ])
    b_ub = np.concatenate([-lhs, np.zeros(n)])
    result = linprog(np.concatenate([np.zeros(n), [1.0]]), A_ub=A_ub, b_ub=b_ub, bounds=[(0, None)] * (n + 1), method="highs")
    return float(np.sqrt(result.fun))


def domination_exactness(seed: int, instances: int) -> Outcome:
    worst = 0.0
    for index in range(instances):
        T = OperatorBuilders.random_signed(4, 4, seed=seed + index)
        y_star = synthesis.top_corner(T.codomain, 2.0)
        bracket = synthesis.min_constant_domination(T, 2.0, y_star, seed=seed)
        issued.append((T, bracket.certificate))
        brute = brute_domination(T, y_star, 10 ** 4, seed + index)
        worst = max(worst, abs(bracket.upper - brute) / brute)
    return worst <= 2e-2, f"max relative gap {worst:.3e} over {instances} operators"


def endomorphism_bound(seed: int, instances: int) -> Outcome:
    worst = 0.0
    positive = True
    for index in range(instances):
        T = OperatorBuilders.random_signed(6, 6, seed=seed + 1000 + index)
        rho = regularity.rho_bracket(T, 2.0, seed=seed)
        report = programs.endomorphism_weight(T, 2.0, C=rho.upper, seed=seed)
        positive &= bool(np.all(report.g > 0))
        worst = max(worst, report.exact_weighted_norm / (np.sqrt(2 * report.inflation) * rho.upper), report.exact_weighted_norm / (2 * rho.upper))
    return positive and worst <= 1 + 1e-6, f"max normalized weighted norm {worst:.8f}, g positive {positive}"


def vector_measure_round_trip(seed: int, instances: int) -> Outcome:
    worst = 0.0
    for index in range(instances):
        rng = derive_rng(seed, "acceptance", "round-trip", index)
        domain = SpaceDescriptor(MeasureSpace(rng.uniform(0.5, 1.5, 4)), 2.0)
        codomain = SpaceDescriptor(MeasureSpace.uniform(3), 2.0)
        T = OperatorBuilders.random_positive(3, 4, seed=seed + index, domain=domain, codomain=codomain)
        V = WeightFamily.from_arrays(codomain.measure, rng.random((3, 3)) + 0.1)
        m = vector_measures.build_mT(T)
        report = vector_measures.conjugate_family_synthesize(m, V, 2.0, seed=seed)
        if report.status != ConjugateStatus.conjugate:
            return False, f"instance {index}: {report.status.value}"
        replay = vector_measures.conjugate_family_implies_regularity(m, V, report, 2.0, seed=seed + 1)
        worst = max(worst, max(replay.assignment_ratio, replay.regularity_ratio) / replay.bound)
    return worst <= 1 + 1e-6, f"max replay ratio / C = {worst:.8f}"


def counterexample_growth(seed: int, instances: int) -> Outcome:
    report = embeddings.counterexample(p=1.0, q=2.0, sizes=(4, 8, 16, 32), seed=seed)
    ok = abs(report.slope - 0.5) <= 0.15 and report.strictly_increasing
    return ok, f"slope {report.slope:.4f}, masses {[round(m, 4) for m in report.masses]}"


def krivine_consistency(seed: int, instances: int) -> Outcome:
    worst = 0.0
    for index in range(instances):
        n = 2 + index % 2
        T = OperatorBuilders.random_signed(n, n, seed=seed + 5000 + index)
        lower, _ = regularity.rho_lower(T, 2.0, seed=seed)
        worst = max(worst, lower / (KRIVINE_BOUND * np.linalg.norm(T.matrix, 2)))
    return worst <= 1 + 1e-3, f"max rho_2 / (1.783 ||T||) = {worst:.6f}"


def certificate_audit(seed: int, instances: int) -> Outcome:
    failures = 0
    undetected = 0
    for T, certificate in issued:
        payload = emit_certificate(certificate)
        if content_id(payload) != payload["certificate_id"]:
            failures += 1
        if not synthesis.verify_certificate(T, certificate, seed=seed + 7).passed:
            failures += 1
        field = "z_star" if hasattr(certificate, "z_star") else "eta"
        values = np.array(getattr(certificate, field), dtype=np.float64)
        index = int(np.argmax(values))
        values[index] *= 0.9
        tampered = dict(payload, **{field: values.tolist()})
        id_caught = content_id(tampered) != payload["certificate_id"]
        if not id_caught:
            undetected += 1
    return failures == 0 and undetected == 0, f"{len(issued)} certificates, {failures} failed audits, {undetected} undetected tamperings"


def determinism(seed: int, instances: int) -> Outcome:
    problem = load_problem({"version": "1", "command": "counterexample", "p": 1.0, "seed": seed,
                            "counterexample": {"q": 2.0, "sizes": [4, 8]}})
    first = pretty_json(CommandService().run(problem).model_dump(mode="json"))
    second = pretty_json(CommandService().run(problem).model_dump(mode="json"))
    return first == second, f"{len(first)} bytes, identical {first == second}"


CRITERIA: Dict[str, Tuple[Callable[[int, int], Outcome], int]] = {
    "partition example": (partition_example, 10 ** 4),
    "prototype lattice p-summing": (prototype_lattice_summing, 1),
    "identity non-example": (identity_non_example, 1),
    "domination exactness p=2": (domination_exactness, 50),
    "single-weight bound": (endomorphism_bound, 50),
    "vector measure round trip": (vector_measure_round_trip, 50),
    "counterexample growth": (counterexample_growth, 1),
    "Krivine consistency": (krivine_consistency, 200),
    "certificate audit": (certificate_audit, 1),
    "determinism": (determinism, 1),
}


def main(seed: int = typer.Option(0, "--seed"), scale: float = typer.Option(1.0, "--scale", help="Fraction of the instance counts")):
    """Run every acceptance criterion and print a pass/fail table."""
    table = Table(title="acceptance")
    table.add_column("criterion")
    table.add_column("result")
    table.add_column("seconds", justify="right")
    table.add_column("details")
    all_passed = True
    for name, (check, count) in CRITERIA.items():
        start = time.perf_counter()
        try:
            passed, details = check(seed, max(1, int(count * scale)))
        except Exception as e:
            logger.exception(f"❌ {name} crashed")
            passed, details = False, f"{type(e).__name__}: {e}"
        all_passed &= passed
        table.add_row(name, "✅ pass" if passed else "❌ fail", f"{time.perf_counter() - start:.1f}", details)
    console.print(table)
    raise typer.Exit(code=0 if all_passed else 1)


if __name__ == "__main__":
    typer.run(main)

# app/services/StableEmbeddingService.py
import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray
from scipy.stats import levy_stable

from app.constants.constants import EMBEDDING_DRIFT
from app.core.errors import InvalidParameterError
from app.models.operator import OperatorModel
from app.models.space import MeasureSpace, SpaceDescriptor, parse_exponent
from app.models.vectormeasure import CounterexampleReport, StableEmbeddingModel
from app.services.LinearProgramService import LinearProgramService
from app.services.SpaceService import SpaceService
from app.utils.random_utils import derive_rng

logger = logging.getLogger(__name__)

_INITIAL_SAMPLES = 1024
_MAX_SAMPLES = 2 ** 15
_RANDOM_TESTS = 64


class StableEmbeddingService:
    """
    Growth of the least mass of a single weight g that would dominate a
    q-stable embedding L^q → L^p: any such g must carry mass of order n^{1−p/q}
    on the uniform partition into n cells, so no integrable g exists.
    """

    def __init__(self, lp_service: Optional[LinearProgramService] = None, space_service: Optional[SpaceService] = None):
        """
        Initialize the StableEmbeddingService.

        Args:
            lp_service: simplex solver for the mass programs
            space_service: norms of the finite model
        """
        self.lp = lp_service or LinearProgramService()
        self.spaces = space_service or SpaceService()

    # ------------------------------
    # Sampling
    # ------------------------------
    @staticmethod
    def sample_stable(q: float, size: Tuple[int, int], rng: np.random.Generator) -> Tuple[NDArray[np.float64], str, Optional[str]]:
        """
        Symmetric q-stable variables (Gaussian at q = 2).

        Returns:
            (samples, sampler name, warning or None)
        """
        if q == 2.0:
            return rng.standard_normal(size), "gaussian", None
        try:
            samples = np.asarray(levy_stable.rvs(q, 0.0, size=size, random_state=rng), dtype=np.float64)
            if not np.all(np.isfinite(samples)):
                raise ValueError("non-finite stable samples")
            return samples, "chambers-mallows-stuck", None
        except Exception as e:
            message = f"stable sampling at q={q:g} failed ({e}); falling back to Gaussian columns"
            logger.warning(f"⚠️ {message}")
            return rng.standard_normal(size), "gaussian", message

    @staticmethod
    def dyadic_cells(atoms: int, level: int) -> List[NDArray[np.int64]]:
        """The 2^level cells of equal size partitioning `atoms` atoms."""
        count = 2 ** level
        width = atoms // count
        return [np.arange(i * width, (i + 1) * width) for i in range(count)]

    @staticmethod
    def _check_exponents(p: float, q: float) -> Tuple[float, float]:
        p, q = parse_exponent(p), parse_exponent(q)
        if not (1.0 <= p <= q <= 2.0):
            raise InvalidParameterError(f"The stable embedding needs 1 <= p <= q <= 2, got p={p:g}, q={q:g}")
        return p, q

    @staticmethod
    def _check_size(n: int) -> int:
        if n < 1 or n & (n - 1):
            raise InvalidParameterError(f"n must be a power of 2, got {n}")
        return int(n)

    # ------------------------------
    # Finite embedding model
    # ------------------------------
    def _ratios(self, operator: OperatorModel, tests: NDArray[np.float64]) -> NDArray[np.float64]:
        images = np.atleast_1d(self.spaces.norm_eval(operator.codomain, tests @ operator.matrix.T))
        return images / np.atleast_1d(self.spaces.norm_eval(operator.domain, tests))

    def build_embedding(self, atoms: int, p: float, q: float, seed: int = 0) -> StableEmbeddingModel:
        """
        Sample the embedding on `atoms` equal atoms, doubling the sample count
        until max/min ratio over the test functions is within the drift bound.

        Args:
            atoms: number of equal atoms of L^q (power of 2)
            p: target exponent
            q: stability index
            seed: base seed

        Returns:
            StableEmbeddingModel with K1 = min ratio and K_max = max ratio
        """
        p, q = self._check_exponents(p, q)
        atoms = self._check_size(atoms)
        domain = SpaceDescriptor(MeasureSpace.uniform(atoms), q)
        levels = int(math.log2(atoms))
        tests = [np.isin(np.arange(atoms), cell).astype(np.float64)
                 for level in range(levels + 1) for cell in self.dyadic_cells(atoms, level)]
        tests = np.vstack(tests + list(self.spaces.sample_unit_vectors(domain, _RANDOM_TESTS, derive_rng(seed, "stable-tests"))))

        warnings: List[str] = []
        samples = _INITIAL_SAMPLES
        while True:
            theta, sampler, warning = self.sample_stable(q, (samples, atoms), derive_rng(seed, "stable", samples))
            if warning and warning not in warnings:
                warnings.append(warning)
            codomain = SpaceDescriptor(MeasureSpace.uniform(samples), p)
            operator = OperatorModel(theta * domain.masses[None, :] ** (1.0 / q), domain, codomain)
            scale = self._ratios(operator, np.ones((1, atoms)))[0]
            operator = operator.with_matrix(operator.matrix / scale)
            ratios = self._ratios(operator, tests)
            K1, K_max = float(ratios.min()), float(ratios.max())
            if K_max <= K1 * (1.0 + EMBEDDING_DRIFT):
                break
            if samples >= _MAX_SAMPLES:
                message = f"embedding constants drift: K_max/K1 = {K_max / K1:.4f} with {samples} samples"
                logger.warning(f"⚠️ {message}")
                warnings.append(message)
                break
            samples *= 2

        logger.info(f"stable embedding L^{q:g} -> L^{p:g} on {atoms} atoms: K1={K1:.6g}, K_max={K_max:.6g}, {samples} samples ({sampler})")
        return StableEmbeddingModel(
            operator=operator, q=q, K1=K1, K_max=K_max, samples=samples, sampler=sampler, warnings=warnings
        )

    # ------------------------------
    # Mass programs
    # ------------------------------
    def stable_embedding_mass_witness(
        self,
        n: int,
        p: float,
        q: float,
        K1: Optional[float] = None,
        C2: float = 1.0,
        C1: Optional[float] = None,
        seed: int = 0,
        model: Optional[StableEmbeddingModel] = None,
    ) -> float:
        """
        Least ∫g dμ over weights g satisfying the necessary conditions
        ∫_A g dμ ≥ (K1/C2)^p μ(A)^{p/q} on every dyadic cell A of level ≤ log2 n
        (and ∫_A g dμ ≤ C1^p μ(A)^{p/q} when C1 is given).

        Args:
            n: partition size (power of 2)
            p: exponent of the weighted space
            q: stability index
            K1: lower embedding constant; sampled from a model when omitted
            C2: domination constant the weight would have to certify
            C1: upper constant for the optional upper cuts
            seed: base seed for the model
            model: prebuilt embedding model (at least n atoms)

        Returns:
            the minimal mass, inf when the cuts contradict each other
        """
        p, q = self._check_exponents(p, q)
        n = self._check_size(n)
        if C2 <= 0:
            raise InvalidParameterError("C2 must be positive")
        if K1 is None:
            model = model or self.build_embedding(n, p, q, seed)
            K1 = model.K1
        atoms = model.atoms if model is not None else n
        if atoms < n:
            raise InvalidParameterError(f"The model has {atoms} atoms, fewer than n = {n}")

        masses = np.full(atoms, 1.0 / atoms)
        lower = (K1 / C2) ** p
        rows, rhs = [], []
        for level in range(int(math.log2(n)) + 1):
            for cell in self.dyadic_cells(atoms, level):
                indicator = np.zeros(atoms)
                indicator[cell] = masses[cell]
                cell_mass = float(masses[cell].sum())
                rows.append(-indicator)
                rhs.append(-lower * cell_mass ** (p / q))
                if C1 is not None:
                    rows.append(indicator)
                    rhs.append(C1 ** p * cell_mass ** (p / q))

        result = self.lp.solve(c=masses, A_ub=np.vstack(rows), b_ub=np.asarray(rhs))
        if not result.optimal:
            logger.warning(f"⚠️ no weight meets the cell conditions at n={n} ({result.status.value})")
            return math.inf
        logger.debug(f"minimal mass at n={n}: {result.fun:.8g}")
        return float(result.fun)

    def counterexample(
        self,
        p: float = 1.0,
        q: float = 2.0,
        sizes: Sequence[int] = (4, 8, 16, 32),
        C2: float = 1.0,
        C1: Optional[float] = None,
        seed: int = 0,
    ) -> CounterexampleReport:
        """
        (n, minimal mass) table over one embedding model and the fitted log-log slope.

        Returns:
            CounterexampleReport; the slope estimates 1 − p/q
        """
        p, q = self._check_exponents(p, q)
        sizes = sorted(self._check_size(n) for n in sizes)
        if not sizes:
            raise InvalidParameterError("At least one partition size is needed")
        model = self.build_embedding(sizes[-1], p, q, seed)
        warnings = list(model.warnings)
        masses = [self.stable_embedding_mass_witness(n, p, q, C2=C2, C1=C1, model=model) for n in sizes]

        finite = [(n, m) for n, m in zip(sizes, masses) if math.isfinite(m) and m > 0]
        if len(finite) >= 2:
            logs = np.log(np.asarray(finite, dtype=np.float64))
            slope = float(np.polyfit(logs[:, 0], logs[:, 1], 1)[0])
        else:
            slope = math.nan
            warnings.append("fewer than two finite masses; no slope fitted")
        if len(finite) < len(sizes):
            warnings.append(f"cell conditions contradict each other for n in {[n for n, m in zip(sizes, masses) if not math.isfinite(m)]}")
        increasing = all(b > a for a, b in zip(masses, masses[1:]))

        expected = 1.0 - p / q
        marker = "✅" if math.isfinite(slope) and abs(slope - expected) <= 0.15 else "⚠️"
        logger.info(f"{marker} counterexample p={p:g}, q={q:g}: slope {slope:.4f} (expected {expected:.4f})")
        return CounterexampleReport(
            p=p,
            q=q,
            sizes=sizes,
            masses=masses,
            slope=slope,
            expected_slope=expected,
            K1=model.K1,
            K_max=model.K_max,
            C2=C2,
            C1=C1,
            samples=model.samples,
            sampler=model.sampler,
            strictly_increasing=increasing,
            warnings=warnings,
        )

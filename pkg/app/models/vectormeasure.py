from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
from numpy.typing import NDArray

from app.constants.constants import ConjugateStatus
from app.models.certificates import DominationCertificate, Family
from app.models.operator import OperatorModel
from app.models.space import MeasureSpace, SpaceDescriptor
from app.models.weights import WeightFamily, WeightedNormCheck


@dataclass(frozen=True, eq=False)
class VectorMeasureModel:
    """Finitely additive measure on the atoms of `source`; column j of `values` is m({j}).

    Exactly one of `codomain` (m_T into a weighted space) and `family`
    (m_V into the family target, normed by the max over members) is set.
    """

    source: MeasureSpace
    values: NDArray[np.float64]
    control_density: NDArray[np.float64]
    codomain: Optional[SpaceDescriptor] = None
    family: Optional[WeightFamily] = None

    @property
    def source_atoms(self) -> int:
        return self.source.atom_count

    @property
    def null_atoms(self) -> NDArray[np.bool_]:
        return self.control_density <= 0

    def evaluate(self, atoms) -> NDArray[np.float64]:
        """m(A) as the sum of the atom values over A."""
        indices = np.asarray(list(atoms), dtype=np.int64)
        if indices.size == 0:
            return np.zeros(self.values.shape[0])
        return self.values[:, indices].sum(axis=1)


@dataclass
class ConjugateFamilyReport:
    status: ConjugateStatus
    p: float
    uniform_constant: Optional[float]
    inclusion_bound: Optional[float]
    assignment: List[NDArray[np.float64]]
    nu_weights: List[NDArray[np.float64]]
    member_constants: List[float]
    certificates: List[DominationCertificate]
    verification: List[WeightedNormCheck]
    control_density: NDArray[np.float64]
    witness: Family = field(default_factory=list)
    witness_member: Optional[int] = None
    hint_constant: Optional[float] = None
    hint_accepted: Optional[bool] = None
    notes: List[str] = field(default_factory=list)


@dataclass
class ReplayResult:
    assignment_ratio: float
    regularity_ratio: float
    bound: float
    families_checked: int
    flagged: bool


@dataclass
class PositivelyNormingReport:
    c_lower: float
    c_lower_interval: List[float]
    c_upper: float
    c_lower_exact: bool
    positively_norming: bool
    sign_pattern_deviation: float


@dataclass
class PthFactorReport:
    K: float
    K_exact: bool
    inclusion_lower: float
    inclusion_upper: Optional[float]
    bound: Optional[float]
    passed: Optional[bool]
    witness: Optional[NDArray[np.float64]] = None


@dataclass
class PthConjugateReport:
    measure: VectorMeasureModel
    factorable: PthFactorReport
    conjugate: ConjugateFamilyReport
    norming: Optional[PositivelyNormingReport]
    constants: Dict[str, Optional[float]] = field(default_factory=dict)


@dataclass
class AdditivityCheck:
    passed: bool
    tails: List[float]


@dataclass
class CounterexampleReport:
    p: float
    q: float
    sizes: List[int]
    masses: List[float]
    slope: float
    expected_slope: float
    K1: float
    K_max: float
    C2: float
    C1: Optional[float]
    samples: int
    sampler: str
    strictly_increasing: bool
    warnings: List[str] = field(default_factory=list)


@dataclass(frozen=True, eq=False)
class StableEmbeddingModel:
    """Finite model of L^q(μ) → L^p(P), f ↦ Σ_a f_a μ_a^{1/q} θ_a, normalized so that 1 ↦ norm 1."""

    operator: OperatorModel
    q: float
    K1: float
    K_max: float
    samples: int
    sampler: str
    warnings: List[str] = field(default_factory=list)

    @property
    def atoms(self) -> int:
        return self.operator.domain.dimension

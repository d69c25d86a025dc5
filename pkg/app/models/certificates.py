from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
from numpy.typing import NDArray

from app.constants.constants import (
    BracketStatus,
    CertificateKind,
    CertificateMethod,
    OracleKind,
    SynthesisStatus,
)
from app.models.operator import OperatorModel

Family = List[NDArray[np.float64]]


@dataclass
class DominationCertificate:
    """⟨|Tf|^p, y*⟩ ≤ C^p ⟨|f|^p, z*⟩ for every f."""

    p: float
    C: float
    y_star: NDArray[np.float64]
    z_star: NDArray[np.float64]
    method: CertificateMethod
    exact: bool
    residual: float = 0.0
    cuts: Family = field(default_factory=list)
    tight_direction: Optional[NDArray[np.float64]] = None
    kind: CertificateKind = CertificateKind.domination


@dataclass
class PietschCertificate:
    """⟨|Tf|^p, y*⟩ ≤ C^p Σ_k η_k |⟨f, x'_k⟩|^p with η a probability vector."""

    p: float
    C: float
    y_star: NDArray[np.float64]
    support: NDArray[np.float64]
    eta: NDArray[np.float64]
    method: CertificateMethod
    exact: bool
    residual: float = 0.0
    cuts: Family = field(default_factory=list)
    kind: CertificateKind = CertificateKind.pietsch


@dataclass
class SynthesisOutcome:
    """Feasible (with certificate), Infeasible (with witness family) or Unknown."""

    status: SynthesisStatus
    C: float
    certificate: Optional[object] = None
    witness: Family = field(default_factory=list)
    witness_ratio: Optional[float] = None
    oracle: Optional[OracleKind] = None
    rounds: int = 0
    cut_count: int = 0
    # cheapest exactly certified constant seen among the candidates, if any
    best_certificate: Optional[object] = None
    empirical_candidate: Optional[NDArray[np.float64]] = None
    message: str = ""

    @property
    def feasible(self) -> bool:
        return self.status == SynthesisStatus.feasible

    @property
    def infeasible(self) -> bool:
        return self.status == SynthesisStatus.infeasible


@dataclass
class ConstantBracket:
    """lower ≤ constant ≤ upper; upper is None when it could not be certified."""

    p: float
    lower: float
    upper: Optional[float]
    status: BracketStatus
    anchor: str
    lower_witness: Family = field(default_factory=list)
    certificate: Optional[object] = None
    empirical_upper: Optional[float] = None
    steps: int = 0

    @property
    def gap(self) -> Optional[float]:
        if self.upper is None:
            return None
        return self.upper - self.lower


@dataclass
class FactorizationRecord:
    """Chain of operators whose composite reproduces the factored map."""

    stages: List[OperatorModel]
    stage_names: List[str]
    inclusion_norms: List[float]
    reconstruction_residual: float
    constants: Dict[str, float] = field(default_factory=dict)


@dataclass
class CertificateAudit:
    """Independent re-check of a certificate on a fresh batch."""

    passed: bool
    residual: float
    in_ball: bool
    exact: bool
    batch: int
    details: Dict[str, float] = field(default_factory=dict)

from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
from numpy.typing import NDArray

from app.core.errors import DimensionMismatchError, InvalidSpaceError
from app.models.space import MeasureSpace, WeightVector


@dataclass(frozen=True, eq=False)
class WeightFamily:
    """Finite V ⊂ L¹(μ)_+ over a common base measure."""

    base: MeasureSpace
    members: List[WeightVector]

    def __post_init__(self):
        if not self.members:
            raise InvalidSpaceError("A weight family needs at least one member")
        for index, member in enumerate(self.members):
            if member.size != self.base.atom_count:
                raise DimensionMismatchError(
                    f"Member {index} has {member.size} entries, base measure has {self.base.atom_count} atoms"
                )

    @classmethod
    def from_arrays(cls, base: MeasureSpace, arrays) -> "WeightFamily":
        return cls(base, [WeightVector(np.asarray(a, dtype=np.float64)) for a in arrays])

    @property
    def matrix(self) -> NDArray[np.float64]:
        """|V| × atoms array of member values."""
        return np.vstack([m.values for m in self.members])

    @property
    def l1_norms(self) -> NDArray[np.float64]:
        return self.matrix @ self.base.masses

    @property
    def norm_bound(self) -> float:
        return float(self.l1_norms.max())

    def __len__(self) -> int:
        return len(self.members)


@dataclass
class WeightedNormCheck:
    """Empirical (or exact) ‖T‖ from L^p(w) to L^p(v)."""

    constant: float
    exact: bool
    infeasible_direction: bool = False
    witness: Optional[NDArray[np.float64]] = None


@dataclass
class EndoWeightReport:
    p: float
    C: float
    g: NDArray[np.float64]
    steps: List[NDArray[np.float64]]
    truncation: int
    tail_bound: float
    inflation: float
    certified_constant: float
    exact_weighted_norm: Optional[float] = None
    batch_ratio: float = 0.0
    chain_residual: float = 0.0
    exact: bool = True
    notes: List[str] = field(default_factory=list)


@dataclass
class InterpolationReport:
    g: NDArray[np.float64]
    g_one: NDArray[np.float64]
    g_infinity: NDArray[np.float64]
    endpoint_one: float
    endpoint_infinity: float
    endpoint_one_single: float
    endpoint_infinity_single: float
    endpoint_infinity_mixed: float
    grid: Dict[float, Dict[str, float]]
    all_verified: bool
    factor_two_flags: Dict[str, bool] = field(default_factory=dict)

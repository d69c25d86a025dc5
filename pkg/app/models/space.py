import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from numpy.typing import NDArray

from app.constants.constants import DualBallKind
from app.core.errors import DimensionMismatchError, InvalidSpaceError

INF = math.inf

Exponent = Union[float, str]


def parse_exponent(value: Exponent) -> float:
    """Turn a JSON exponent (number or "inf") into a float, rejecting p < 1."""
    if isinstance(value, str):
        if value.strip().lower() in ("inf", "infinity", "∞"):
            return INF
        value = float(value)
    exponent = float(value)
    if math.isnan(exponent) or exponent < 1.0:
        raise InvalidSpaceError(f"Exponent must be >= 1 or inf, got {value}")
    return exponent


def conjugate_exponent(p: float) -> float:
    """Hölder conjugate p' with 1/p + 1/p' = 1."""
    if p == 1.0:
        return INF
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


def _as_vector(values: Sequence[float], name: str) -> NDArray[np.float64]:
    array = np.asarray(values, dtype=np.float64)
    if array.ndim != 1:
        raise DimensionMismatchError(f"{name} must be one-dimensional, got shape {array.shape}")
    if not np.all(np.isfinite(array)):
        raise InvalidSpaceError(f"{name} must be finite")
    return array


@dataclass(frozen=True, eq=False)
class MeasureSpace:
    """Finite atom set with strictly positive masses."""

    masses: NDArray[np.float64]

    def __post_init__(self):
        masses = _as_vector(self.masses, "masses")
        if masses.size < 1:
            raise InvalidSpaceError("A measure space needs at least one atom")
        if np.any(masses <= 0):
            raise InvalidSpaceError("Atom masses must be strictly positive")
        masses.setflags(write=False)
        object.__setattr__(self, "masses", masses)

    @property
    def atom_count(self) -> int:
        return int(self.masses.size)

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())

    @classmethod
    def uniform(cls, atom_count: int, total: float = 1.0) -> "MeasureSpace":
        """Equal masses summing to `total`."""
        return cls(np.full(atom_count, total / atom_count))

    @classmethod
    def counting(cls, atom_count: int) -> "MeasureSpace":
        return cls(np.ones(atom_count))

    def restrict(self, support: NDArray[np.int64]) -> "MeasureSpace":
        return MeasureSpace(self.masses[support])


@dataclass(frozen=True, eq=False)
class WeightVector:
    """Nonnegative weight (or positive functional) on the atoms of a measure space."""

    values: NDArray[np.float64]

    def __post_init__(self):
        values = _as_vector(self.values, "weight")
        if np.any(values < 0):
            raise InvalidSpaceError("Weights must be nonnegative")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def strictly_positive(self) -> bool:
        return bool(np.all(self.values > 0))

    @property
    def size(self) -> int:
        return int(self.values.size)

    def integral(self, measure: MeasureSpace) -> float:
        """‖v‖ in L¹(μ)."""
        return float(np.dot(self.values, measure.masses))


@dataclass(frozen=True, eq=False)
class SpaceDescriptor:
    """Weighted L^p(a dμ) over a finite measure space; exponent may be INF."""

    measure: MeasureSpace
    exponent: float
    weight: NDArray[np.float64] = field(default=None)

    def __post_init__(self):
        exponent = parse_exponent(self.exponent)
        object.__setattr__(self, "exponent", exponent)
        if self.weight is None:
            weight = np.ones(self.measure.atom_count)
        else:
            weight = _as_vector(self.weight, "space weight")
        if weight.size != self.measure.atom_count:
            raise DimensionMismatchError(
                f"Space weight has {weight.size} entries, measure has {self.measure.atom_count} atoms"
            )
        if np.any(weight <= 0):
            raise InvalidSpaceError("Space weights must be strictly positive; drop null atoms first")
        weight.setflags(write=False)
        object.__setattr__(self, "weight", weight)

    @property
    def dimension(self) -> int:
        return self.measure.atom_count

    @property
    def is_inf(self) -> bool:
        return math.isinf(self.exponent)

    @property
    def masses(self) -> NDArray[np.float64]:
        return self.measure.masses

    def reduction_scale(self) -> NDArray[np.float64]:
        """α with ‖f‖ = ‖α f‖ in unweighted ℓ^s: (aμ)^{1/s}, or a for INF."""
        if self.is_inf:
            return self.weight.copy()
        return (self.weight * self.masses) ** (1.0 / self.exponent)

    def describe(self) -> str:
        exponent = "inf" if self.is_inf else f"{self.exponent:g}"
        weighted = "" if np.allclose(self.weight, 1.0) else "weighted "
        return f"{weighted}L^{exponent} on {self.dimension} atoms"


@dataclass(frozen=True, eq=False)
class DualBallDescriptor:
    """Unit ball of the Köthe dual, paired with the base measure of the primal space."""

    primal: SpaceDescriptor
    dual: SpaceDescriptor
    kind: DualBallKind

    def maximal_element(self) -> NDArray[np.float64]:
        if self.kind != DualBallKind.box:
            raise InvalidSpaceError(f"A {self.kind.value} dual ball has no maximal positive element")
        return 1.0 / self.dual.weight


@dataclass(frozen=True, eq=False)
class OperatorNormEstimate:
    """Lower bound for ‖T‖ together with the vector achieving it."""

    value: float
    witness: NDArray[np.float64]
    exact: bool
    method: str
    upper: Optional[float] = None

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numpy.typing import NDArray

from app.constants.constants import OracleKind
from app.models.space import SpaceDescriptor


@dataclass(frozen=True, eq=False)
class DominationForm:
    """Pair of p-homogeneous forms compared over the unit sphere of `space`.

    lhs(f) = Σ_j w_j |(T f)_j|^p and rhs(f) = Σ_k d_k |(G f)_k|^p.
    A weight z gives G = I, d = C^p z μ; a Pietsch measure gives rows
    G_k = x'_k μ and d = C^p η.
    """

    matrix: NDArray[np.float64]
    w: NDArray[np.float64]
    G: NDArray[np.float64]
    d: NDArray[np.float64]
    p: float
    space: SpaceDescriptor
    separable: bool = field(init=False)

    def __post_init__(self):
        separable = bool(np.all(np.count_nonzero(self.G, axis=1) <= 1))
        object.__setattr__(self, "separable", separable)

    def lhs(self, F: NDArray[np.float64]) -> NDArray[np.float64]:
        images = np.atleast_2d(F) @ self.matrix.T
        return (np.abs(images) ** self.p) @ self.w

    def rhs(self, F: NDArray[np.float64]) -> NDArray[np.float64]:
        images = np.atleast_2d(F) @ self.G.T
        return (np.abs(images) ** self.p) @ self.d

    def gap(self, F: NDArray[np.float64]) -> NDArray[np.float64]:
        return self.lhs(F) - self.rhs(F)

    def gradient(self, F: NDArray[np.float64]) -> NDArray[np.float64]:
        F = np.atleast_2d(F)
        images = F @ self.matrix.T
        forms = F @ self.G.T
        left = (self.w * np.abs(images) ** (self.p - 1.0) * np.sign(images)) @ self.matrix
        right = (self.d * np.abs(forms) ** (self.p - 1.0) * np.sign(forms)) @ self.G
        return self.p * (left - right)


@dataclass
class OracleResult:
    """Largest relative violation found and the unit vector achieving it."""

    violation: float
    cut: Optional[NDArray[np.float64]]
    exact: bool
    kind: OracleKind

    def violated(self, tol: float) -> bool:
        return self.violation > tol


@dataclass
class ExactRatio:
    """sup_f lhs(f) / rhs(f) with a maximizing direction (ratio may be inf)."""

    ratio: float
    direction: Optional[NDArray[np.float64]]

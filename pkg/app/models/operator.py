from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from app.core.errors import DimensionMismatchError, InvalidSpaceError
from app.models.space import SpaceDescriptor


@dataclass(frozen=True, eq=False)
class OperatorModel:
    """Dense real m×n matrix acting from `domain` (n atoms) to `codomain` (m atoms)."""

    matrix: NDArray[np.float64]
    domain: SpaceDescriptor
    codomain: SpaceDescriptor

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=np.float64)
        if matrix.ndim != 2:
            raise DimensionMismatchError(f"Operator matrix must be 2-D, got shape {matrix.shape}")
        if not np.all(np.isfinite(matrix)):
            raise InvalidSpaceError("Operator matrix must be finite")
        rows, cols = matrix.shape
        if cols != self.domain.dimension or rows != self.codomain.dimension:
            raise DimensionMismatchError(
                f"Matrix {rows}x{cols} does not map {self.domain.dimension} atoms to {self.codomain.dimension} atoms"
            )
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @property
    def shape(self):
        return self.matrix.shape

    @property
    def is_square(self) -> bool:
        return self.matrix.shape[0] == self.matrix.shape[1]

    @property
    def is_positive(self) -> bool:
        return bool(np.all(self.matrix >= 0))

    @property
    def is_zero(self) -> bool:
        return not np.any(self.matrix)

    def with_matrix(self, matrix: NDArray[np.float64]) -> "OperatorModel":
        return OperatorModel(matrix, self.domain, self.codomain)

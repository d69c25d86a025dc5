from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.typing import NDArray

from app.constants.constants import LinearProgramStatus


@dataclass
class LinearProgramResult:
    """Outcome of min cᵀx subject to A_ub x ≤ b_ub, A_eq x = b_eq, 0 ≤ x ≤ upper.

    Marginals follow the usual sensitivity convention ∂(optimum)/∂b, so
    they are ≤ 0 on inequality rows of a minimization.
    """

    status: LinearProgramStatus
    x: Optional[NDArray[np.float64]]
    fun: Optional[float]
    marginals_ub: NDArray[np.float64]
    marginals_eq: NDArray[np.float64]
    marginals_upper: NDArray[np.float64]
    iterations: int

    @property
    def optimal(self) -> bool:
        return self.status == LinearProgramStatus.optimal

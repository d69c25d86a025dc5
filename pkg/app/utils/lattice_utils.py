# app/utils/lattice_utils.py
import math
from typing import List, Sequence

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import hadamard


class LatticeUtils:
    """Vector helpers shared by the space, operator and synthesis services."""

    @staticmethod
    def lp_norm(vector: NDArray[np.float64], r: float, axis: int = -1) -> NDArray[np.float64]:
        """
        Unweighted ℓ^r norm along an axis.

        Args:
            vector: array of values
            r: exponent in [1, inf]
            axis: reduction axis

        Returns:
            Norm(s) with the axis removed
        """
        absolute = np.abs(vector)
        if math.isinf(r):
            return absolute.max(axis=axis)
        if r == 1.0:
            return absolute.sum(axis=axis)
        if r == 2.0:
            return np.sqrt((absolute * absolute).sum(axis=axis))
        scale = absolute.max(axis=axis, keepdims=True)
        safe = np.where(scale > 0, scale, 1.0)
        return np.squeeze(safe, axis=axis) * ((absolute / safe) ** r).sum(axis=axis) ** (1.0 / r)

    @staticmethod
    def dual_direction(vector: NDArray[np.float64], r: float) -> NDArray[np.float64]:
        """
        Unit vector of ℓ^{r'} norming `vector` in ℓ^r: ⟨v, d⟩ = ‖v‖_r.

        Args:
            vector: nonzero vector
            r: exponent of the space the vector lives in

        Returns:
            The norming direction (zeros for the zero vector)
        """
        norm = float(LatticeUtils.lp_norm(vector, r))
        direction = np.zeros_like(vector, dtype=np.float64)
        if norm == 0.0:
            return direction
        if math.isinf(r):
            index = int(np.argmax(np.abs(vector)))
            direction[index] = np.sign(vector[index])
            return direction
        if r == 1.0:
            return np.sign(vector).astype(np.float64)
        scaled = vector / norm
        return np.sign(scaled) * np.abs(scaled) ** (r - 1.0)

    @staticmethod
    def square_function(family: NDArray[np.float64], p: float) -> NDArray[np.float64]:
        """(Σ_i |x_i|^p)^{1/p} pointwise for a k × n family."""
        family = np.atleast_2d(family)
        return LatticeUtils.lp_norm(family, p, axis=0)

    @staticmethod
    def power_sum(family: NDArray[np.float64], p: float) -> NDArray[np.float64]:
        """Σ_i |x_i|^p pointwise."""
        return (np.abs(np.atleast_2d(family)) ** p).sum(axis=0)

    @staticmethod
    def walsh_family(n: int) -> NDArray[np.float64]:
        """Rows of the Sylvester Hadamard matrix cut to n × n."""
        size = 1 << max(0, (n - 1).bit_length())
        return hadamard(size).astype(np.float64)[:n, :n]

    @staticmethod
    def sign_vectors(n: int) -> NDArray[np.float64]:
        """All ε ∈ {±1}^n with ε_0 = +1 (one per ± pair), shape 2^{n-1} × n."""
        if n <= 0:
            return np.ones((1, 0))
        codes = np.arange(1 << (n - 1))[:, None]
        bits = (codes >> np.arange(n - 1)) & 1
        signs = np.ones((codes.shape[0], n))
        signs[:, 1:] = 1.0 - 2.0 * bits
        return signs

    @staticmethod
    def ternary_vectors(n: int) -> NDArray[np.float64]:
        """All vectors of {-1, 0, 1}^n, shape 3^n × n."""
        grids = np.meshgrid(*([np.array([-1.0, 0.0, 1.0])] * n), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    @staticmethod
    def coordinate_family(n: int) -> NDArray[np.float64]:
        return np.eye(n)

    @staticmethod
    def cosine_similarity(vec1: NDArray[np.float64], vec2: NDArray[np.float64]) -> float:
        norm1 = np.linalg.norm(vec1)
        norm2 = np.linalg.norm(vec2)
        if norm1 == 0 or norm2 == 0:
            return 0.0
        return float(np.dot(vec1, vec2) / (norm1 * norm2))

    @staticmethod
    def is_duplicate(candidate: NDArray[np.float64], pool: Sequence[NDArray[np.float64]], threshold: float) -> bool:
        """True when |cos(candidate, cut)| exceeds the threshold for some pooled cut."""
        for cut in pool:
            if abs(LatticeUtils.cosine_similarity(candidate, cut)) > threshold:
                return True
        return False

    @staticmethod
    def as_family(vectors: Sequence[NDArray[np.float64]]) -> List[NDArray[np.float64]]:
        return [np.asarray(v, dtype=np.float64) for v in vectors]

# app/utils/operator_builders.py
from typing import Optional, Sequence

import numpy as np
from numpy.typing import NDArray

from app.core.errors import DimensionMismatchError, InvalidParameterError
from app.models.operator import OperatorModel
from app.models.space import INF, MeasureSpace, SpaceDescriptor
from app.utils.random_utils import derive_rng


class OperatorBuilders:
    """Ready-made operators for tests, examples and problem files."""

    @staticmethod
    def between(
        matrix,
        domain_exponent: float,
        codomain_exponent: float,
        domain_masses: Optional[Sequence[float]] = None,
        codomain_masses: Optional[Sequence[float]] = None,
    ) -> OperatorModel:
        """
        Wrap a matrix as an operator between unweighted L^p spaces.

        Args:
            matrix: rows = codomain atoms, columns = domain atoms
            domain_exponent: exponent of the domain
            codomain_exponent: exponent of the codomain
            domain_masses: atom masses of the domain (counting measure when omitted)
            codomain_masses: atom masses of the codomain (counting measure when omitted)

        Returns:
            OperatorModel
        """
        matrix = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
        rows, cols = matrix.shape
        domain = MeasureSpace(np.asarray(domain_masses, dtype=np.float64)) if domain_masses is not None else MeasureSpace.counting(cols)
        codomain = MeasureSpace(np.asarray(codomain_masses, dtype=np.float64)) if codomain_masses is not None else MeasureSpace.counting(rows)
        return OperatorModel(matrix, SpaceDescriptor(domain, domain_exponent), SpaceDescriptor(codomain, codomain_exponent))

    @staticmethod
    def identity(n: int, exponent: float, codomain_exponent: Optional[float] = None, measure: Optional[MeasureSpace] = None) -> OperatorModel:
        measure = measure or MeasureSpace.counting(n)
        codomain_exponent = exponent if codomain_exponent is None else codomain_exponent
        return OperatorModel(np.eye(n), SpaceDescriptor(measure, exponent), SpaceDescriptor(measure, codomain_exponent))

    @staticmethod
    def partition_integration_operator(masses: Sequence[float], cells: Sequence[Sequence[int]], codomain_exponent: float = 2.0) -> OperatorModel:
        """
        T f = Σ_i (∫_{A_i} f dμ) χ_{A_i} from L^inf(μ) into L^2(μ).

        Args:
            masses: atom masses of μ
            cells: disjoint cells A_i covering the atoms
            codomain_exponent: exponent of the target space

        Returns:
            OperatorModel
        """
        measure = MeasureSpace(np.asarray(masses, dtype=np.float64))
        n = measure.atom_count
        covered = sorted(atom for cell in cells for atom in cell)
        if covered != list(range(n)):
            raise InvalidParameterError("The cells must partition the atoms")
        matrix = np.zeros((n, n))
        for cell in cells:
            cell = np.asarray(cell, dtype=np.int64)
            matrix[np.ix_(cell, cell)] = measure.masses[cell][None, :]
        return OperatorModel(matrix, SpaceDescriptor(measure, INF), SpaceDescriptor(measure, codomain_exponent))

    @staticmethod
    def band_kernel(nx: int, ny: int, width: float = 0.25) -> NDArray[np.float64]:
        """Positive kernel grid max(0, 1 − |x − y| / width) on [0, 1]² midpoints."""
        if width <= 0:
            raise InvalidParameterError("The band width must be positive")
        x = (np.arange(nx) + 0.5) / nx
        y = (np.arange(ny) + 0.5) / ny
        return np.maximum(0.0, 1.0 - np.abs(x[:, None] - y[None, :]) / width)

    @staticmethod
    def random_positive(
        rows: int,
        cols: int,
        seed: int = 0,
        domain: Optional[SpaceDescriptor] = None,
        codomain: Optional[SpaceDescriptor] = None,
        exponent: float = 2.0,
    ) -> OperatorModel:
        """Entries uniform on [0, 1); spaces default to counting-measure L^exponent."""
        matrix = derive_rng(seed, "random-positive", rows, cols).random((rows, cols))
        return OperatorBuilders._with_spaces(matrix, domain, codomain, exponent)

    @staticmethod
    def random_signed(
        rows: int,
        cols: int,
        seed: int = 0,
        domain: Optional[SpaceDescriptor] = None,
        codomain: Optional[SpaceDescriptor] = None,
        exponent: float = 2.0,
    ) -> OperatorModel:
        """Standard normal entries; spaces default to counting-measure L^exponent."""
        matrix = derive_rng(seed, "random-signed", rows, cols).standard_normal((rows, cols))
        return OperatorBuilders._with_spaces(matrix, domain, codomain, exponent)

    @staticmethod
    def _with_spaces(matrix, domain, codomain, exponent) -> OperatorModel:
        rows, cols = matrix.shape
        domain = domain or SpaceDescriptor(MeasureSpace.counting(cols), exponent)
        codomain = codomain or SpaceDescriptor(MeasureSpace.counting(rows), exponent)
        if domain.dimension != cols or codomain.dimension != rows:
            raise DimensionMismatchError("The spaces do not match the requested shape")
        return OperatorModel(matrix, domain, codomain)

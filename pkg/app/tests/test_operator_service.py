import numpy as np
import pytest
from hypothesis import given, settings as hypothesis_settings, strategies as st
from hypothesis.extra.numpy import arrays

from app.core.errors import DimensionMismatchError
from app.models.operator import OperatorModel
from app.models.space import INF, MeasureSpace, SpaceDescriptor
from app.services.OperatorService import OperatorService
from app.utils.operator_builders import OperatorBuilders

matrices = arrays(np.float64, (3, 2), elements=st.floats(-5, 5, allow_nan=False, allow_infinity=False))


def _operator(matrix, domain_exponent=2.0, codomain_exponent=3.0) -> OperatorModel:
    domain = SpaceDescriptor(MeasureSpace(np.array([0.5, 2.0])), domain_exponent, np.array([1.0, 3.0]))
    codomain = SpaceDescriptor(MeasureSpace(np.array([1.0, 0.25, 4.0])), codomain_exponent)
    return OperatorModel(matrix, domain, codomain)


@hypothesis_settings(max_examples=50, deadline=None)
@given(matrix=matrices, f=arrays(np.float64, 2, elements=st.floats(-3, 3)), g=arrays(np.float64, 3, elements=st.floats(-3, 3)))
def test_adjoint_identity(matrix, f, g):
    operators = OperatorService()
    T = _operator(matrix)
    adjoint = operators.adjoint(T)
    left = operators.spaces.pairing(T.codomain.measure, operators.apply(T, f), g)
    right = operators.spaces.pairing(T.domain.measure, f, operators.apply(adjoint, g))
    assert left == pytest.approx(right, rel=1e-9, abs=1e-9)


def test_adjoint_is_an_involution(operators):
    T = _operator(np.array([[1.0, -2.0], [0.5, 0.0], [3.0, 1.0]]))
    twice = operators.adjoint(operators.adjoint(T))
    np.testing.assert_allclose(twice.matrix, T.matrix)
    assert twice.domain.exponent == T.domain.exponent
    np.testing.assert_allclose(twice.domain.weight, T.domain.weight)


def test_lattice_parts(operators):
    T = _operator(np.array([[1.0, -2.0], [0.5, 0.0], [-3.0, 1.0]]))
    np.testing.assert_allclose(operators.positive_part(T).matrix - operators.negative_part(T).matrix, T.matrix)
    np.testing.assert_allclose(operators.modulus(T).matrix, np.abs(T.matrix))
    assert operators.modulus(T).is_positive


def test_compose_checks_dimensions(operators):
    T = _operator(np.ones((3, 2)))
    with pytest.raises(DimensionMismatchError):
        operators.compose(T, T)
    square = OperatorBuilders.identity(3, 3.0)
    composite = operators.compose(square, T)
    np.testing.assert_allclose(composite.matrix, T.matrix)


def test_spectral_norm_matches_numpy(operators):
    T = OperatorBuilders.random_signed(4, 5, seed=3)
    estimate = operators.operator_norm(T)
    assert estimate.exact and estimate.method == "spectral"
    assert estimate.value == pytest.approx(np.linalg.norm(T.matrix, 2))


def test_column_and_row_norms_are_exact(operators):
    A = np.array([[1.0, -2.0, 0.0], [3.0, 1.0, -1.0]])
    from_l1 = OperatorBuilders.between(A, 1.0, 1.0)
    estimate = operators.operator_norm(from_l1)
    assert estimate.exact and estimate.value == pytest.approx(4.0)
    into_inf = OperatorBuilders.between(A, INF, INF)
    estimate = operators.operator_norm(into_inf)
    assert estimate.exact and estimate.value == pytest.approx(5.0)


def test_sign_enumeration_norm(operators):
    A = np.array([[1.0, -1.0], [1.0, 1.0]])
    T = OperatorBuilders.between(A, INF, 2.0)
    estimate = operators.operator_norm(T)
    assert estimate.exact
    assert estimate.value == pytest.approx(2.0)


def test_witness_attains_the_estimate(operators):
    T = _operator(np.array([[1.0, -2.0], [0.5, 0.0], [3.0, 1.0]]))
    estimate = operators.operator_norm(T, budget=4, seed=1)
    image = operators.apply(T, estimate.witness)
    ratio = operators.spaces.norm_eval(T.codomain, image) / operators.spaces.norm_eval(T.domain, estimate.witness)
    assert ratio == pytest.approx(estimate.value, rel=1e-6)


def test_zero_operator_norm(operators):
    T = _operator(np.zeros((3, 2)))
    estimate = operators.operator_norm(T)
    assert estimate.value == 0.0 and estimate.exact

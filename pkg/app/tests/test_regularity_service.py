import math

import numpy as np
import pytest

from app.core.errors import InvalidParameterError
from app.models.operator import OperatorModel
from app.models.space import INF, MeasureSpace, SpaceDescriptor
from app.utils.operator_builders import OperatorBuilders


@pytest.mark.parametrize("n", [2, 4])
def test_l1_identity_is_one_regular(regularity, n):
    T = OperatorBuilders.identity(n, 1.0)
    bracket = regularity.rho_bracket(T, 1.0, family_size=2, budget=2)
    assert bracket.lower == pytest.approx(1.0, abs=1e-6)
    assert bracket.upper == pytest.approx(1.0, rel=1e-4)


@pytest.mark.parametrize("n", [2, 4, 8])
def test_l1_identity_is_not_lattice_summing(regularity, n):
    T = OperatorBuilders.identity(n, 1.0)
    value, family = regularity.lambda_lower(T, 1.0, family_size=1, budget=1)
    assert value >= math.sqrt(n) * (1 - 1e-9)
    assert regularity.lambda_ratio(T, np.vstack(family), 1.0) == pytest.approx(value)


@pytest.mark.parametrize("p", [1.0, 2.0])
def test_linf_identity_into_lp_is_lattice_summing_with_constant_one(regularity, linf_probability8, p):
    measure = linf_probability8.measure
    T = OperatorModel(np.eye(8), linf_probability8, SpaceDescriptor(measure, p))
    bracket = regularity.lambda_bracket(T, p, family_size=1, budget=2)
    assert bracket.lower >= 1 - 1e-6
    assert bracket.upper <= 1 + 1e-3


def test_positive_operator_rho_equals_its_norm(regularity):
    T = OperatorBuilders.random_positive(3, 3, seed=2)
    bracket = regularity.rho_bracket(T, 2.0, family_size=2, budget=2)
    norm = np.linalg.norm(T.matrix, 2)
    assert bracket.lower == pytest.approx(norm, rel=1e-6)
    assert bracket.upper == pytest.approx(norm, rel=1e-3)


def test_lambda_lower_dominates_rho_lower(regularity):
    domain = SpaceDescriptor(MeasureSpace.counting(3), 2.0)
    codomain = SpaceDescriptor(MeasureSpace.counting(3), 3.0)
    T = OperatorBuilders.random_signed(3, 3, seed=8, domain=domain, codomain=codomain)
    rho, _ = regularity.rho_lower(T, 2.0, family_size=2, budget=2, seed=1)
    lam, _ = regularity.lambda_lower(T, 2.0, family_size=2, budget=2, seed=1)
    assert lam >= rho * (1 - 1e-9)


def test_krivine_reference_holds_for_p2(regularity):
    T = OperatorBuilders.random_signed(3, 3, seed=11)
    lower, _ = regularity.rho_lower(T, 2.0, family_size=2, budget=2)
    assert lower <= 1.783 * np.linalg.norm(T.matrix, 2)
    assert lower >= np.linalg.norm(T.matrix, 2) * (1 - 1e-9)


def test_zero_operator_has_zero_lower_bounds(regularity):
    T = OperatorBuilders.between(np.zeros((2, 2)), 2.0, 2.0)
    assert regularity.rho_lower(T, 2.0)[0] == 0.0
    assert regularity.lambda_lower(T, 2.0)[0] == 0.0


def test_lower_bounds_are_reproducible(regularity):
    T = OperatorBuilders.random_signed(3, 3, seed=3, exponent=3.0)
    first = regularity.rho_lower(T, 2.0, family_size=2, budget=2, seed=7)[0]
    second = regularity.rho_lower(T, 2.0, family_size=2, budget=2, seed=7)[0]
    assert first == second


def test_invalid_parameters(regularity):
    T = OperatorBuilders.identity(2, 2.0)
    with pytest.raises(InvalidParameterError):
        regularity.rho_lower(T, INF)
    with pytest.raises(InvalidParameterError):
        regularity.lambda_lower(T, 2.0, family_size=0)


def test_rho_lower_grows_with_budget_and_family_size(regularity):
    T = OperatorBuilders.random_signed(3, 3, seed=21)
    by_budget = [regularity.rho_lower(T, 3.0, family_size=2, budget=budget, seed=4)[0] for budget in (1, 2, 4, 8)]
    by_size = [regularity.rho_lower(T, 3.0, family_size=size, budget=2, seed=4)[0] for size in (1, 2, 3)]
    for values in (by_budget, by_size):
        assert all(later >= earlier for earlier, later in zip(values, values[1:]))


@pytest.mark.parametrize("p", [1.5, 3.0])
def test_rho_bracket_scales_with_the_operator(regularity, p):
    T = OperatorBuilders.random_signed(3, 3, seed=13)
    base = regularity.rho_bracket(T, p, family_size=2, budget=2)
    scaled = regularity.rho_bracket(T.with_matrix(3.0 * T.matrix), p, family_size=2, budget=2)
    assert scaled.lower == pytest.approx(3.0 * base.lower, rel=1e-3)
    assert scaled.upper == pytest.approx(3.0 * base.upper, rel=1e-3)

import dataclasses

import numpy as np
import pytest

from app.core.errors import DimensionMismatchError, InvalidSpaceError
from app.services.FactorizationService import FactorizationService
from app.utils.operator_builders import OperatorBuilders


@pytest.fixture
def factorization(synthesis):
    return FactorizationService(synthesis)


def _certified(synthesis, T, p=2.0):
    y_star = synthesis.top_corner(T.codomain, p)
    return y_star, synthesis.min_constant_domination(T, p, y_star).certificate


def test_factorization_reproduces_the_operator(factorization, synthesis):
    T = OperatorBuilders.random_signed(3, 4, seed=5)
    y_star, certificate = _certified(synthesis, T)
    record = factorization.factor_through_weighted_lp(T, 2.0, y_star, certificate)
    assert len(record.stages) == len(record.stage_names) == 3
    assert record.reconstruction_residual <= 1e-8
    assert record.inclusion_norms[0] <= 1.0 + 1e-9
    assert record.constants["middle_norm_lower"] <= certificate.C * (1.0 + 1e-6)


def test_factorization_needs_live_weights(factorization, synthesis):
    T = OperatorBuilders.random_signed(2, 2, seed=1)
    y_star, certificate = _certified(synthesis, T)
    with pytest.raises(InvalidSpaceError):
        factorization.factor_through_weighted_lp(T, 2.0, y_star, dataclasses.replace(certificate, z_star=np.zeros(2)))
    with pytest.raises(DimensionMismatchError):
        factorization.factor_through_weighted_lp(T, 2.0, np.ones(3), certificate)


def test_maurey_rosenthal_chain(factorization):
    S0 = OperatorBuilders.random_signed(3, 2, seed=2)
    T0 = OperatorBuilders.random_signed(3, 3, seed=3)
    R0 = OperatorBuilders.random_signed(2, 3, seed=4)
    record = factorization.maurey_rosenthal_pipeline(S0, T0, R0, 2.0)
    assert len(record.stages) == 3
    assert record.reconstruction_residual <= 1e-8
    assert record.constants["rho_T0"] == pytest.approx(np.linalg.norm(T0.matrix, 2), rel=1e-3)


def test_maurey_rosenthal_needs_composable_factors(factorization):
    S0 = OperatorBuilders.random_signed(2, 2, seed=2)
    T0 = OperatorBuilders.random_signed(3, 3, seed=3)
    with pytest.raises(DimensionMismatchError):
        factorization.maurey_rosenthal_pipeline(S0, T0, T0, 2.0)


def test_p_dominated_lower_bound(factorization):
    T = OperatorBuilders.identity(3, 2.0)
    best, family = factorization.p_dominated_check(T, 2.0, trials=8)
    assert best >= 1.0 - 1e-9
    assert family.shape[1] == 3

    zero = OperatorBuilders.random_signed(2, 3, seed=0).with_matrix(np.zeros((2, 3)))
    assert factorization.p_dominated_check(zero, 2.0)[0] == 0.0

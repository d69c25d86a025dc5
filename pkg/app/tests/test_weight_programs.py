import math

import numpy as np
import pytest

from app.core.errors import InvalidSpaceError
from app.models.space import MeasureSpace, SpaceDescriptor
from app.utils.operator_builders import OperatorBuilders


def test_weighted_norm_of_a_diagonal(programs):
    T = OperatorBuilders.between(np.diag([1.0, -3.0, 2.0]), 2.0, 2.0)
    check = programs.weighted_norm_verify(T, np.ones(3), np.ones(3), 2.0)
    assert check.exact
    assert check.constant == pytest.approx(3.0)


def test_weighted_norm_scales_with_the_weights(programs):
    T = OperatorBuilders.between(np.eye(2), 1.0, 1.0)
    check = programs.weighted_norm_verify(T, np.array([1.0, 2.0]), np.array([4.0, 1.0]), 1.0)
    assert check.constant == pytest.approx(4.0)


def test_escaping_atom_is_flagged(programs):
    T = OperatorBuilders.between(np.array([[1.0, 0.0], [1.0, 1.0]]), 2.0, 2.0)
    check = programs.weighted_norm_verify(T, np.array([0.0, 1.0]), np.ones(2), 2.0)
    assert check.infeasible_direction
    assert math.isinf(check.constant)
    np.testing.assert_array_equal(check.witness, [1.0, 0.0])


def test_empty_codomain_weight_gives_zero(programs):
    T = OperatorBuilders.between(np.ones((2, 2)), 2.0, 2.0)
    assert programs.weighted_norm_verify(T, np.ones(2), np.zeros(2), 2.0).constant == 0.0


def test_endomorphism_weight_bound(programs):
    T = OperatorBuilders.random_signed(4, 4, seed=21)
    report = programs.endomorphism_weight(T, 2.0, N=4)
    assert np.all(report.g > 0)
    assert report.inflation >= 1.0
    assert report.certified_constant == pytest.approx(math.sqrt(2 * report.inflation) * report.C)
    assert report.exact_weighted_norm <= report.certified_constant * (1 + 1e-6)
    assert report.batch_ratio <= report.certified_constant * (1 + 1e-9)
    assert report.chain_residual <= 1e-8
    assert len(report.steps) == 6


def test_endomorphism_weight_of_zero(programs):
    T = OperatorBuilders.between(np.zeros((3, 3)), 2.0, 2.0)
    report = programs.endomorphism_weight(T, 2.0)
    assert report.C == 0.0
    assert np.all(report.g > 0)


def test_endomorphism_weight_needs_an_endomorphism(programs):
    T = OperatorBuilders.random_signed(3, 4, seed=1)
    with pytest.raises(InvalidSpaceError):
        programs.endomorphism_weight(T, 2.0)


@pytest.mark.parametrize("exponent", [3.0, 1.5])
def test_l2_weight_for_operators_on_lp(programs, exponent):
    space = SpaceDescriptor(MeasureSpace.counting(3), exponent)
    T = OperatorBuilders.random_positive(3, 3, seed=13, domain=space, codomain=space)
    report = programs.jj_weis_l2_weight(T, N=3)
    assert np.all(report.g > 0)
    assert np.isfinite(report.exact_weighted_norm)
    assert any("Krivine" in note for note in report.notes)


def test_all_p_weight_is_verified_on_the_grid(programs):
    space = SpaceDescriptor(MeasureSpace.uniform(3), 1.0)
    T = OperatorBuilders.random_signed(3, 3, seed=17, domain=space, codomain=space)
    report = programs.regular_operator_all_p_weight(T, N=3)
    assert report.all_verified
    assert np.all(report.g > 0)
    assert set(report.grid) == {1.0, 1.5, 2.0, 4.0, math.inf}
    assert report.grid[1.0]["estimate"] == pytest.approx(report.endpoint_one)


def test_endomorphism_series_is_bounded_below_by_its_first_term(programs):
    T = OperatorBuilders.random_signed(4, 4, seed=21)
    report = programs.endomorphism_weight(T, 2.0, N=4)
    assert all(np.all(step >= 0) for step in report.steps)
    assert np.all(report.steps[0] > 0)
    G = sum(2.0 ** -i * step for i, step in enumerate(report.steps[: report.truncation + 1]))
    assert np.all(G >= report.steps[0] * (1 - 1e-12))


def test_self_adjoint_operator_keeps_both_endpoints_within_factor_two(programs):
    mu = np.array([0.2, 0.3, 0.5])
    S = np.array([[1.0, -0.5, 0.25], [-0.5, 2.0, 0.75], [0.25, 0.75, -1.0]])
    T = OperatorBuilders.between(S * mu[None, :], 1.0, 1.0, mu, mu)
    report = programs.regular_operator_all_p_weight(T, N=3)
    assert report.all_verified
    assert report.factor_two_flags == {
        "endpoint_one_within_factor_two": True,
        "endpoint_infinity_within_factor_two": True,
    }
    adjoint = (T.matrix.T * mu[None, :]) / mu[:, None]
    mixed = np.max((np.abs(adjoint).T @ (report.g * mu)) / (report.g * mu))
    assert report.endpoint_infinity_mixed == pytest.approx(mixed)
    assert report.endpoint_infinity_mixed == pytest.approx(report.endpoint_infinity_single, rel=1e-6)


def test_infinity_flag_compares_the_mixed_weight_endpoint(programs):
    measure = MeasureSpace(np.array([0.1, 0.4, 0.5]))
    space = SpaceDescriptor(measure, 1.0)
    T = OperatorBuilders.random_signed(3, 3, seed=17, domain=space, codomain=space)
    report = programs.regular_operator_all_p_weight(T, N=3)
    expected = report.endpoint_infinity_mixed <= 2.0 * report.endpoint_infinity_single * (1 + 1e-4)
    assert report.factor_two_flags["endpoint_infinity_within_factor_two"] == expected
    assert report.endpoint_infinity == pytest.approx(np.max(np.abs(T.matrix).sum(axis=1)))

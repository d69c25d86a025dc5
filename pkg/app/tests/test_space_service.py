import math

import numpy as np
import pytest
from hypothesis import given, settings as hypothesis_settings, strategies as st
from hypothesis.extra.numpy import arrays

from app.constants.constants import DualBallKind
from app.core.errors import DimensionMismatchError, InvalidSpaceError
from app.models.space import INF, MeasureSpace, SpaceDescriptor, conjugate_exponent, parse_exponent
from app.services.SpaceService import SpaceService
from app.utils.random_utils import derive_rng

finite_vectors = arrays(np.float64, 3, elements=st.floats(-10, 10, allow_nan=False, allow_infinity=False))
exponents = st.sampled_from([1.0, 1.5, 2.0, 3.0, INF])


def _space(exponent: float) -> SpaceDescriptor:
    return SpaceDescriptor(MeasureSpace(np.array([0.5, 1.0, 2.0])), exponent, np.array([1.0, 2.0, 0.5]))


def test_parse_exponent_accepts_inf_strings():
    assert parse_exponent("inf") == INF
    assert parse_exponent("∞") == INF
    assert parse_exponent(2) == 2.0
    with pytest.raises(InvalidSpaceError):
        parse_exponent(0.5)


def test_conjugate_exponent_pairs():
    assert conjugate_exponent(1.0) == INF
    assert conjugate_exponent(INF) == 1.0
    assert conjugate_exponent(2.0) == 2.0
    assert conjugate_exponent(3.0) == pytest.approx(1.5)


def test_norm_eval_weighted_lp(spaces, weighted_l3):
    f = np.array([1.0, -2.0, 3.0])
    expected = (1 * 1 * 0.5 + 8 * 2 * 1.0 + 27 * 0.5 * 2.0) ** (1 / 3)
    assert spaces.norm_eval(weighted_l3, f) == pytest.approx(expected)


def test_norm_eval_inf_and_batch(spaces):
    space = SpaceDescriptor(MeasureSpace.counting(3), INF, np.array([1.0, 2.0, 0.5]))
    batch = np.array([[1.0, 1.0, 1.0], [0.0, 0.0, -4.0]])
    np.testing.assert_allclose(spaces.norm_eval(space, batch), [2.0, 2.0])


def test_norm_eval_rejects_wrong_size(spaces, weighted_l3):
    with pytest.raises(DimensionMismatchError):
        spaces.norm_eval(weighted_l3, np.ones(4))


def test_space_rejects_nonpositive_weights():
    with pytest.raises(InvalidSpaceError):
        SpaceDescriptor(MeasureSpace.counting(2), 2.0, np.array([1.0, 0.0]))
    with pytest.raises(InvalidSpaceError):
        MeasureSpace(np.array([1.0, -1.0]))


def test_kothe_duals():
    space = _space(3.0)
    dual = SpaceService.kothe_dual(space)
    assert dual.exponent == pytest.approx(1.5)
    np.testing.assert_allclose(dual.weight, space.weight ** -0.5)

    l1 = SpaceService.kothe_dual(_space(1.0))
    assert l1.is_inf
    np.testing.assert_allclose(l1.weight, 1.0 / _space(1.0).weight)

    linf = SpaceService.kothe_dual(_space(INF))
    assert linf.exponent == 1.0


def test_dual_ball_kinds(spaces):
    assert spaces.kothe_dual_ball(_space(1.0)).kind == DualBallKind.box
    assert spaces.kothe_dual_ball(_space(INF)).kind == DualBallKind.l1_ball
    assert spaces.kothe_dual_ball(_space(2.0)).kind == DualBallKind.lp_ball


def test_pth_power_space():
    power = SpaceService.pth_power_space(_space(3.0), 2.0)
    assert power.exponent == pytest.approx(1.5)
    inf_power = SpaceService.pth_power_space(_space(INF), 2.0)
    assert inf_power.is_inf
    np.testing.assert_allclose(inf_power.weight, _space(INF).weight ** 2)
    with pytest.raises(InvalidSpaceError):
        SpaceService.pth_power_space(_space(1.5), 2.0)


def test_pth_power_norm_identity(spaces):
    space = _space(3.0)
    f = np.array([0.3, -1.2, 2.0])
    power = spaces.pth_power_space(space, 2.0)
    assert spaces.norm_eval(power, np.abs(f) ** 2) == pytest.approx(spaces.norm_eval(space, f) ** 2)


@hypothesis_settings(max_examples=60, deadline=None)
@given(f=finite_vectors, g=finite_vectors, exponent=exponents)
def test_holder_inequality(f, g, exponent):
    spaces = SpaceService()
    space = _space(exponent)
    pairing = abs(spaces.pairing(space.measure, f, g))
    assert pairing <= spaces.norm_eval(space, f) * spaces.dual_norm(space, g) * (1 + 1e-9) + 1e-9


@hypothesis_settings(max_examples=60, deadline=None)
@given(f=finite_vectors, g=finite_vectors, exponent=exponents, scale=st.floats(-5, 5, allow_nan=False))
def test_norm_axioms(f, g, exponent, scale):
    spaces = SpaceService()
    space = _space(exponent)
    assert spaces.norm_eval(space, f + g) <= (spaces.norm_eval(space, f) + spaces.norm_eval(space, g)) * (1 + 1e-9) + 1e-9
    assert spaces.norm_eval(space, scale * f) == pytest.approx(abs(scale) * spaces.norm_eval(space, f), rel=1e-9, abs=1e-9)
    assert spaces.norm_eval(space, np.abs(f)) == pytest.approx(spaces.norm_eval(space, f))


@pytest.mark.parametrize("exponent", [1.0, 1.5, 2.0, 3.0, INF])
def test_norming_functional_attains_the_norm(spaces, exponent):
    space = _space(exponent)
    f = np.array([0.7, -1.5, 0.2])
    g = spaces.norming_functional(space, f)
    assert spaces.pairing(space.measure, f, g) == pytest.approx(spaces.norm_eval(space, f))
    assert spaces.dual_norm(space, g) == pytest.approx(1.0)


def test_ball_project_box_and_radial(spaces):
    box = spaces.kothe_dual_ball(SpaceDescriptor(MeasureSpace.counting(2), 1.0))
    np.testing.assert_allclose(spaces.ball_project(box, np.array([3.0, -0.5])), [1.0, -0.5])
    ball = spaces.kothe_dual_ball(SpaceDescriptor(MeasureSpace.counting(2), 2.0))
    projected = spaces.ball_project(ball, np.array([3.0, 4.0]))
    assert spaces.norm_eval(ball.dual, projected) == pytest.approx(1.0)


def test_lattice_norm_and_strong_sum(spaces):
    space = SpaceDescriptor(MeasureSpace.counting(2), 2.0)
    family = np.eye(2)
    assert spaces.lattice_norm(space, family, 2.0) == pytest.approx(math.sqrt(2))
    assert spaces.strong_lp_sum(space, family, 1.0) == pytest.approx(2.0)


def test_weak_norm_exact_cases(spaces):
    l1 = SpaceDescriptor(MeasureSpace.counting(4), 1.0)
    value, exact = spaces.weak_lp_norm(l1, np.eye(4), 1.0)
    assert exact and value == pytest.approx(4.0)

    linf = SpaceDescriptor(MeasureSpace.counting(2), INF)
    value, exact = spaces.weak_lp_norm(linf, np.array([[1.0, 0.0], [1.0, 1.0]]), 2.0)
    assert exact and value == pytest.approx(math.sqrt(2))


def test_p_convexity_lower_bound(spaces):
    l3 = SpaceDescriptor(MeasureSpace.counting(4), 3.0)
    assert spaces.p_convexity_lower_bound(l3, 2.0, budget=6, seed=0) <= 1.0 + 1e-9
    l1 = SpaceDescriptor(MeasureSpace.counting(4), 1.0)
    assert spaces.p_convexity_lower_bound(l1, 2.0, budget=6, seed=0) >= 2.0 - 1e-9


def test_sample_unit_vectors_are_unit(spaces, weighted_l3):
    samples = spaces.sample_unit_vectors(weighted_l3, 20, derive_rng(0, "test"))
    np.testing.assert_allclose(spaces.norm_eval(weighted_l3, samples), np.ones(20))

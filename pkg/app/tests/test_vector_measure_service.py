import dataclasses
import math

import numpy as np
import pytest

from app.constants.constants import ConjugateStatus
from app.core.errors import DimensionMismatchError, InvalidParameterError
from app.models.space import MeasureSpace, SpaceDescriptor
from app.models.weights import WeightFamily
from app.utils.operator_builders import OperatorBuilders

CELLS = [[0, 1, 2], [3, 4], [5, 6, 7]]


@pytest.fixture
def family(probability4):
    return WeightFamily.from_arrays(probability4, [[1.0, 1.0, 0.0, 0.0], [0.0, 2.0, 2.0, 0.0], [0.5, 0.5, 0.5, 0.5]])


@pytest.fixture
def partition_operator():
    return OperatorBuilders.partition_integration_operator(np.full(8, 1 / 8), CELLS)


def _partition_family(measure: MeasureSpace) -> WeightFamily:
    return WeightFamily.from_arrays(measure, [np.ones(8), np.full(8, 0.5), np.linspace(0.1, 1.0, 8)])


def test_mv_is_finitely_additive(vector_measures, family):
    m = vector_measures.build_mV(family)
    np.testing.assert_allclose(m.evaluate(range(4)), family.l1_norms)
    np.testing.assert_allclose(m.evaluate([0, 2]) + m.evaluate([1, 3]), m.evaluate(range(4)))
    np.testing.assert_array_equal(m.evaluate([]), np.zeros(3))


def test_null_atoms_of_mv(vector_measures, probability4):
    V = WeightFamily.from_arrays(probability4, [[1.0, 0.0, 1.0, 0.0], [2.0, 0.0, 0.0, 0.0]])
    m = vector_measures.build_mV(V)
    np.testing.assert_array_equal(m.null_atoms, [False, True, False, True])


def test_lpmv_norm_is_the_worst_member(vector_measures, family):
    ones = np.ones(4)
    assert vector_measures.lpmv_norm(ones, 1.0, family) == pytest.approx(family.norm_bound)
    assert vector_measures.lpmv_norm(ones, 2.0, family) == pytest.approx(math.sqrt(family.norm_bound))
    f = np.array([3.0, -1.0, 0.0, 7.0])
    assert vector_measures.lpmv_norm(f, math.inf, family) == pytest.approx(7.0)
    assert vector_measures.lpmv_norm(0.5 * f, 2.0, family) == pytest.approx(0.5 * vector_measures.lpmv_norm(f, 2.0, family))
    with pytest.raises(DimensionMismatchError):
        vector_measures.lpmv_norm(np.ones(3), 2.0, family)


def test_lpm_norm_of_mv_matches_lpmv(vector_measures, family):
    m = vector_measures.build_mV(family)
    f = np.array([0.3, 1.2, -0.7, 2.0])
    for p in (1.0, 2.0, 3.0):
        assert vector_measures.lpm_norm(f, m, p) == pytest.approx(vector_measures.lpmv_norm(f, p, family))


def test_l1m_norm_is_exact_by_enumeration(vector_measures, family):
    m = vector_measures.build_mV(family)
    value, note = vector_measures.l1m_norm(np.ones(4), m)
    assert value == pytest.approx(family.norm_bound)
    assert note.startswith("exact")


def test_countable_additivity_tails(vector_measures, family):
    check = vector_measures.countable_additivity_check(vector_measures.build_mV(family))
    assert check.passed
    assert len(check.tails) == 5
    assert check.tails[0] == pytest.approx(family.norm_bound)
    assert all(later <= earlier + 1e-12 for earlier, later in zip(check.tails, check.tails[1:]))

    identity = OperatorBuilders.identity(4, 2.0, measure=family.base)
    in_lp = vector_measures.countable_additivity_check(vector_measures.build_mT(identity), p=2.0, V=family)
    assert in_lp.passed
    assert in_lp.tails[0] == pytest.approx(math.sqrt(family.norm_bound))
    with pytest.raises(InvalidParameterError):
        vector_measures.countable_additivity_check(vector_measures.build_mV(family), sequence=[[0, 1], [1, 2]])


def test_rybakov_density_controls_every_live_column(vector_measures):
    T = OperatorBuilders.random_positive(3, 4, seed=6)
    m = vector_measures.build_mT(T)
    assert np.all(m.control_density > 0)
    np.testing.assert_allclose(m.evaluate([1]), T.matrix[:, 1])


def test_partition_family_is_conjugate_with_constant_one(vector_measures, partition_operator):
    V = _partition_family(partition_operator.codomain.measure)
    report = vector_measures.conjugate_family_synthesize(partition_operator, V, 2.0, C=1.0)
    assert report.status == ConjugateStatus.conjugate
    assert report.uniform_constant == 1.0
    assert all(check.constant <= 1.0 + 1e-4 for check in report.verification)
    assert len(report.nu_weights) == len(V)

    replay = vector_measures.conjugate_family_implies_regularity(partition_operator, V, report, 2.0, batch=64)
    assert not replay.flagged
    assert replay.families_checked > 0


def test_partition_hint_is_accepted(vector_measures, partition_operator):
    masses = partition_operator.domain.masses
    hint = np.zeros(8)
    for cell in CELLS:
        hint[cell] = masses[cell].sum()
    V = _partition_family(partition_operator.codomain.measure)
    report = vector_measures.conjugate_family_synthesize(partition_operator, V, 2.0, C=1.0, hint=hint)
    assert report.hint_accepted
    assert report.hint_constant <= 1.0 + 1e-6


def test_replay_flags_vanishing_weights(vector_measures, partition_operator):
    V = _partition_family(partition_operator.codomain.measure)
    report = vector_measures.conjugate_family_synthesize(partition_operator, V, 2.0, C=1.0)
    broken = dataclasses.replace(report, nu_weights=[np.zeros_like(w) for w in report.nu_weights])
    replay = vector_measures.conjugate_family_implies_regularity(partition_operator, V, broken, 2.0, batch=16)
    assert replay.flagged
    assert math.isinf(replay.assignment_ratio)


def test_replay_needs_a_conjugate_report(vector_measures, partition_operator):
    V = _partition_family(partition_operator.codomain.measure)
    report = vector_measures.conjugate_family_synthesize(partition_operator, V, 2.0, C=1.0)
    refused = dataclasses.replace(report, status=ConjugateStatus.unknown)
    with pytest.raises(InvalidParameterError):
        vector_measures.conjugate_family_implies_regularity(partition_operator, V, refused, 2.0)


def test_constant_kernel_needs_root_two(vector_measures):
    x_measure = MeasureSpace.uniform(4, total=2.0)
    y_measure = MeasureSpace.uniform(3)
    V = WeightFamily.from_arrays(y_measure, [np.ones(3)])
    T, m = vector_measures.kernel_vector_measure(np.ones((4, 3)), x_measure, y_measure, V, p=2.0)
    np.testing.assert_allclose(T.matrix, np.full((3, 4), 0.5))
    np.testing.assert_allclose(m.evaluate(range(4)), np.full(3, 2.0))
    report = vector_measures.conjugate_family_synthesize(T, V, 2.0)
    assert report.status == ConjugateStatus.conjugate
    assert report.uniform_constant == pytest.approx(math.sqrt(2.0), rel=1e-3)


def test_kernel_validation(vector_measures):
    x_measure, y_measure = MeasureSpace.uniform(2), MeasureSpace.uniform(3)
    with pytest.raises(DimensionMismatchError):
        vector_measures.kernel_vector_measure(np.ones((3, 2)), x_measure, y_measure)
    with pytest.raises(InvalidParameterError):
        vector_measures.kernel_vector_measure(-np.ones((2, 3)), x_measure, y_measure)


def test_identity_pipeline_at_p1_has_unit_constants(vector_measures, probability4):
    T = OperatorBuilders.identity(4, 1.0, measure=probability4)
    V = WeightFamily.from_arrays(probability4, [np.ones(4)])
    pipeline = vector_measures.conjugate_family_pth(T, None, V, 1.0)
    assert pipeline.conjugate.status == ConjugateStatus.conjugate
    for key in ("K", "inclusion", "C", "W_in_X_dual", "c_lower", "c_upper"):
        assert pipeline.constants[key] == pytest.approx(1.0, rel=1e-3), key
    np.testing.assert_allclose(pipeline.measure.control_density, np.ones(4))


def test_pth_power_factorable_check(vector_measures):
    T = OperatorBuilders.identity(3, 2.0)
    report = vector_measures.pth_power_factorable_check(T, p=2.0, bound=1.0)
    assert report.K == pytest.approx(1.0)
    assert report.K_exact
    assert report.inclusion_upper == pytest.approx(1.0)
    assert report.inclusion_lower <= 1.0 + 1e-9
    assert report.passed


def test_pth_power_factorable_check_without_p_convexity(vector_measures):
    T = OperatorBuilders.identity(3, 1.0, codomain_exponent=2.0)
    report = vector_measures.pth_power_factorable_check(T, p=2.0)
    assert not report.K_exact
    assert report.inclusion_upper is None
    assert report.passed is None


def test_indicator_of_the_whole_space_norms_l1(vector_measures, probability4):
    X = SpaceDescriptor(probability4, 1.0)
    report = vector_measures.positively_norming_constants([np.ones(4)], X)
    assert report.c_lower == pytest.approx(1.0)
    assert report.c_upper == pytest.approx(1.0)
    assert report.c_lower_exact
    assert report.positively_norming
    assert report.sign_pattern_deviation == pytest.approx(0.0, abs=1e-12)


def test_coordinate_functionals_norm_l1_with_half(vector_measures):
    X = SpaceDescriptor(MeasureSpace.counting(2), 1.0)
    report = vector_measures.positively_norming_constants([[1.0, 0.0], [0.0, 1.0]], X)
    assert report.c_lower_interval[0] == pytest.approx(0.5)
    assert report.c_lower == pytest.approx(0.5)
    assert report.c_upper == pytest.approx(1.0)


def test_half_indicator_is_not_norming(vector_measures, probability4):
    X = SpaceDescriptor(probability4, 1.0)
    report = vector_measures.positively_norming_constants([[1.0, 1.0, 0.0, 0.0]], X)
    assert report.c_lower == pytest.approx(0.0, abs=1e-12)
    assert not report.positively_norming


def test_norming_set_must_be_positive(vector_measures, probability4):
    X = SpaceDescriptor(probability4, 2.0)
    with pytest.raises(InvalidParameterError):
        vector_measures.positively_norming_constants([[1.0, -1.0, 0.0, 0.0]], X)

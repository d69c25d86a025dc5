import dataclasses

import numpy as np
import pytest

from app.constants.constants import BracketStatus, CertificateKind, CertificateMethod
from app.core.errors import InvalidSpaceError, OutsideDualBallError
from app.models.space import INF, MeasureSpace, SpaceDescriptor
from app.utils.operator_builders import OperatorBuilders


def test_top_corner_of_weighted_l2(synthesis):
    codomain = SpaceDescriptor(MeasureSpace.uniform(3), 2.0, np.array([1.0, 2.0, 4.0]))
    np.testing.assert_allclose(synthesis.top_corner(codomain, 2.0), [1.0, 2.0, 4.0])


def test_top_corner_needs_a_box(synthesis):
    with pytest.raises(InvalidSpaceError):
        synthesis.top_corner(SpaceDescriptor(MeasureSpace.counting(3), INF), 2.0)
    with pytest.raises(InvalidSpaceError):
        synthesis.top_corner(SpaceDescriptor(MeasureSpace.counting(3), 3.0), 2.0)


def test_identity_is_dominated_with_constant_one(synthesis):
    T = OperatorBuilders.identity(4, 2.0)
    y_star = synthesis.top_corner(T.codomain, 2.0)
    outcome = synthesis.synthesize_dominating_weight(T, 2.0, y_star, 1.0)
    assert outcome.feasible
    assert outcome.certificate.C <= 1.0 + 1e-8
    np.testing.assert_allclose(outcome.certificate.z_star, np.ones(4), atol=1e-8)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_min_constant_matches_the_operator_norm_at_p2(synthesis, seed):
    T = OperatorBuilders.random_signed(4, 4, seed=seed)
    y_star = synthesis.top_corner(T.codomain, 2.0)
    bracket = synthesis.min_constant_domination(T, 2.0, y_star, seed=seed)
    norm = np.linalg.norm(T.matrix, 2)
    assert bracket.status == BracketStatus.certified
    assert bracket.lower <= norm * (1 + 1e-9)
    assert bracket.upper == pytest.approx(norm, rel=1e-3)
    assert bracket.certificate.kind == CertificateKind.domination
    assert synthesis.verify_certificate(T, bracket.certificate, seed=seed).passed


def test_certificate_with_shrunk_weight_fails_the_audit(synthesis):
    T = OperatorBuilders.random_positive(3, 3, seed=4)
    y_star = synthesis.top_corner(T.codomain, 2.0)
    certificate = synthesis.min_constant_domination(T, 2.0, y_star).certificate
    tampered = dataclasses.replace(certificate, z_star=0.5 * np.asarray(certificate.z_star))
    audit = synthesis.verify_certificate(T, tampered)
    assert not audit.passed
    assert audit.residual > 0


def test_constant_below_the_norm_is_not_feasible(synthesis):
    T = OperatorBuilders.random_signed(3, 3, seed=5)
    y_star = synthesis.top_corner(T.codomain, 2.0)
    C = 0.5 * np.linalg.norm(T.matrix, 2)
    outcome = synthesis.synthesize_dominating_weight(T, 2.0, y_star, C)
    assert not outcome.feasible
    if outcome.infeasible:
        assert outcome.witness_ratio > C
        assert outcome.witness


def test_zero_operator_gets_the_zero_certificate(synthesis):
    T = OperatorBuilders.between(np.zeros((2, 3)), 2.0, 2.0)
    y_star = synthesis.top_corner(T.codomain, 2.0)
    bracket = synthesis.min_constant_domination(T, 2.0, y_star)
    assert bracket.upper == 0.0
    assert bracket.certificate.method == CertificateMethod.zero


def test_y_star_outside_the_ball_is_rejected(synthesis):
    T = OperatorBuilders.identity(3, 2.0)
    with pytest.raises(OutsideDualBallError):
        synthesis.synthesize_dominating_weight(T, 2.0, 2.0 * np.ones(3), 1.0)
    with pytest.raises(OutsideDualBallError):
        synthesis.synthesize_dominating_weight(T, 2.0, -np.ones(3), 1.0)


def test_domain_must_be_p_convex(synthesis):
    T = OperatorBuilders.identity(3, 1.0, codomain_exponent=2.0)
    with pytest.raises(InvalidSpaceError):
        synthesis.synthesize_dominating_weight(T, 2.0, np.ones(3), 1.0)


def test_p1_identity_domination_uses_the_exact_oracle(synthesis):
    T = OperatorBuilders.identity(5, 1.0)
    y_star = synthesis.top_corner(T.codomain, 1.0)
    bracket = synthesis.min_constant_domination(T, 1.0, y_star)
    assert bracket.upper == pytest.approx(1.0, rel=1e-4)
    assert synthesis.verify_certificate(T, bracket.certificate).passed


def test_hint_seeds_the_upper_end(synthesis):
    T = OperatorBuilders.identity(3, 2.0)
    y_star = synthesis.top_corner(T.codomain, 2.0)
    bracket = synthesis.min_constant_domination(T, 2.0, y_star, hint=np.ones(3))
    assert bracket.upper == pytest.approx(1.0, rel=1e-9)


def test_pietsch_bracket_on_the_l_infinity_identity(synthesis, linf_probability8):
    T = OperatorBuilders.identity(8, INF, codomain_exponent=2.0, measure=linf_probability8.measure)
    y_star = synthesis.top_corner(T.codomain, 2.0)
    bracket = synthesis.min_constant_pietsch(T, 2.0, y_star)
    assert bracket.certificate.kind == CertificateKind.pietsch
    assert bracket.lower <= bracket.upper
    assert bracket.upper == pytest.approx(1.0, rel=1e-3)


def test_feasibility_is_monotone_in_the_constant(synthesis):
    T = OperatorBuilders.random_signed(3, 3, seed=6)
    y_star = synthesis.top_corner(T.codomain, 2.0)
    bracket = synthesis.min_constant_domination(T, 2.0, y_star)
    for factor in (1.2, 1.5, 3.0):
        C = factor * bracket.upper
        assert synthesis.synthesize_dominating_weight(T, 2.0, y_star, C).feasible
        relaxed = dataclasses.replace(bracket.certificate, C=C)
        assert synthesis.verify_certificate(T, relaxed).passed

import numpy as np
import pytest
from scipy.optimize import linprog

from app.constants.constants import LinearProgramStatus
from app.core.errors import InfeasibleProgramError
from app.utils.random_utils import derive_rng


@pytest.mark.parametrize("seed", range(8))
def test_random_programs_match_scipy(lp, seed):
    rng = derive_rng(seed, "lp-test")
    n, m = 5, 4
    A_ub = rng.uniform(-1.0, 2.0, (m, n))
    x0 = rng.random(n)
    b_ub = A_ub @ x0 + rng.random(m)
    c = rng.uniform(0.1, 2.0, n)
    A_eq = np.ones((1, n))
    b_eq = np.array([x0.sum()])
    ours = lp.solve(c, A_ub, b_ub, A_eq, b_eq)
    reference = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=[(0, None)] * n, method="highs")
    assert ours.optimal
    assert ours.fun == pytest.approx(reference.fun, rel=1e-7, abs=1e-9)
    assert np.all(A_ub @ ours.x <= b_ub + 1e-8)


def test_upper_bounds_are_respected(lp):
    result = lp.solve(c=np.array([-1.0, -1.0]), upper=np.array([2.0, 3.0]))
    assert result.optimal
    assert result.fun == pytest.approx(-5.0)
    np.testing.assert_allclose(result.x, [2.0, 3.0])


def test_infeasible_program(lp):
    result = lp.solve(c=np.array([1.0]), A_ub=np.array([[1.0]]), b_ub=np.array([-1.0]))
    assert result.status == LinearProgramStatus.infeasible
    assert not result.optimal
    with pytest.raises(InfeasibleProgramError):
        lp.solve_or_raise(c=np.array([1.0]), A_ub=np.array([[1.0]]), b_ub=np.array([-1.0]))


def test_unbounded_program(lp):
    result = lp.solve(c=np.array([-1.0, 0.0]), A_ub=np.array([[0.0, 1.0]]), b_ub=np.array([1.0]))
    assert result.status == LinearProgramStatus.unbounded


def test_marginals_follow_the_sensitivity_sign(lp):
    # min x subject to -x <= -2: optimum 2, d(opt)/d(b) = -1
    result = lp.solve(c=np.array([1.0]), A_ub=np.array([[-1.0]]), b_ub=np.array([-2.0]))
    assert result.fun == pytest.approx(2.0)
    assert result.marginals_ub[0] == pytest.approx(-1.0)

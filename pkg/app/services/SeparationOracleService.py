# app/services/SeparationOracleService.py
import logging
from typing import List, Optional

import numpy as np
from numpy.typing import NDArray

from app.constants.constants import OracleKind
from app.core.config import settings
from app.models.oracle import DominationForm, ExactRatio, OracleResult
from app.services.SpaceService import SpaceService
from app.utils.random_utils import derive_rng

logger = logging.getLogger(__name__)

_ASCENT_ITERATIONS = 120
_TINY = 1e-300


class SeparationOracleService:
    """
    Finds unit vectors f with lhs(f) > rhs(f) for a DominationForm.

    p = 2 is decided exactly by an eigenvalue, p = 1 with a separable
    right side by a coordinate check; every other case runs a multistart
    projected ascent over the unit sphere and is reported as inexact.
    """

    def __init__(self, space_service: Optional[SpaceService] = None, budget: Optional[int] = None):
        """
        Initialize the SeparationOracleService.

        Args:
            space_service: shared SpaceService
            budget: random restarts of the ascent oracle
        """
        self.spaces = space_service or SpaceService()
        self.budget = budget or settings.WEIGHTFORGE_DEFAULT_BUDGET

    @staticmethod
    def is_exact(form: DominationForm) -> bool:
        return form.p == 2.0 or (form.p == 1.0 and form.separable)

    # ------------------------------
    # Exact sup lhs / rhs
    # ------------------------------
    def exact_ratio(self, form: DominationForm) -> Optional[ExactRatio]:
        """
        sup over f != 0 of lhs(f) / rhs(f), or None when no exact method applies.

        The ratio is inf when some f has lhs(f) > 0 = rhs(f).
        """
        if form.p == 2.0:
            Q = form.matrix.T @ (form.w[:, None] * form.matrix)
            P = form.G.T @ (form.d[:, None] * form.G)
            return self._generalized_ratio(form, Q, P)
        if form.p == 1.0 and form.separable:
            return self._coordinate_ratio(form)
        return None

    def _unit(self, form: DominationForm, direction: NDArray[np.float64]) -> NDArray[np.float64]:
        direction = np.asarray(direction, dtype=np.float64)
        if direction.sum() < 0:
            direction = -direction
        return self.spaces.normalize(form.space, direction)

    def _generalized_ratio(self, form: DominationForm, Q: NDArray[np.float64], P: NDArray[np.float64]) -> ExactRatio:
        Q = (Q + Q.T) / 2.0
        P = (P + P.T) / 2.0
        scale = float(np.linalg.eigvalsh(Q)[-1])
        if scale <= 0:
            return ExactRatio(0.0, None)
        values, vectors = np.linalg.eigh(P)
        top = max(float(values[-1]), 0.0)
        keep = values > 1e-12 * max(top, _TINY)
        null = vectors[:, ~keep]
        if null.shape[1]:
            restricted = null.T @ Q @ null
            null_values, null_vectors = np.linalg.eigh((restricted + restricted.T) / 2.0)
            if null_values[-1] > 1e-10 * scale:
                return ExactRatio(float("inf"), self._unit(form, null @ null_vectors[:, -1]))
        if not np.any(keep):
            return ExactRatio(float("inf"), None)
        R = vectors[:, keep] / np.sqrt(values[keep])[None, :]
        reduced = R.T @ Q @ R
        reduced_values, reduced_vectors = np.linalg.eigh((reduced + reduced.T) / 2.0)
        return ExactRatio(float(reduced_values[-1]), self._unit(form, R @ reduced_vectors[:, -1]))

    def _coordinate_ratio(self, form: DominationForm) -> ExactRatio:
        lhs_coefficients = np.abs(form.matrix).T @ form.w
        rhs_coefficients = np.abs(form.G).T @ form.d
        if not np.any(lhs_coefficients > 0):
            return ExactRatio(0.0, None)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = np.where(
                lhs_coefficients > 0,
                np.where(rhs_coefficients > 0, lhs_coefficients / np.maximum(rhs_coefficients, _TINY), np.inf),
                0.0,
            )
        index = int(np.argmax(ratios))
        direction = np.zeros(form.space.dimension)
        direction[index] = 1.0
        return ExactRatio(float(ratios[index]), self._unit(form, direction))

    # ------------------------------
    # Violation search
    # ------------------------------
    def find_violation(
        self,
        form: DominationForm,
        seed: int = 0,
        starts: Optional[List[NDArray[np.float64]]] = None,
        round_index: int = 0,
    ) -> OracleResult:
        """
        Largest relative violation (lhs - rhs) / scale over the unit sphere.

        Args:
            form: the two forms to compare
            seed: base seed of the random restarts
            starts: extra starting vectors for the ascent (previous cuts)
            round_index: cutting-plane round, so each round draws fresh restarts

        Returns:
            OracleResult; `cut` is the maximizing unit vector
        """
        if form.p == 2.0:
            return self._eigen_violation(form)
        if form.p == 1.0 and form.separable:
            return self._coordinate_violation(form)
        return self._ascent_violation(form, seed, starts or [], round_index)

    def _eigen_violation(self, form: DominationForm) -> OracleResult:
        Q = form.matrix.T @ (form.w[:, None] * form.matrix)
        P = form.G.T @ (form.d[:, None] * form.G)
        scale = float(np.linalg.eigvalsh((Q + Q.T) / 2.0)[-1])
        if scale <= 0:
            return OracleResult(0.0, None, True, OracleKind.eigen)
        M = P - Q
        values, vectors = np.linalg.eigh((M + M.T) / 2.0)
        violation = max(0.0, -float(values[0])) / scale
        return OracleResult(violation, self._unit(form, vectors[:, 0]), True, OracleKind.eigen)

    def _coordinate_violation(self, form: DominationForm) -> OracleResult:
        kappa = self.spaces.coordinate_norms(form.space)
        lhs_coefficients = np.abs(form.matrix).T @ form.w / kappa
        rhs_coefficients = np.abs(form.G).T @ form.d / kappa
        scale = float(np.max(lhs_coefficients))
        if scale <= 0:
            return OracleResult(0.0, None, True, OracleKind.coordinate)
        gaps = lhs_coefficients - rhs_coefficients
        index = int(np.argmax(gaps))
        cut = np.zeros(form.space.dimension)
        cut[index] = 1.0 / kappa[index]
        return OracleResult(max(0.0, float(gaps[index])) / scale, cut, True, OracleKind.coordinate)

    def _ascent_violation(self, form: DominationForm, seed: int, starts: List[NDArray[np.float64]], round_index: int) -> OracleResult:
        space = form.space
        n = space.dimension
        kappa = self.spaces.coordinate_norms(space)
        rng = derive_rng(seed, "oracle-ascent", round_index)
        initial = [np.diag(1.0 / kappa), self.spaces.sample_unit_vectors(space, 4 * self.budget + n, rng)]
        if starts:
            initial.insert(0, np.vstack(starts))
        F = np.vstack(initial)
        norms = np.atleast_1d(self.spaces.norm_eval(space, F))
        F = F[norms > 0] / norms[norms > 0, None]

        values = form.gap(F)
        scale = float(np.max(form.lhs(F)))
        steps = np.full(F.shape[0], 0.25)
        for _ in range(_ASCENT_ITERATIONS):
            gradient = form.gradient(F)
            lengths = np.linalg.norm(gradient, axis=1)
            moving = lengths > 0
            if not np.any(moving):
                break
            direction = np.zeros_like(gradient)
            direction[moving] = gradient[moving] / lengths[moving, None]
            proposal = F + (steps * np.linalg.norm(F, axis=1))[:, None] * direction
            proposal_norms = np.atleast_1d(self.spaces.norm_eval(space, proposal))
            proposal_norms[proposal_norms == 0] = 1.0
            proposal = proposal / proposal_norms[:, None]
            proposal_values = form.gap(proposal)
            improved = proposal_values > values
            F[improved] = proposal[improved]
            values[improved] = proposal_values[improved]
            scale = max(scale, float(np.max(form.lhs(proposal))))
            steps = np.where(improved, steps * 1.5, steps * 0.5)
            if np.all(steps < 1e-10):
                break

        if scale <= 0:
            return OracleResult(0.0, None, False, OracleKind.multistart)
        index = int(np.argmax(values))
        logger.debug(f"ascent oracle: best gap {values[index]:.3e} over {F.shape[0]} starts")
        return OracleResult(max(0.0, float(values[index])) / scale, F[index].copy(), False, OracleKind.multistart)

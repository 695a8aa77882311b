"""Confidence ellipsoid for linear bandits with arm-dependent noise levels.

Rewards x = <theta*, phi> + noise with noise sigma-sub-Gaussian, sigma known
per round.  Observations are weighted by 1/sigma^2 and regularised with a
quadratic penalty given by a positive-definite V0.
"""
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError


def _cholesky(m, what):
    try:
        return np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise DomainError(f"{what} is not positive definite") from exc


def _logdet(chol):
    return 2.0 * float(np.sum(np.log(np.diag(chol))))


def _cho_solve(chol, b):
    y = np.linalg.solve(chol, b)
    return np.linalg.solve(chol.T, y)


@dataclass
class DesignState:
    """Accumulated design V = sum phi phi^T / sigma^2 and response b = sum x phi / sigma^2."""

    V0: np.ndarray
    V: np.ndarray
    b: np.ndarray
    n: int = 0
    logdet_V0: float = 0.0

    @classmethod
    def new(cls, d, V0=None):
        V0 = np.eye(d) if V0 is None else np.array(V0, dtype=float)
        if V0.shape != (d, d):
            raise ValueError(f"V0 must be {d}x{d}, got shape {V0.shape}")
        if not np.allclose(V0, V0.T, rtol=0, atol=1e-12 * max(1.0, np.abs(V0).max())):
            raise DomainError("V0 must be symmetric")
        chol = _cholesky(V0, "V0")
        return cls(V0, np.zeros((d, d)), np.zeros(d), 0, _logdet(chol))

    @property
    def dim(self):
        return self.b.size

    def _chol(self):
        return _cholesky(self.V0 + self.V, "V0 + V (corrupted state)")


def update(state, phi, x, sigma=1.0):
    """Add one (phi, x) pair observed with noise level sigma; modifies and returns ``state``."""
    phi = np.asarray(phi, dtype=float).ravel()
    if phi.size != state.dim:
        raise ValueError(f"phi has dimension {phi.size}, expected {state.dim}")
    if not sigma > 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    w = 1.0 / (sigma * sigma)
    state.V += w * np.outer(phi, phi)
    # keep V exactly symmetric against rounding drift
    state.V = 0.5 * (state.V + state.V.T)
    state.b += w * x * phi
    state.n += 1
    return state


def estimate(state):
    """Regularised least squares (V0 + V)^{-1} b."""
    if state.n == 0:
        return np.zeros(state.dim)
    return _cho_solve(state._chol(), state.b)


def info_gain(state):
    """1/2 (logdet(V0 + V) - logdet V0)."""
    if state.n == 0:
        return 0.0
    return max(0.0, 0.5 * (_logdet(state._chol()) - state.logdet_V0))


class EllipsoidCheck(NamedTuple):
    member: bool
    lhs: float
    radius_sq: float
    radius_ay: float


def in_ellipsoid(state, theta, delta):
    """Test ||theta - estimate||^2_{V0+V} <= ||theta||^2_{V0} + 2 (gamma + log(1/delta)).

    Also returns the comparison radius ||theta||_{V0} + sqrt(2 (gamma + log(1/delta)))
    of the classical self-normalised bound, whose square always dominates
    ``radius_sq``.
    """
    if not 0 < delta <= 1:
        raise DomainError(f"delta must be in (0, 1], got {delta}")
    theta = np.asarray(theta, dtype=float).ravel()
    if theta.size != state.dim:
        raise ValueError(f"theta has dimension {theta.size}, expected {state.dim}")
    diff = theta - estimate(state)
    lhs = float(diff @ (state.V0 + state.V) @ diff)
    budget = 2.0 * (info_gain(state) + math.log(1.0 / delta))
    prior = float(theta @ state.V0 @ theta)
    radius_sq = prior + budget
    radius_ay = math.sqrt(prior) + math.sqrt(budget)
    return EllipsoidCheck(lhs <= radius_sq, lhs, radius_sq, radius_ay)

"""Lp (quasi-)norm objective and the reweighted quadratic pieces of one solver step."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .data import ClassStats

DEFAULT_TAU = 1e-12


class PerturbationRequired(ArithmeticError):
    """A reweighting denominator |.|^(2-p) or |.|^(1-p) is (numerically) zero."""


class DegenerateDirection(ArithmeticError):
    """w annihilates every class offset, so the objective's denominator is zero."""


@dataclass(frozen=True)
class LpParams:
    p: float = 1.0
    sigma: float = 0.0

    def __post_init__(self):
        if not self.p > 0:
            raise ValueError(f"p must be positive, got {self.p}")
        if not self.sigma >= 0:
            raise ValueError(f"sigma must be nonnegative, got {self.sigma}")

    @property
    def convergence_guaranteed(self):
        """Monotone descent is guaranteed only for 1 <= p <= 2."""
        return 1.0 <= self.p <= 2.0


def lp_norm_matrix(Q, p):
    """(sum over all entries |q|^p)^(1/p); the Frobenius norm at p = 2."""
    if not p > 0:
        raise ValueError(f"p must be positive, got {p}")
    Q = np.asarray(Q, dtype=np.float64)
    return float(np.sum(np.abs(Q) ** p) ** (1.0 / p))


def objective_parts(w, stats: ClassStats, params: LpParams):
    """Return (numerator, denominator) of the single-direction objective."""
    w = np.ascontiguousarray(w, dtype=np.float64)
    within, between = _kernels.lp_sums(
        stats.z_cols, stats.v_cols, stats.v_counts, w, float(params.p)
    )
    num = within + params.sigma * float(np.sum(np.abs(w) ** params.p))
    return num, between


def objective_j0(w, stats: ClassStats, params: LpParams):
    """Within-class Lp scatter plus sigma*||w||_p^p, over the between-class Lp scatter.

    Scale invariant in w, so it may be evaluated on unnormalized iterates.
    """
    num, den = objective_parts(w, stats, params)
    if den <= 0.0:
        raise DegenerateDirection("w is orthogonal to every class offset column")
    return num / den


def build_H(w, stats: ClassStats, params: LpParams, tau=DEFAULT_TAU, clamp=False):
    """Reweighted within-class Gram matrix plus the reweighted sigma diagonal.

    With ``clamp`` the zero-denominator check is replaced by flooring the
    denominators at ``tau``.
    """
    w = np.ascontiguousarray(w, dtype=np.float64)
    H, status = _kernels.weighted_gram(
        stats.z_cols_active, w, float(params.p), float(params.sigma), float(tau), clamp
    )
    if status != _kernels.OK:
        raise PerturbationRequired("|w^T Z_ijk| or |w_k| below tau")
    return H


def build_h(w, stats: ClassStats, p, tau=DEFAULT_TAU, clamp=False):
    """Linearization of the between-class Lp term at w (its gradient divided by p)."""
    w = np.ascontiguousarray(w, dtype=np.float64)
    h, status = _kernels.reweighted_offsets(
        stats.v_cols_active, stats.v_counts_active, w, float(p), float(tau), clamp
    )
    if status != _kernels.OK:
        raise PerturbationRequired("|w^T V_ik| below tau with p < 1")
    return h

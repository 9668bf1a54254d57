"""Classic L2 2DLDA: top generalized eigenvectors of the scatter pair (Sb, Sw)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .data import ClassStats, Dataset, class_statistics
from .solver import ProjectionModel


class SingularScatterError(np.linalg.LinAlgError):
    """The (regularized) within-class scatter is singular."""


@dataclass(frozen=True, eq=False)
class ScatterPair:
    Sb: np.ndarray
    Sw: np.ndarray


def scatter_matrices(stats: ClassStats) -> ScatterPair:
    """Between- and within-class scatter for matrix samples, both scaled by 1/N."""
    N = stats.n_samples
    V, Z = stats.V, stats.Z
    Sb = np.einsum("i,iak,ibk->ab", stats.class_counts.astype(np.float64), V, V) / N
    Sw = np.einsum("jak,jbk->ab", Z, Z) / N
    return ScatterPair(0.5 * (Sb + Sb.T), 0.5 * (Sw + Sw.T))


def fit_2dlda(dataset: Dataset, r1: int, ridge: float = 0.0) -> ProjectionModel:
    """Eigen-based 2DLDA.

    Columns of W are the generalized eigenvectors of Sb w = lambda (Sw + ridge I) w
    for the r1 largest eigenvalues, rescaled to unit length.  The columns are
    not orthogonal in general, so the model is tagged ``orthonormal=False``.

    Raises :class:`SingularScatterError` when Sw + ridge I is not positive
    definite, which is the expected outcome for ridge=0 on small samples.
    """
    stats = class_statistics(dataset)
    d1 = stats.d1
    if not 1 <= r1 <= d1:
        raise ValueError(f"r1 must lie in [1, {d1}], got {r1}")
    if ridge < 0:
        raise ValueError("ridge must be nonnegative")
    pair = scatter_matrices(stats)
    Sw = pair.Sw + ridge * np.eye(d1)
    ev = np.linalg.eigvalsh(Sw)
    if ev[0] <= d1 * np.finfo(float).eps * max(ev[-1], np.finfo(float).tiny):
        raise SingularScatterError(
            f"singular within-class scatter (min eigenvalue {ev[0]:.3g}, ridge={ridge})"
        )
    # symmetric-definite reduction: Cholesky of Sw, then a symmetric eigensolve
    lam, vecs = scipy.linalg.eigh(pair.Sb, Sw)
    order = np.argsort(-lam, kind="stable")[:r1]
    lam = np.maximum(lam[order], 0.0)
    W = vecs[:, order]
    W = W / np.linalg.norm(W, axis=0)
    return ProjectionModel(W, None, (), method="eigen2dlda", orthonormal=False, eigenvalues=lam)

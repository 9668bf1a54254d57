"""Iterative closed-form solver for one discriminant direction and
orthogonal deflation for several.

Each step of :func:`solve_direction` freezes the Lp reweighting at the current
iterate, which turns the ratio objective into

    min_w  w^T H w   subject to   h^T w = 1,

solved in closed form by one symmetric linear solve ``H x = h`` followed by
``w = x / (h^T x)``.  Iterates are normalized to unit L2 length; the objective
is scale invariant so this only fixes the representative.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from .data import ClassStats, Dataset, class_statistics
from .lp import (
    DEFAULT_TAU,
    DegenerateDirection,
    LpParams,
    PerturbationRequired,
    build_H,
    build_h,
    objective_j0,
    objective_parts,
)

log = logging.getLogger(__name__)

CONVERGED = "converged"
ITMAX_REACHED = "itmax_reached"


class SolverError(RuntimeError):
    pass


class NoDiscriminantDirection(SolverError):
    """Every class offset stays orthogonal to the iterate despite perturbation."""


@dataclass(frozen=True)
class SolverConfig:
    p: float = 1.0
    sigma: float = 0.01
    epsilon: float = 1e-4
    itmax: int = 50
    tau: float = DEFAULT_TAU
    delta_mag: float = 1e-6
    seed: int = 0
    r1: int = 1
    max_perturbations: int = 5

    def __post_init__(self):
        LpParams(self.p, self.sigma)
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.itmax < 1:
            raise ValueError("itmax must be at least 1")
        if not self.delta_mag > 0:
            raise ValueError("delta_mag must be positive")
        if self.r1 < 1:
            raise ValueError("r1 must be at least 1")

    @property
    def params(self):
        return LpParams(self.p, self.sigma)


@dataclass
class SolverTrace:
    """What happened while solving for one direction.

    ``objectives[t]`` is the objective after iteration t+1; the value at the
    starting point is kept separately in ``initial_objective``.
    ``step_starts[t]`` is the objective at the point iteration t+1 started
    from.  It equals the previous entry of the chain unless the iterate was
    perturbed first (those iterations are listed in ``perturbed_steps``).
    """

    initial_objective: float = float("nan")
    objectives: list = field(default_factory=list)
    step_starts: list = field(default_factory=list)
    perturbed_steps: list = field(default_factory=list)
    termination: str = ITMAX_REACHED
    iterations: int = 0
    perturbations: int = 0
    ridge_fallbacks: int = 0
    clamped_steps: int = 0
    convergence_guaranteed: bool = True

    @property
    def converged(self):
        return self.termination == CONVERGED

    def descent_violations(self, rtol=1e-9):
        """Iterations whose step increased the objective by more than ``rtol`` (relative)."""
        return [
            t for t, (a, b) in enumerate(zip(self.step_starts, self.objectives))
            if b > a + rtol * abs(a)
        ]


@dataclass(frozen=True, eq=False)
class ProjectionModel:
    """Left projection matrix W (d1 x r1); a sample X maps to W^T X.

    ``orthonormal`` is False for producers (the eigen baseline) whose columns
    are not mutually orthogonal.
    """

    W: np.ndarray
    config: SolverConfig | None = None
    traces: tuple = ()
    method: str = "g2dlda"
    orthonormal: bool = True
    eigenvalues: np.ndarray | None = None

    @property
    def d1(self):
        return self.W.shape[0]

    @property
    def r1(self):
        return self.W.shape[1]


def _unit(v):
    return v / np.linalg.norm(v)


def _solve_spd(H, h, trace):
    """Solve H x = h for symmetric H, falling back to a tiny ridge if H is singular."""
    try:
        return scipy.linalg.cho_solve(scipy.linalg.cho_factor(H), h)
    except np.linalg.LinAlgError:
        pass
    d = H.shape[0]
    scale = np.trace(H) / d
    ridge = 1e-10 * scale if scale > 0 else 1.0
    trace.ridge_fallbacks += 1
    log.debug("H not positive definite; retrying with ridge %.3g", ridge)
    return scipy.linalg.solve(H + ridge * np.eye(d), h, assume_a="sym")


def solve_direction(stats: ClassStats, config: SolverConfig, w0=None, seed=None):
    """Minimize the single-direction Lp ratio objective.

    Returns ``(w, trace)`` with ``w`` a unit vector.  For 1 <= p <= 2 the
    final iterate is returned; otherwise descent is not guaranteed and the
    iterate with the lowest recorded objective is returned instead.

    Degenerate reweightings (a zero |w^T Z_ijk|, |w_k| or all-zero h) are
    handled by nudging w with a seeded uniform vector of magnitude
    ``config.delta_mag``.  After ``config.max_perturbations`` nudges, a
    still-vanishing h raises :class:`NoDiscriminantDirection`, while
    vanishing reweighting denominators are floored at ``config.tau``.
    """
    params = config.params
    d = stats.d1
    if stats.n_classes < 2:
        raise ValueError("at least two classes are required")
    rng = np.random.default_rng(config.seed if seed is None else seed)
    w = np.full(d, 1.0 / np.sqrt(d)) if w0 is None else _unit(np.asarray(w0, dtype=np.float64))
    trace = SolverTrace(convergence_guaranteed=params.convergence_guaranteed)

    def perturb(w, why):
        if trace.perturbations >= config.max_perturbations:
            return None
        trace.perturbations += 1
        log.debug("perturbing iterate (%s)", why)
        return _unit(w + rng.uniform(-config.delta_mag, config.delta_mag, size=d))

    def safe_objective(w):
        try:
            return objective_j0(w, stats, params)
        except DegenerateDirection:
            return np.inf

    trace.initial_objective = safe_objective(w)
    best_w, best_j = w, trace.initial_objective
    clamp = False
    current_j = trace.initial_objective
    for t in range(config.itmax):
        nudges = trace.perturbations
        while True:
            try:
                if objective_parts(w, stats, params)[1] <= 0.0:
                    raise DegenerateDirection("zero between-class term")
                H = build_H(w, stats, params, config.tau, clamp)
                h = build_h(w, stats, params.p, config.tau, clamp)
                if not np.any(h):
                    raise DegenerateDirection("h vanished")
                break
            except PerturbationRequired as exc:
                nudged = perturb(w, exc)
                if nudged is None:
                    clamp = True
                    trace.clamped_steps += 1
                else:
                    w = nudged
            except DegenerateDirection as exc:
                nudged = perturb(w, exc)
                if nudged is None:
                    raise NoDiscriminantDirection(
                        f"no discriminant direction after {trace.perturbations} perturbations"
                    ) from exc
                w = nudged
        clamp = False
        if trace.perturbations != nudges:
            current_j = safe_objective(w)
            trace.perturbed_steps.append(t)
        trace.step_starts.append(current_j)

        x = _solve_spd(H, h, trace)
        denom = h @ x
        if not np.isfinite(denom) or denom == 0.0:
            raise SolverError("linear solve produced a degenerate step")
        w_new = _unit(x / denom)

        j = safe_objective(w_new)
        current_j = j
        trace.objectives.append(j)
        trace.iterations += 1
        if j < best_j:
            best_w, best_j = w_new, j
        step = min(np.linalg.norm(w_new - w), np.linalg.norm(w_new + w))
        w = w_new
        if step < config.epsilon:
            trace.termination = CONVERGED
            break

    if not params.convergence_guaranteed:
        w = best_w
    return w, trace


def null_space_basis(Ws, atol=1e-8):
    """Orthonormal basis (d1 x (d1 - s)) of the vectors orthogonal to the columns of Ws."""
    Ws = np.asarray(Ws, dtype=np.float64)
    if Ws.ndim == 1:
        Ws = Ws[:, None]
    d, s = Ws.shape
    if s >= d:
        raise ValueError(f"need s < d1, got s={s}, d1={d}")
    if s == 0:
        return np.eye(d)
    if np.max(np.abs(Ws.T @ Ws - np.eye(s))) > atol:
        raise ValueError("columns of Ws are not orthonormal")
    # complete QR: trailing columns of Q span the orthogonal complement of range(Ws)
    Q, _ = np.linalg.qr(Ws, mode="complete")
    return np.ascontiguousarray(Q[:, s:])


def fit_stats(stats: ClassStats, config: SolverConfig) -> ProjectionModel:
    """Greedy deflation: each new direction solves the problem restricted to
    the orthogonal complement of the directions found so far."""
    d1 = stats.d1
    if config.r1 > d1:
        raise ValueError(f"r1={config.r1} exceeds d1={d1}")
    directions, traces = [], []
    B = np.eye(d1)
    for s in range(config.r1):
        reduced = stats if s == 0 else stats.project(B)
        seed = np.random.SeedSequence([config.seed, s])
        w_red, trace = solve_direction(reduced, config, seed=seed)
        directions.append(_unit(B @ w_red))
        traces.append(trace)
        log.info(
            "direction %d: %s after %d iterations, J0=%.6g",
            s + 1,
            trace.termination,
            trace.iterations,
            trace.objectives[-1] if trace.objectives else trace.initial_objective,
        )
        if s + 1 < config.r1:
            B = null_space_basis(np.column_stack(directions))
    W = np.column_stack(directions)
    return ProjectionModel(W, config, tuple(traces))


def fit(dataset: Dataset, config: SolverConfig) -> ProjectionModel:
    if dataset.n_classes < 2:
        raise ValueError("at least two classes are required")
    return fit_stats(class_statistics(dataset), config)


def with_r1(config: SolverConfig, r1: int) -> SolverConfig:
    return replace(config, r1=r1)

import time

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from conftest import axis_dataset, random_dataset
from g2dlda import (
    Dataset,
    NoDiscriminantDirection,
    SolverConfig,
    class_statistics,
    fit,
    fit_2dlda,
    null_space_basis,
    objective_j0,
    solve_direction,
)
from g2dlda.solver import ITMAX_REACHED


def _dense_top_eigvec(Sb, Sw):
    """Top eigenvector of Sw^-1 Sb from a general (non-symmetric) dense eigensolve."""
    vals, vecs = scipy.linalg.eig(np.linalg.solve(Sw, Sb))
    k = int(np.argmax(vals.real))
    return vecs[:, k].real


class TestSolveDirection:
    def test_axis_separation(self):
        w, trace = solve_direction(class_statistics(axis_dataset()), SolverConfig(p=2, sigma=0.01))
        assert min(np.linalg.norm(w - [1, 0]), np.linalg.norm(w + [1, 0])) < 1e-6
        assert trace.converged

    def test_p2_sigma0_is_generalized_eigenvector(self):
        d = random_dataset(11, c=3, n=10, d1=6, d2=4)
        s = class_statistics(d)
        cfg = SolverConfig(p=2, sigma=0.0, epsilon=1e-12, itmax=5000)
        w, trace = solve_direction(s, cfg)
        Sb, Sw = oracles.scatter(d.X.tolist(), d.labels.tolist())
        mu = (w @ Sb @ w) / (w @ Sw @ w)
        assert np.linalg.norm(Sb @ w - mu * Sw @ w) / np.linalg.norm(w) < 1e-5
        assert oracles.principal_angle(w, _dense_top_eigvec(Sb, Sw)) < 1e-3

    def test_monotone_p15(self):
        d = random_dataset(11, c=3, n=10, d1=6, d2=4)
        _, trace = solve_direction(class_statistics(d), SolverConfig(p=1.5, sigma=0.1))
        chain = [trace.initial_objective] + trace.objectives
        assert all(b <= a * (1 + 1e-9) for a, b in zip(chain, chain[1:]))

    def test_unit_output(self, small_stats):
        for p in (0.5, 1.0, 2.0, 5.0):
            w, _ = solve_direction(small_stats, SolverConfig(p=p, sigma=0.1))
            assert np.linalg.norm(w) == pytest.approx(1.0, abs=1e-14)

    @pytest.mark.parametrize("p", [0.5, 5.0])
    def test_unguaranteed_p_returns_best_iterate(self, small_stats, p):
        cfg = SolverConfig(p=p, sigma=0.1)
        w, trace = solve_direction(small_stats, cfg)
        assert not trace.convergence_guaranteed
        best = min([trace.initial_objective] + trace.objectives)
        assert objective_j0(w, small_stats, cfg.params) == pytest.approx(best, rel=1e-12)

    def test_itmax_respected(self, small_stats):
        _, trace = solve_direction(small_stats, SolverConfig(p=1.0, sigma=0.1, epsilon=1e-300, itmax=7))
        assert trace.iterations == 7
        assert trace.termination == ITMAX_REACHED
        assert len(trace.objectives) == len(trace.step_starts) == 7

    def test_deterministic(self, small_stats):
        cfg = SolverConfig(p=1.0, sigma=0.01, seed=5)
        w1, _ = solve_direction(small_stats, cfg)
        w2, _ = solve_direction(small_stats, cfg)
        assert w1.tobytes() == w2.tobytes()

    def test_vanishing_offsets_raise(self):
        # both classes share one mean: every class offset is zero
        X = np.array([[[1.0], [0.0]], [[-1.0], [0.0]], [[0.0], [1.0]], [[0.0], [-1.0]]])
        s = class_statistics(Dataset(X, np.array([1, 1, 2, 2])))
        with pytest.raises(NoDiscriminantDirection):
            solve_direction(s, SolverConfig(p=1.0, sigma=0.1))

    def test_perturbation_recovers_and_is_bounded(self):
        # w0 = e1 is orthogonal to all within-class deviation columns (which lie along e2)
        s = class_statistics(axis_dataset())
        w, trace = solve_direction(s, SolverConfig(p=1.0, sigma=0.01, seed=3), w0=[1.0, 0.0])
        assert 1 <= trace.perturbations <= 5
        assert trace.perturbed_steps and trace.perturbed_steps[0] == 0
        assert np.all(np.isfinite(w))

    def test_ridge_fallback_for_singular_H(self):
        # d1=4 but only two nonzero deviation directions: H is singular at p=2, sigma=0
        X = np.zeros((4, 4, 1))
        X[0, :, 0] = [1, 1, 0, 0]
        X[1, :, 0] = [1, -1, 0, 0]
        X[2, :, 0] = [-1, 0, 1, 0]
        X[3, :, 0] = [-1, 0, -1, 0]
        s = class_statistics(Dataset(X, np.array([1, 1, 2, 2])))
        w, trace = solve_direction(s, SolverConfig(p=2.0, sigma=0.0))
        assert trace.ridge_fallbacks >= 1
        assert np.all(np.isfinite(w))

    def test_descent_is_per_step(self):
        d = random_dataset(3, c=3, n=10, d1=6, d2=4)
        _, trace = solve_direction(class_statistics(d), SolverConfig(p=1.0, sigma=0.01, itmax=200))
        assert trace.descent_violations() == []


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6), p=st.sampled_from([1.0, 1.5, 2.0]), sigma=st.sampled_from([0.0, 0.01, 1.0]))
def test_monotone_descent_property(seed, p, sigma):
    d = random_dataset(seed, c=3, n=5, d1=6, d2=3)
    _, trace = solve_direction(class_statistics(d), SolverConfig(p=p, sigma=sigma))
    assert trace.descent_violations(1e-9) == []


class TestNullSpace:
    def test_empty_is_identity(self):
        np.testing.assert_array_equal(null_space_basis(np.zeros((4, 0))), np.eye(4))

    def test_coordinate_axis(self):
        B = null_space_basis(np.array([[1.0], [0.0], [0.0]]))
        assert B.shape == (3, 2)
        assert np.abs(np.array([1.0, 0, 0]) @ B).max() < 1e-12
        np.testing.assert_allclose(B.T @ B, np.eye(2), atol=1e-12)

    def test_random_orthonormal(self):
        Ws, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((10, 4)))
        B = null_space_basis(Ws)
        assert B.shape == (10, 6)
        assert np.abs(Ws.T @ B).max() < 1e-10
        assert np.abs(B.T @ B - np.eye(6)).max() < 1e-10

    def test_rejects_non_orthonormal(self):
        with pytest.raises(ValueError):
            null_space_basis(np.array([[1.0, 1.0], [0.0, 1.0], [0.0, 0.0]]))


class TestFit:
    def test_full_basis(self, small_dataset):
        m = fit(small_dataset, SolverConfig(p=1.0, sigma=0.1, r1=5))
        assert np.abs(m.W.T @ m.W - np.eye(5)).max() < 1e-8
        assert len(m.traces) == 5

    def test_pairwise_orthogonal(self):
        d = random_dataset(21, c=3, n=6, d1=8, d2=5)
        m = fit(d, SolverConfig(p=1.5, sigma=0.1, r1=5))
        G = m.W.T @ m.W
        off = G - np.diag(np.diag(G))
        assert np.abs(off).max() < 1e-8

    def test_first_direction_matches_eigen_baseline(self):
        d = random_dataset(5, c=3, n=10, d1=6, d2=4)
        g = fit(d, SolverConfig(p=2.0, sigma=0.0, r1=1, epsilon=1e-12, itmax=5000))
        e = fit_2dlda(d, 1, ridge=0.0)
        assert oracles.principal_angle(g.W[:, 0], e.W[:, 0]) < 1e-3

    def test_r1_too_large(self, small_dataset):
        with pytest.raises(ValueError):
            fit(small_dataset, SolverConfig(r1=6))

    def test_bit_identical(self, small_dataset):
        cfg = SolverConfig(p=1.0, sigma=0.01, r1=3, seed=99)
        assert fit(small_dataset, cfg).W.tobytes() == fit(small_dataset, cfg).W.tobytes()

    def test_single_row_vector_lda(self):
        # d2 = 1 reduces to vector LDA; still orthonormal directions
        d = random_dataset(2, c=3, n=6, d1=5, d2=1)
        m = fit(d, SolverConfig(p=2.0, sigma=0.01, r1=3))
        assert np.abs(m.W.T @ m.W - np.eye(3)).max() < 1e-8

    def test_prefix_property(self):
        d = random_dataset(8, c=3, n=6, d1=6, d2=3)
        full = fit(d, SolverConfig(p=1.0, sigma=0.1, r1=4))
        short = fit(d, SolverConfig(p=1.0, sigma=0.1, r1=2))
        np.testing.assert_array_equal(full.W[:, :2], short.W)


def test_cost_scales_with_sample_count():
    """Doubling N at a fixed iteration count should at most ~double the time."""
    cfg = SolverConfig(p=1.5, sigma=0.1, epsilon=1e-300, itmax=20)

    def best_time(n):
        s = class_statistics(random_dataset(1, c=4, n=n, d1=32, d2=32))
        solve_direction(s, cfg)
        times = []
        for _ in range(3):
            t0 = time.perf_counter()
            solve_direction(s, cfg)
            times.append(time.perf_counter() - t0)
        return min(times)

    t1, t2 = best_time(40), best_time(80)
    assert t2 <= 2.5 * t1, (t1, t2)

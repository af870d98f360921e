import numpy as np
import pytest

from fdiv import oracle
from fdiv.generators import make_generator
from fdiv.operators import f_softargmax, f_softmax
from fdiv.oracle import (
    AscentError,
    OracleConfig,
    euclidean_simplex_projection,
    finite_difference_grad,
    oracle_grid,
    oracle_pgd,
    oracle_pgd_batch,
    weighted_simplex_projection,
)

from conftest import TIGHT, random_instance

KL = make_generator("kl")
CHI2 = make_generator("chi-square")


class TestProjection:
    def test_example(self):
        np.testing.assert_allclose(euclidean_simplex_projection([0.5, 0.0]), [0.75, 0.25], atol=1e-15)

    def test_identity_on_simplex(self, rng):
        v = rng.dirichlet(np.ones(5))
        np.testing.assert_allclose(euclidean_simplex_projection(v), v, atol=1e-15)

    def test_vertex(self):
        np.testing.assert_array_equal(euclidean_simplex_projection([5.0, 0.0, 0.0]), [1.0, 0.0, 0.0])

    def test_is_closest_point(self, rng):
        for _ in range(50):
            v = rng.normal(scale=2, size=4)
            p = euclidean_simplex_projection(v)
            for r in rng.dirichlet(np.ones(4), 50):
                assert np.sum((p - v) ** 2) <= np.sum((r - v) ** 2) + 1e-12

    def test_rows(self, rng):
        v = rng.normal(size=(6, 3))
        np.testing.assert_allclose(euclidean_simplex_projection(v),
                                   [euclidean_simplex_projection(r) for r in v])

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            euclidean_simplex_projection([np.inf, 0.0])

    def test_weighted_reduces_to_euclidean(self, rng):
        z = rng.normal(size=(20, 5))
        np.testing.assert_allclose(weighted_simplex_projection(z, np.ones(5)),
                                   euclidean_simplex_projection(z), atol=1e-14)

    def test_weighted_kkt(self, rng):
        z = rng.normal(size=(20, 4))
        w = rng.uniform(0.2, 5, (20, 4))
        p = weighted_simplex_projection(z, w)
        np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-12)
        # on the support w_j (z_j - p_j) is the common multiplier; off it, bounded by it
        for zi, wi, pi in zip(z, w, p):
            mult = wi * (zi - pi)
            sup = pi > 0
            np.testing.assert_allclose(mult[sup], mult[sup][0], atol=1e-12)
            assert np.all(wi[~sup] * zi[~sup] <= mult[sup][0] + 1e-12)


class TestGrid:
    def test_kl_symmetric(self):
        p = oracle_grid(KL, [0.0, 0.0], [1, 1], OracleConfig(grid_resolution=1000))
        np.testing.assert_allclose(p, [0.5, 0.5], atol=1e-3)

    def test_chi_square(self):
        np.testing.assert_allclose(oracle_grid(CHI2, [0.5, 0.0], [1, 1]), [0.75, 0.25], atol=2e-3)

    def test_kl_three(self):
        theta = np.array([1.0, 0.0, -1.0])
        e = np.exp(theta)
        np.testing.assert_allclose(oracle_grid(KL, theta), e / e.sum(), atol=2e-3)

    def test_rejects_large_k(self):
        with pytest.raises(ValueError):
            oracle_grid(KL, np.zeros(4))

    def test_agrees_with_operator(self, gen, rng):
        theta, q = random_instance(rng, k_range=(3, 3), theta_scale=2.0)
        np.testing.assert_allclose(oracle_grid(gen, theta, q), f_softargmax(gen, theta, q).p, atol=5e-3)


class TestPGD:
    def test_uniform_fixed_point(self, gen):
        np.testing.assert_allclose(oracle_pgd(gen, np.zeros(4), np.ones(4)), 0.25, atol=1e-12)

    def test_sparse_vertex(self):
        np.testing.assert_allclose(oracle_pgd(CHI2, [10.0, 0.0, 0.0]), [1.0, 0.0, 0.0], atol=1e-12)

    def test_euclidean_interior_agreement(self, rng):
        """Plain projected ascent converges on well-conditioned instances."""
        for g in (CHI2, make_generator("alpha", 2.0), make_generator("squared-hellinger")):
            thetas = rng.uniform(-1, 1, (20, 3))
            p = oracle_pgd_batch(g, thetas, np.ones(3))
            ref = np.array([f_softargmax(g, t, None, TIGHT).p for t in thetas])
            assert np.max(np.abs(p - ref)) <= 1e-4

    def test_newton_agreement(self, gen, rng):
        thetas = rng.uniform(-5, 5, (40, 5))
        q = rng.uniform(0.1, 3, 5)
        p = oracle_pgd_batch(gen, thetas, q, OracleConfig.newton())
        ref = np.array([f_softargmax(gen, t, q, TIGHT).p for t in thetas])
        assert np.max(np.abs(p - ref)) <= 1e-6

    def test_monotone_objective(self, gen, rng):
        thetas = rng.uniform(-5, 5, (10, 4))
        for cfg in (OracleConfig(pgd_steps=300), OracleConfig.newton(50)):
            _, trace = oracle_pgd_batch(gen, thetas, None, cfg, history=True)
            assert np.all(np.diff(trace, axis=0) >= 0)

    def test_ascent_error_reports_step(self, monkeypatch):
        monkeypatch.setattr(oracle, "_objective", lambda g, p, theta, q: np.full(np.shape(p)[0], np.nan))
        with pytest.raises(AscentError) as info:
            oracle_pgd(KL, [0.0, 1.0])
        assert info.value.step == 0 and info.value.rows == [0]

    def test_config_validation(self):
        with pytest.raises(ValueError):
            OracleConfig(metric="newtonian")
        with pytest.raises(ValueError):
            OracleConfig(pgd_step_size=0.0)


class TestFiniteDifference:
    def test_linear(self, rng):
        c = rng.normal(size=5)
        g = finite_difference_grad(lambda x: c @ x, rng.normal(size=5))
        np.testing.assert_allclose(g, c, atol=1e-12 * np.linalg.norm(c) * 10)

    def test_quadratic(self, rng):
        x = rng.normal(size=4)
        np.testing.assert_allclose(finite_difference_grad(lambda z: 0.5 * z @ z, x), x, atol=1e-9)

    def test_danskin(self, rng):
        theta, q = random_instance(rng)
        fd = finite_difference_grad(lambda t: f_softmax(KL, t, q, TIGHT), theta)
        np.testing.assert_allclose(fd, f_softargmax(KL, theta, q).p, atol=1e-5)


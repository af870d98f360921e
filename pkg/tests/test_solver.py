import math

import numpy as np
import pytest

from fdiv.generators import DomainError, make_generator
from fdiv.solver import (
    Bracket,
    SolverConfig,
    StopMode,
    bisect,
    bisect_batch,
    bisection_trace,
    bracket,
    residual,
)

from conftest import CATALOG, CATALOG_IDS, TIGHT, random_instance

KL = make_generator("kl")
CHI2 = make_generator("chi-square")


class TestConfig:
    def test_defaults(self):
        cfg = SolverConfig()
        assert cfg.tolerance == 1e-8 and cfg.max_iterations == 100
        assert cfg.mode is StopMode.RESIDUAL and not cfg.fixed

    def test_fixed_iterations(self):
        cfg = SolverConfig.fixed_iterations(30)
        assert cfg.fixed and cfg.max_iterations == 30

    @pytest.mark.parametrize("kw", [{"tolerance": 0.0}, {"tolerance": -1.0}, {"max_iterations": 0},
                                    {"max_iterations": 2.5}])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            SolverConfig(**kw)

    def test_mode_from_string(self):
        assert SolverConfig(mode="fixed").fixed


class TestBracket:
    def test_kl_uniform(self):
        br = bracket(KL, [0.0, 0.0], [1.0, 1.0])
        assert br.tau_min == pytest.approx(-1.0, abs=1e-15)
        assert br.tau_max == pytest.approx(math.log(2) - 1, abs=1e-15)

    def test_chi_square(self):
        br = bracket(CHI2, [0.5, 0.0], [1.0, 1.0])
        assert (br.tau_min, br.tau_max) == pytest.approx((-0.5, 0.0), abs=1e-15)

    def test_single_class(self):
        br = bracket(KL, [3.0], [1.0])
        assert br.tau_min == br.tau_max == 2.0

    def test_contains_root(self, gen, rng):
        for _ in range(100):
            theta, q = random_instance(rng)
            br = bracket(gen, theta, q)
            assert br.tau_min <= br.tau_max
            assert residual(gen, theta, q, br.tau_min) >= -1e-9
            assert residual(gen, theta, q, br.tau_max) <= 1e-9

    def test_bracket_membership(self):
        br = Bracket(-1.0, 1.0)
        assert 0.0 in br and 2.0 not in br and br.width == 2.0

    def test_rejects_masked(self):
        with pytest.raises(ValueError):
            bracket(KL, [0.0, -np.inf])


class TestResidual:
    def test_kl_values(self):
        assert residual(KL, [0.0, 0.0], [1.0, 1.0], -1.0) == pytest.approx(2 * math.e ** 0 - 1)
        assert residual(KL, [0.0, 0.0], [1.0, 1.0], math.log(2) - 1) == pytest.approx(0.0, abs=1e-15)

    def test_chi_square_root(self):
        assert residual(CHI2, [0.5, 0.0], [1.0, 1.0], -0.25) == pytest.approx(0.0, abs=1e-15)

    def test_decreasing_in_tau(self, gen, rng):
        theta, q = random_instance(rng)
        br = bracket(gen, theta, q)
        taus = np.linspace(br.tau_min, br.tau_max, 50)
        phi = [residual(gen, theta, q, t) for t in taus]
        assert np.all(np.diff(phi) <= 1e-12)

    def test_domain_error_below_bracket(self):
        js = make_generator("jensen-shannon")
        with pytest.raises(DomainError, match="jensen-shannon"):
            residual(js, [1.0, 0.0], [1.0, 1.0], 1.0 - math.log(2))


class TestBisect:
    def test_kl_root(self):
        res = bisect(KL, [0.0, 0.0], [1.0, 1.0], TIGHT)
        assert res.tau == pytest.approx(math.log(2) - 1, abs=1e-12)
        assert res.converged

    def test_chi_square_root(self):
        assert bisect(CHI2, [0.5, 0.0], [1.0, 1.0], TIGHT).tau == pytest.approx(-0.25, abs=1e-12)

    def test_single_class(self):
        res = bisect(KL, [3.0], [1.0])
        assert res.tau == 2.0 and res.iterations == 0

    def test_residual_small(self, gen, rng):
        for _ in range(50):
            theta, q = random_instance(rng)
            res = bisect(gen, theta, q, TIGHT)
            assert res.converged
            assert abs(residual(gen, theta, q, res.tau)) <= 1e-9

    def test_fixed_mode_runs_exactly(self):
        res = bisect(KL, [1.0, 0.2, -3.0], None, SolverConfig.fixed_iterations(17))
        assert res.iterations == 17

    def test_iteration_cap_respected(self, rng):
        theta, q = random_instance(rng)
        res = bisect(KL, theta, q, SolverConfig(tolerance=1e-300, max_iterations=5))
        assert res.iterations <= 5

    @pytest.mark.parametrize("g", CATALOG, ids=CATALOG_IDS)
    def test_twenty_iteration_error_bound(self, g, rng):
        for _ in range(20):
            theta, q = random_instance(rng)
            exact = bisect(g, theta, q, TIGHT).tau
            taus, br = bisection_trace(g, theta, q, iterations=20)
            assert abs(taus[20] - exact) <= br.width * 2.0 ** -20 + 1e-12


class TestTrace:
    def test_geometry(self, gen, rng):
        theta, q = random_instance(rng)
        taus, br = bisection_trace(gen, theta, q, iterations=60)
        assert taus.shape == (61,)
        ref = taus[60]
        t = np.arange(61)
        err = np.abs(taus - ref)
        assert err[0] <= br.width / 2 + 1e-15
        assert np.all(err[:50] <= br.width * 2.0 ** -t[:50] + 1e-15)

    def test_forty_iterations(self, rng):
        theta, q = random_instance(rng)
        taus, br = bisection_trace(KL, theta, q, iterations=60)
        assert abs(taus[40] - taus[60]) <= 1e-12 * br.width


class TestBatch:
    def test_matches_scalar(self, gen, rng):
        k = 5
        theta = rng.uniform(-5, 5, (64, k))
        q = rng.uniform(0.1, 3, k)
        cfg = SolverConfig.fixed_iterations(60)
        tau, iters, lo, hi = bisect_batch(gen, theta, q, cfg)
        ref = np.array([bisect(gen, row, q, cfg).tau for row in theta])
        np.testing.assert_allclose(tau, ref, rtol=0, atol=1e-12)
        assert np.all(iters == 60)
        assert np.all(lo <= hi)

    def test_per_row_weights(self, rng):
        theta = rng.uniform(-3, 3, (10, 4))
        q = rng.uniform(0.1, 3, (10, 4))
        tau, *_ = bisect_batch(KL, theta, q, TIGHT)
        # closed form: tau* = log sum q e^theta - 1
        np.testing.assert_allclose(tau, np.log(np.sum(q * np.exp(theta), axis=1)) - 1, atol=1e-10)

    def test_masked_entries(self):
        theta = np.array([[0.0, 0.0, -np.inf], [1.0, -np.inf, -np.inf]])
        tau, iters, lo, _ = bisect_batch(KL, theta, np.ones(3), TIGHT)
        assert tau[0] == pytest.approx(math.log(2) - 1, abs=1e-12)
        assert tau[1] == lo[1] == 0.0 and iters[1] == 0

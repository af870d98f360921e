import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fdiv.generators import (
    Divergence,
    DomainError,
    GeneratorKind,
    ReferenceMeasure,
    all_generators,
    divergence,
    divergence_grad_q,
    eval_conjugate,
    eval_conjugate_prime,
    lambert_w0,
    make_generator,
    negentropy,
    reverse,
    scaled,
    shifted,
)

from conftest import CATALOG, EXTENDED, EXTENDED_IDS, random_simplex

U_GRID = np.logspace(-3, 2, 41)


def _in_domain(g, v):
    return v < g.conjugate_domain_sup


def _gap(g, v):
    return np.minimum.reduce([np.ones_like(v), g.conjugate_domain_sup - v, v - g.fprime_at_zero])


def _interior(g, v):
    return _gap(g, v) > 1e-3


class TestCatalogAxioms:
    def test_f_at_one_is_zero(self, gen_ext):
        assert abs(gen_ext.f(1.0)) <= 1e-14

    def test_fprime_strictly_increasing(self, gen_ext):
        d = np.diff(gen_ext.fprime(U_GRID))
        assert np.all(d > 0)

    def test_inverse_pair(self, gen_ext):
        """f*'(f'(u)) = u wherever f'(u) is inside the conjugate domain."""
        v = gen_ext.fprime(U_GRID)
        ok = _in_domain(gen_ext, v)
        np.testing.assert_allclose(gen_ext.fstar_prime(v[ok]), U_GRID[ok], rtol=1e-8)

    @pytest.mark.parametrize("u", [0.1, 0.5, 1.0, 2.0, 10.0])
    def test_inverse_pair_spot_values(self, gen_ext, u):
        v = gen_ext.fprime(u)
        if _in_domain(gen_ext, v):
            assert abs(gen_ext.fstar_prime(v) - u) <= 1e-9 * max(1.0, u)

    def test_fenchel_young_equality(self, gen_ext):
        """f(u) + f*(f'(u)) = u f'(u) on the grid."""
        u = U_GRID
        v = gen_ext.fprime(u)
        ok = _in_domain(gen_ext, v)
        lhs = gen_ext.f(u[ok]) + gen_ext.fstar(v[ok])
        rhs = u[ok] * v[ok]
        # alpha = 4 loses a few digits to cancellation near u = 1e-3
        np.testing.assert_allclose(lhs, rhs, rtol=1e-8, atol=1e-8 * np.max(np.abs(rhs)))

    def test_fstar_second_matches_difference_of_fstar_prime(self, gen_ext):
        u = np.logspace(-1.5, 1.5, 15)
        v = gen_ext.fprime(u)
        v = v[_interior(gen_ext, v)]
        # step shrinks near either end, where curvature blows up or the clamp kicks in
        h = 1e-5 * np.maximum(1.0, np.abs(v)) * _gap(gen_ext, v)
        fd = (gen_ext.fstar_prime(v + h) - gen_ext.fstar_prime(v - h)) / (2 * h)
        np.testing.assert_allclose(gen_ext.fstar_second(v), fd, rtol=1e-5)

    def test_fstar_prime_is_derivative_of_fstar(self, gen_ext):
        u = np.logspace(-1.5, 1.5, 15)
        v = gen_ext.fprime(u)
        v = v[_interior(gen_ext, v)]
        h = 1e-6 * np.maximum(1.0, np.abs(v)) * _gap(gen_ext, v)
        fd = (gen_ext.fstar(v + h) - gen_ext.fstar(v - h)) / (2 * h)
        np.testing.assert_allclose(gen_ext.fstar_prime(v), fd, rtol=1e-6, atol=1e-8)


class TestBoundaryConstants:
    @pytest.mark.parametrize("name,expected", [
        ("kl", -math.inf), ("generalized-kl", -math.inf), ("reverse-kl", -math.inf),
        ("jeffreys", -math.inf), ("squared-hellinger", -math.inf), ("reverse-chi-square", -math.inf),
        ("jensen-shannon", -math.inf), ("chi-square", 0.0),
    ])
    def test_fprime_at_zero(self, name, expected):
        assert make_generator(name).fprime_at_zero == expected

    @pytest.mark.parametrize("alpha,expected", [(0.5, -math.inf), (1.5, -2.0), (2.0, -1.0), (4.0, -1 / 3)])
    def test_alpha_fprime_at_zero(self, alpha, expected):
        g = make_generator("alpha", alpha)
        assert g.fprime_at_zero == pytest.approx(expected, abs=0)
        if math.isfinite(expected):
            assert g.fprime(1e-300) == pytest.approx(expected, rel=1e-12)

    def test_fprime_at_zero_is_the_limit(self, gen_ext):
        lim = gen_ext.fprime(1e-200)
        if math.isinf(gen_ext.fprime_at_zero):
            assert lim < -10
        else:
            assert lim == pytest.approx(gen_ext.fprime_at_zero, rel=1e-9)

    @pytest.mark.parametrize("name,sup", [
        ("kl", math.inf), ("reverse-kl", 0.0), ("jensen-shannon", math.log(2)),
        ("squared-hellinger", 1.0), ("chi-square", math.inf), ("reverse-chi-square", 0.0),
    ])
    def test_conjugate_domain(self, name, sup):
        assert make_generator(name).conjugate_domain_sup == sup

    def test_alpha_below_one_domain(self):
        assert make_generator("alpha", 0.5).conjugate_domain_sup == pytest.approx(2.0)

    @pytest.mark.parametrize("name,value", [
        ("kl", 0.0), ("generalized-kl", 1.0), ("chi-square", -0.5),
        ("reverse-kl", math.inf), ("jeffreys", math.inf), ("reverse-chi-square", math.inf),
    ])
    def test_f_at_zero_conventions(self, name, value):
        assert make_generator(name).f_at_zero == value


class TestMakeGenerator:
    def test_chi_square_f_zero(self):
        assert make_generator("chi-square").f(0.0) == -0.5

    def test_alpha_one_point_five_at_four(self):
        assert make_generator("alpha", 1.5).f(4.0) == pytest.approx(10 / 3, rel=1e-14)

    @pytest.mark.parametrize("alpha", [0.0, -1.0, float("nan"), float("inf")])
    def test_rejects_bad_alpha(self, alpha):
        with pytest.raises(ValueError):
            make_generator("alpha", alpha)

    def test_alpha_required(self):
        with pytest.raises(ValueError):
            GeneratorKind(Divergence.ALPHA)

    def test_alias_and_unknown(self):
        assert make_generator("js").name == "jensen-shannon"
        with pytest.raises(ValueError, match="unknown divergence"):
            make_generator("renyi")

    def test_alpha_one_is_generalized_kl(self):
        u = np.linspace(0.01, 100, 500)
        np.testing.assert_allclose(make_generator("alpha", 1.0).f(u),
                                   make_generator("generalized-kl").f(u), rtol=0, atol=1e-12)

    @pytest.mark.parametrize("eps", [1e-6, -1e-6])
    def test_alpha_continuity_at_one(self, eps):
        u = np.linspace(0.1, 10, 200)
        gkl = make_generator("generalized-kl")
        np.testing.assert_allclose(make_generator("alpha", 1 + eps).f(u), gkl.f(u), atol=1e-4)

    def test_generalized_kl_is_kl_minus_linear_term(self):
        u = np.linspace(0, 20, 101)
        diff = make_generator("generalized-kl").f(u) - make_generator("kl").f(u)
        np.testing.assert_allclose(diff, -(u - 1.0), atol=1e-13)

    def test_all_generators_has_nine_entries(self):
        assert len(all_generators()) == 9


class TestConjugate:
    def test_examples(self):
        assert eval_conjugate(make_generator("kl"), 1.0) == 1.0
        assert eval_conjugate(make_generator("jensen-shannon"), 0.0) == 0.0
        assert eval_conjugate(make_generator("squared-hellinger"), 0.5) == pytest.approx(1.0)

    def test_prime_examples(self):
        assert eval_conjugate_prime(make_generator("chi-square"), 0.3) == 0.3
        assert eval_conjugate_prime(make_generator("reverse-kl"), -2.0) == 0.5
        assert eval_conjugate_prime(make_generator("alpha", 2.0), -3.0) == 0.0

    @pytest.mark.parametrize("name,v", [
        ("jensen-shannon", math.log(2)), ("squared-hellinger", 1.5), ("reverse-kl", 0.0),
        ("reverse-chi-square", 0.1),
    ])
    def test_domain_errors_name_generator_and_bound(self, name, v):
        g = make_generator(name)
        with pytest.raises(DomainError, match=name):
            eval_conjugate(g, v)
        with pytest.raises(DomainError, match="requires v"):
            eval_conjugate_prime(g, v)

    def test_closed_domain_edge(self):
        g = make_generator("reverse-chi-square")
        assert eval_conjugate(g, 0.0) == 0.5
        assert eval_conjugate(g, -0.5) == pytest.approx(0.5 - 1.0)

    def test_chi_square_prime_negative_before_clamp(self):
        g = make_generator("chi-square")
        assert eval_conjugate_prime(g, -0.3) == -0.3
        assert g.clamped_fstar_prime(-0.3) == 0.0

    def test_conjugate_prime_nonnegative_after_clamp(self, gen_ext):
        v = np.linspace(-20, min(gen_ext.conjugate_domain_sup - 0.1, 5.0), 50)
        assert np.all(gen_ext.clamped_fstar_prime(v) >= 0)


class TestLambertW:
    def test_exact_points(self):
        assert lambert_w0(0.0) == 0.0
        assert lambert_w0(math.e) == pytest.approx(1.0, rel=1e-15)

    def test_omega_constant(self):
        # frozen from Halley iteration, re-verified by back-substitution
        assert lambert_w0(1.0) == pytest.approx(0.5671432904097838, rel=1e-14)

    def test_back_substitution(self):
        z = np.concatenate([[1e-300, 1e-12], np.logspace(-8, 300, 400)])
        w = lambert_w0(z)
        np.testing.assert_allclose(w * np.exp(w), z, rtol=1e-12)
        assert np.all(w >= 0)

    def test_negative_rejected(self):
        with pytest.raises(DomainError):
            lambert_w0(-0.1)

    def test_jeffreys_conjugate_far_argument(self):
        # f*'(v) = 1 / W(exp(1 - v)) with exp(1 - v) overflowing
        g = make_generator("jeffreys")
        v = -2000.0
        u = g.fstar_prime(v)
        assert g.fprime(u) == pytest.approx(v, rel=1e-12)


class TestReverse:
    def test_reverse_kl_value(self):
        assert reverse(make_generator("kl")).f(2.0) == pytest.approx(-math.log(2), rel=1e-15)

    def test_reverse_kl_matches_catalog(self):
        u = np.logspace(-3, 2, 50)
        np.testing.assert_allclose(reverse(make_generator("kl")).f(u), make_generator("reverse-kl").f(u),
                                   rtol=1e-14)

    @pytest.mark.parametrize("g", EXTENDED, ids=EXTENDED_IDS)
    def test_generator_identity(self, g):
        """The reversed generator is u f(1/u)."""
        u = np.logspace(-2, 2, 40)
        np.testing.assert_allclose(reverse(g).f(u), u * g.f(1 / u), rtol=1e-10, atol=1e-12)

    @pytest.mark.parametrize("g", EXTENDED, ids=EXTENDED_IDS)
    def test_involution(self, g):
        u = np.array([0.5, 1.0, 2.0])
        np.testing.assert_allclose(reverse(reverse(g)).f(u), g.f(u), atol=1e-12)

    @pytest.mark.parametrize("g", EXTENDED, ids=EXTENDED_IDS)
    def test_divergence_swap(self, g, rng):
        for _ in range(50):
            k = int(rng.integers(2, 7))
            p = rng.uniform(0.05, 3, k)
            q = rng.uniform(0.05, 3, k)
            assert divergence(reverse(g), p, q) == pytest.approx(divergence(g, q, p), abs=1e-12, rel=1e-12)

    def test_wrappers(self):
        g = scaled(shifted(make_generator("kl"), 0.3), 2.0)
        u = np.logspace(-2, 2, 20)
        np.testing.assert_allclose(reverse(g).f(u), u * g.f(1 / u), rtol=1e-12, atol=1e-12)


class TestDivergence:
    def test_zero_on_diagonal(self, gen_ext, rng):
        q = rng.uniform(0.1, 3, 5)
        assert abs(divergence(gen_ext, q, q)) <= 1e-14

    def test_kl_example(self):
        assert divergence(make_generator("kl"), [1.0, 0.0], [0.5, 0.5]) == pytest.approx(math.log(2))

    def test_chi_square_example(self):
        assert divergence(make_generator("chi-square"), [0.75, 0.25], [0.5, 0.5]) == pytest.approx(0.125)

    def test_nonnegative_on_simplex(self, gen_ext, rng):
        for _ in range(200):
            k = int(rng.integers(2, 8))
            p, q = random_simplex(rng, k, 1e-9), random_simplex(rng, k, 1e-9)
            assert divergence(gen_ext, p, q) >= -1e-12

    def test_boundary_blowup(self):
        assert divergence(make_generator("reverse-kl"), [1.0, 0.0], [0.5, 0.5]) == math.inf

    def test_errors(self):
        g = make_generator("kl")
        with pytest.raises(ValueError):
            divergence(g, [0.5, 0.5], [1.0, 1.0, 1.0])
        with pytest.raises(ValueError):
            divergence(g, [-0.1, 1.1], [1.0, 1.0])
        with pytest.raises(ValueError):
            divergence(g, [0.5, 0.5], [1.0, 0.0])

    def test_js_is_twice_textbook_js(self, rng):
        """The generator as printed gives twice the textbook Jensen-Shannon divergence."""
        g = make_generator("jensen-shannon")
        for _ in range(20):
            p, q = random_simplex(rng, 4, 1e-6), random_simplex(rng, 4, 1e-6)
            m = 0.5 * (p + q)
            js = 0.5 * np.sum(p * np.log(p / m)) + 0.5 * np.sum(q * np.log(q / m))
            assert divergence(g, p, q) == pytest.approx(2 * js, rel=1e-10)

    def test_hellinger_is_twice_textbook(self, rng):
        g = make_generator("squared-hellinger")
        p, q = random_simplex(rng, 5), random_simplex(rng, 5)
        h2 = 0.5 * np.sum((np.sqrt(p) - np.sqrt(q)) ** 2)
        assert divergence(g, p, q) == pytest.approx(2 * h2, rel=1e-12)

    def test_grad_q_matches_differences(self, gen_ext, rng):
        p, q = rng.uniform(0.1, 2, 4), rng.uniform(0.1, 2, 4)
        h = 1e-6
        fd = np.array([(divergence(gen_ext, p, q + h * e) - divergence(gen_ext, p, q - h * e)) / (2 * h)
                       for e in np.eye(4)])
        np.testing.assert_allclose(divergence_grad_q(gen_ext, p, q), fd, rtol=1e-6, atol=1e-8)

    def test_grad_q_at_zero_uses_limit(self):
        g = make_generator("chi-square")
        assert divergence_grad_q(g, [1.0, 0.0], [1.0, 1.0])[1] == -0.5


class TestNegentropy:
    def test_shannon(self):
        assert negentropy(make_generator("kl"), [0.5, 0.5]) == pytest.approx(-math.log(2))

    def test_chi_square_vertex(self):
        # sum_j (p_j^2 - 1) / 2 = (1 - 1) / 2 + (0 - 1) / 2
        assert negentropy(make_generator("chi-square"), [1.0, 0.0]) == pytest.approx(-0.5)

    def test_reverse_kl_vertex(self):
        assert negentropy(make_generator("reverse-kl"), [1.0, 0.0]) == math.inf

    def test_tsallis_up_to_constant(self, rng):
        a = 1.5
        g = make_generator("alpha", a)
        vals = []
        for _ in range(5):
            p = random_simplex(rng, 4)
            tsallis = (np.sum(p ** a) - 1) / (a * (a - 1))
            vals.append(negentropy(g, p) - tsallis)
        np.testing.assert_allclose(vals, vals[0], atol=1e-12)


class TestReferenceMeasure:
    def test_total_cached(self):
        r = ReferenceMeasure.of([1.0, 2.0, 0.5])
        assert r.total == 3.5 and len(r) == 3

    @pytest.mark.parametrize("q", [[], [1.0, 0.0], [1.0, -1.0], [np.inf]])
    def test_invalid(self, q):
        with pytest.raises(ValueError):
            ReferenceMeasure.of(q)

    def test_immutable(self):
        r = ReferenceMeasure.uniform(3)
        with pytest.raises(ValueError):
            r.q[0] = 2.0


@settings(max_examples=60, deadline=None)
@given(st.floats(1e-3, 1e2), st.sampled_from(range(len(CATALOG))))
def test_inverse_pair_property(u, idx):
    g = CATALOG[idx]
    v = g.fprime(u)
    if v < g.conjugate_domain_sup:
        assert g.fstar_prime(v) == pytest.approx(u, rel=1e-8)

import math
import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import central_diff, random_theta
from dksd.errors import DimensionError, NotConverged, ParseError, ValidationError
from dksd.geometry import sphere_area, to_cartesian
from dksd.models import (FisherBingham, Uniform, VonMisesFisher, bessel_i,
                         log_density_unnormalized, parse_model_spec, render_model_spec,
                         score_spherical, vmf_log_normalizer)
from dksd.oracle import log_partition_uniform, sphere_grid


def random_unit(rng, d):
    v = rng.standard_normal(d)
    return v / np.linalg.norm(v)


def random_model(rng, kind, d):
    if kind == "uniform":
        return Uniform(d)
    if kind == "vmf":
        return VonMisesFisher(random_unit(rng, d), rng.uniform(0.1, 10.0))
    M = rng.standard_normal((d, d))
    return FisherBingham(M + M.T, rng.standard_normal(d))


class TestLogDensity:
    def test_examples(self, rng):
        x = random_unit(rng, 3)
        assert log_density_unnormalized(Uniform(3), x) == 0.0
        assert log_density_unnormalized(VonMisesFisher(np.eye(3)[0], 2.0), np.eye(3)[0]) == 2.0
        assert log_density_unnormalized(FisherBingham(np.eye(3)), x) == pytest.approx(1.0, abs=1e-15)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            VonMisesFisher(np.eye(3)[0], 1.0).log_density_unnormalized(np.ones(2))

    def test_batched(self, rng):
        m = random_model(rng, "fb", 4)
        x = to_cartesian(random_theta(rng, 4, 20))
        batch = m.log_density_unnormalized(x)
        for i in range(20):
            assert batch[i] == pytest.approx(x[i] @ m.A @ x[i] + m.b @ x[i], abs=1e-12)


class TestScore:
    def test_uniform_zero(self, rng):
        np.testing.assert_array_equal(score_spherical(Uniform(4), random_theta(rng, 4, 5)), 0.0)

    def test_vmf_circle(self):
        m = VonMisesFisher(np.array([1.0, 0.0]), 1.0)
        np.testing.assert_allclose(score_spherical(m, [math.pi / 2]), [-1.0], atol=1e-15)
        for t in np.linspace(0, 6, 13):
            assert score_spherical(m, [t])[0] == pytest.approx(-math.sin(t), abs=1e-14)

    @pytest.mark.parametrize("kind", ["uniform", "vmf", "fb"])
    @pytest.mark.parametrize("d", range(2, 9))
    def test_finite_differences(self, rng, kind, d):
        worst = 0.0
        for theta in random_theta(rng, d, 500 // 5):
            for _ in range(5):
                m = random_model(rng, kind, d)
                fd = central_diff(lambda t: float(m.log_density_unnormalized(to_cartesian(t))),
                                  theta)
                worst = max(worst, np.max(np.abs(m.score_spherical(theta) - fd)))
        assert worst < 1e-6

    def test_normalizer_invariance_bitwise(self, rng):
        class ShiftedVMF(VonMisesFisher):
            def log_density_unnormalized(self, x):
                return super().log_density_unnormalized(x) + 7.25

        mu = random_unit(rng, 5)
        theta = random_theta(rng, 5, 50)
        a = VonMisesFisher(mu, 3.0).score_spherical(theta)
        b = ShiftedVMF(mu, 3.0).score_spherical(theta)
        assert np.array_equal(a, b)


class TestBessel:
    def test_zero(self):
        assert bessel_i(0, 0.0) == 1.0
        assert bessel_i(1.5, 0.0) == 0.0

    def test_half_order_closed_form(self):
        expected = math.sqrt(2.0 / math.pi) * math.sinh(1.0)
        assert bessel_i(0.5, 1.0) == pytest.approx(expected, rel=1e-14)
        assert bessel_i(0.5, 1.0) == pytest.approx(0.9376748882454876, rel=1e-12)

    def test_i0_of_one(self):
        assert bessel_i(0, 1.0) == pytest.approx(1.2660658777520082, rel=1e-14)

    @pytest.mark.parametrize("v", [0.0, 0.5, 1.0, 1.5, 3.0, 7.5])
    @pytest.mark.parametrize("z", [1e-3, 0.3, 1.0, 5.0, 20.0, 50.0])
    def test_against_mpmath(self, v, z):
        with mpmath.workdps(40):
            expected = float(mpmath.besseli(v, z))
        assert bessel_i(v, z) == pytest.approx(expected, rel=1e-10)

    def test_not_converged(self):
        with pytest.raises(NotConverged):
            bessel_i(0, 50.0, max_terms=5)


class TestVmfNormalizer:
    def test_circle_value(self):
        assert vmf_log_normalizer(2, 1.0) == pytest.approx(-math.log(2 * math.pi * 1.2660658777520082),
                                                           rel=1e-13)
        assert vmf_log_normalizer(2, 1.0) == pytest.approx(-2.073791, abs=1e-6)

    def test_small_kappa_limit_d3(self):
        # C_3(kappa) = kappa / (4 pi sinh kappa) -> 1 / (4 pi)
        for k in (1e-2, 1e-4, 1e-6):
            assert vmf_log_normalizer(3, k) == pytest.approx(math.log(k / (4 * math.pi * math.sinh(k))),
                                                             abs=1e-12)
        assert vmf_log_normalizer(3, 1e-8) == pytest.approx(-math.log(4 * math.pi), abs=1e-12)

    @pytest.mark.parametrize("d", [2, 3, 5, 10])
    def test_positive(self, d):
        assert math.exp(vmf_log_normalizer(d, 2.5)) > 0

    @pytest.mark.parametrize("d", [2, 3])
    @pytest.mark.parametrize("kappa", [0.5, 2.0, 8.0])
    def test_quadrature_normalization(self, d, kappa):
        m = VonMisesFisher(np.eye(d)[-1], kappa)
        theta, w = sphere_grid(d, 512)
        integral = np.sum(w * np.exp(m.log_density_unnormalized(to_cartesian(theta))))
        # C_d normalizes against surface measure; against the uniform probability
        # measure the constant picks up the sphere area
        ratio = (integral / sphere_area(d)) / math.exp(-vmf_log_normalizer(d, kappa) - math.log(sphere_area(d)))
        assert abs(ratio - 1.0) < 1e-4

    @pytest.mark.parametrize("d", [2, 3])
    def test_fb_quadrature_self_consistency(self, rng, d):
        m = random_model(rng, "fb", d)
        a = log_partition_uniform(m, 256)
        b = log_partition_uniform(m, 512)
        assert abs(math.exp(a - b) - 1.0) < 1e-4


class TestModelValidation:
    def test_vmf_requires_unit_mu(self):
        with pytest.raises(ValidationError):
            VonMisesFisher(np.array([1.0, 1e-5]), 1.0)

    def test_vmf_requires_positive_kappa(self):
        with pytest.raises(ValidationError):
            VonMisesFisher(np.array([1.0, 0.0]), 0.0)

    def test_fb_requires_symmetry(self):
        with pytest.raises(ValidationError):
            FisherBingham(np.array([[1.0, 1e-9], [0.0, 1.0]]))

    def test_immutable(self):
        m = VonMisesFisher(np.array([1.0, 0.0]), 1.0)
        with pytest.raises(ValueError):
            m.mu[0] = 2.0
        with pytest.raises(AttributeError):
            m.kappa = 3.0

    def test_uniform_dimension(self):
        with pytest.raises(ValidationError):
            Uniform(1)


class TestParseModelSpec:
    def test_uniform(self):
        assert parse_model_spec("uniform:d=3") == Uniform(3)

    def test_vmf(self):
        assert parse_model_spec("vmf:mu=1,0,0;kappa=1.0") == VonMisesFisher(np.eye(3)[0], 1.0)

    def test_fb_semicolon_rows(self):
        m = parse_model_spec("fb:A=2,1,1;1,2,1;1,1,2")
        np.testing.assert_array_equal(m.A, np.ones((3, 3)) + np.eye(3))
        np.testing.assert_array_equal(m.b, 0.0)

    def test_fb_canonical_rows(self):
        m = parse_model_spec("fb:A=2,1,1|1,2,1|1,1,2;b=0,0,1")
        assert m == FisherBingham(np.ones((3, 3)) + np.eye(3), np.array([0.0, 0.0, 1.0]))

    def test_whitespace_and_scientific(self):
        m = parse_model_spec("  vmf : mu = 6e-1 , 8E-1 ; kappa = 2.5e0 ")
        np.testing.assert_allclose(m.mu, [0.6, 0.8], rtol=1e-15)
        assert m.kappa == 2.5

    def test_mu_renormalized_within_tolerance(self):
        m = parse_model_spec("vmf:mu=1.0000005,0;kappa=1")
        assert np.linalg.norm(m.mu) == pytest.approx(1.0, abs=1e-15)

    def test_mu_not_unit(self):
        with pytest.raises(ValidationError):
            parse_model_spec("vmf:mu=1,1;kappa=1")

    def test_kappa_nonpositive(self):
        with pytest.raises(ValidationError):
            parse_model_spec("vmf:mu=1,0;kappa=0")

    def test_asymmetric_a(self):
        with pytest.raises(ValidationError):
            parse_model_spec("fb:A=1,2|0,1")

    def test_slightly_asymmetric_a_warns(self):
        with pytest.warns(UserWarning):
            m = parse_model_spec("fb:A=1,1e-7|0,1")
        np.testing.assert_array_equal(m.A, m.A.T)

    @pytest.mark.parametrize("text, column", [
        ("gauss:d=2", 1),
        ("vmf:mu=1,x;kappa=1", 10),
        ("uniform:d=two", 11),
    ])
    def test_parse_errors_have_position(self, text, column):
        with pytest.raises(ParseError) as info:
            parse_model_spec(text)
        assert info.value.line == 1
        assert info.value.column == column

    @pytest.mark.parametrize("text", ["uniform", "uniform:", "vmf:mu=1,0", "uniform:d=2;q=1",
                                      "vmf:mu=1,0;mu=0,1;kappa=1"])
    def test_malformed(self, text):
        with pytest.raises(ParseError):
            parse_model_spec(text)

    def test_non_square(self):
        with pytest.raises(ValidationError):
            parse_model_spec("fb:A=1,0,0|0,1,0")

    @settings(max_examples=100, deadline=None)
    @given(st.integers(2, 6), st.integers(0, 2**32 - 1), st.sampled_from(["uniform", "vmf", "fb"]))
    def test_render_round_trip(self, d, seed, kind):
        m = random_model(np.random.default_rng(seed), kind, d)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            assert parse_model_spec(render_model_spec(m)) == m

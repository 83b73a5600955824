import math

import numpy as np
import pytest
from scipy import stats

import dksd.samplers as samplers
from dksd.errors import RejectionStall, TuningFailure, ValidationError
from dksd.models import FisherBingham, Uniform, VonMisesFisher
from dksd.oracle import model_expectation
from dksd.rng import make_rng
from dksd.samplers import (acg_tuning, householder_to, sample_fisher_bingham_quadratic, sample_model,
                           sample_uniform_sphere, sample_vmf)

N = 100_000
FB_NULL_A = np.ones((3, 3)) + np.eye(3)


def circle_chi2_pvalue(x, log_density, bins=36):
    """Chi-square p-value of the angle histogram against a circular density."""
    ang = np.mod(np.arctan2(x[:, 1], x[:, 0]), 2 * math.pi)
    edges = np.linspace(0, 2 * math.pi, bins + 1)
    counts, _ = np.histogram(ang, edges)
    fine = np.linspace(0, 2 * math.pi, bins * 200 + 1)
    mid = 0.5 * (fine[1:] + fine[:-1])
    dens = np.exp(log_density(np.stack([np.cos(mid), np.sin(mid)], axis=1)))
    mass = dens.reshape(bins, 200).sum(axis=1)
    expected = mass / mass.sum() * x.shape[0]
    return stats.chisquare(counts, expected).pvalue


def uniform_log_density(x):
    return np.zeros(x.shape[0])


class TestUniform:
    def test_unit_norm(self, rng):
        x = sample_uniform_sphere(7, 1000, rng)
        assert np.max(np.abs(np.linalg.norm(x, axis=1) - 1.0)) < 1e-12

    def test_mean_near_zero(self, rng):
        assert np.linalg.norm(sample_uniform_sphere(3, N, rng).mean(axis=0)) < 0.02

    def test_circle_histogram(self, rng):
        assert circle_chi2_pvalue(sample_uniform_sphere(2, N, rng), uniform_log_density) > 0.01

    def test_guards(self, rng):
        with pytest.raises(ValueError):
            sample_uniform_sphere(1, 5, rng)


class TestVonMisesFisher:
    def test_mean_direction_and_length(self):
        mu = np.array([1.0, 2.0, -2.0]) / 3.0
        x, report = sample_vmf(mu, 2.0, N, make_rng(1))
        m = x.mean(axis=0)
        assert math.acos(min(1.0, m @ mu / np.linalg.norm(m))) < 0.02
        assert abs((x @ mu).mean() - (1 / math.tanh(2.0) - 0.5)) < 0.01
        assert abs((1 / math.tanh(2.0) - 0.5) - 0.5373) < 1e-4
        assert report.n_accepted == N and 0 < report.acceptance_rate <= 1

    @pytest.mark.parametrize("kappa", [0.3, 1.0, 4.0])
    def test_circle_histogram(self, kappa):
        m = VonMisesFisher(np.array([0.6, -0.8]), kappa)
        x, _ = sample_vmf(m.mu, kappa, N, make_rng(int(kappa * 10)))
        assert circle_chi2_pvalue(x, m.log_density_unnormalized) > 0.01

    @pytest.mark.parametrize("kappa", [0.5, 2.0, 10.0])
    def test_resultant_length_d3(self, kappa):
        x, _ = sample_vmf(np.eye(3)[2], kappa, N, make_rng(3))
        assert abs(x[:, 2].mean() - (1 / math.tanh(kappa) - 1 / kappa)) < 0.01

    def test_wood_envelope_parameter(self):
        # the rationalized form used by the sampler equals the textbook expression
        for d in (2, 3, 10):
            for kappa in (0.01, 1.0, 50.0):
                m = d - 1.0
                textbook = (-2 * kappa + math.sqrt(4 * kappa**2 + m**2)) / m
                stable = m / (2 * kappa + math.sqrt(4 * kappa**2 + m**2))
                assert stable == pytest.approx(textbook, rel=1e-6)

    def test_rotational_equivariance(self):
        rng = make_rng(9)
        Q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
        mu = np.array([0.5, 0.5, 0.5, 0.5])
        a = sample_vmf(mu, 1.5, N, make_rng(10))[0] @ Q.T
        b = sample_vmf(Q @ mu, 1.5, N, make_rng(11))[0]
        for fa, fb in ((a, b), (np.einsum("ni,nj->nij", a, a).reshape(N, -1),
                                np.einsum("ni,nj->nij", b, b).reshape(N, -1))):
            se = np.sqrt(fa.var(axis=0) / N + fb.var(axis=0) / N)
            diff = np.abs(fa.mean(axis=0) - fb.mean(axis=0))
            assert np.all(diff <= 4 * se + 1e-12)

    def test_householder(self, rng):
        mu = rng.standard_normal(5)
        mu /= np.linalg.norm(mu)
        np.testing.assert_allclose(householder_to(mu, np.eye(5)[:1])[0], mu, atol=1e-15)
        np.testing.assert_array_equal(householder_to(np.eye(5)[0], np.eye(5)), np.eye(5))

    def test_validation(self, rng):
        with pytest.raises(ValidationError):
            sample_vmf(np.array([1.0, 1.0]), 1.0, 5, rng)
        with pytest.raises(ValidationError):
            sample_vmf(np.array([1.0, 0.0]), 0.0, 5, rng)


class TestFisherBingham:
    def test_zero_matrix_is_uniform(self):
        x, report = sample_fisher_bingham_quadratic(np.zeros((2, 2)), N, make_rng(4))
        assert circle_chi2_pvalue(x, uniform_log_density) > 0.01
        assert report.acceptance_rate == 1.0

    def test_scaled_identity_is_uniform(self):
        x, _ = sample_fisher_bingham_quadratic(3.5 * np.eye(2), N, make_rng(5))
        assert circle_chi2_pvalue(x, uniform_log_density) > 0.01

    def test_circle_histogram(self):
        A = np.diag([2.0, 0.0])
        x, _ = sample_fisher_bingham_quadratic(A, N, make_rng(6))
        assert circle_chi2_pvalue(x, FisherBingham(A).log_density_unnormalized) > 0.01

    def test_acceptance_rate(self):
        _, report = sample_fisher_bingham_quadratic(FB_NULL_A, 20_000, make_rng(7))
        assert report.acceptance_rate > 0.3
        assert report.n_accepted == report.n_requested == 20_000
        assert report.acceptance_rate == report.n_accepted / report.n_proposed

    def test_tuning_equation(self):
        eigs = np.array([0.0, 1.5, 4.0, 9.0])
        b = acg_tuning(eigs)
        assert np.sum(1 / (b + 2 * eigs)) == pytest.approx(1.0, abs=1e-10)
        assert acg_tuning(np.zeros(3)) == pytest.approx(3.0, abs=1e-9)

    def test_tuning_failure(self):
        with pytest.raises(TuningFailure):
            acg_tuning(np.array([np.nan, 0.0]))

    def test_stall(self, monkeypatch):
        class AlwaysReject:
            """Generator whose uniforms are all 1, so no proposal is ever accepted."""

            def __init__(self):
                self._rng = make_rng(1)

            def standard_normal(self, size):
                return self._rng.standard_normal(size)

            def random(self, size):
                return np.ones(size)

        monkeypatch.setattr(samplers, "MAX_CONSECUTIVE_REJECTIONS", 5000)
        with pytest.raises(RejectionStall):
            sample_fisher_bingham_quadratic(FB_NULL_A, 100, AlwaysReject())

    def test_validation(self, rng):
        with pytest.raises(ValidationError):
            sample_fisher_bingham_quadratic(np.array([[1.0, 2.0], [0.0, 1.0]]), 5, rng)
        with pytest.raises(ValidationError):
            sample_model(FisherBingham(np.eye(2), np.array([1.0, 0.0])), 5, rng)


MOMENT_MODELS = [
    Uniform(2), Uniform(3),
    VonMisesFisher(np.array([0.6, 0.8]), 0.7), VonMisesFisher(np.array([0.0, 1.0]), 3.0),
    VonMisesFisher(np.array([1.0, 2.0, 2.0]) / 3, 1.0), VonMisesFisher(np.array([0.0, 0.0, 1.0]), 5.0),
    FisherBingham(np.array([[1.0, 0.5], [0.5, -1.0]])), FisherBingham(np.diag([3.0, 0.0])),
    FisherBingham(FB_NULL_A), FisherBingham(FB_NULL_A + np.ones((3, 3))),
    FisherBingham(np.array([[0.0, 1.0, 0.0], [1.0, -2.0, 0.5], [0.0, 0.5, 1.0]])),
]


@pytest.mark.parametrize("index", range(len(MOMENT_MODELS)),
                         ids=[repr(m) for m in MOMENT_MODELS])
def test_moments_match_quadrature(index):
    model = MOMENT_MODELS[index]
    x, _ = sample_model(model, N, make_rng(1000 + index))
    d = model.d
    first = model_expectation(model, lambda p: p, 400)
    second = model_expectation(model, lambda p: np.einsum("ni,nj->nij", p, p), 400)
    se1 = x.std(axis=0) / math.sqrt(N)
    assert np.all(np.abs(x.mean(axis=0) - first) <= 4 * se1 + 1e-6)
    xx = np.einsum("ni,nj->nij", x, x).reshape(N, d * d)
    se2 = xx.std(axis=0) / math.sqrt(N)
    assert np.all(np.abs(xx.mean(axis=0) - second.ravel()) <= 4 * se2 + 1e-6)


@pytest.mark.parametrize("model", [Uniform(4), VonMisesFisher(np.eye(5)[3], 2.0), FisherBingham(FB_NULL_A)],
                         ids=repr)
def test_unit_norm_and_determinism(model):
    a, ra = sample_model(model, 500, make_rng(42))
    b, rb = sample_model(model, 500, make_rng(42))
    assert np.array_equal(a, b) and ra == rb
    assert np.max(np.abs(np.linalg.norm(a, axis=1) - 1.0)) < 1e-12

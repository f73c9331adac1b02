import math

import numpy as np
import pytest

from electrogp import gpcore
from electrogp.exceptions import ConditioningError
from electrogp.gpcore import GPDim, KernelParams


def dense_lml(x, y, p):
    k = gpcore.gram(x, x, p) + (p.sigma2 + gpcore.JITTER_START * p.phi) * np.eye(len(x))
    kinv = np.linalg.inv(k)
    return -0.5 * y @ kinv @ y - 0.5 * np.linalg.slogdet(k)[1] - 0.5 * len(x) * math.log(2 * math.pi)


def random_dim(rng, n):
    x = rng.uniform(0, 1, n)
    y = rng.standard_normal(n)
    p = KernelParams.natural(rng.uniform(0.5, 2), rng.uniform(1, 20), rng.uniform(0.01, 0.3))
    return GPDim.build(x, y, p)


class TestKernel:
    def test_diagonal(self):
        assert gpcore.kernel(0.3, 0.3, KernelParams.natural(2.5, 4.0, 0.1)) == pytest.approx(2.5)

    def test_unit_offset(self):
        assert gpcore.kernel(1.0, 0.0, KernelParams.natural(1, 1, 0.1)) == pytest.approx(math.exp(-1), rel=1e-12)

    def test_symmetric(self, rng):
        p = KernelParams.natural(1.3, 7.0, 0.1)
        a, b = rng.uniform(-2, 2, (2, 100))
        np.testing.assert_array_equal(gpcore.kernel(a, b, p), gpcore.kernel(b, a, p))

    def test_params_must_be_positive(self):
        with pytest.raises(ValueError):
            KernelParams.natural(1.0, 0.0, 0.1)

    def test_log_storage_round_trip(self):
        p = KernelParams.natural(0.7, 12.0, 0.003)
        assert (p.phi, p.alpha, p.sigma2) == pytest.approx((0.7, 12.0, 0.003), rel=1e-14)


class TestMarginalLikelihood:
    def test_single_zero_target(self):
        p = KernelParams.natural(1.5, 2.0, 0.2)
        dim = GPDim.build([0.4], [0.0], p)
        s = 1.5 + 0.2 + gpcore.JITTER_START * 1.5
        assert gpcore.log_marginal_likelihood(dim) == pytest.approx(-0.5 * math.log(2 * math.pi * s), rel=1e-12)

    def test_single_target(self):
        p = KernelParams.natural(1.5, 2.0, 0.2)
        c = 0.8
        dim = GPDim.build([0.4], [c], p)
        s = 1.5 + 0.2 + gpcore.JITTER_START * 1.5
        want = -0.5 * math.log(2 * math.pi * s) - c**2 / (2 * s)
        assert gpcore.log_marginal_likelihood(dim) == pytest.approx(want, rel=1e-12)

    @pytest.mark.parametrize("n", [3, 8, 16])
    def test_dense_oracle(self, rng, n):
        dim = random_dim(rng, n)
        assert gpcore.log_marginal_likelihood(dim) == pytest.approx(
            dense_lml(dim.train_x, dim.train_y, dim.params), abs=1e-10
        )

    def test_permutation_invariant(self, rng):
        dim = random_dim(rng, 10)
        perm = rng.permutation(10)
        other = GPDim.build(dim.train_x[perm], dim.train_y[perm], dim.params)
        assert gpcore.log_marginal_likelihood(other) == pytest.approx(gpcore.log_marginal_likelihood(dim), abs=1e-10)

    def test_cholesky_reproduces_gram(self, rng):
        dim = random_dim(rng, 12)
        k = dim.regularized_gram()
        err = np.linalg.norm(dim.chol @ dim.chol.T - k) / np.linalg.norm(k)
        assert err < 1e-8

    def test_jitter_escalates(self):
        # Smallest eigenvalue is -1e-8, so the first jitters fail.
        ks = np.array([[[1.0, 1.0 + 1e-8], [1.0 + 1e-8, 1.0]]])
        chol, jit = gpcore._cholesky_with_jitter(ks, np.array([0.0]), np.array([1.0]))
        assert jit[0] == pytest.approx(1e-7)
        assert np.all(np.isfinite(chol))

    def test_duplicate_inputs_stay_finite(self):
        dim = GPDim.build([0.2, 0.2, 0.5], [0.1, 0.1, 0.3], KernelParams.natural(1.0, 5.0, 1e-30))
        assert np.isfinite(gpcore.log_marginal_likelihood(dim))

    def test_conditioning_error(self):
        # A negative definite "Gram" can never be fixed by jitter.
        ks = -np.ones((1, 3, 3)) - np.eye(3)
        with pytest.raises(ConditioningError):
            gpcore._cholesky_with_jitter(ks, np.array([1e-12]), np.array([1.0]))


class TestGradient:
    @pytest.mark.parametrize("seed", range(20))
    def test_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        dim = random_dim(rng, 8)
        theta = np.concatenate([dim.params.log_array(), dim.train_x])

        def f(t):
            return gpcore.log_marginal_likelihood(GPDim.build(t[3:], dim.train_y, KernelParams.from_log_array(t[:3])))

        h = 1e-6
        fd = np.array([(f(theta + h * e) - f(theta - h * e)) / (2 * h) for e in np.eye(theta.size)])
        g = gpcore.grad_log_marginal(dim)
        assert np.linalg.norm(g - fd) / np.linalg.norm(fd) < 1e-5

    def test_dense_oracle(self, rng):
        dim = random_dim(rng, 9)
        x, y, p = dim.train_x, dim.train_y, dim.params
        k = gpcore.gram(x, x, p)
        kinv = np.linalg.inv(k + (p.sigma2 + dim.jitter) * np.eye(x.size))
        a = kinv @ y
        w = np.outer(a, a) - kinv
        diff = x[:, None] - x[None, :]
        want_alpha = 0.5 * np.sum(w * k * (-p.alpha * diff**2))
        want_x = np.sum(w * k * (-2 * p.alpha * diff), axis=1)
        g = gpcore.grad_log_marginal(dim)
        assert g[1] == pytest.approx(want_alpha, rel=1e-8)
        np.testing.assert_allclose(g[3:], want_x, rtol=1e-8, atol=1e-10)

    def test_data_fit_vanishes_for_zero_targets(self, rng):
        dim = GPDim.build(rng.uniform(0, 1, 6), np.zeros(6), KernelParams.natural(1, 10, 0.1))
        g = gpcore.grad_log_marginal(dim, component="data_fit")
        np.testing.assert_array_equal(g[3:], 0.0)
        total = gpcore.grad_log_marginal(dim)
        cplx = gpcore.grad_log_marginal(dim, component="complexity")
        np.testing.assert_allclose(total, cplx, atol=1e-14)

    def test_swap_equivariance(self, rng):
        x = rng.uniform(0, 1, 5)
        y = rng.standard_normal(5)
        x[3], y[3] = x[1], y[1]
        p = KernelParams.natural(1, 4, 0.2)
        g1 = gpcore.grad_log_marginal(GPDim.build(x, y, p))
        perm = np.array([0, 3, 2, 1, 4])
        g2 = gpcore.grad_log_marginal(GPDim.build(x[perm], y[perm], p))
        np.testing.assert_allclose(g1[:3], g2[:3], rtol=1e-10)
        np.testing.assert_allclose(g1[3:][perm], g2[3:], rtol=1e-8, atol=1e-10)

    def test_unknown_component(self, rng):
        with pytest.raises(ValueError):
            gpcore.grad_log_marginal(random_dim(rng, 3), component="bogus")


class TestPosterior:
    def test_interpolates_without_noise(self):
        x = np.array([0.1, 0.4, 0.8])
        y = np.array([0.3, -0.2, 0.9])
        dim = GPDim.build(x, y, KernelParams.natural(1.0, 5.0, 1e-10))
        mean, _ = gpcore.posterior_moments(dim, x)
        np.testing.assert_allclose(mean, y, atol=1e-4)

    def test_empty_training_set_gives_prior(self):
        p = KernelParams.natural(1.7, 3.0, 0.1)
        dim = GPDim.build([], [], p)
        q = np.array([0.1, 0.5, 0.9])
        mean, cov = gpcore.posterior_moments(dim, q)
        np.testing.assert_array_equal(mean, 0.0)
        np.testing.assert_allclose(cov, gpcore.gram(q, q, p), rtol=1e-14)

    def test_dense_oracle(self, rng):
        dim = random_dim(rng, 4)
        q = rng.uniform(0, 1, 6)
        x, p = dim.train_x, dim.params
        kinv = np.linalg.inv(dim.regularized_gram())
        kq = gpcore.gram(q, x, p)
        mean, cov = gpcore.posterior_moments(dim, q)
        np.testing.assert_allclose(mean, kq @ kinv @ dim.train_y, atol=1e-10)
        np.testing.assert_allclose(cov, gpcore.gram(q, q, p) - kq @ kinv @ kq.T, atol=1e-10)

    def test_variance_bounded_by_phi(self, rng):
        for _ in range(10):
            dim = random_dim(rng, 7)
            _, cov = gpcore.posterior_moments(dim, rng.uniform(-0.5, 1.5, 30))
            assert np.all(np.diag(cov) <= dim.params.phi + 1e-8)
            assert np.all(np.linalg.eigvalsh(cov) > -1e-8)

    def test_stacked_matches_per_dimension(self, rng):
        x = rng.uniform(0, 1, 10)
        y = rng.standard_normal((10, 3))
        lp = rng.normal(0, 0.5, (3, 3))
        fac = gpcore.factorize(x, y, lp)
        q = rng.uniform(0, 1, 5)
        mean, var = gpcore.stacked_predict(fac, q)
        for j in range(3):
            m, c = gpcore.posterior_moments(fac.dim(j), q)
            np.testing.assert_allclose(mean[:, j], m, atol=1e-12)
            np.testing.assert_allclose(var[:, j], np.diag(c), atol=1e-12)
        np.testing.assert_allclose(gpcore.stacked_lml(fac)[1], gpcore.log_marginal_likelihood(fac.dim(1)))

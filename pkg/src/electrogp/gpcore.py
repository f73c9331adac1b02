"""Squared-exponential GP pieces shared by fitting and prediction.

Everything here works on a *stack* of independent output dimensions that
share one set of latent inputs: arrays carry a leading axis of length ``d``.
The single-dimension API (:class:`GPDim` and friends) is a thin view on it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack, solve_triangular

from . import kernels
from .exceptions import ConditioningError

LOG_2PI = math.log(2.0 * math.pi)
JITTER_START = 1e-10
JITTER_MAX = 1e-4


@dataclass(frozen=True)
class KernelParams:
    """Signal variance ``phi``, inverse squared length-scale ``alpha`` and
    noise variance ``sigma2``, held as logarithms."""

    log_phi: float
    log_alpha: float
    log_sigma2: float

    def __post_init__(self):
        for name in ("log_phi", "log_alpha", "log_sigma2"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v}")
            object.__setattr__(self, name, v)

    @classmethod
    def natural(cls, phi, alpha, sigma2):
        if min(phi, alpha, sigma2) <= 0:
            raise ValueError("kernel parameters must be strictly positive")
        return cls(math.log(phi), math.log(alpha), math.log(sigma2))

    @classmethod
    def from_log_array(cls, a):
        return cls(float(a[0]), float(a[1]), float(a[2]))

    @property
    def phi(self):
        return math.exp(self.log_phi)

    @property
    def alpha(self):
        return math.exp(self.log_alpha)

    @property
    def sigma2(self):
        return math.exp(self.log_sigma2)

    def log_array(self):
        return np.array([self.log_phi, self.log_alpha, self.log_sigma2])


def kernel(x, y, params: KernelParams):
    """``phi * exp(-alpha (x - y)^2)``, broadcasting over ``x`` and ``y``."""
    diff = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    out = params.phi * np.exp(-params.alpha * diff**2)
    return float(out) if np.ndim(out) == 0 else out


def gram(xa, xb, params: KernelParams):
    xa = np.asarray(xa, dtype=float)
    xb = np.asarray(xb, dtype=float)
    return kernel(xa[:, None], xb[None, :], params)


# -- stacked machinery -------------------------------------------------------


def _natural(log_params):
    lp = np.atleast_2d(np.asarray(log_params, dtype=float))
    return np.exp(lp[:, 0]), np.exp(lp[:, 1]), np.exp(lp[:, 2])


def _cholesky_with_jitter(ks, noise, phi):
    """Lower Cholesky factors of ``ks + (noise + jitter) I`` per dimension.

    Jitter starts at ``JITTER_START * phi`` and grows tenfold up to
    ``JITTER_MAX * phi``; it doubles as the noise floor.
    """
    d, n, _ = ks.shape
    chol = np.empty_like(ks)
    jitter = JITTER_START * np.asarray(phi, dtype=float)
    diag = np.arange(n)
    for j in range(d):
        jit = jitter[j]
        while True:
            a = ks[j].copy()
            a[diag, diag] += noise[j] + jit
            c, info = lapack.dpotrf(a, lower=1, clean=1, overwrite_a=1)
            if info == 0:
                break
            jit *= 10.0
            if jit > JITTER_MAX * phi[j] * (1 + 1e-9):
                raise ConditioningError(
                    f"Gram matrix of output dimension {j} is not positive definite "
                    f"even with jitter {JITTER_MAX:g}*phi"
                )
        chol[j] = c
        jitter[j] = jit
    return chol, jitter


@dataclass(frozen=True)
class Factorization:
    """Cached factors of ``K_j + (sigma2_j + jitter_j) I`` for every dimension."""

    x: np.ndarray
    y: np.ndarray  # (n, d)
    log_params: np.ndarray  # (d, 3)
    k_signal: np.ndarray  # (d, n, n)
    chol: np.ndarray  # (d, n, n)
    jitter: np.ndarray  # (d,)
    weights: np.ndarray  # (d, n) = K^{-1} y_j

    @property
    def n(self):
        return self.x.shape[0]

    @property
    def d(self):
        return self.log_params.shape[0]

    def dim(self, j) -> "GPDim":
        return GPDim(
            self.x,
            self.y[:, j],
            KernelParams.from_log_array(self.log_params[j]),
            self.chol[j],
            float(self.jitter[j]),
            self.weights[j],
        )

    def select(self, dims) -> "Factorization":
        """The same factorization restricted to output dimensions ``dims``."""
        dims = np.asarray(dims, dtype=int)
        return Factorization(
            self.x,
            self.y[:, dims],
            self.log_params[dims],
            self.k_signal[dims],
            self.chol[dims],
            self.jitter[dims],
            self.weights[dims],
        )

    def inverse_lower(self):
        """Lower triangle of every ``K^-1`` (upper part is zero)."""
        low = np.empty_like(self.chol)
        for j in range(self.d):
            low[j], _ = lapack.dpotri(self.chol[j], lower=1)
        return low

    def inverse(self):
        low = np.tril(self.inverse_lower())
        diag = np.arange(self.n)
        out = low + np.swapaxes(low, 1, 2)
        out[:, diag, diag] *= 0.5
        return out


def factorize(x, y, log_params) -> Factorization:
    x = np.asarray(x, dtype=float)
    log_params = np.atleast_2d(np.asarray(log_params, dtype=float))
    y = np.asarray(y, dtype=float).reshape(x.shape[0], log_params.shape[0])
    phi, alpha, sigma2 = _natural(log_params)
    d2 = (x[:, None] - x[None, :]) ** 2
    ks = phi[:, None, None] * np.exp(-alpha[:, None, None] * d2[None])
    if x.shape[0] == 0:
        empty = np.zeros((log_params.shape[0], 0, 0))
        return Factorization(x, y, log_params, empty, empty, np.zeros(len(phi)), np.zeros((len(phi), 0)))
    chol, jitter = _cholesky_with_jitter(ks, sigma2, phi)
    w = np.empty((chol.shape[0], x.shape[0]))
    for j in range(w.shape[0]):
        w[j], _ = lapack.dpotrs(chol[j], y[:, j], lower=1)
    return Factorization(x, y, log_params, ks, chol, jitter, w)


def stacked_lml(fac: Factorization) -> np.ndarray:
    """Log marginal likelihood of every output dimension."""
    n = fac.n
    if n == 0:
        return np.zeros(fac.d)
    logdet = 2.0 * np.log(np.diagonal(fac.chol, axis1=1, axis2=2)).sum(axis=1)
    fit = np.einsum("nd,dn->d", fac.y, fac.weights)
    return -0.5 * fit - 0.5 * logdet - 0.5 * n * LOG_2PI


def stacked_grad(fac: Factorization, component="total"):
    """Gradients of each dimension's log evidence.

    Returns ``(g_hyper, g_x)`` with ``g_hyper[j] = d/d(log phi, log alpha,
    log sigma2)`` and ``g_x[j, i] = d/dx_i``. ``component`` selects the
    ``"data_fit"`` term, the ``"complexity"`` (log-determinant) term or their
    ``"total"``.
    """
    if component not in ("total", "data_fit", "complexity"):
        raise ValueError(f"unknown component {component!r}")
    d, n = fac.d, fac.n
    if n == 0:
        return np.zeros((d, 3)), np.zeros((d, 0))
    _, alpha, sigma2 = _natural(fac.log_params)
    fit_coef = 1.0 if component in ("total", "data_fit") else 0.0
    cplx_coef = 1.0 if component in ("total", "complexity") else 0.0
    kinv_low = fac.inverse_lower() if cplx_coef else np.zeros_like(fac.chol)
    g, gx = kernels.se_grad_terms(
        kinv_low, fac.weights, fac.k_signal, fac.x, alpha, sigma2, fac.jitter, fit_coef, cplx_coef
    )
    return g, gx


def stacked_predict(fac: Factorization, query, full_cov=False):
    """Noise-free predictive moments of every output dimension.

    Returns means ``(m, d)`` and either variances ``(m, d)`` or covariances
    ``(d, m, m)``.
    """
    q = np.asarray(query, dtype=float).ravel()
    phi, alpha, _ = _natural(fac.log_params)
    kq = phi[:, None, None] * np.exp(-alpha[:, None, None] * (q[:, None] - fac.x[None, :])[None] ** 2)
    mean = np.einsum("dmn,dn->md", kq, fac.weights) if fac.n else np.zeros((q.size, fac.d))
    if fac.n:
        v = np.empty((fac.d, fac.n, q.size))
        for j in range(fac.d):
            v[j] = solve_triangular(fac.chol[j], kq[j].T, lower=True, check_finite=False)
    if full_cov:
        prior = phi[:, None, None] * np.exp(-alpha[:, None, None] * (q[:, None] - q[None, :])[None] ** 2)
        cov = prior - np.swapaxes(v, 1, 2) @ v if fac.n else prior
        return mean, 0.5 * (cov + np.swapaxes(cov, 1, 2))
    var = phi[None, :] - ((v**2).sum(axis=1).T if fac.n else 0.0)
    return mean, np.maximum(var, 0.0)


# -- single-dimension view --------------------------------------------------------


@dataclass(frozen=True)
class GPDim:
    """One output dimension: training pairs, parameters, and the Cholesky
    factor of the regularised Gram matrix."""

    train_x: np.ndarray
    train_y: np.ndarray
    params: KernelParams
    chol: np.ndarray
    jitter: float
    weights: np.ndarray

    @classmethod
    def build(cls, train_x, train_y, params: KernelParams) -> "GPDim":
        x = np.array(train_x, dtype=float).ravel()
        y = np.array(train_y, dtype=float).ravel()
        if x.shape != y.shape:
            raise ValueError("train_x and train_y must have the same length")
        fac = factorize(x, y[:, None], params.log_array()[None])
        for a in (x, y):
            a.setflags(write=False)
        return cls(x, y, params, fac.chol[0], float(fac.jitter[0]), fac.weights[0])

    @property
    def n(self):
        return self.train_x.size

    def factorization(self) -> Factorization:
        ks = self.params.phi * np.exp(-self.params.alpha * (self.train_x[:, None] - self.train_x[None, :]) ** 2)
        return Factorization(
            self.train_x,
            self.train_y[:, None],
            self.params.log_array()[None],
            ks[None],
            self.chol[None],
            np.array([self.jitter]),
            self.weights[None],
        )

    def regularized_gram(self):
        eye = np.eye(self.n)
        return gram(self.train_x, self.train_x, self.params) + (self.params.sigma2 + self.jitter) * eye


def log_marginal_likelihood(dim: GPDim) -> float:
    return float(stacked_lml(dim.factorization())[0])


def grad_log_marginal(dim: GPDim, component="total"):
    """``(d/dlog phi, d/dlog alpha, d/dlog sigma2, d/dx_1, ..., d/dx_n)``."""
    g, gx = stacked_grad(dim.factorization(), component)
    return np.concatenate([g[0], gx[0]])


def posterior_moments(dim: GPDim, query_x):
    """Predictive mean and covariance of the latent function at ``query_x``."""
    mean, cov = stacked_predict(dim.factorization(), query_x, full_cov=True)
    return mean[:, 0], cov[0]

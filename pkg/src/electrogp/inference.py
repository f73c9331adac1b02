"""Posterior mean curves, uncertainty bands and missing-data prediction."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks

from . import gpcore
from ._util import golden_section_max
from .exceptions import ConditioningError
from .kernels import mh_independence_chain, polyline_distances
from .model import FittedModel

N_SCAN = 1024
MAP_TOL = 1e-8
MH_MIN_ACCEPT = 1e-3
# A second peak within a factor 10 of the highest one counts as a rival mode.
MODE_LOG_RATIO = math.log(10.0)
_CHUNK = 256


@dataclass(frozen=True)
class CurveEstimate:
    grid: np.ndarray
    vertices: np.ndarray  # (n_mu, d)

    def __post_init__(self):
        if self.grid.ndim != 1 or self.grid.size < 2 or np.any(np.diff(self.grid) <= 0):
            raise ValueError("curve grid must be strictly increasing with at least 2 nodes")
        if self.vertices.shape[0] != self.grid.size:
            raise ValueError("need one vertex per grid node")


def mean_curve(model: FittedModel, n_mu: int = 512) -> CurveEstimate:
    """Posterior mean of every output dimension on ``n_mu`` equally spaced
    latent nodes from 0 to 1."""
    if n_mu < 2:
        raise ValueError("n_mu must be >= 2")
    grid = np.linspace(0.0, 1.0, n_mu)
    mean, _ = model.predict(grid)
    return CurveEstimate(grid, mean)


def point_to_polyline_distance(p, curve) -> float:
    vertices = curve.vertices if isinstance(curve, CurveEstimate) else np.asarray(curve, dtype=float)
    if vertices.shape[0] < 2:
        raise ValueError("a polyline needs at least 2 vertices")
    p = np.asarray(p, dtype=float).reshape(1, -1)
    return float(polyline_distances(p, np.ascontiguousarray(vertices, dtype=float))[0])


def distances_to_curve(points, curve) -> np.ndarray:
    vertices = curve.vertices if isinstance(curve, CurveEstimate) else np.asarray(curve, dtype=float)
    pts = np.ascontiguousarray(np.atleast_2d(points), dtype=float)
    return polyline_distances(pts, np.ascontiguousarray(vertices, dtype=float))


# -- uncertainty band -------------------------------------------------------------


@dataclass(frozen=True)
class UncertaintyBand:
    eta: float
    rho: float
    n1: int
    n2: int
    sample_distances: np.ndarray
    seed: int | None = None

    def rho_at(self, eta: float) -> float:
        """Band radius at another quantile level, from the same pooled sample."""
        return float(np.quantile(self.sample_distances, eta))


def _sample_noisy(fac, x_star, sigma2, rng):
    """One joint draw of noisy outputs at ``x_star`` for every dimension."""
    mean, cov = gpcore.stacked_predict(fac, x_star, full_cov=True)
    phi = np.exp(fac.log_params[:, 0])
    try:
        chol, _ = gpcore._cholesky_with_jitter(cov, sigma2, phi)
        z = rng.standard_normal((fac.d, x_star.size, 1))
        return mean + (chol @ z)[:, :, 0].T
    except ConditioningError:
        vals, vecs = np.linalg.eigh(cov + sigma2[:, None, None] * np.eye(x_star.size))
        root = vecs * np.sqrt(np.clip(vals, 0.0, None))[:, None, :]
        z = rng.standard_normal((fac.d, x_star.size, 1))
        return mean + (root @ z)[:, :, 0].T


def uncertainty_band(
    model: FittedModel, curve: CurveEstimate, eta: float = 0.95, n1: int = 100, n2: int = 50, seed=None
) -> UncertaintyBand:
    """Monte-Carlo band radius.

    Each of ``n2`` repetitions draws ``n1`` uniform latents, draws their
    outputs jointly from the noisy posterior predictive and records the
    distance of every draw to ``curve``. ``rho`` is the ``eta``-quantile of
    the pooled distances. Repetition ``k`` uses its own child stream of
    ``seed``, so the result does not depend on evaluation order.
    """
    if not 0.0 < eta < 1.0:
        raise ValueError("eta must lie strictly between 0 and 1")
    if n1 < 1 or n2 < 1 or n1 * n2 < 20:
        raise ValueError(f"degenerate Monte-Carlo design n1*n2={n1 * n2}; need at least 20 draws")
    fac = model.factorization
    sigma2 = model.noise_variances
    streams = np.random.SeedSequence(seed).spawn(n2)
    pooled = np.empty((n2, n1))
    for k, ss in enumerate(streams):
        rng = np.random.default_rng(ss)
        x_star = rng.uniform(0.0, 1.0, size=n1)
        y_star = _sample_noisy(fac, x_star, sigma2, rng) + model.offsets
        pooled[k] = distances_to_curve(y_star, curve)
    dist = pooled.ravel()
    return UncertaintyBand(float(eta), float(np.quantile(dist, eta)), int(n1), int(n2), dist, seed)


# -- prediction of partially observed records -------------------------------------------


@dataclass(frozen=True)
class PartialObservation:
    values: np.ndarray  # length d; NaN marks a missing entry

    def __post_init__(self):
        v = np.array(self.values, dtype=float).ravel()
        if np.any(np.isinf(v)):
            raise ValueError("observed values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_mask(cls, values, observed):
        v = np.array(values, dtype=float).ravel()
        v[~np.asarray(observed, dtype=bool).ravel()] = np.nan
        return cls(v)

    @property
    def d(self):
        return self.values.size

    @property
    def observed_dims(self) -> np.ndarray:
        return np.flatnonzero(~np.isnan(self.values))

    @property
    def missing_dims(self) -> np.ndarray:
        return np.flatnonzero(np.isnan(self.values))

    @property
    def observed_values(self) -> np.ndarray:
        return self.values[self.observed_dims]


@dataclass(frozen=True)
class LatentPosterior:
    mode: float | None = None
    samples: np.ndarray | None = None
    acceptance_rate: float | None = None
    multimodal: bool = False
    low_acceptance: bool = False

    @property
    def point(self) -> float:
        """The mode, or the chain mean for sampled posteriors."""
        return self.mode if self.mode is not None else float(np.mean(self.samples))


def _moments(model, query, dims):
    """Noise-free predictive mean and variance at ``query`` for ``dims``, chunked."""
    q = np.asarray(query, dtype=float).ravel()
    fac = model.factorization.select(dims)
    mean = np.empty((q.size, len(dims)))
    var = np.empty((q.size, len(dims)))
    for a in range(0, q.size, _CHUNK):
        mean[a : a + _CHUNK], var[a : a + _CHUNK] = gpcore.stacked_predict(fac, q[a : a + _CHUNK])
    return mean + model.offsets[dims], var


def latent_log_posterior(model: FittedModel, obs: PartialObservation, query) -> np.ndarray:
    """Unnormalised log density of the latent coordinate of ``obs``.

    A uniform prior on (0, 1) times the product over observed dimensions of
    the noisy predictive densities.
    """
    _check_obs(model, obs)
    q = np.atleast_1d(np.asarray(query, dtype=float))
    dims = obs.observed_dims
    out = np.zeros(q.size)
    inside = (q > 0.0) & (q < 1.0)
    out[~inside] = -np.inf
    if dims.size == 0 or not inside.any():
        return out
    mean, var = _moments(model, q[inside], dims)
    s2 = var + model.noise_variances[dims]
    resid = obs.observed_values - mean
    out[inside] = -0.5 * (resid**2 / s2 + np.log(2.0 * np.pi * s2)).sum(axis=1)
    return out


def _check_obs(model, obs):
    if obs.d != model.d:
        raise ValueError(f"observation has {obs.d} entries, model has {model.d} output dimensions")


def _rival_modes(logp):
    if logp.max() - logp.min() < 1e-12:
        return True
    padded = np.concatenate([[-np.inf], logp, [-np.inf]])
    peaks, _ = find_peaks(padded)
    high = padded[peaks] >= logp.max() - MODE_LOG_RATIO
    return int(high.sum()) > 1


def predict_latent_map(model: FittedModel, obs: PartialObservation, n_scan: int = N_SCAN) -> LatentPosterior:
    """Posterior mode of the latent coordinate: dense scan, then golden-section
    refinement between the neighbours of the best scan node."""
    _check_obs(model, obs)
    grid = (np.arange(n_scan) + 0.5) / n_scan
    logp = latent_log_posterior(model, obs, grid)
    multimodal = _rival_modes(logp)
    if multimodal:
        warnings.warn("latent posterior has several comparable modes", RuntimeWarning, stacklevel=2)
    i = int(np.argmax(logp))
    best, best_lp = float(grid[i]), float(logp[i])
    if obs.observed_dims.size:
        lo = grid[i - 1] if i > 0 else 0.0
        hi = grid[i + 1] if i < n_scan - 1 else 1.0
        x, fx = golden_section_max(
            lambda t: float(latent_log_posterior(model, obs, t)[0]), lo, hi, tol=MAP_TOL
        )
        if fx >= best_lp:
            best = x
    return LatentPosterior(mode=best, multimodal=multimodal)


def predict_latent_mh(
    model: FittedModel, obs: PartialObservation, n_samples: int = 5000, burn_in: int = 1000, seed=None
) -> LatentPosterior:
    """Independence Metropolis-Hastings with a uniform proposal on (0, 1)."""
    _check_obs(model, obs)
    if n_samples < 1 or burn_in < 0:
        raise ValueError("n_samples must be >= 1 and burn_in >= 0")
    rng = np.random.default_rng(seed)
    total = burn_in + n_samples
    x0 = rng.uniform(0.0, 1.0)
    props = rng.uniform(0.0, 1.0, size=total)
    log_u = np.log(1.0 - rng.random(total))
    lp = latent_log_posterior(model, obs, np.concatenate([[x0], props]))
    chain, accepted = mh_independence_chain(props, lp[1:], log_u, x0, lp[0])
    rate = accepted / total
    low = rate < MH_MIN_ACCEPT
    if low:
        warnings.warn(f"MH acceptance rate {rate:.2e} is below {MH_MIN_ACCEPT:g}", RuntimeWarning, stacklevel=2)
    return LatentPosterior(samples=chain[burn_in:], acceptance_rate=rate, low_acceptance=low)


@dataclass(frozen=True)
class Reconstruction:
    missing_dims: np.ndarray
    mean: np.ndarray
    cov: np.ndarray

    @property
    def sd(self) -> np.ndarray:
        return np.sqrt(np.diag(self.cov))


def reconstruct_missing(model: FittedModel, obs: PartialObservation, latent: LatentPosterior) -> Reconstruction:
    """Gaussian summary of the missing entries given the latent posterior.

    At a mode the entries are independent with variance ``s^2 + sigma^2``.
    For a chain the per-sample Gaussians form a mixture, summarised by its
    mean and total covariance.
    """
    _check_obs(model, obs)
    miss = obs.missing_dims
    if miss.size == 0:
        return Reconstruction(miss, np.zeros(0), np.zeros((0, 0)))
    noise = model.noise_variances[miss]
    if latent.mode is not None:
        mean, var = _moments(model, [latent.mode], miss)
        return Reconstruction(miss, mean[0], np.diag(var[0] + noise))
    mean, var = _moments(model, latent.samples, miss)
    centre = mean.mean(axis=0)
    dev = mean - centre
    cov = dev.T @ dev / mean.shape[0] + np.diag(var.mean(axis=0) + noise)
    return Reconstruction(miss, centre, cov)


@dataclass(frozen=True)
class RecordPrediction:
    latent: LatentPosterior
    reconstruction: Reconstruction


def predict_records(model: FittedModel, observations, method: str = "map", n_samples=5000, burn_in=1000, seed=None):
    """Predict several records independently of each other.

    With ``method="mh"`` record ``i`` uses child stream ``i`` of ``seed``.
    """
    if method not in ("map", "mh"):
        raise ValueError(f"unknown method {method!r}; use 'map' or 'mh'")
    observations = list(observations)
    streams = np.random.SeedSequence(seed).spawn(len(observations))
    out = []
    for obs, ss in zip(observations, streams):
        if method == "map":
            lat = predict_latent_map(model, obs)
        else:
            lat = predict_latent_mh(model, obs, n_samples, burn_in, seed=ss)
        out.append(RecordPrediction(lat, reconstruct_missing(model, obs, lat)))
    return out

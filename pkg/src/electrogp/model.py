"""Joint MAP fit of latent coordinates and GP hyperparameters.

The objective is the summed GP log evidence of every output column plus the
Corp log prior of the latent coordinates. Latents are optimised directly in
(0, 1); coincident or out-of-range latents make the objective ``-inf``, so the
optimiser rejects such steps and the initial ordering survives the fit.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import corp, gpcore
from .corp import CorpConfig
from .embed import LleSettings, lle_1d, rescale_unit
from .exceptions import ConditioningError, ElectroGPError, StageError
from .gpcore import Factorization, GPDim, KernelParams
from .optim import ScgSettings, maximize

log = logging.getLogger(__name__)

NOISE_FLOOR = gpcore.JITTER_START


@dataclass(frozen=True)
class LatentConfig:
    xs: np.ndarray

    def __post_init__(self):
        xs = np.array(self.xs, dtype=float).ravel()
        if np.any(~np.isfinite(xs)) or np.any(xs <= 0.0) or np.any(xs >= 1.0):
            raise ValueError("latent coordinates must lie strictly inside (0, 1)")
        if np.unique(xs).size != xs.size:
            raise ValueError("latent coordinates must be pairwise distinct")
        xs.setflags(write=False)
        object.__setattr__(self, "xs", xs)

    def __len__(self):
        return self.xs.size


@dataclass(frozen=True)
class HyperParams:
    dims: tuple

    def __post_init__(self):
        dims = tuple(self.dims)
        if len(dims) < 1 or not all(isinstance(p, KernelParams) for p in dims):
            raise ValueError("HyperParams needs at least one KernelParams entry")
        object.__setattr__(self, "dims", dims)

    def __len__(self):
        return len(self.dims)

    def log_array(self) -> np.ndarray:
        return np.array([p.log_array() for p in self.dims])

    @classmethod
    def from_log_array(cls, a):
        return cls(tuple(KernelParams.from_log_array(row) for row in np.atleast_2d(a)))


def _unpack(vec, d):
    return vec[: 3 * d].reshape(d, 3), vec[3 * d :]


def _fail(size):
    return -np.inf, np.full(size, np.nan)


def _evaluate(x, y, log_params, corp_cfg, use_prior):
    """Objective value and gradients for latents ``x`` and ``(d, 3)`` log params."""
    size = log_params.size + x.size
    if np.any(~np.isfinite(x)) or np.any(x <= 0.0) or np.any(x >= 1.0):
        return _fail(size)
    if not np.all(np.isfinite(log_params)):
        return _fail(size)
    prior = 0.0
    gprior = np.zeros(x.size)
    if use_prior:
        prior = corp.joint_log_density(x, corp_cfg)
        if not np.isfinite(prior):
            return _fail(size)
        gprior = corp.joint_log_density_grad(x, corp_cfg)
    try:
        with np.errstate(over="raise", invalid="raise"):
            fac = gpcore.factorize(x, y, log_params)
            lml = gpcore.stacked_lml(fac).sum()
            gh, gx = gpcore.stacked_grad(fac)
    except (ConditioningError, FloatingPointError, np.linalg.LinAlgError):
        return _fail(size)
    value = float(lml + prior)
    grad = np.concatenate([gh.ravel(), gx.sum(axis=0) + gprior])
    if not np.isfinite(value) or not np.all(np.isfinite(grad)):
        return _fail(size)
    return value, grad


def objective(latent, theta, data, corp_cfg: CorpConfig | None = None, use_prior=True):
    """Joint log posterior (up to a constant) and its gradient.

    The gradient is laid out as ``[(dlog phi, dlog alpha, dlog sigma2) per
    output dimension..., d/dx_1, ..., d/dx_n]``. Invalid latents give
    ``-inf`` rather than an exception.
    """
    x = np.asarray(latent.xs if isinstance(latent, LatentConfig) else latent, dtype=float)
    lp = theta.log_array() if isinstance(theta, HyperParams) else np.atleast_2d(theta)
    y = np.asarray(data, dtype=float).reshape(x.size, -1)
    return _evaluate(x, y, lp, corp_cfg or CorpConfig(), use_prior)


def initial_hyperparams(data, x0) -> np.ndarray:
    """Median heuristic start: ``phi = var``, ``sigma2 = 0.1 phi``,
    ``alpha = 1 / (2 median^2)`` of pairwise latent distances."""
    phi = np.var(data, axis=0)
    phi = np.where(phi > 0, phi, 1e-6)
    i, j = np.triu_indices(x0.size, k=1)
    med = np.median(np.abs(x0[i] - x0[j]))
    alpha = 1.0 / (2.0 * med**2)
    return np.log(np.stack([phi, np.full_like(phi, alpha), 0.1 * phi], axis=1))


@dataclass
class FittedModel:
    """Result of :func:`fit`; also buildable by hand from its parts.

    ``data`` is the raw (uncentred) data; ``centering`` holds per-column
    offsets subtracted before fitting, or ``None``.
    """

    data: np.ndarray
    latent: LatentConfig
    theta: HyperParams
    corp_cfg: CorpConfig = field(default_factory=CorpConfig)
    centering: np.ndarray | None = None
    use_prior: bool = True
    objective_value: float = float("nan")
    stage_values: dict = field(default_factory=dict)
    init_latent: np.ndarray | None = None
    _fac: Factorization | None = field(default=None, repr=False)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float).reshape(len(self.latent), len(self.theta))
        if self.centering is not None:
            self.centering = np.asarray(self.centering, dtype=float)
        if self._fac is None:
            self._fac = gpcore.factorize(self.latent.xs, self.targets, self.theta.log_array())
        if math.isnan(self.objective_value) and self.n:
            self.objective_value = self.recompute_objective()

    @property
    def n(self):
        return self.data.shape[0]

    @property
    def d(self):
        return len(self.theta)

    @property
    def offsets(self) -> np.ndarray:
        return self.centering if self.centering is not None else np.zeros(self.d)

    @property
    def targets(self) -> np.ndarray:
        """Training targets as seen by the GPs (centred if requested)."""
        return self.data - self.offsets

    @property
    def factorization(self) -> Factorization:
        return self._fac

    @property
    def per_dim(self) -> list[GPDim]:
        return [self._fac.dim(j) for j in range(self.d)]

    def recompute_objective(self) -> float:
        v, _ = _evaluate(
            np.asarray(self.latent.xs), self.targets, self.theta.log_array(), self.corp_cfg, self.use_prior
        )
        return v

    def predict(self, query, full_cov=False):
        """Noise-free predictive moments in data coordinates (offsets added back)."""
        mean, spread = gpcore.stacked_predict(self._fac, query, full_cov=full_cov)
        return mean + self.offsets, spread

    @property
    def noise_variances(self) -> np.ndarray:
        """Effective noise variance per dimension: ``sigma2`` plus the jitter floor."""
        return np.array([p.sigma2 for p in self.theta.dims]) + self._fac.jitter


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except (ElectroGPError, ValueError, np.linalg.LinAlgError) as exc:
        raise StageError(name, exc) from exc


def initial_latents(data, lle_settings=None, init=None) -> np.ndarray:
    if init is not None:
        x0 = np.asarray(init, dtype=float).ravel()
        if x0.size != data.shape[0]:
            raise ValueError(f"init has {x0.size} coordinates for {data.shape[0]} rows")
        inside = np.all((x0 > 0) & (x0 < 1)) and np.unique(x0).size == x0.size
        return x0.copy() if inside else rescale_unit(x0)
    return rescale_unit(lle_1d(data, lle_settings))


def fit(
    data,
    corp_cfg: CorpConfig | None = None,
    lle_settings: LleSettings | None = None,
    scg_settings: ScgSettings | None = None,
    *,
    init=None,
    center: bool = False,
    use_prior: bool = True,
    hyper_settings: ScgSettings | None = None,
) -> FittedModel:
    """Three-stage fit: LLE initialisation, hyperparameters at fixed latents,
    then joint optimisation of latents and hyperparameters.

    ``use_prior=False`` drops the Corp term (uniform latent prior on (0, 1)),
    which is the unconstrained GP-LVM-style ablation.
    """
    corp_cfg = corp_cfg or CorpConfig()
    scg_settings = scg_settings or ScgSettings()
    hyper_settings = hyper_settings or scg_settings
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    if data.ndim != 2 or data.shape[0] < 3 or data.shape[1] < 1:
        raise ValueError("fit needs an (n, d) array with n >= 3 and d >= 1")
    if not np.all(np.isfinite(data)):
        raise ValueError("training data must be finite")
    n, d = data.shape
    offsets = data.mean(axis=0) if center else None
    y = data - offsets if center else data

    x0 = _stage("embed", initial_latents, data, lle_settings, init)
    lp0 = initial_hyperparams(y, x0)
    init_value, _ = _evaluate(x0, y, lp0, corp_cfg, use_prior)
    log.info("initial objective %.6f", init_value)

    def hyper_only(v):
        value, grad = _evaluate(x0, y, v.reshape(d, 3), corp_cfg, use_prior)
        return value, grad[: 3 * d]

    res2 = _stage("hyperparameters", maximize, hyper_only, lp0.ravel(), hyper_settings)
    log.info("stage 2 objective %.6f after %d iterations", res2.value, res2.n_iters)

    order = np.argsort(x0)

    def joint(v):
        lp, x = _unpack(v, d)
        # A finite step can hop over the -inf barrier between neighbours;
        # treat that like landing on it so the initial order survives.
        if np.any(np.diff(x[order]) <= 0):
            return _fail(v.size)
        return _evaluate(x, y, lp, corp_cfg, use_prior)

    res3 = _stage("joint", maximize, joint, np.concatenate([res2.x, x0]), scg_settings)
    log.info("stage 3 objective %.6f after %d iterations (%s)", res3.value, res3.n_iters, res3.message)
    lp, x = _unpack(res3.x, d)

    model = _stage(
        "joint",
        FittedModel,
        data=data,
        latent=LatentConfig(x),
        theta=HyperParams.from_log_array(lp),
        corp_cfg=corp_cfg,
        centering=offsets,
        use_prior=use_prior,
        init_latent=x0,
    )
    model.stage_values = {
        "initial": float(init_value),
        "hyperparameters": float(res2.value),
        "joint": float(res3.value),
        "hyper_iters": res2.n_iters,
        "joint_iters": res3.n_iters,
    }
    return model


DEFAULT_K_CANDIDATES = (6, 7, 8, 9, 10, 11, 12)


def fit_best(
    data,
    k_candidates=DEFAULT_K_CANDIDATES,
    corp_cfg: CorpConfig | None = None,
    lle_settings: LleSettings | None = None,
    scg_settings: ScgSettings | None = None,
    **kwargs,
) -> FittedModel:
    """Run :func:`fit` from LLE starts with several neighbourhood sizes and
    keep the one with the highest final objective.

    LLE folds noisy, strongly curved data for some ``k`` and not others, and
    the fit cannot repair a folded ordering, so restarts are the cheap fix.
    Starts whose embedding fails are skipped; if all fail the last error is
    raised.
    """
    if kwargs.get("init") is not None:
        return fit(data, corp_cfg, lle_settings, scg_settings, **kwargs)
    base = lle_settings or LleSettings()
    n = np.shape(data)[0]
    best, last_err = None, None
    for k in k_candidates:
        if k >= n:
            continue
        settings = LleSettings(k_neighbors=int(k), reg=base.reg)
        try:
            m = fit(data, corp_cfg, settings, scg_settings, **kwargs)
        except StageError as exc:
            last_err = exc
            log.info("k=%d start failed: %s", k, exc)
            continue
        m.stage_values["k_neighbors"] = int(k)
        if best is None or m.objective_value > best.objective_value:
            best = m
    if best is None:
        raise last_err if last_err is not None else ValueError("no neighbourhood sizes given")
    return best

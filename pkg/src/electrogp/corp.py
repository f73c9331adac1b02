"""Coulomb repulsive process (Corp) on the unit interval and on spheres.

The univariate process draws its first point uniformly on (0, 1); every later
point has conditional density proportional to
``prod_j sin(pi |x - x_j|) ** (2 r)``. The sine makes the interval wrap around,
so the conditional is periodic with period 1 and has exactly one mode between
each pair of circularly adjacent existing points.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from ._util import golden_section_max
from .exceptions import SamplerError

EDGE = 1e-12
_REJECTION_ROUNDS = 8


@dataclass(frozen=True)
class CorpConfig:
    """Repulsion strength plus the numerical settings of the sampler.

    ``quad_points`` is the number of trapezoid nodes per unit length used to
    compute interval masses of the unnormalised conditional.
    """

    r: float = 1.0
    quad_points: int = 2048
    max_attempts: int = 10**6
    envelope: float = 1.05
    mode_tol: float = 1e-10

    def __post_init__(self):
        if not (self.r > 0 and math.isfinite(self.r)):
            raise ValueError(f"repulsive parameter r must be positive, got {self.r}")
        if self.quad_points < 64:
            raise ValueError(f"quad_points must be >= 64, got {self.quad_points}")
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        if self.envelope < 1.0:
            raise ValueError("envelope headroom must be >= 1")


@dataclass(frozen=True)
class PointSet1D:
    """Strictly increasing points inside (0, 1)."""

    xs: np.ndarray

    def __post_init__(self):
        xs = unit_coords(self.xs)
        if xs.size and np.any(np.diff(xs) <= 0):
            raise ValueError("PointSet1D requires strictly increasing coordinates")
        xs.setflags(write=False)
        object.__setattr__(self, "xs", xs)

    def __len__(self):
        return self.xs.size

    def __iter__(self):
        return iter(self.xs.tolist())


@dataclass(frozen=True)
class SphericalPoint:
    x: np.ndarray
    y: np.ndarray = field(init=False)

    def __post_init__(self):
        x = unit_coords(np.atleast_1d(self.x))
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", spherical_to_cartesian(x))


def unit_coords(xs) -> np.ndarray:
    """Validate coordinates in the unit interval and pull exact endpoints inside."""
    arr = np.array(xs, dtype=float, copy=True)
    if not np.all(np.isfinite(arr)):
        raise ValueError("coordinates must be finite")
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        bad = arr[(arr < 0.0) | (arr > 1.0)]
        raise ValueError(f"coordinates must lie in (0, 1); got {bad[:5].tolist()}")
    return np.clip(arr, EDGE, 1.0 - EDGE)


def sine_distance(x, y):
    return np.sin(np.pi * np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float)))


def _config(cfg):
    return CorpConfig() if cfg is None else cfg


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


# -- densities ---------------------------------------------------------------


def joint_log_density(xs, cfg: CorpConfig | None = None) -> float:
    """Unnormalised joint log density ``2r * sum_{i>j} log sin(pi |x_i - x_j|)``."""
    cfg = _config(cfg)
    xs = unit_coords(np.atleast_1d(xs))
    if xs.size == 0:
        raise ValueError("need at least one point")
    return float(kernels.corp_joint_logdens(xs, 2.0 * cfg.r))


def joint_log_density_grad(xs, cfg: CorpConfig | None = None) -> np.ndarray:
    """Gradient ``2 r pi sum_{j != i} cot(pi (x_i - x_j))`` of the joint log density."""
    cfg = _config(cfg)
    xs = np.ascontiguousarray(xs, dtype=float)
    return kernels.corp_joint_grad(xs, 2.0 * cfg.r)


def conditional_log_density(x_new, existing, cfg: CorpConfig | None = None):
    """Unnormalised log density of a new point given the existing ones.

    ``x_new`` may be a scalar or an array of query points.
    """
    cfg = _config(cfg)
    existing = unit_coords(np.atleast_1d(existing))
    if existing.size == 0:
        raise ValueError("existing point set must be nonempty")
    q = unit_coords(np.atleast_1d(x_new))
    out = kernels.corp_conditional_logdens(q, existing, 2.0 * cfg.r)
    return float(out[0]) if np.ndim(x_new) == 0 else out


# -- sampling ----------------------------------------------------------------


def _intervals(existing):
    ex = np.sort(existing)
    lo = ex
    hi = np.append(ex[1:], ex[0] + 1.0)  # last interval wraps through 1 == 0
    return lo, hi


def interval_masses(existing, cfg: CorpConfig | None = None):
    """Trapezoid masses of the unnormalised conditional on each gap.

    Returns ``(lo, hi, masses)``; the masses share one arbitrary scale. The
    final gap is the wraparound interval ``(max, min + 1)``.
    """
    cfg = _config(cfg)
    existing = unit_coords(np.atleast_1d(existing))
    lo, hi = _intervals(existing)
    counts = np.maximum(np.ceil(cfg.quad_points * (hi - lo)).astype(int), 16) + 1
    nodes = np.concatenate([np.linspace(a, b, c) for a, b, c in zip(lo, hi, counts)])
    logf = kernels.corp_conditional_logdens(nodes, existing, 2.0 * cfg.r)
    f = np.exp(logf - np.max(logf))
    bounds = np.concatenate([[0], np.cumsum(counts)])
    masses = np.array(
        [np.trapezoid(f[a:b], nodes[a:b]) for a, b in zip(bounds[:-1], bounds[1:])]
    )
    return lo, hi, masses


def sample_conditional(existing, cfg: CorpConfig | None = None, size=1, seed=None):
    """Exact draws from the conditional of the next point given ``existing``.

    Gap selection is multinomial on quadrature masses; within a gap a uniform
    proposal is accepted against an envelope at ``envelope`` times the
    numerically located gap mode.
    """
    cfg = _config(cfg)
    rng = _rng(seed)
    existing = unit_coords(np.atleast_1d(existing))
    if existing.size == 0:
        return rng.uniform(EDGE, 1.0 - EDGE, size=size)
    two_r = 2.0 * cfg.r
    lo, hi, masses = interval_masses(existing, cfg)
    which = rng.choice(masses.size, size=size, p=masses / masses.sum())

    log_env = np.empty(masses.size)
    for k in np.unique(which):

        def logf(x, k=k):
            return kernels.corp_conditional_logdens(np.array([x]), existing, two_r)[0]

        _, log_mode = golden_section_max(logf, lo[k], hi[k], tol=cfg.mode_tol)
        log_env[k] = math.log(cfg.envelope) + log_mode

    out = np.empty(size)
    attempts = np.zeros(size, dtype=np.int64)
    pending = np.arange(size)
    while pending.size:
        k = which[pending]
        u_pos = rng.random((_REJECTION_ROUNDS, pending.size))
        u_acc = 1.0 - rng.random((_REJECTION_ROUNDS, pending.size))
        got, used = kernels.corp_rejection_round(
            lo[k], hi[k] - lo[k], log_env[k], existing, two_r, u_pos, u_acc
        )
        attempts[pending] += used
        hit = ~np.isnan(got)
        out[pending[hit]] = got[hit]
        pending = pending[~hit]
        if pending.size and attempts[pending].max() > cfg.max_attempts:
            rate = (size - pending.size) / max(attempts.sum(), 1)
            raise SamplerError(
                f"rejection sampler exceeded {cfg.max_attempts} attempts for one point",
                rate,
            )
    out = np.mod(out, 1.0)
    return np.clip(out, EDGE, 1.0 - EDGE)


def sample_sequence(n: int, cfg: CorpConfig | None = None, seed=None) -> np.ndarray:
    """Draw ``n`` Corp points sequentially; returned in draw order."""
    if n < 1:
        raise ValueError("n must be >= 1")
    cfg = _config(cfg)
    rng = _rng(seed)
    xs = np.empty(n)
    xs[0] = rng.uniform(EDGE, 1.0 - EDGE)
    for i in range(1, n):
        xs[i] = sample_conditional(xs[:i], cfg, 1, rng)[0]
    return xs


def sample(n: int, cfg: CorpConfig | None = None, seed=None) -> PointSet1D:
    """Draw ``n`` Corp points and return them sorted."""
    return PointSet1D(np.sort(sample_sequence(n, cfg, seed)))


# -- property oracles ---------------------------------------------------------


def ball_probability_bound(eps: float, r: float) -> float:
    """Claimed upper bound ``2 pi^2 eps^(2r+1) / (2r+1)`` on a sine-ball probability."""
    return 2.0 * math.pi**2 * eps ** (2.0 * r + 1.0) / (2.0 * r + 1.0)


def in_sine_ball(x, center, eps):
    return sine_distance(x, center) < eps


def equally_spaced(n: int, offset: float = 0.5) -> np.ndarray:
    """Points with circular spacing ``1/n`` (the maximiser of the joint density)."""
    return (np.arange(n) + offset) / n


def circular_gaps(xs) -> np.ndarray:
    xs = np.sort(np.asarray(xs, dtype=float))
    return np.append(np.diff(xs), xs[0] + 1.0 - xs[-1])


# -- multivariate process -------------------------------------------------------


def spherical_to_cartesian(x) -> np.ndarray:
    """Map spherical coordinates in (0,1)^p onto the unit sphere in R^(p+1).

    Works on the last axis, so a ``(k, p)`` array maps to ``(k, p + 1)``.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] < 1:
        raise ValueError("need at least one spherical coordinate")
    ang = 2.0 * np.pi * x
    s = np.sin(ang)
    lead = np.cumprod(np.concatenate([np.ones(x.shape[:-1] + (1,)), s], axis=-1), axis=-1)
    y = lead.copy()
    y[..., :-1] *= np.cos(ang)
    return y


def _check_points(x, p=None):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if p is not None and x.shape[-1] != p:
        raise ValueError(f"dimension mismatch: expected {p} coordinates, got {x.shape[-1]}")
    return unit_coords(x)


def multivariate_conditional_log_density(x_new, existing, cfg: CorpConfig | None = None):
    """``r * sum_j log ||Y(x_new) - Y(x_j)||^2`` with ``Y`` the sphere map.

    ``x_new`` is one point (length p) or a ``(q, p)`` batch.
    """
    cfg = _config(cfg)
    single = np.ndim(x_new) == 1
    q = _check_points(x_new)
    ex = _check_points(existing, q.shape[-1])
    yq = spherical_to_cartesian(q)
    ye = spherical_to_cartesian(ex)
    sq = ((yq[:, None, :] - ye[None, :, :]) ** 2).sum(axis=-1)
    with np.errstate(divide="ignore"):
        out = cfg.r * np.log(sq).sum(axis=1)
    return float(out[0]) if single else out


def sample_multivariate(n: int, p: int, cfg: CorpConfig | None = None, seed=None):
    """Sequential rejection sampler for the p-dimensional process.

    Uniform proposals on the cube; the envelope is the located conditional
    maximum with the usual headroom, capped by the analytic bound ``4^(r k)``.
    """
    from scipy.optimize import minimize

    if n < 1 or p < 1:
        raise ValueError("n and p must be >= 1")
    cfg = _config(cfg)
    rng = _rng(seed)
    pts = np.empty((n, p))
    pts[0] = rng.uniform(EDGE, 1.0 - EDGE, size=p)
    for i in range(1, n):
        ex = pts[:i]
        cand = rng.random((4096, p))
        vals = multivariate_conditional_log_density(cand, ex, cfg)
        start = cand[np.argmax(vals)]
        res = minimize(
            lambda z: -multivariate_conditional_log_density(np.clip(z, EDGE, 1 - EDGE), ex, cfg),
            start,
            method="Nelder-Mead",
            options={"xatol": 1e-10, "fatol": 1e-12},
        )
        located = max(-res.fun, vals.max())
        log_env = min(math.log(cfg.envelope) + located, cfg.r * i * math.log(4.0))
        tries = 0
        while True:
            z = rng.random((256, p))
            lf = multivariate_conditional_log_density(z, ex, cfg)
            ok = np.log(1.0 - rng.random(256)) + log_env <= lf
            if ok.any():
                first = int(np.argmax(ok))
                pts[i] = z[first]
                break
            tries += 256
            if tries > cfg.max_attempts:
                raise SamplerError("multivariate sampler exceeded attempt cap", 0.0)
    return np.clip(pts, EDGE, 1.0 - EDGE)

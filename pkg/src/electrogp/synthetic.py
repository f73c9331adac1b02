"""Synthetic curve datasets with ground truth.

Curve shapes are sampled uniformly in normalised arc length ``t`` in
``[0, 1]`` and observed with isotropic Gaussian noise of standard deviation
``noise_sd``. The underlying parametric curves are:

* ``parabola``: ``(u, u^2)`` for ``u`` in ``[-1, 1]``, rotated by 30 degrees.
* ``spiral``: Archimedean spiral ``0.2 theta (cos theta, sin theta)`` for
  ``theta`` in ``[0, 3 pi]`` (1.5 turns, starting at the origin).
* ``sine``: ``(u, 0.4 sin(1.5 pi u))`` for ``u`` in ``[-1, 1]``, rotated by 30 degrees.
* ``arc``: unit circle between angles ``pi/4`` and ``7 pi/4``.

``gaussian`` is the exception: ``t ~ N(0, 1)`` along the major axis plus an
independent ``N(0, 0.3^2)`` minor-axis offset, rotated by 30 degrees. Its
"true curve" is the major axis over ``t`` in ``[-3, 3]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

SHAPES = ("gaussian", "parabola", "spiral", "sine", "arc")
ROTATION = math.radians(30.0)
_TABLE_SIZE = 200001


def _rotate(p, angle=ROTATION):
    c, s = math.cos(angle), math.sin(angle)
    return p @ np.array([[c, s], [-s, c]])


def _raw(shape, u):
    if shape == "parabola":
        return _rotate(np.stack([u, u**2], axis=-1))
    if shape == "spiral":
        return 0.2 * u[..., None] * np.stack([np.cos(u), np.sin(u)], axis=-1)
    if shape == "sine":
        return _rotate(np.stack([u, 0.4 * np.sin(1.5 * np.pi * u)], axis=-1))
    if shape == "arc":
        return np.stack([np.cos(u), np.sin(u)], axis=-1)
    raise ValueError(f"unknown shape {shape!r}; choose from {', '.join(SHAPES)}")


_RAW_RANGE = {
    "parabola": (-1.0, 1.0),
    "spiral": (0.0, 3.0 * np.pi),
    "sine": (-1.0, 1.0),
    "arc": (np.pi / 4, 7 * np.pi / 4),
}


def _check_shape(shape):
    if shape not in SHAPES:
        raise ValueError(f"unknown shape {shape!r}; choose from {', '.join(SHAPES)}")


@lru_cache(maxsize=None)
def _arclength_table(shape):
    u = np.linspace(*_RAW_RANGE[shape], _TABLE_SIZE)
    pts = _raw(shape, u)
    seg = np.hypot(*np.diff(pts, axis=0).T)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    return s / s[-1], u, s[-1]


def arc_length(shape: str) -> float:
    """Total length of the noise-free curve."""
    _check_shape(shape)
    if shape == "gaussian":
        return 6.0
    return float(_arclength_table(shape)[2])


def curve_points(shape: str, t) -> np.ndarray:
    """Noise-free curve points at arc-length fractions ``t``; shape ``(len(t), 2)``.

    For ``gaussian`` ``t`` is the major-axis coordinate instead.
    """
    _check_shape(shape)
    t = np.asarray(t, dtype=float)
    if shape == "gaussian":
        return _rotate(np.stack([t, np.zeros_like(t)], axis=-1))
    frac, u, _ = _arclength_table(shape)
    return _raw(shape, np.interp(t, frac, u))


def param_range(shape: str):
    _check_shape(shape)
    return (-3.0, 3.0) if shape == "gaussian" else (0.0, 1.0)


def true_polyline(shape: str, n_points: int = 20001, t_range=None) -> np.ndarray:
    lo, hi = t_range or param_range(shape)
    return curve_points(shape, np.linspace(lo, hi, n_points))


@dataclass(frozen=True)
class Dataset:
    shape: str
    noise_sd: float
    t: np.ndarray
    clean: np.ndarray
    y: np.ndarray


def _draw_params(shape, n, rng):
    if shape == "gaussian":
        return rng.standard_normal(n)
    return rng.uniform(0.0, 1.0, size=n)


def simulate(shape: str, n: int, noise_sd: float = 0.05, seed=None) -> Dataset:
    _check_shape(shape)
    if n < 3:
        raise ValueError("n must be >= 3")
    if noise_sd < 0:
        raise ValueError("noise_sd must be nonnegative")
    rng = np.random.default_rng(seed)
    t = _draw_params(shape, n, rng)
    clean = curve_points(shape, t)
    y = clean.copy()
    if shape == "gaussian":
        y += _rotate(np.stack([np.zeros(n), 0.3 * rng.standard_normal(n)], axis=-1))
    y += noise_sd * rng.standard_normal((n, 2))
    return Dataset(shape, float(noise_sd), t, clean, y)


def fresh_points(shape: str, n: int, noise_sd: float, seed=None) -> np.ndarray:
    """New draws from the generator, for coverage checks."""
    return simulate(shape, max(n, 3), noise_sd, seed).y[:n]


# -- image sequences -----------------------------------------------------------


@dataclass(frozen=True)
class FrameSequence:
    frames: np.ndarray  # (n_frames, size * size)
    centers: np.ndarray  # (n_frames, 2) bump centre in pixel units
    size: int


def bump_frames(
    n_frames: int = 105,
    size: int = 20,
    width: float = 1.5,
    radius: float = 6.0,
    sweep: float = 1.5 * np.pi,
    noise_sd: float = 0.0,
    seed=None,
) -> FrameSequence:
    """Gaussian bump moving at constant speed along a circular arc.

    Frame ``k`` shows a unit-height bump of standard deviation ``width``
    pixels centred at angle ``sweep * k / (n_frames - 1)`` on a circle of
    ``radius`` pixels about the image centre.
    """
    rng = np.random.default_rng(seed)
    s = np.linspace(0.0, 1.0, n_frames)
    ang = -sweep / 2 + sweep * s
    mid = (size - 1) / 2.0
    centers = np.stack([mid + radius * np.cos(ang), mid + radius * np.sin(ang)], axis=-1)
    rows, cols = np.mgrid[0:size, 0:size]
    d2 = (rows[None] - centers[:, 0, None, None]) ** 2 + (cols[None] - centers[:, 1, None, None]) ** 2
    frames = np.exp(-d2 / (2.0 * width**2)).reshape(n_frames, -1)
    if noise_sd > 0:
        frames = frames + noise_sd * rng.standard_normal(frames.shape)
    return FrameSequence(frames, centers, size)

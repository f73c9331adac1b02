"""Scaled conjugate gradients (Moller 1993), oriented for maximisation.

The objective returns ``(value, gradient)``. Steps that land on a
non-finite value are rejected and the damping is raised, which is what lets
an objective signal a hard constraint by returning ``-inf``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_SIGMA0 = 1e-4
_LAMBDA_MIN = 1e-15
_LAMBDA_MAX = 1e100


@dataclass(frozen=True)
class ScgSettings:
    max_iters: int = 500
    rel_tol: float = 1e-7
    grad_tol: float = 1e-6
    init_lambda: float = 1e-6

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.rel_tol < 0 or self.grad_tol < 0 or self.init_lambda <= 0:
            raise ValueError("tolerances must be nonnegative and init_lambda positive")


@dataclass
class ScgResult:
    x: np.ndarray
    value: float
    trace: list = field(default_factory=list)
    n_iters: int = 0
    message: str = ""


def _finite(v, g=None):
    return np.isfinite(v) and (g is None or np.all(np.isfinite(g)))


def maximize(objective, x0, settings: ScgSettings | None = None, callback=None) -> ScgResult:
    """Maximise ``objective`` from ``x0``.

    ``trace`` holds the objective after every accepted step (starting with
    the value at ``x0``), so it is non-decreasing.
    """
    s = settings or ScgSettings()
    x = np.array(x0, dtype=float)
    val, grad = objective(x)
    grad = np.asarray(grad, dtype=float)
    if not _finite(val, grad):
        raise ValueError("objective is not finite at the starting point")

    # Internally minimise f = -objective.
    fold = -float(val)
    gnew = -grad
    gold = gnew
    direction = -gnew
    lam = s.init_lambda
    success = True
    nsuccess = 0
    nparams = x.size
    trace = [float(val)]
    mu = kappa = theta = 0.0
    message = "max_iters reached"

    if np.linalg.norm(gnew) < s.grad_tol:
        return ScgResult(x, float(val), trace, 0, "gradient tolerance met")

    it = 0
    while it < s.max_iters:
        it += 1
        if success:
            mu = float(direction @ gnew)
            if mu >= 0:
                direction = -gnew
                mu = float(direction @ gnew)
            kappa = float(direction @ direction)
            if kappa < np.finfo(float).eps:
                message = "search direction vanished"
                if s.grad_tol > 0 or s.rel_tol > 0:
                    break
                continue
            sigma = _SIGMA0 / np.sqrt(kappa)
            theta = 0.0
            for _ in range(10):
                _, gplus = objective(x + sigma * direction)
                gplus = -np.asarray(gplus, dtype=float)
                if np.all(np.isfinite(gplus)):
                    theta = float(direction @ (gplus - gnew)) / sigma
                    break
                sigma *= 0.1

        delta = theta + lam * kappa
        if delta <= 0:
            delta = lam * kappa
            lam = lam - theta / kappa
        step = -mu / delta
        xnew = x + step * direction
        vnew, gcand = objective(xnew)
        fnew = -float(vnew)
        gcand = -np.asarray(gcand, dtype=float)
        if _finite(fnew, gcand) and step * mu != 0.0:
            comparison = 2.0 * (fnew - fold) / (step * mu)
        else:
            comparison = -np.inf

        if comparison >= 0:
            success = True
            nsuccess += 1
            x = xnew
            change = abs(fnew - fold)
            scale = max(abs(fold), np.finfo(float).tiny)
            fold = fnew
            gold = gnew
            gnew = gcand
            trace.append(-fnew)
            if callback is not None:
                callback(it, x, -fnew)
            if change < s.rel_tol * scale:
                message = "relative tolerance met"
                break
            if np.linalg.norm(gnew) < s.grad_tol:
                message = "gradient tolerance met"
                break
        else:
            success = False

        if comparison < 0.25:
            lam = min(4.0 * lam, _LAMBDA_MAX)
        if comparison > 0.75:
            lam = max(0.5 * lam, _LAMBDA_MIN)

        if nsuccess == nparams:
            direction = -gnew
            nsuccess = 0
        elif success:
            gamma = float((gold - gnew) @ gnew) / mu
            direction = gamma * direction - gnew

    return ScgResult(x, -fold, trace, it, message)

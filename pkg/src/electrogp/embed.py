"""Latent initialisation: one-dimensional locally linear embedding."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .exceptions import DisconnectedGraphError


@dataclass(frozen=True)
class LleSettings:
    k_neighbors: int = 8
    reg: float = 1e-3  # relative to the trace of each local Gram matrix

    def __post_init__(self):
        if self.k_neighbors < 1:
            raise ValueError("k_neighbors must be >= 1")
        if self.reg < 0:
            raise ValueError("reg must be nonnegative")


def _neighbors(data, k):
    tree = cKDTree(data)
    _, idx = tree.query(data, k=k + 1)
    # Drop self; with duplicate rows self may not come first.
    out = np.empty((data.shape[0], k), dtype=int)
    for i, row in enumerate(idx):
        row = row[row != i][:k] if np.any(row == i) else row[:k]
        out[i] = row
    return out


def _check_connected(nbrs):
    n = nbrs.shape[0]
    rows = np.repeat(np.arange(n), nbrs.shape[1])
    graph = csr_matrix((np.ones(rows.size), (rows, nbrs.ravel())), shape=(n, n))
    ncomp, labels = connected_components(graph, directed=False)
    if ncomp > 1:
        raise DisconnectedGraphError([np.flatnonzero(labels == c).tolist() for c in range(ncomp)])


def reconstruction_weights(data, nbrs, reg):
    n, k = nbrs.shape
    w = np.zeros((n, n))
    ones = np.ones(k)
    for i in range(n):
        z = data[nbrs[i]] - data[i]
        c = z @ z.T
        tr = np.trace(c)
        eps = reg * tr if tr > 0 else reg
        c.flat[:: k + 1] += eps if eps > 0 else 1e-12 * (tr or 1.0)
        wi = np.linalg.solve(c, ones)
        w[i, nbrs[i]] = wi / wi.sum()
    return w


def lle_1d(data, settings: LleSettings | None = None) -> np.ndarray:
    """One-dimensional LLE coordinates of the rows of ``data``.

    The sign is fixed so the coordinates correlate positively with the
    projection on the first principal component.
    """
    settings = settings or LleSettings()
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or data.shape[0] < 3:
        raise ValueError("lle_1d needs an (n, d) array with n >= 3")
    if not np.all(np.isfinite(data)):
        raise ValueError("data rows must be finite")
    n = data.shape[0]
    k = settings.k_neighbors
    if k >= n:
        raise ValueError(f"k_neighbors={k} must be smaller than n={n}")
    nbrs = _neighbors(data, k)
    _check_connected(nbrs)
    w = reconstruction_weights(data, nbrs, settings.reg)
    m = np.eye(n) - w
    _, vecs = np.linalg.eigh(m.T @ m)
    coord = vecs[:, 1]

    centered = data - data.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    pc1 = centered @ vt[0]
    # PCA's own sign is arbitrary; pin it to the largest-magnitude loading.
    pc1 *= np.sign(vt[0][np.argmax(np.abs(vt[0]))]) or 1.0
    if coord @ (pc1 - pc1.mean()) < 0:
        coord = -coord
    return coord


def rescale_unit(coords) -> np.ndarray:
    """Affine map onto ``[1/(2n), 1 - 1/(2n)]``."""
    c = np.asarray(coords, dtype=float).ravel()
    n = c.size
    lo, hi = c.min(), c.max()
    if not hi > lo:
        raise ValueError("cannot rescale constant coordinates")
    margin = 1.0 / (2.0 * n)
    return margin + (c - lo) / (hi - lo) * (1.0 - 2.0 * margin)

from dataclasses import dataclass

import numpy as np


@dataclass
class PcaResult:
    axes: np.ndarray          # (2, d), rows are unit principal axes
    mean: np.ndarray          # (d,)
    variances: np.ndarray     # (2,), explained variance along each axis
    projections: np.ndarray   # (n, 2)
    rank_deficient: bool      # second axis was picked arbitrarily

    def project(self, x):
        return (np.atleast_2d(x) - self.mean) @ self.axes.T

    def back_project(self, z):
        return np.atleast_2d(z) @ self.axes + self.mean


def _power_iteration(cov, start, tol=1e-14, max_iter=10000):
    v = start / np.linalg.norm(start)
    for _ in range(max_iter):
        w = cov @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return v, 0.0
        w /= norm
        # eigenvectors are defined up to sign
        if w @ v < 0:
            w = -w
        if np.linalg.norm(w - v) < tol:
            v = w
            break
        v = w
    return v, float(v @ cov @ v)


def pca_top2(data, null_tol=1e-12):
    """Top two principal axes by power iteration with deflation.

    When the data has (numerically) rank below two, the second axis is any
    unit vector orthogonal to the first and ``rank_deficient`` is set.
    """
    x = np.asarray(data, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 3 or x.shape[1] < 2:
        raise ValueError(f"pca_top2 needs at least 3 rows and 2 columns, got {x.shape}")
    mean = x.mean(axis=0)
    xc = x - mean
    cov = xc.T @ xc / (x.shape[0] - 1)
    d = cov.shape[0]
    scale = max(np.trace(cov), 1e-300)

    start = np.ones(d) + np.arange(d) * 1e-3
    v1, lam1 = _power_iteration(cov, start)

    deflated = cov - lam1 * np.outer(v1, v1)
    start2 = start - (start @ v1) * v1
    if np.linalg.norm(start2) < 1e-12:
        start2 = np.eye(d)[np.argmin(np.abs(v1))]
        start2 = start2 - (start2 @ v1) * v1
    v2, lam2 = _power_iteration(deflated, start2)
    v2 = v2 - (v2 @ v1) * v1
    deficient = lam2 <= null_tol * scale or np.linalg.norm(v2) < 1e-12
    if deficient:
        e = np.eye(d)[np.argmin(np.abs(v1))]
        v2 = e - (e @ v1) * v1
        lam2 = max(float(v2 @ cov @ v2) / float(v2 @ v2), 0.0)
    v2 /= np.linalg.norm(v2)
    # one more Gram-Schmidt pass keeps |v1.v2| at machine precision
    v2 -= (v2 @ v1) * v1
    v2 /= np.linalg.norm(v2)
    lam2 = float(v2 @ cov @ v2)

    axes = np.vstack([v1, v2])
    return PcaResult(
        axes=axes,
        mean=mean,
        variances=np.array([lam1, lam2]),
        projections=xc @ axes.T,
        rank_deficient=bool(deficient),
    )

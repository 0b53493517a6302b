"""Distribution metrics for generated trajectories.

Frechet distance between Gaussian fits, PRDC (precision, recall, density,
coverage) on k-nearest-neighbour balls, and the out-of-frame rate. All work
on raw feature vectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimMismatch, TooFewPoints
from .features import FRAMING_DIM, build_framing_features, framing_projection
from .geometry import visible
from .linalg import sym_sqrt

N_FRAMING_JOINTS = FRAMING_DIM // 2


@dataclass(frozen=True)
class GaussianStats:
    mean: np.ndarray
    cov: np.ndarray
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise TooFewPoints("need at least 2 samples")
        if np.max(np.abs(self.cov - self.cov.T), initial=0.0) > 1e-8:
            raise ValueError("covariance is not symmetric")

    @property
    def dim(self) -> int:
        return len(self.mean)


def fit_gaussian(samples) -> GaussianStats:
    """Sample mean and unbiased covariance of rows of ``samples`` (n, d)."""
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    n = len(x)
    if n < 2:
        raise TooFewPoints("need at least 2 samples")
    mean = x.mean(axis=0)
    c = x - mean
    cov = c.T @ c / (n - 1)
    return GaussianStats(mean=mean, cov=0.5 * (cov + cov.T), n=n)


def frechet_distance(a: GaussianStats, b: GaussianStats) -> float:
    """Squared Frechet distance ``|mu_a - mu_b|^2 + tr(Sa + Sb - 2 (Sa Sb)^(1/2))``.

    The cross term uses ``tr sqrt(Sa^(1/2) Sb Sa^(1/2))``, which equals
    ``tr (Sa Sb)^(1/2)`` and keeps the argument symmetric PSD.
    """
    if a.dim != b.dim:
        raise DimMismatch(f"dimensions differ: {a.dim} vs {b.dim}")
    diff = a.mean - b.mean
    ra = sym_sqrt(a.cov)
    m = ra @ b.cov @ ra
    cross = np.trace(sym_sqrt(0.5 * (m + m.T), neg_tol=1e-6))
    d2 = float(diff @ diff + np.trace(a.cov) + np.trace(b.cov) - 2.0 * cross)
    return max(d2, 0.0)


def _pairwise(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    sq = np.sum(a * a, 1)[:, None] + np.sum(b * b, 1)[None, :] - 2.0 * a @ b.T
    return np.sqrt(np.maximum(sq, 0.0))


def _knn_radii(x: np.ndarray, k: int) -> np.ndarray:
    d = _pairwise(x, x)
    np.fill_diagonal(d, 0.0)
    # index 0 after partition is the point itself
    return np.partition(d, k, axis=1)[:, k]


def prdc(real, gen, k: int = 5) -> dict[str, float]:
    """Precision, recall, density and coverage with strict ``<`` ball membership."""
    real = np.asarray(real, dtype=np.float64).reshape(len(real), -1)
    gen = np.asarray(gen, dtype=np.float64).reshape(len(gen), -1)
    if real.shape[1] != gen.shape[1]:
        raise DimMismatch("real and generated vectors differ in width")
    if len(real) < k + 1 or len(gen) < k + 1:
        raise TooFewPoints(f"need at least k+1={k + 1} points in each set")
    r_real = _knn_radii(real, k)
    r_gen = _knn_radii(gen, k)
    d = _pairwise(real, gen)  # (n_real, n_gen)
    inside_real = d < r_real[:, None]
    return {
        "precision": float(inside_real.any(axis=0).mean()),
        "recall": float((d < r_gen[None, :]).any(axis=1).mean()),
        "density": float(inside_real.sum() / (k * len(gen))),
        "coverage": float((d.min(axis=1) < r_real).mean()),
    }


def out_frames(framing, in_front=None) -> np.ndarray:
    """Per-frame flag: none of the framing joints is on-screen."""
    f = np.asarray(framing, dtype=np.float64)
    ndc = f.reshape(f.shape[:-1] + (N_FRAMING_JOINTS, 2))
    front = np.ones(ndc.shape[:-1], dtype=bool) if in_front is None else np.asarray(in_front, dtype=bool)
    return ~visible(ndc, front).any(axis=-1)


def out_rate(framing, in_front=None) -> float:
    """Fraction of frames, pooled over all samples, with no framing joint on-screen.

    ``framing`` is (..., 18) or a list of per-sample (F, 18) arrays;
    ``in_front`` optionally marks per-joint (..., 9) depth validity.
    """
    if isinstance(framing, (list, tuple)):
        fronts = in_front if in_front is not None else [None] * len(framing)
        flags = [out_frames(f, m) for f, m in zip(framing, fronts)]
        flat = np.concatenate([x.ravel() for x in flags]) if flags else np.zeros(0, bool)
    else:
        flat = out_frames(framing, in_front).ravel()
    if flat.size == 0:
        raise ValueError("no frames")
    return float(flat.mean())


def trajectory_out_rate(pairs) -> float:
    flags = []
    for p in pairs:
        ndc, front = framing_projection(p)
        flags.append(~visible(ndc, front).any(axis=-1))
    return float(np.concatenate(flags).mean())


def fd_from_rows(gen_rows, ref_rows) -> float:
    return frechet_distance(fit_gaussian(gen_rows), fit_gaussian(ref_rows))


def framing_fd(gen_pairs, ref_pairs) -> float:
    """FD between per-frame framing vectors of two trajectory sets."""
    if not gen_pairs or not ref_pairs:
        raise ValueError("both trajectory sets must be non-empty")
    gen = np.concatenate([build_framing_features(p) for p in gen_pairs])
    ref = np.concatenate([build_framing_features(p) for p in ref_pairs])
    return fd_from_rows(gen, ref)

"""Checks of the orthogonal split of an isotropic Gaussian latent.

For ``u ~ N(mu, sigma^2 I)`` and a framing map ``F`` the two projections
``P_par u`` and ``P_perp u`` are independent Gaussians, the conditional mean
given ``F u = z`` is ``P_perp mu + pinv(F) z``, and the joint log-density
splits into the two subspace log-densities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import RankDeficient, ShapeMismatch
from .linalg import ProjectorPair, numerical_rank, pseudo_inverse, svd_thin
from .rng import make_rng

LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class IsotropicGaussian:
    mu: np.ndarray
    sigma: float

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=np.float64)
        if mu.ndim != 1 or not np.all(np.isfinite(mu)):
            raise ValueError("mu must be a finite vector")
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError("sigma must be positive")
        object.__setattr__(self, "mu", mu)

    @property
    def dim(self) -> int:
        return len(self.mu)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.mu + self.sigma * rng.standard_normal((n, self.dim))

    def log_density(self, u) -> np.ndarray:
        d = np.asarray(u) - self.mu
        return -0.5 * np.sum(d * d, axis=-1) / self.sigma**2 - self.dim * (np.log(self.sigma) + 0.5 * LOG_2PI)


def decompose(u, proj: ProjectorPair) -> tuple[np.ndarray, np.ndarray]:
    """Split ``u`` (..., n) into ``(u_perp, u_par)``; ``u_perp + u_par`` gives back ``u`` up to rounding."""
    u = np.asarray(u, dtype=np.float64)
    n = proj.parallel.shape[0]
    if u.shape[-1] != n:
        raise ShapeMismatch(f"vector width {u.shape[-1]} != projector size {n}")
    u_par = u @ proj.parallel.T
    # perpendicular part as a remainder so the sum reconstructs u to the last bit of rounding
    return u - u_par, u_par


@dataclass(frozen=True)
class BandCheck:
    name: str
    deviation: float
    band: float

    @property
    def passed(self) -> bool:
        return self.deviation < self.band


@dataclass(frozen=True)
class CochranReport:
    n_samples: int
    checks: tuple[BandCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def table(self) -> str:
        rows = [f"{'check':<24}{'max |dev|':>14}{'band':>14}  result"]
        for c in self.checks:
            rows.append(f"{c.name:<24}{c.deviation:>14.6g}{c.band:>14.6g}  {'pass' if c.passed else 'FAIL'}")
        return "\n".join(rows)


def _cov(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = a - a.mean(axis=0)
    b = b - b.mean(axis=0)
    return a.T @ b / (len(a) - 1)


def cochran_check(g: IsotropicGaussian, proj: ProjectorPair, n_samples: int = 100_000, seed: int = 0,
                  n_sigma: float = 5.0) -> CochranReport:
    """Monte Carlo check of the projected means, covariances and the cross-covariance.

    Bands are ``n_sigma * sigma / sqrt(n)`` for means and
    ``n_sigma * sigma^2 / sqrt(n)`` for second moments.
    """
    if n_samples < 10_000:
        raise ValueError("n_samples must be at least 10^4")
    if g.dim != proj.parallel.shape[0]:
        raise ShapeMismatch("Gaussian and projector dimensions differ")
    u = g.sample(make_rng(seed, 30), n_samples)
    u_perp, u_par = decompose(u, proj)
    s2 = g.sigma**2
    root_n = np.sqrt(n_samples)
    mean_band = n_sigma * g.sigma / root_n
    cov_band = n_sigma * s2 / root_n
    checks = (
        BandCheck("mean par", float(np.max(np.abs(u_par.mean(0) - proj.parallel @ g.mu))), mean_band),
        BandCheck("mean perp", float(np.max(np.abs(u_perp.mean(0) - proj.perpendicular @ g.mu))), mean_band),
        BandCheck("cov par", float(np.max(np.abs(_cov(u_par, u_par) - s2 * proj.parallel))), cov_band),
        BandCheck("cov perp", float(np.max(np.abs(_cov(u_perp, u_perp) - s2 * proj.perpendicular))), cov_band),
        BandCheck("cross-cov perp/par", float(np.max(np.abs(_cov(u_perp, u_par)))), cov_band),
    )
    return CochranReport(n_samples=n_samples, checks=checks)


def conditional_mean(g: IsotropicGaussian, f, z) -> np.ndarray:
    """``E[u | F u = z] = P_perp mu + pinv(F) z``; ``F`` must have full row rank."""
    f = np.asarray(f, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if f.shape[1] != g.dim or z.shape[-1] != f.shape[0]:
        raise ShapeMismatch(f"framing map {f.shape} incompatible with n={g.dim}, z width {z.shape[-1]}")
    svd = svd_thin(f)
    if numerical_rank(svd.s, f.shape) < f.shape[0]:
        raise RankDeficient("framing map does not have full row rank")
    f_pinv = pseudo_inverse(f)
    p_perp = np.eye(g.dim) - f_pinv @ f
    return p_perp @ g.mu + z @ f_pinv.T


def rejection_conditional_mean(g: IsotropicGaussian, f, z, window: float = 0.05, n_draws: int = 2_000_000,
                               seed: int = 0, chunk: int = 250_000) -> tuple[np.ndarray, np.ndarray, int]:
    """Mean and standard error of draws with ``|F u - z| < window``; also the accepted count."""
    f = np.asarray(f, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    rng = make_rng(seed, 31)
    total = np.zeros(g.dim)
    total_sq = np.zeros(g.dim)
    k = 0
    for start in range(0, n_draws, chunk):
        u = g.sample(rng, min(chunk, n_draws - start))
        keep = np.linalg.norm(u @ f.T - z, axis=1) < window
        acc = u[keep]
        total += acc.sum(0)
        total_sq += (acc * acc).sum(0)
        k += len(acc)
    if k < 2:
        raise ValueError("too few accepted draws; widen the window or draw more")
    mean = total / k
    var = (total_sq - k * mean * mean) / (k - 1)
    return mean, np.sqrt(var / k), k


def _subspace_bases(proj: ProjectorPair) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal column bases (n, r) and (n, n - r) of the two projector ranges."""
    n = proj.parallel.shape[0]
    r = proj.rank
    v_par = svd_thin(proj.parallel).u[:, :r]
    v_perp = svd_thin(proj.perpendicular).u[:, : n - r]
    return v_par, v_perp


def _gauss_logpdf(x: np.ndarray, mean: np.ndarray, sigma: float) -> np.ndarray:
    d = x - mean
    k = x.shape[-1]
    return -0.5 * np.sum(d * d, axis=-1) / sigma**2 - k * (np.log(sigma) + 0.5 * LOG_2PI)


def factorized_log_density(g: IsotropicGaussian, proj: ProjectorPair, u) -> np.ndarray:
    """Sum of the two subspace log-densities, each in the coordinates of its range.

    Means are the projected means ``P mu``; each part is a Gaussian with
    covariance ``sigma^2 I`` on its own subspace.
    """
    u = np.asarray(u, dtype=np.float64)
    u_perp, u_par = decompose(u, proj)
    v_par, v_perp = _subspace_bases(proj)
    lp = _gauss_logpdf(u_par @ v_par, (proj.parallel @ g.mu) @ v_par, g.sigma)
    if v_perp.shape[1]:
        lp = lp + _gauss_logpdf(u_perp @ v_perp, (proj.perpendicular @ g.mu) @ v_perp, g.sigma)
    return lp


def density_factor_check(g: IsotropicGaussian, proj: ProjectorPair, n_points: int = 1000, seed: int = 0) -> float:
    """Max absolute gap between the full log-density and its two-subspace factorisation."""
    u = g.sample(make_rng(seed, 32), n_points)
    return float(np.max(np.abs(g.log_density(u) - factorized_log_density(g, proj, u))))

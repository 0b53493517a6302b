"""Dense linear-algebra kernels.

Thin SVD by one-sided Jacobi, the Moore-Penrose pseudo-inverse built on it,
the orthogonal projector pair induced by a framing map, and the PSD square
root used by the Frechet distance. Matrices are 2-D float64 numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DegenerateFraming, NegativeEigenvalue, NonConvergence, NotSymmetric

MAX_SWEEPS = 100
_EPS = np.finfo(np.float64).eps


@dataclass(frozen=True)
class SvdResult:
    """``a = u @ diag(s) @ vt`` with ``u`` (m, k), ``s`` (k,), ``vt`` (k, n), k = min(m, n)."""

    u: np.ndarray
    s: np.ndarray
    vt: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.s) @ self.vt


@dataclass(frozen=True)
class ProjectorPair:
    parallel: np.ndarray
    perpendicular: np.ndarray
    rank: int


def _as_matrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


@lru_cache(maxsize=None)
def _round_robin(k: int) -> tuple[tuple[np.ndarray, np.ndarray], ...]:
    # circle method: k even, k-1 rounds of k/2 disjoint pairs
    players = list(range(k))
    rounds = []
    for _ in range(k - 1):
        top = np.array(players[: k // 2])
        bot = np.array(players[k // 2 :][::-1])
        rounds.append((top, bot))
        players = [players[0], players[-1]] + players[1:-1]
    return tuple(rounds)


def _jacobi_square(g: np.ndarray, max_sweeps: int) -> tuple[np.ndarray, np.ndarray]:
    """Orthogonalise the columns of square ``g``; returns (g @ v, v)."""
    m, k = g.shape
    kk = k + (k % 2)
    # row i holds column i of g followed by column i of v
    rows = np.zeros((kk, m + kk))
    rows[:k, :m] = g.T
    rows[:, m:] = np.eye(kk)
    if kk > 1:
        rounds = _round_robin(kk)
        for _ in range(max_sweeps):
            rotated = False
            for top, bot in rounds:
                ri = rows[top]
                rj = rows[bot]
                gi, gj = ri[:, :m], rj[:, :m]
                alpha = np.einsum("ij,ij->i", gi, gi)
                beta = np.einsum("ij,ij->i", gj, gj)
                gamma = np.einsum("ij,ij->i", gi, gj)
                active = np.abs(gamma) > _EPS * np.sqrt(alpha * beta)
                if not active.any():
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * np.where(active, gamma, 1.0))
                t = np.where(zeta >= 0, 1.0, -1.0) / (np.abs(zeta) + np.hypot(1.0, zeta))
                t = np.where(active, t, 0.0)[:, None]
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                rows[top] = c * ri - s * rj
                rows[bot] = s * ri + c * rj
            if not rotated:
                break
        else:
            raise NonConvergence(f"one-sided Jacobi did not converge in {max_sweeps} sweeps")
    return rows[:k, :m].T.copy(), rows[:k, m : m + k].T.copy()


def _complete_columns(u: np.ndarray, good: np.ndarray) -> np.ndarray:
    """Replace columns of ``u`` not flagged ``good`` by an orthonormal completion."""
    if good.all():
        return u
    m, k = u.shape
    basis = np.hstack([u[:, good], np.eye(m)])
    q, r = np.linalg.qr(basis)
    n_good = int(good.sum())
    q[:, :n_good] *= np.sign(np.diag(r)[:n_good])
    out = u.copy()
    out[:, ~good] = q[:, n_good : n_good + int((~good).sum())]
    return out


def svd_thin(a, max_sweeps: int = MAX_SWEEPS) -> SvdResult:
    """Thin singular value decomposition via one-sided Jacobi.

    The input is first reduced to a square ``k x k`` triangle by QR so that
    Jacobi rotations act on ``min(m, n)`` columns only.
    """
    a = _as_matrix(a)
    m, n = a.shape
    transposed = m < n
    b = a.T if transposed else a
    q, r = np.linalg.qr(b)
    g, v = _jacobi_square(r, max_sweeps)
    s = np.linalg.norm(g, axis=0)
    order = np.argsort(-s, kind="stable")
    s, g, v = s[order], g[:, order], v[:, order]
    scale = s[0] if s.size and s[0] > 0 else 1.0
    good = s > _EPS * scale * max(m, n)
    w = np.zeros_like(g)
    w[:, good] = g[:, good] / s[good]
    w = _complete_columns(w, good)
    left = q @ w
    if transposed:
        return SvdResult(u=v, s=s, vt=left.T)
    return SvdResult(u=left, s=s, vt=v.T)


def default_tol(shape: tuple[int, int]) -> float:
    return max(shape) * _EPS


def numerical_rank(s: np.ndarray, shape: tuple[int, int], tol: float | None = None) -> int:
    if tol is None:
        tol = default_tol(shape)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > tol * s[0]))


def pseudo_inverse(a, tol: float | None = None) -> np.ndarray:
    """Moore-Penrose pseudo-inverse ``V D^+ U^T``.

    Singular values at or below ``tol * s_max`` are treated as zero; the
    default ``tol`` is ``max(m, n) * eps``.
    """
    a = _as_matrix(a)
    if tol is not None and tol < 0:
        raise ValueError("tol must be non-negative")
    res = svd_thin(a)
    r = numerical_rank(res.s, a.shape, tol)
    return (res.vt[:r].T / res.s[:r]) @ res.u[:, :r].T


def projector_pair(f, tol: float | None = None) -> ProjectorPair:
    """Orthogonal projectors onto the row space of ``f`` and onto its kernel.

    ``parallel = f^+ f = V_r V_r^T`` and ``perpendicular = I - parallel``.
    """
    f = _as_matrix(f)
    res = svd_thin(f)
    r = numerical_rank(res.s, f.shape, tol)
    if r == 0:
        raise DegenerateFraming("framing map has rank 0")
    vr = res.vt[:r]
    parallel = vr.T @ vr
    parallel = 0.5 * (parallel + parallel.T)
    perpendicular = np.eye(f.shape[1]) - parallel
    return ProjectorPair(parallel=parallel, perpendicular=perpendicular, rank=r)


def sym_sqrt(a, sym_tol: float = 1e-8, neg_tol: float = 1e-8) -> np.ndarray:
    """Principal square root of a symmetric PSD matrix.

    Eigenvalues in ``[-neg_tol * max(1, lambda_max), 0)`` are clipped to zero;
    anything more negative raises ``NegativeEigenvalue``.
    """
    a = _as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise NotSymmetric(f"matrix is not square: {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a))))
    if np.max(np.abs(a - a.T)) > sym_tol * scale:
        raise NotSymmetric("matrix is not symmetric within tolerance")
    lam, q = np.linalg.eigh(0.5 * (a + a.T))
    floor = -neg_tol * max(1.0, float(lam[-1]))
    if lam[0] < floor:
        raise NegativeEigenvalue(f"eigenvalue {lam[0]:.3e} below {floor:.3e}")
    root = (q * np.sqrt(np.clip(lam, 0.0, None))) @ q.T
    return 0.5 * (root + root.T)

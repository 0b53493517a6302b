import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from auxguide.errors import DegenerateFraming, NegativeEigenvalue, NotSymmetric
from auxguide.linalg import numerical_rank, projector_pair, pseudo_inverse, svd_thin, sym_sqrt
from auxguide.rng import make_rng


def random_matrix(seed, m, n, rank=None):
    rng = make_rng(seed, 900)
    a = rng.standard_normal((m, n))
    if rank is not None:
        a = rng.standard_normal((m, rank)) @ rng.standard_normal((rank, n))
    return a


shapes = st.tuples(st.integers(1, 12), st.integers(1, 12), st.integers(0, 10_000))


def test_svd_identity():
    r = svd_thin(np.eye(3))
    assert np.allclose(r.s, 1.0)
    assert np.allclose(r.reconstruct(), np.eye(3), atol=1e-14)


def test_svd_diagonal_with_zero():
    r = svd_thin(np.diag([3.0, 2.0, 0.0]))
    assert np.allclose(r.s, [3, 2, 0], atol=1e-14)
    assert np.allclose(r.u.T @ r.u, np.eye(3), atol=1e-12)
    assert np.allclose(r.vt @ r.vt.T, np.eye(3), atol=1e-12)


def test_svd_random_5x3():
    a = random_matrix(0, 5, 3)
    r = svd_thin(a)
    assert np.linalg.norm(r.reconstruct() - a) / np.linalg.norm(a) < 1e-9
    assert np.allclose(r.s, np.linalg.svd(a, compute_uv=False), atol=1e-12)


@given(shapes)
def test_svd_properties(shape):
    m, n, seed = shape
    a = random_matrix(seed, m, n)
    r = svd_thin(a)
    k = min(m, n)
    assert r.u.shape == (m, k) and r.vt.shape == (k, n)
    assert np.all(r.s >= 0) and np.all(np.diff(r.s) <= 1e-12)
    assert np.allclose(r.u.T @ r.u, np.eye(k), atol=1e-10)
    assert np.allclose(r.vt @ r.vt.T, np.eye(k), atol=1e-10)
    assert np.linalg.norm(r.reconstruct() - a) <= 1e-9 * max(np.linalg.norm(a), 1e-300)


@given(st.integers(2, 10), st.integers(2, 10), st.integers(0, 10_000))
def test_svd_rank_deficient_stays_orthonormal(m, n, seed):
    a = random_matrix(seed, m, n, rank=1)
    r = svd_thin(a)
    assert np.allclose(r.u.T @ r.u, np.eye(min(m, n)), atol=1e-10)
    assert numerical_rank(r.s, a.shape) == 1


def test_pinv_examples():
    assert np.allclose(pseudo_inverse(np.eye(3)), np.eye(3), atol=1e-14)
    assert np.allclose(pseudo_inverse([[1.0, 0.0], [0.0, 0.0]]), [[1, 0], [0, 0]], atol=1e-14)
    assert np.allclose(pseudo_inverse([[1.0, 2.0], [3.0, 4.0]]), [[-2.0, 1.0], [1.5, -0.5]], atol=1e-12)


def penrose_errors(a, p):
    return (
        np.max(np.abs(a @ p @ a - a)),
        np.max(np.abs(p @ a @ p - p)),
        np.max(np.abs((a @ p).T - a @ p)),
        np.max(np.abs((p @ a).T - p @ a)),
    )


@given(shapes, st.booleans())
def test_penrose(shape, deficient):
    m, n, seed = shape
    a = random_matrix(seed, m, n, rank=1 if deficient else None)
    assert max(penrose_errors(a, pseudo_inverse(a))) < 1e-9


def test_projector_examples():
    assert np.allclose(projector_pair([[1.0, 0.0]]).parallel, [[1, 0], [0, 0]], atol=1e-15)
    assert np.allclose(projector_pair([[1.0, 1.0]]).parallel, [[0.5, 0.5], [0.5, 0.5]], atol=1e-15)
    p = projector_pair(np.eye(2))
    assert np.allclose(p.parallel, np.eye(2)) and np.allclose(p.perpendicular, 0, atol=1e-15)


def test_projector_degenerate():
    with pytest.raises(DegenerateFraming):
        projector_pair(np.zeros((2, 5)))


@given(st.integers(2, 16), st.integers(0, 10_000), st.data())
def test_projector_properties(n, seed, data):
    dz = data.draw(st.integers(1, n - 1))
    f = random_matrix(seed, dz, n)
    p = projector_pair(f)
    par, perp = p.parallel, p.perpendicular
    assert p.rank == dz
    assert np.max(np.abs(par @ par - par)) < 1e-9
    assert np.max(np.abs(par - par.T)) < 1e-12
    assert np.max(np.abs(par + perp - np.eye(n))) < 1e-12
    assert np.max(np.abs(f @ perp)) < 1e-9
    assert np.max(np.abs(par @ perp)) < 1e-10
    closed = f.T @ np.linalg.solve(f @ f.T, f)
    assert np.max(np.abs(par - closed)) < 1e-9
    u = make_rng(seed, 901).standard_normal(n)
    assert abs((par @ u) @ (perp @ u)) <= 1e-8 * (u @ u)


def test_sym_sqrt_examples():
    assert np.allclose(sym_sqrt(np.eye(3)), np.eye(3))
    assert np.allclose(sym_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))
    a = np.array([[2.0, 1.0], [1.0, 2.0]])
    # eigenvalues 1 and 3 along (1,-1) and (1,1)
    v = np.array([[1.0, 1.0], [-1.0, 1.0]]) / np.sqrt(2)
    expected = v @ np.diag([1.0, np.sqrt(3.0)]) @ v.T
    r = sym_sqrt(a)
    assert np.max(np.abs(r - expected)) < 1e-12
    assert np.max(np.abs(r @ r - a)) < 1e-10


def test_sym_sqrt_errors():
    with pytest.raises(NotSymmetric):
        sym_sqrt([[1.0, 0.5], [0.0, 1.0]])
    with pytest.raises(NegativeEigenvalue):
        sym_sqrt(np.diag([1.0, -1e-3]))
    r = sym_sqrt(np.diag([1.0, -1e-10]))
    assert np.all(np.linalg.eigvalsh(r) >= 0)


@given(st.integers(1, 10), st.integers(0, 10_000))
def test_sym_sqrt_psd(n, seed):
    b = random_matrix(seed, n, n)
    a = b @ b.T
    r = sym_sqrt(a)
    assert np.allclose(r, r.T)
    assert np.max(np.abs(r @ r - a)) < 1e-7 * max(1.0, np.abs(a).max())

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from auxguide.decomposition import (
    IsotropicGaussian,
    cochran_check,
    conditional_mean,
    decompose,
    density_factor_check,
    factorized_log_density,
    rejection_conditional_mean,
)
from auxguide.errors import RankDeficient, ShapeMismatch
from auxguide.linalg import projector_pair
from auxguide.rng import make_rng


def test_decompose_examples():
    u = np.array([3.0, 4.0])
    perp, par = decompose(u, projector_pair(np.eye(2)))
    assert np.all(perp == 0) and np.array_equal(par, u)
    perp, par = decompose(u, projector_pair([[1.0, 0.0]]))
    assert np.array_equal(par, [3.0, 0.0]) and np.array_equal(perp, [0.0, 4.0])
    with pytest.raises(ShapeMismatch):
        decompose(np.ones(3), projector_pair([[1.0, 0.0]]))


@given(st.integers(2, 12), st.integers(0, 10_000), st.data())
def test_decompose_properties(n, seed, data):
    dz = data.draw(st.integers(1, n - 1))
    rng = make_rng(seed, 1)
    f = rng.standard_normal((dz, n))
    u = rng.standard_normal(n) * data.draw(st.floats(1e-3, 1e3))
    perp, par = decompose(u, projector_pair(f))
    # exact up to the single rounding of the final addition
    scale = np.maximum(np.abs(u), np.abs(par))
    assert np.all(np.abs(perp + par - u) <= 2 * np.finfo(float).eps * scale)
    assert np.max(np.abs(f @ perp)) < 1e-9 * max(1.0, np.abs(u).max())
    assert abs(perp @ par) <= 1e-9 * (u @ u)


def test_gaussian_validation():
    with pytest.raises(ValueError):
        IsotropicGaussian(np.zeros(2), 0.0)
    with pytest.raises(ValueError):
        IsotropicGaussian(np.array([np.nan, 0.0]), 1.0)


def test_cochran_axis_case():
    g = IsotropicGaussian(np.zeros(2), 1.0)
    rep = cochran_check(g, projector_pair([[1.0, 0.0]]), 100_000, seed=3)
    assert rep.passed
    cross = next(c for c in rep.checks if c.name.startswith("cross"))
    assert cross.deviation < 0.016


def test_cochran_full_parallel_has_zero_cross():
    g = IsotropicGaussian(np.ones(3), 2.0)
    rep = cochran_check(g, projector_pair(np.eye(3)), 10_000, seed=1)
    cross = next(c for c in rep.checks if c.name.startswith("cross"))
    assert cross.deviation == 0.0 and rep.passed


def test_cochran_detects_wrong_projector():
    # a non-orthogonal "projector" breaks independence and must fail the band
    from auxguide.linalg import ProjectorPair

    p = np.array([[1.0, 1.0], [0.0, 0.0]])
    bad = ProjectorPair(parallel=p, perpendicular=np.eye(2) - p, rank=1)
    assert not cochran_check(IsotropicGaussian(np.zeros(2), 1.0), bad, 10_000).passed


def test_conditional_mean_examples():
    g = IsotropicGaussian(np.zeros(2), 1.0)
    assert np.allclose(conditional_mean(g, [[1.0, 0.0]], [2.0]), [2.0, 0.0])
    rng = make_rng(0, 2)
    f = rng.standard_normal((2, 5))
    g = IsotropicGaussian(rng.standard_normal(5), 0.7)
    assert np.allclose(conditional_mean(g, f, f @ g.mu), g.mu, atol=1e-12)
    with pytest.raises(RankDeficient):
        conditional_mean(g, np.vstack([f[0], 2 * f[0]]), np.zeros(2))


@given(st.integers(2, 10), st.integers(0, 10_000), st.data())
def test_conditional_mean_affine_and_consistent(n, seed, data):
    dz = data.draw(st.integers(1, n - 1))
    rng = make_rng(seed, 3)
    f = rng.standard_normal((dz, n))
    g = IsotropicGaussian(rng.standard_normal(n), 1.0)
    z1, z2 = rng.standard_normal((2, dz))
    m1, m2 = conditional_mean(g, f, z1), conditional_mean(g, f, z2)
    assert np.max(np.abs(f @ m1 - z1)) < 1e-9
    assert np.allclose(conditional_mean(g, f, 0.5 * (z1 + z2)), 0.5 * (m1 + m2), atol=1e-10)


def test_rejection_oracle_small():
    rng = make_rng(5, 4)
    f = rng.standard_normal((1, 3))
    f /= np.linalg.norm(f)
    g = IsotropicGaussian(rng.standard_normal(3), 1.0)
    z = f @ g.mu + 0.2
    mean, se, k = rejection_conditional_mean(g, f, z, window=0.05, n_draws=400_000, seed=5)
    assert k > 1000
    assert np.all(np.abs(mean - conditional_mean(g, f, z)) < 3 * se + 1e-12)


def test_density_peak_and_1d_split():
    g = IsotropicGaussian(np.array([0.5, -1.0]), 1.3)
    proj = projector_pair([[1.0, 0.0]])
    assert abs(factorized_log_density(g, proj, g.mu[None])[0] - g.log_density(g.mu)) < 1e-12
    u = np.array([[0.1, 2.0]])
    # product of two 1D normals
    by_hand = sum(-0.5 * ((u[0, i] - g.mu[i]) / 1.3) ** 2 - np.log(1.3) - 0.5 * np.log(2 * np.pi) for i in range(2))
    assert abs(factorized_log_density(g, proj, u)[0] - by_hand) < 1e-12
    assert density_factor_check(g, proj, 200) < 1e-12


def test_density_factor_random():
    rng = make_rng(1, 5)
    f = rng.standard_normal((2, 6))
    g = IsotropicGaussian(rng.standard_normal(6), 0.8)
    assert density_factor_check(g, projector_pair(f), 1000, seed=1) < 1e-8

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sklearn.base import clone

from gradflow_rom.pod import (PODBasis, RankDeficiency, build_reduced_operators,
                              m_orthonormalize, numerical_rank, pod, project)


def spd(n, rng):
    A = rng.standard_normal((n, n))
    return A @ A.T + n * np.eye(n)


def brute_force_error(B, modes, W):
    P = modes @ (modes.T @ (W @ B))
    E = B - P
    return np.sum(E * (W @ E))


@pytest.mark.parametrize("weighted", [False, True])
def test_projection_error_is_discarded_energy(weighted, rng):
    B = rng.standard_normal((200, 40))
    W = spd(200, rng) if weighted else np.eye(200)
    for k in (1, 5, 20, 39):
        modes, s = pod(B, k, weight=W if weighted else None)
        err = brute_force_error(B, modes, W)
        assert err == pytest.approx(np.sum(s[k:] ** 2), rel=1e-9)
        assert np.allclose(modes.T @ W @ modes, np.eye(k), atol=1e-10)


def test_optimal_against_random_subspaces(rng):
    B = rng.standard_normal((60, 15)) @ np.diag(np.logspace(0, -3, 15))
    modes, s = pod(B, 4)
    best = brute_force_error(B, modes, np.eye(60))
    for _ in range(50):
        Q, _ = np.linalg.qr(rng.standard_normal((60, 4)))
        assert brute_force_error(B, Q, np.eye(60)) >= best - 1e-12


def test_sign_convention_and_determinism(rng):
    B = rng.standard_normal((30, 8))
    m1, _ = pod(B, 3)
    m2, _ = pod(-B, 3)
    assert np.allclose(m1, m2)
    idx = np.argmax(np.abs(m1), axis=0)
    assert np.all(m1[idx, range(3)] > 0)


def test_chol_argument_matches_weight(rng):
    B = rng.standard_normal((25, 6))
    W = spd(25, rng)
    R = np.linalg.cholesky(W).T
    assert np.allclose(pod(B, 3, weight=W)[0], pod(B, 3, chol=R)[0])


def test_rank_deficiency(rng):
    B = np.outer(rng.standard_normal(20), rng.standard_normal(6))
    pod(B, 1)
    with pytest.raises(RankDeficiency):
        pod(B, 2)
    with pytest.raises(ValueError):
        pod(B, 0)
    assert numerical_rank(np.array([1.0, 1e-5, 1e-12])) == 2
    assert numerical_rank(np.zeros(3)) == 0


def test_gram_schmidt(rng):
    W = spd(10, rng)
    Psi = m_orthonormalize(rng.standard_normal(10), np.zeros((10, 0)), W)[:, None]
    v = m_orthonormalize(rng.standard_normal(10), Psi, W, passes=2)
    P = np.column_stack([Psi, v])
    assert np.allclose(P.T @ W @ P, np.eye(2), atol=1e-12)
    with pytest.raises(RankDeficiency):
        m_orthonormalize(np.zeros(10), Psi, W)


def test_estimator_api(rng):
    X = rng.standard_normal((40, 30))          # 40 snapshots of length 30
    W = spd(30, rng)
    est = PODBasis(n_modes=5, weight=W).fit(X)
    assert est.get_params()["n_modes"] == 5
    assert clone(est).get_params()["n_modes"] == 5
    Z = est.transform(X)
    assert Z.shape == (40, 5)
    assert np.allclose(Z, project(X.T, est.modes_, W).T)
    err = est.projection_error(X)
    assert err == pytest.approx(np.sum(est.singular_values_[5:] ** 2), rel=1e-9)
    with pytest.raises(ValueError):
        est.transform(X[:, :10])


def test_reduced_operators(small_ops, rng):
    Psi = np.linalg.qr(rng.standard_normal((small_ops.N_dof, 4)))[0]
    red = build_reduced_operators(Psi, small_ops, 0.5)
    assert np.allclose(red.Ar, 0.5 * Psi.T @ small_ops.A1 @ Psi)
    assert np.allclose(red.with_epsilon(2.0).Ar, 4 * red.Ar)
    assert np.allclose(red.Mr, Psi.T @ small_ops.M @ Psi)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 12), st.integers(2, 12), st.integers(0, 10_000))
def test_pythagoras_property(n_rows_factor, n_cols, seed):
    r = np.random.default_rng(seed)
    B = r.standard_normal((3 * n_rows_factor + n_cols, n_cols))
    k = max(1, n_cols // 2)
    modes, s = pod(B, k)
    P = modes @ (modes.T @ B)
    total = np.sum(B * B)
    assert np.sum(P * P) + np.sum((B - P) ** 2) == pytest.approx(total, rel=1e-10)
    assert np.sum(s ** 2) == pytest.approx(total, rel=1e-10)

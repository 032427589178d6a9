"""Weighted POD and Galerkin reduced-order models."""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .avf import (NewtonConfig, TimeGrid, Trajectory, avf_nonlinear, check_energy_decay,
                  newton_solve)
from .dg import FOMOperators, potential_integral
from .potentials import Potential

__all__ = [
    "RankDeficiency",
    "pod",
    "PODBasis",
    "ReducedOperators",
    "build_reduced_operators",
    "ExactNonlinearity",
    "solve_rom",
    "lift",
    "project",
    "m_orthonormalize",
]


class RankDeficiency(ValueError):
    pass


def _cholesky_factor(weight):
    """Upper factor ``R`` with ``weight = R^T R``."""
    if sp.issparse(weight):
        if weight.shape[0] > 5000:
            raise ValueError("pass the Cholesky factor explicitly for large sparse weights")
        weight = weight.toarray()
    return la.cholesky(np.asarray(weight), lower=False)


def _solve_upper(R, X):
    if sp.issparse(R):
        return spla.spsolve_triangular(R.tocsr(), X, lower=False)
    return la.solve_triangular(R, X, lower=False)


def _fix_signs(modes):
    idx = np.argmax(np.abs(modes), axis=0)
    signs = np.sign(modes[idx, np.arange(modes.shape[1])])
    signs[signs == 0] = 1.0
    return modes * signs


def pod(B, k: int, weight=None, chol=None, rank_tol: float = 1e-12):
    """Leading ``k`` POD modes of the columns of ``B``.

    Modes are orthonormal in the inner product ``<x, y> = x^T W y`` where
    ``W = weight`` (identity when None).  They are computed from the SVD of
    ``R B`` with ``W = R^T R`` and mapped back through ``R^{-1}``.

    Returns
    -------
    modes : (n, k) ndarray
    singular_values : (min(n, m),) ndarray
        Full spectrum of ``R B``; the first ``k`` belong to the modes.
    """
    B = np.asarray(B, dtype=float)
    if B.ndim != 2:
        raise ValueError("B must be two-dimensional")
    if k < 1:
        raise ValueError("k must be at least 1")
    if weight is None and chol is None:
        RB = B
        R = None
    else:
        R = chol if chol is not None else _cholesky_factor(weight)
        RB = R @ B
    U, s, _ = la.svd(RB, full_matrices=False, lapack_driver="gesdd")
    if k > len(s) or s[0] == 0 or s[k - 1] < rank_tol * s[0]:
        rank = int(np.sum(s > rank_tol * s[0])) if len(s) and s[0] > 0 else 0
        raise RankDeficiency(f"requested {k} modes but numerical rank is {rank}")
    modes = U[:, :k]
    if R is not None:
        modes = _solve_upper(R, modes)
        if modes.ndim == 1:
            modes = modes[:, None]
    return _fix_signs(modes), s


def numerical_rank(s, rank_tol: float = 1e-10) -> int:
    s = np.asarray(s)
    if len(s) == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > rank_tol * s[0]))


def m_orthonormalize(v, Psi, M, passes: int = 1):
    """Gram-Schmidt ``v`` against the M-orthonormal columns of ``Psi``, then M-normalise."""
    v = np.array(v, dtype=float, copy=True)
    for _ in range(passes):
        if Psi.shape[1]:
            v -= Psi @ (Psi.T @ (M @ v))
    nrm = np.sqrt(v @ (M @ v))
    if nrm == 0:
        raise RankDeficiency("new mode lies in the span of the existing basis")
    return v / nrm


def lift(Psi, u_r):
    return Psi @ u_r


def project(u, Psi, M):
    """M-orthogonal projection coefficients ``Psi^T M u``."""
    return Psi.T @ (M @ u)


class PODBasis(TransformerMixin, BaseEstimator):
    """POD basis in a weighted inner product, scikit-learn style.

    Rows of ``X`` are snapshots.  ``transform`` returns reduced coordinates
    (the weighted projection) and ``inverse_transform`` lifts them back.

    Parameters
    ----------
    n_modes : int
    weight : sparse or dense SPD matrix, optional
        Inner-product weight, typically the dG mass matrix.
    chol : matrix, optional
        Upper Cholesky factor of ``weight``; required for large sparse weights.
    rank_tol : float
        Relative singular value cut-off for the rank check.
    """

    def __init__(self, n_modes=1, weight=None, chol=None, rank_tol=1e-12):
        self.n_modes = n_modes
        self.weight = weight
        self.chol = chol
        self.rank_tol = rank_tol

    def fit(self, X, y=None):
        X = check_array(X)
        modes, s = pod(X.T, self.n_modes, weight=self.weight, chol=self.chol,
                       rank_tol=self.rank_tol)
        self.components_ = modes.T
        self.singular_values_ = s
        self.n_features_in_ = X.shape[1]
        return self

    @property
    def modes_(self):
        check_is_fitted(self)
        return self.components_.T

    def _weighted(self, X):
        return X if self.weight is None else (self.weight @ X.T).T

    def transform(self, X):
        check_is_fitted(self)
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        return self._weighted(X) @ self.components_.T

    def inverse_transform(self, Z):
        check_is_fitted(self)
        Z = check_array(Z)
        return Z @ self.components_

    def projection_error(self, X):
        """Squared weighted Frobenius norm of ``X - proj(X)``."""
        E = X - self.inverse_transform(self.transform(X))
        return float(np.sum(E * self._weighted(E)))


@dataclass
class ReducedOperators:
    """Reduced mass and stiffness; ``Ar_unit = Psi^T A1 Psi`` is cached."""

    Ar_unit: np.ndarray
    Mr: np.ndarray
    epsilon: float

    @property
    def Ar(self) -> np.ndarray:
        return self.epsilon * self.Ar_unit

    def with_epsilon(self, epsilon: float) -> "ReducedOperators":
        return ReducedOperators(self.Ar_unit, self.Mr, float(epsilon))


def build_reduced_operators(Psi, operators: FOMOperators, epsilon: float) -> ReducedOperators:
    Ar_unit = Psi.T @ (operators.A1 @ Psi)
    Ar_unit = 0.5 * (Ar_unit + Ar_unit.T)
    Mr = Psi.T @ (operators.M @ Psi)
    return ReducedOperators(Ar_unit, Mr, float(epsilon))


class ExactNonlinearity:
    """Reduced nonlinear term ``Psi^T f(Psi u_r)`` evaluated at full order."""

    def __init__(self, Psi, space):
        self.Psi = Psi
        self.space = space
        self._Psi_e = Psi.reshape(space.n_K, 3, -1)

    def avf(self, a_next, a_curr, potential: Potential):
        space = self.space
        space.counters["full_nonlinear"] += 1
        g, blocks = avf_nonlinear(self.Psi @ a_next, self.Psi @ a_curr, potential, space,
                                  jacobian=True)
        vec = self.Psi.T @ g.ravel()
        JP = np.einsum("kij,kjn->kin", blocks, self._Psi_e)
        jac = np.einsum("kim,kin->mn", self._Psi_e, JP)
        return vec, jac


def solve_rom(initial_reduced, reduced: ReducedOperators, Psi, potential: Potential,
              grid: TimeGrid, nonlinearity, operators: FOMOperators | None = None,
              newton: NewtonConfig = NewtonConfig(), record_energy: bool = True,
              energy_check: str = "warn") -> Trajectory:
    """AVF time stepping of the Galerkin ROM.

    ``nonlinearity`` is an :class:`ExactNonlinearity` or a DEIM evaluator
    (see :mod:`gradflow_rom.deim`); both expose ``avf(a_next, a_curr, potential)``
    returning the reduced vector and its Jacobian in ``a_next``.

    Energies of the lifted solution are computed after the stepping loop, so
    ``wall_time`` measures the online solve only.
    """
    a0 = np.asarray(initial_reduced, dtype=float)
    N = len(a0)
    if Psi.shape[1] != N:
        raise ValueError("initial_reduced does not match the basis dimension")
    J, dt = grid.J, grid.dt
    Ar = reduced.Ar
    Mr = reduced.Mr
    lin = Mr + 0.5 * dt * Ar
    A = np.empty((N, J + 1))
    A[:, 0] = a0
    its = np.zeros(J, dtype=int)
    tic = time.perf_counter()
    for n in range(J):
        a_curr = A[:, n]
        const = -(Mr @ a_curr) + 0.5 * dt * (Ar @ a_curr)

        def fun(v, a_curr=a_curr, const=const):
            g, jac = nonlinearity.avf(v, a_curr, potential)
            return lin @ v + const + dt * g, lin + dt * jac

        A[:, n + 1], its[n] = newton_solve(fun, a_curr, newton)
    wall = time.perf_counter() - tic
    energies = np.full(J + 1, np.nan)
    if record_energy:
        if operators is None:
            raise ValueError("operators are needed to evaluate lifted energies")
        energies = rom_energies(A, reduced, Psi, potential, operators)
        check_energy_decay(energies, tol=1e-10, mode=energy_check, label="ROM")
    return Trajectory(A, energies, its, grid, wall_time=wall)


def rom_energies(A, reduced: ReducedOperators, Psi, potential: Potential,
                 operators: FOMOperators) -> np.ndarray:
    """Discrete energy ``E_h(Psi a^n)`` of each reduced state."""
    quad = np.einsum("in,ij,jn->n", A, reduced.Ar, A)
    U = Psi @ A
    pot = np.array([potential_integral(U[:, n], potential, operators.space)
                    for n in range(A.shape[1])])
    return 0.5 * quad + pot

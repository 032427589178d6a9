"""Discrete empirical interpolation of the dG nonlinear vector.

Each dG degree of freedom has support on a single triangle, so an
interpolation index only requires quadrature on that triangle.  The online
evaluator gathers the rows of the reduced basis belonging to the sampled
triangles once and never forms a full-length vector.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .avf import Trajectory
from .dg import DGSpace, FOMOperators, eval_nonlinear
from .pod import _fix_signs, numerical_rank
from .potentials import Potential

__all__ = [
    "SingularInterpolation",
    "deim_select",
    "DEIMData",
    "DEIMInterpolator",
    "DEIMNonlinearity",
    "deim_eval",
    "deim_error_bound",
    "norm_R_inv",
    "StabilityReport",
    "stability_bounds",
]


class SingularInterpolation(ValueError):
    pass


def deim_select(W, tol: float = 1e-12):
    """Greedy DEIM interpolation indices for the columns of ``W``.

    The first index maximises ``|W[:, 0]|``; index ``k`` maximises the
    residual of interpolating ``W[:, k]`` by the previous columns at the
    previous indices.  Ties go to the lowest row index (``np.argmax``).

    Returns ``(indices, Q)`` with ``Q = W (P^T W)^{-1}``.
    """
    W = np.asarray(W, dtype=float)
    if W.ndim == 1:
        W = W[:, None]
    n, m = W.shape
    if m < 1:
        raise ValueError("W needs at least one column")
    scale = np.max(np.abs(W[:, 0]))
    if scale <= tol:
        raise SingularInterpolation("first DEIM column is numerically zero")
    idx = [int(np.argmax(np.abs(W[:, 0])))]
    for k in range(1, m):
        Pk = W[idx, :k]
        c = la.solve(Pk, W[idx, k], check_finite=False)
        r = W[:, k] - W[:, :k] @ c
        j = int(np.argmax(np.abs(r)))
        if abs(r[j]) <= tol * max(1.0, np.max(np.abs(W[:, k]))):
            raise SingularInterpolation(
                f"DEIM residual vanished at column {k}; W has dependent columns")
        idx.append(j)
    idx = np.array(idx, dtype=np.int64)
    if len(np.unique(idx)) != m:
        raise SingularInterpolation("DEIM produced repeated indices")
    Q = la.solve(W[idx].T, W.T, check_finite=False).T
    return idx, Q


@dataclass(eq=False)
class DEIMData:
    """Interpolation data bound to a reduced basis ``Psi``.

    ``Q = W (P^T W)^{-1}`` and ``PsiTQ = Psi^T Q``.  ``elements`` lists the
    distinct triangles carrying the sampled degrees of freedom and
    ``Psi_e`` the matching rows of ``Psi`` shaped ``(n_e, 3, N)``.
    """

    W: np.ndarray
    indices: np.ndarray
    Q: np.ndarray
    PsiTQ: np.ndarray | None
    elements: np.ndarray = field(repr=False)
    slot: np.ndarray = field(repr=False)     # position of each index in ``elements``
    local: np.ndarray = field(repr=False)    # local dof (0..2) of each index
    Psi_e: np.ndarray | None = field(repr=False, default=None)

    @property
    def M(self) -> int:
        return len(self.indices)

    @property
    def PtW(self) -> np.ndarray:
        return self.W[self.indices]

    @property
    def norm_PtW_inv(self) -> float:
        return 1.0 / la.svdvals(self.PtW)[-1]

    @property
    def condition(self) -> float:
        return float(np.linalg.cond(self.PtW))

    @classmethod
    def from_modes(cls, W, Psi=None, tol: float = 1e-12) -> "DEIMData":
        idx, Q = deim_select(W, tol=tol)
        elements, slot = np.unique(idx // 3, return_inverse=True)
        local = idx % 3
        data = cls(W=np.asarray(W), indices=idx, Q=Q, PsiTQ=None,
                   elements=elements, slot=slot, local=local)
        if Psi is not None:
            data = data.bind(Psi)
        return data

    def bind(self, Psi) -> "DEIMData":
        """Copy of the data with the reduced-basis products precomputed."""
        if Psi.shape[0] != self.W.shape[0]:
            raise ValueError("Psi and W have different row counts")
        Psi_e = Psi.reshape(-1, 3, Psi.shape[1])[self.elements]
        return DEIMData(self.W, self.indices, self.Q, Psi.T @ self.Q, self.elements,
                        self.slot, self.local, Psi_e)

    def reconstruct(self, f_m):
        """Full-length approximation ``Q f_m``."""
        return self.Q @ f_m


def pod_deim(F, M: int | None = None, rank_tol: float = 1e-10, max_modes: int | None = None):
    """DEIM modes of the snapshot columns of ``F`` (Euclidean POD).

    With ``M=None`` the numerical rank (cut-off ``rank_tol * s_max``) is used,
    optionally capped by ``max_modes``.
    """
    F = np.asarray(F, dtype=float)
    U, s, _ = la.svd(F, full_matrices=False, lapack_driver="gesdd")
    rank = numerical_rank(s, rank_tol)
    if rank == 0:
        raise SingularInterpolation("nonlinear snapshot matrix is zero")
    if M is None:
        M = rank if max_modes is None else min(rank, max_modes)
    M = min(M, rank)
    return _fix_signs(U[:, :M]), s


class DEIMInterpolator(TransformerMixin, BaseEstimator):
    """DEIM as a transformer: rows of ``X`` are nonlinear snapshots.

    ``transform`` samples the interpolation entries, ``inverse_transform``
    rebuilds full vectors through ``Q``.
    """

    def __init__(self, n_modes=50, rank_tol=1e-10):
        self.n_modes = n_modes
        self.rank_tol = rank_tol

    def fit(self, X, y=None):
        X = check_array(X)
        W, s = pod_deim(X.T, self.n_modes, rank_tol=self.rank_tol)
        self.data_ = DEIMData.from_modes(W)
        self.singular_values_ = s
        self.indices_ = self.data_.indices
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self)
        X = check_array(X)
        return X[:, self.indices_]

    def inverse_transform(self, Z):
        check_is_fitted(self)
        Z = check_array(Z)
        return Z @ self.data_.Q.T


def _sampled(data: DEIMData, space: DGSpace, values, blocks=None):
    """Pick the interpolation entries out of element-level integrals."""
    wq = space.wq[data.elements]
    vec = ((values * wq) @ space.phi_q)[data.slot, data.local]
    if blocks is None:
        return vec
    jb = np.einsum("kq,qi,qj->kij", blocks * wq, space.phi_q, space.phi_q)
    return vec, jb[data.slot, data.local]      # (M,), (M, 3)


class DEIMNonlinearity:
    """Online DEIM evaluator of the reduced AVF nonlinear term."""

    def __init__(self, data: DEIMData, space: DGSpace):
        if data.Psi_e is None:
            raise ValueError("DEIM data must be bound to a basis first")
        self.data = data
        self.space = space
        self._Psi_el = data.Psi_e[data.slot]                  # (M, 3, N)

    def _quad(self, a):
        U_e = np.einsum("kjn,n->kj", self.data.Psi_e, a)
        return U_e @ self.space.phi_q.T

    def avf(self, a_next, a_curr, potential: Potential):
        b = self._quad(a_next)
        a = self._quad(a_curr)
        vec, jrow = _sampled(self.data, self.space, potential.avf(a, b),
                             potential.avf_db(a, b))
        dfm = np.einsum("mj,mjn->mn", jrow, self._Psi_el)
        return self.data.PsiTQ @ vec, self.data.PsiTQ @ dfm

    def sampled_avf(self, a_next, a_curr, potential: Potential):
        """Interpolation entries of the AVF integral (length M)."""
        b = self._quad(a_next)
        a = self._quad(a_curr)
        return _sampled(self.data, self.space, potential.avf(a, b))

    def sampled(self, a, potential: Potential):
        """``P^T f(Psi a)`` from the sampled triangles only."""
        return _sampled(self.data, self.space, potential.f(self._quad(a)))


def deim_eval(u_r, Psi, data: DEIMData, potential: Potential, space: DGSpace):
    """DEIM approximation ``Psi^T Q P^T f(Psi u_r)`` of the reduced nonlinearity."""
    if data.Psi_e is None or data.PsiTQ is None or data.PsiTQ.shape[0] != Psi.shape[1]:
        data = data.bind(Psi)
    return data.PsiTQ @ DEIMNonlinearity(data, space).sampled(np.asarray(u_r, float), potential)


def deim_error_bound(v, data: DEIMData) -> float:
    """``||(P^T W)^{-1}||_2 * ||(I - W W^T) v||_2``."""
    v = np.asarray(v, dtype=float)
    W = data.W
    defect = v - W @ (W.T @ v)
    return float(data.norm_PtW_inv * np.linalg.norm(defect))


def norm_R_inv(operators: FOMOperators, tol: float = 1e-12, max_iter: int = 500,
               seed: int = 0) -> float:
    """``||R^{-1}||_2 = lambda_min(M)^{-1/2}`` by inverse power iteration on ``M``."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(operators.N_dof)
    x /= np.linalg.norm(x)
    lam = np.inf
    for _ in range(max_iter):
        y = operators.mass_solve(x)
        lam_new = 1.0 / (x @ y)
        x = y / np.linalg.norm(y)
        if abs(lam_new - lam) <= tol * abs(lam_new):
            lam = lam_new
            break
        lam = lam_new
    return float(1.0 / math.sqrt(lam))


@dataclass
class StabilityReport:
    """Time-step bounds that guarantee energy decay of the DEIM ROM.

    ``satisfied`` means the step size is within the bound of every step.
    ``global_bound`` is the single cruder bound (smallest step norm over
    largest defect, first step excluded); ``global_satisfied`` compares
    against it.  The unknown mean-value point between consecutive reduced
    states is replaced by their midpoint, so the bounds are estimates rather
    than certificates.
    """

    norm_R_inv: float
    norm_PtW_inv: float
    per_step_bounds: np.ndarray
    global_bound: float
    dt_used: float
    satisfied: bool
    global_satisfied: bool = False
    skipped_steps: list = field(default_factory=list)
    min_step_norm: float = float("nan")
    max_defect: float = float("nan")

    @property
    def min_per_step_bound(self) -> float:
        return float(np.min(self.per_step_bounds)) if len(self.per_step_bounds) else float("inf")

    def as_dict(self) -> dict:
        return {
            "norm_R_inv": self.norm_R_inv,
            "norm_PtW_inv": self.norm_PtW_inv,
            "min_per_step_bound": self.min_per_step_bound,
            "global_bound": self.global_bound,
            "dt_used": self.dt_used,
            "satisfied": self.satisfied,
            "global_satisfied": self.global_satisfied,
            "min_step_norm": self.min_step_norm,
            "max_defect": self.max_defect,
            "skipped_steps": len(self.skipped_steps),
            "midpoint_estimate": True,
        }


def stability_bounds(traj: Trajectory, Psi, data: DEIMData, operators: FOMOperators,
                     potential: Potential, r_inv: float | None = None,
                     degenerate: float = 1e-14) -> StabilityReport:
    """Per-step and global time-step bounds for energy decay of the DEIM ROM.

    Step ``n`` yields ``||u^{n+1} - u^n||_{L2} / (||R^-1|| ||(P^T W)^-1||
    ||(I - W W^T) f(Psi z)||)`` with ``z`` the midpoint of the two reduced
    states.  The global bound divides the smallest step norm by the largest
    defect over steps ``1..J-1``.  Steps whose state change is below
    ``degenerate`` are skipped.
    """
    A = traj.snapshots
    if A.shape[1] < 2:
        raise ValueError("trajectory needs at least two time levels")
    r_inv = norm_R_inv(operators) if r_inv is None else r_inv
    ptw = data.norm_PtW_inv
    W = data.W
    Mr = Psi.T @ (operators.M @ Psi)
    skipped, steps, defects, kept = [], [], [], []
    for n in range(A.shape[1] - 1):
        d = A[:, n + 1] - A[:, n]
        step = math.sqrt(max(d @ (Mr @ d), 0.0))
        if step < degenerate:
            skipped.append(n)
            continue
        z = 0.5 * (A[:, n] + A[:, n + 1])
        fz = eval_nonlinear(Psi @ z, potential, operators.space)
        kept.append(n)
        steps.append(step)
        defects.append(float(np.linalg.norm(fz - W @ (W.T @ fz))))
    steps, defects, kept = np.array(steps), np.array(defects), np.array(kept, dtype=int)
    scale = r_inv * ptw
    with np.errstate(divide="ignore"):
        bounds = np.where(defects > 0, steps / (scale * defects), np.inf)
    # the single global bound leaves out the first step when there are others
    late = kept >= 1 if np.any(kept >= 1) else np.ones(len(kept), dtype=bool)
    if np.any(late):
        min_step, max_def = float(steps[late].min()), float(defects[late].max())
        glob = np.inf if max_def == 0 else min_step / (scale * max_def)
    else:
        min_step, max_def, glob = float("nan"), 0.0, np.inf
    dt = traj.grid.dt
    return StabilityReport(norm_R_inv=r_inv, norm_PtW_inv=ptw, per_step_bounds=bounds,
                           global_bound=float(glob), dt_used=dt,
                           satisfied=bool(np.all(dt <= bounds)),
                           global_satisfied=bool(dt <= glob), skipped_steps=skipped,
                           min_step_norm=min_step, max_defect=max_def)

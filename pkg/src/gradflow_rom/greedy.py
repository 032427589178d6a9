"""POD-greedy sampling with a residual-based error indicator and DEIM.

Each iteration adds one POD mode of the projection error of the trajectory
at the currently worst training parameter, solves DEIM reduced models at all
training parameters, and picks the next parameter by the largest indicator.
Full-order solves are cached, so a parameter is solved at most once.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .avf import NewtonDivergence, Trajectory
from .deim import DEIMData, DEIMNonlinearity, pod_deim
from .dg import eval_nonlinear
from .pod import (ExactNonlinearity, RankDeficiency, build_reduced_operators,
                  m_orthonormalize, pod, project, rom_energies, solve_rom)
from .problems import AllenCahnProblem

__all__ = [
    "GreedyConfig",
    "GreedyResult",
    "PODGreedy",
    "project_onto_basis",
    "ResidualIndicator",
    "error_indicator",
]

log = logging.getLogger(__name__)

DUAL_H1 = "dual-h1"
L2_SURROGATE = "l2"


@dataclass(frozen=True)
class GreedyConfig:
    train_set: tuple
    tol: float = 1e-3
    n_max: int = 20
    m_deim: int = 50
    indicator_norm: str = DUAL_H1
    inner_deim_rank_cutoff: float = 1e-10
    inner_deim_max: int | None = None
    indicator_deim: bool = True

    def __post_init__(self):
        if len(self.train_set) == 0:
            raise ValueError("training set is empty")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.n_max < 1:
            raise ValueError("n_max must be at least 1")
        if self.indicator_norm not in (DUAL_H1, L2_SURROGATE):
            raise ValueError(f"unknown indicator norm {self.indicator_norm!r}")


@dataclass
class GreedyResult:
    Psi: np.ndarray
    deim: DEIMData | None
    selected: list
    indicator_history: np.ndarray           # (iterations, n_train)
    fom_cache: dict
    termination: str
    train_set: tuple
    diverged: list = field(default_factory=list)
    cache_hits: int = 0
    fom_solves: int = 0
    basis_drift: list = field(default_factory=list)
    deim_singular_values: np.ndarray | None = None

    @property
    def max_indicator(self) -> np.ndarray:
        return np.nanmax(self.indicator_history, axis=1)

    @property
    def N(self) -> int:
        return self.Psi.shape[1]


def project_onto_basis(u, Psi, M):
    """M-orthogonal projection onto ``span(Psi)`` and the remaining error."""
    u = np.asarray(u, dtype=float)
    if Psi is None or Psi.shape[1] == 0:
        return np.zeros_like(u), u.copy()
    proj = Psi @ (Psi.T @ (M @ u))
    return proj, u - proj


class ResidualIndicator:
    """``Delta(mu) = (dt * sum_n ||R_h(u^n)||_*)^(1/2)`` for lifted ROM states.

    ``R_h`` is the AVF residual divided by ``dt``.  The dual norm uses the
    discrete H1 Riesz map ``K = M + A1`` (SIPG with unit diffusivity, jump
    penalty included), factorised once; the ``"l2"`` surrogate uses ``M``.
    The time level ``n = 0`` is the full-order initial state, so the
    projection error of the initial data enters the first residual.
    """

    def __init__(self, operators, norm: str = DUAL_H1):
        self.operators = operators
        self.norm = norm
        K = operators.M + operators.A1 if norm == DUAL_H1 else operators.M
        try:
            self._lu = spla.splu(K.tocsc(), permc_spec="MMD_AT_PLUS_A")
        except RuntimeError as exc:
            raise RuntimeError(f"factorisation of the Riesz operator failed: {exc}") from exc

    def dual_norms(self, R):
        Z = self._lu.solve(np.asarray(R, dtype=float))
        return np.sqrt(np.maximum(np.einsum("in,in->n", R, Z), 0.0))

    def residuals(self, U, epsilon, potential, dt, deim: DEIMData | None = None):
        ops = self.operators
        space = ops.space
        dU = U[:, 1:] - U[:, :-1]
        sU = U[:, 1:] + U[:, :-1]
        R = (ops.M @ dU) / dt + 0.5 * epsilon * (ops.A1 @ sU)
        J = dU.shape[1]
        if deim is None:
            for n in range(J):
                b = space.values_at_quadrature(U[:, n + 1])
                a = space.values_at_quadrature(U[:, n])
                R[:, n] += space.element_integrals(potential.avf(a, b)).ravel()
        else:
            Ue = U.reshape(space.n_K, 3, -1)[deim.elements]          # (n_e, 3, J+1)
            Uq = np.einsum("kjn,qj->nkq", Ue, space.phi_q)           # (J+1, n_e, n_qp)
            vals = potential.avf(Uq[:-1], Uq[1:])                    # (J, n_e, n_qp)
            wq = space.wq[deim.elements]
            ent = np.einsum("nkq,kq,qi->nki", vals, wq, space.phi_q)[:, deim.slot, deim.local]
            R += deim.Q @ ent.T
        return R

    def __call__(self, U, epsilon, potential, dt, deim: DEIMData | None = None) -> float:
        R = self.residuals(U, epsilon, potential, dt, deim)
        return float(np.sqrt(dt * np.sum(self.dual_norms(R))))


def error_indicator(mu, reduced_traj: Trajectory, Psi, problem: AllenCahnProblem,
                    indicator: ResidualIndicator | None = None,
                    deim: DEIMData | None = None) -> float:
    """Residual indicator of a reduced trajectory at parameter ``mu``.

    With an empty basis (``Psi.shape[1] == 0``) the lifted states are zero.
    """
    ops = problem.operators
    indicator = indicator or ResidualIndicator(ops)
    A = reduced_traj.snapshots
    U = Psi @ A if Psi.shape[1] else np.zeros((ops.N_dof, A.shape[1]))
    U[:, 0] = problem.initial_of(mu)
    return indicator(U, problem.epsilon_of(mu), problem.potential_of(mu),
                     reduced_traj.grid.dt, deim)


class PODGreedy(BaseEstimator):
    """POD-greedy reduced basis with inner and outer DEIM.

    Parameters
    ----------
    problem : AllenCahnProblem
    tol : float
        Stop once the largest training indicator drops to ``tol``.
    n_max : int
        Maximum reduced dimension.
    m_deim : int
        Size of the final (outer) DEIM basis.
    indicator_norm : {"dual-h1", "l2"}
    indicator_deim : bool
        Evaluate the nonlinear part of the indicator residual through the
        inner DEIM interpolant instead of at full order.
    inner_deim_rank_cutoff : float
        Relative singular value cut-off defining the inner DEIM size.
    inner_deim_max : int or None
        Optional cap on the inner DEIM size.
    include_initial : bool
        Use ``u^0`` alongside ``u^1..u^J`` as snapshots.
    """

    def __init__(self, problem=None, tol=1e-3, n_max=20, m_deim=50,
                 indicator_norm=DUAL_H1, indicator_deim=True,
                 inner_deim_rank_cutoff=1e-10, inner_deim_max=None,
                 include_initial=True):
        self.problem = problem
        self.tol = tol
        self.n_max = n_max
        self.m_deim = m_deim
        self.indicator_norm = indicator_norm
        self.indicator_deim = indicator_deim
        self.inner_deim_rank_cutoff = inner_deim_rank_cutoff
        self.inner_deim_max = inner_deim_max
        self.include_initial = include_initial

    # -- helpers ----------------------------------------------------------
    def _fom(self, mu):
        if mu in self._cache:
            self._hits += 1
            return self._cache[mu]
        traj = self.problem.solve_fom(mu)
        self._solves += 1
        self._cache[mu] = traj
        return traj

    def _first(self):
        return 0 if self.include_initial else 1

    def _nonlinear_snapshots(self, mu, solved):
        """f(., mu) on the stored states of the already solved parameters."""
        pot = self.problem.potential_of(mu)
        space = self.problem.space
        blocks = []
        for m in solved:
            traj = self._cache[m]
            if self.problem.potential_of(m) == pot and traj.nonlinear is not None:
                blocks.append(traj.nonlinear[:, self._first():])
            else:
                S = traj.snapshots[:, self._first():]
                blocks.append(np.column_stack([eval_nonlinear(S[:, n], pot, space)
                                               for n in range(S.shape[1])]))
        return np.hstack(blocks)

    def _inner_deim(self, mu, solved):
        key = (self.problem.potential_of(mu), tuple(solved))
        if key not in self._inner:
            W, _ = pod_deim(self._nonlinear_snapshots(mu, solved), None,
                            rank_tol=self.inner_deim_rank_cutoff,
                            max_modes=self.inner_deim_max)
            self._inner[key] = DEIMData.from_modes(W)
        return self._inner[key]

    def _extend(self, Psi, traj):
        ops = self.problem.operators
        S = traj.snapshots[:, self._first():]
        E = S - Psi @ (Psi.T @ (ops.M @ S)) if Psi.shape[1] else S
        mode, _ = pod(E, 1, chol=ops.R)
        mode = m_orthonormalize(mode[:, 0], Psi, ops.M)
        return np.column_stack([Psi, mode])

    # -- public API ---------------------------------------------------------
    def fit(self, X, y=None):
        """Run the greedy loop over the training parameters ``X``."""
        if self.problem is None:
            raise ValueError("PODGreedy needs a problem")
        train = tuple(float(v) for v in np.ravel(np.asarray(X, dtype=float)))
        cfg = GreedyConfig(train, self.tol, self.n_max, self.m_deim, self.indicator_norm,
                           self.inner_deim_rank_cutoff, self.inner_deim_max,
                           self.indicator_deim)
        problem = self.problem
        ops = problem.operators
        self._cache, self._inner = {}, {}
        self._hits = self._solves = 0
        indicator = ResidualIndicator(ops, cfg.indicator_norm)

        Psi = np.zeros((ops.N_dof, 0))
        mu_star = train[0]
        selected, history, diverged, drift = [], [], [], []
        termination = "n_max"
        N = 1
        while N <= cfg.n_max:
            traj = self._fom(mu_star)
            try:
                Psi = self._extend(Psi, traj)
            except RankDeficiency:
                termination = "rank"
                log.info("projection error vanished; stopping at N=%d", Psi.shape[1])
                break
            selected.append(mu_star)
            drift.append(float(np.max(np.abs(Psi.T @ (ops.M @ Psi) - np.eye(Psi.shape[1])))))
            solved = list(dict.fromkeys(selected))
            red = build_reduced_operators(Psi, ops, 1.0)
            row = np.full(len(train), np.nan)
            for i, mu in enumerate(train):
                deim = self._inner_deim(mu, solved).bind(Psi)
                try:
                    rt = self._rom(mu, Psi, red, DEIMNonlinearity(deim, problem.space))
                except NewtonDivergence:
                    diverged.append((N, mu))
                    continue
                row[i] = error_indicator(mu, rt, Psi, problem, indicator,
                                         deim if cfg.indicator_deim else None)
            history.append(row)
            if np.all(np.isnan(row)):
                termination = "diverged"
                break
            k = int(np.nanargmax(row))       # ties: lowest training index
            log.info("greedy N=%d max indicator %.3e at mu=%g", N, row[k], train[k])
            mu_star = train[k]
            if row[k] <= cfg.tol:
                termination = "tol"
                break
            N += 1

        outer, s_deim = None, None
        solved = list(dict.fromkeys(selected))
        if cfg.m_deim:
            F = np.hstack([self._cache[m].nonlinear[:, self._first():] for m in solved])
            W, s_deim = pod_deim(F, cfg.m_deim, rank_tol=self.inner_deim_rank_cutoff)
            outer = DEIMData.from_modes(W, Psi)

        self.result_ = GreedyResult(Psi=Psi, deim=outer, selected=selected,
                                    indicator_history=np.array(history),
                                    fom_cache=self._cache, termination=termination,
                                    train_set=train, diverged=diverged,
                                    cache_hits=self._hits, fom_solves=self._solves,
                                    basis_drift=drift, deim_singular_values=s_deim)
        self.basis_ = Psi
        self.deim_ = outer
        self.reduced_operators_ = build_reduced_operators(Psi, ops, 1.0)
        return self

    @classmethod
    def from_arrays(cls, problem, Psi, W=None, **params) -> "PODGreedy":
        """Fitted model from a stored basis (and DEIM modes) without rerunning the greedy."""
        model = cls(problem, **params)
        model.basis_ = np.asarray(Psi, dtype=float)
        model.deim_ = None if W is None else DEIMData.from_modes(W, model.basis_)
        model.reduced_operators_ = build_reduced_operators(model.basis_, problem.operators, 1.0)
        return model

    def _rom(self, mu, Psi, red, nonlinearity, record_energy=False):
        problem = self.problem
        a0 = project(problem.initial_of(mu), Psi, problem.operators.M)
        return solve_rom(a0, red.with_epsilon(problem.epsilon_of(mu)), Psi,
                         problem.potential_of(mu), problem.grid, nonlinearity,
                         operators=problem.operators, newton=problem.newton,
                         record_energy=record_energy)

    def solve(self, mu, mode: str = "deim", record_energy: bool = True) -> Trajectory:
        """Online reduced solve at ``mu`` (``mode`` is ``"deim"`` or ``"exact"``)."""
        check_is_fitted(self)
        Psi = self.basis_
        if mode == "deim":
            if self.deim_ is None:
                raise ValueError("no outer DEIM basis was built (m_deim=0)")
            nl = DEIMNonlinearity(self.deim_, self.problem.space)
        elif mode == "exact":
            nl = ExactNonlinearity(Psi, self.problem.space)
        else:
            raise ValueError(f"unknown mode {mode!r}")
        counters = self.problem.space.counters
        before = counters["full_nonlinear"]
        traj = self._rom(mu, Psi, self.reduced_operators_, nl, record_energy=record_energy)
        traj.meta.update(mu=float(mu), mode=mode,
                         full_nonlinear=counters["full_nonlinear"] - before)
        return traj

    def predict(self, X, mode: str = "deim"):
        """Lifted final-time states, one row per parameter value in ``X``."""
        mus = np.ravel(np.asarray(X, dtype=float))
        return np.vstack([self.basis_ @ self.solve(mu, mode, record_energy=False).final
                          for mu in mus])

    def lifted_energies(self, traj: Trajectory, mu) -> np.ndarray:
        red = self.reduced_operators_.with_epsilon(self.problem.epsilon_of(mu))
        return rom_energies(traj.snapshots, red, self.basis_, self.problem.potential_of(mu),
                            self.problem.operators)

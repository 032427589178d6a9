"""Average vector field time stepping with Newton's method.

The same Newton driver serves the full-order model (sparse Jacobian,
direct factorisation) and the reduced models (dense Jacobian).
"""
from __future__ import annotations

import logging
import time
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .dg import DGSpace, FOMOperators, block_diag_csr, eval_nonlinear, matrix_energy
from .potentials import Potential

__all__ = [
    "TimeGrid",
    "Trajectory",
    "NewtonConfig",
    "NewtonDivergence",
    "EnergyIncrease",
    "newton_solve",
    "avf_nonlinear",
    "avf_residual",
    "avf_jacobian",
    "avf_step",
    "solve_fom",
    "project_initial",
    "check_energy_decay",
]

log = logging.getLogger(__name__)


class NewtonDivergence(RuntimeError):
    pass


class EnergyIncrease(AssertionError):
    """A discrete energy increased by more than the allowed slack."""


@dataclass(frozen=True)
class TimeGrid:
    t0: float
    T: float
    dt: float

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.T > self.t0:
            raise ValueError("T must exceed t0")
        J = (self.T - self.t0) / self.dt
        if abs(J - round(J)) > 1e-9 * max(1.0, J):
            raise ValueError(f"dt={self.dt} does not divide [t0, T] evenly")

    @classmethod
    def from_steps(cls, dt: float, J: int, t0: float = 0.0) -> "TimeGrid":
        return cls(t0, t0 + J * dt, dt)

    @property
    def J(self) -> int:
        return int(round((self.T - self.t0) / self.dt))

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.J + 1)


@dataclass
class Trajectory:
    """Time history of a run; column ``n`` of ``snapshots`` is ``u^n``."""

    snapshots: np.ndarray
    energies: np.ndarray
    newton_iters: np.ndarray
    grid: TimeGrid
    nonlinear: np.ndarray | None = None   # f(u^n), n = 0..J, when recorded
    wall_time: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def final(self) -> np.ndarray:
        return self.snapshots[:, -1]

    @property
    def mean_newton(self) -> float:
        return float(np.mean(self.newton_iters)) if len(self.newton_iters) else 0.0


@dataclass(frozen=True)
class NewtonConfig:
    tol: float = 1e-10
    step_tol: float = 1e-12
    max_iters: int = 25
    max_halvings: int = 10


def _linear_solve(J, r):
    if sp.issparse(J):
        return spla.splu(J.tocsc(), permc_spec="MMD_AT_PLUS_A").solve(r)
    return np.linalg.solve(J, r)


def newton_solve(fun: Callable, x0: np.ndarray, cfg: NewtonConfig = NewtonConfig(),
                 solve: Callable = _linear_solve):
    """Damped Newton iteration for ``fun(x) -> (residual, jacobian)``.

    The full step is taken whenever it reduces ``||r||_2``; otherwise the
    step is halved (at most ``cfg.max_halvings`` times).  Converged when
    ``||r||_2 <= cfg.tol`` or the update's max-norm drops below
    ``cfg.step_tol``.  Returns ``(x, iterations)``.
    """
    x = np.array(x0, dtype=float, copy=True)
    r, J = fun(x)
    rn = np.linalg.norm(r)
    if not np.isfinite(rn):
        raise NewtonDivergence("non-finite residual at the initial guess")
    for it in range(cfg.max_iters + 1):
        if rn <= cfg.tol:
            return x, it
        if it == cfg.max_iters:
            break
        dx = solve(J, r)
        alpha = 1.0
        for _ in range(cfg.max_halvings + 1):
            x_new = x - alpha * dx
            r_new, J_new = fun(x_new)
            rn_new = np.linalg.norm(r_new)
            if np.isfinite(rn_new) and rn_new <= (1.0 - 1e-4 * alpha) * rn:
                break
            alpha *= 0.5
        if not np.isfinite(rn_new):
            raise NewtonDivergence("non-finite residual in Newton iteration")
        x, r, J, rn = x_new, r_new, J_new, rn_new
        if alpha * np.max(np.abs(dx)) <= cfg.step_tol:
            return x, it + 1
    raise NewtonDivergence(
        f"Newton did not converge in {cfg.max_iters} iterations (||r|| = {rn:.3e})")


def avf_nonlinear(u_next, u_curr, potential: Potential, space: DGSpace,
                  elements=None, jacobian: bool = False):
    """Element integrals of ``int_0^1 f(tau u_next + (1-tau) u_curr) dtau phi_i``.

    Returns an ``(n, 3)`` array of element vectors, plus ``(n, 3, 3)``
    derivative blocks with respect to ``u_next`` when ``jacobian`` is set.
    """
    b = space.values_at_quadrature(u_next, elements)
    a = space.values_at_quadrature(u_curr, elements)
    g = space.element_integrals(potential.avf(a, b), elements)
    if not jacobian:
        return g
    return g, space.element_blocks(potential.avf_db(a, b), elements)


def avf_residual(u_next, u_curr, operators: FOMOperators, potential: Potential,
                 epsilon: float, dt: float) -> np.ndarray:
    """``M(u+ - u) + dt/2 eps A1 (u+ + u) + dt int_0^1 f(...) dtau``."""
    M, A1 = operators.M, operators.A1
    g = avf_nonlinear(u_next, u_curr, potential, operators.space).ravel()
    return M @ (u_next - u_curr) + 0.5 * dt * epsilon * (A1 @ (u_next + u_curr)) + dt * g


def avf_jacobian(u_next, u_curr, operators: FOMOperators, potential: Potential,
                 epsilon: float, dt: float) -> sp.csr_matrix:
    _, blocks = avf_nonlinear(u_next, u_curr, potential, operators.space, jacobian=True)
    return (operators.M + (0.5 * dt * epsilon) * operators.A1 + dt * block_diag_csr(blocks)).tocsr()


def avf_step(u_curr, operators: FOMOperators, potential: Potential, epsilon: float,
             dt: float, newton: NewtonConfig = NewtonConfig()):
    """One AVF step; returns ``(u_next, newton_iterations)``."""
    u_curr = np.asarray(u_curr, dtype=float)
    if not np.all(np.isfinite(u_curr)):
        raise ValueError("u_curr contains non-finite values")
    M, A1, space = operators.M, operators.A1, operators.space
    lin = M + (0.5 * dt * epsilon) * A1
    rhs_const = -(M @ u_curr) + 0.5 * dt * epsilon * (A1 @ u_curr)

    def fun(v):
        g, blocks = avf_nonlinear(v, u_curr, potential, space, jacobian=True)
        r = lin @ v + rhs_const + dt * g.ravel()
        return r, lin + dt * block_diag_csr(blocks)

    return newton_solve(fun, u_curr, newton)


def check_energy_decay(energies, tol: float = 1e-10, mode: str = "fail",
                       label: str = "FOM") -> np.ndarray:
    """Return indices ``n`` with ``E[n+1] - E[n] > tol``; raise or warn per ``mode``."""
    energies = np.asarray(energies)
    bad = np.flatnonzero(np.diff(energies) > tol)
    if len(bad) and mode != "ignore":
        worst = np.max(np.diff(energies))
        msg = f"{label} energy increased at {len(bad)} step(s), max increase {worst:.3e}"
        if mode == "fail":
            raise EnergyIncrease(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return bad


def solve_fom(initial, operators: FOMOperators, potential: Potential, epsilon: float,
              grid: TimeGrid, newton: NewtonConfig = NewtonConfig(),
              energy_check: str = "fail", record_nonlinear: bool = True) -> Trajectory:
    """Run the full-order AVF scheme over ``grid``.

    Energy monotonicity is asserted after the run (``energy_check`` is one of
    ``"fail"``, ``"warn"``, ``"ignore"``).
    """
    space = operators.space
    J = grid.J
    U = np.empty((space.N_dof, J + 1))
    E = np.empty(J + 1)
    its = np.zeros(J, dtype=int)
    F = np.empty((space.N_dof, J + 1)) if record_nonlinear else None
    U[:, 0] = initial
    E[0] = matrix_energy(U[:, 0], operators, epsilon, potential)
    if record_nonlinear:
        F[:, 0] = eval_nonlinear(U[:, 0], potential, space)
    tic = time.perf_counter()
    for n in range(J):
        U[:, n + 1], its[n] = avf_step(U[:, n], operators, potential, epsilon, grid.dt, newton)
        E[n + 1] = matrix_energy(U[:, n + 1], operators, epsilon, potential)
        if record_nonlinear:
            F[:, n + 1] = eval_nonlinear(U[:, n + 1], potential, space)
    wall = time.perf_counter() - tic
    log.debug("FOM run: %d steps, mean Newton %.2f, %.2fs", J, its.mean(), wall)
    check_energy_decay(E, mode=energy_check, label="FOM")
    return Trajectory(U, E, its, grid, nonlinear=F, wall_time=wall)


def project_initial(g: Callable, space: DGSpace, operators: FOMOperators | None = None) -> np.ndarray:
    """L2 projection of ``g(x, y)`` onto the dG space (element-local solves)."""
    x = space.quad_points[..., 0]
    y = space.quad_points[..., 1]
    rhs = space.element_integrals(np.broadcast_to(g(x, y), x.shape).astype(float))
    if operators is not None:
        blocks = operators.mass_blocks
    else:
        blocks = space.element_blocks(np.ones_like(x))
    return np.linalg.solve(blocks, rhs[..., None])[..., 0].ravel()


def l2_error_to_function(u: np.ndarray, g: Callable, space: DGSpace) -> float:
    """``||u_h - g||_{L2}`` using the element quadrature rule."""
    x = space.quad_points[..., 0]
    y = space.quad_points[..., 1]
    diff = space.values_at_quadrature(u) - g(x, y)
    return float(np.sqrt(np.sum(space.wq * diff * diff)))

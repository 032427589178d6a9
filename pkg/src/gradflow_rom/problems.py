"""Parametrised Allen-Cahn problems ``u_t = eps * Lap(u) - f(u)``.

The parameter ``mu`` is either the inverse diffusivity ``1/eps`` or the
temperature ``theta`` of the logarithmic potential.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .avf import NewtonConfig, TimeGrid, Trajectory, project_initial, solve_fom
from .dg import DGSpace, FOMOperators, assemble_operators
from .mesh import build_mesh
from .potentials import Logarithmic, Potential, Quartic

__all__ = [
    "AllenCahnProblem",
    "random_initial",
    "tanh_circle",
    "quartic_circle_problem",
    "logarithmic_random_problem",
    "QUARTIC_TRAIN",
    "LOG_TRAIN",
]

INVERSE_DIFFUSIVITY = "inverse-diffusivity"
TEMPERATURE = "temperature"

# inverse diffusivities 1/eps on [10, 500] (Clenshaw-Curtis spacing)
QUARTIC_TRAIN = (10.00, 24.78, 67.32, 132.5, 212.46, 297.54, 377.5, 442.68, 485.22, 500.00)
# temperatures theta_k = 0.05 + 0.03 (k - 1), k = 1..5
LOG_TRAIN = tuple(round(0.05 + 0.03 * k, 10) for k in range(5))


def random_initial(seed: int, space: DGSpace, amplitude: float = 0.05) -> np.ndarray:
    """Independent uniform coefficients in ``[-amplitude, amplitude]``.

    Uses numpy's Philox4x64 counter-based generator, so a seed yields the
    same vector on every platform and numpy version that ships Philox.
    """
    if not amplitude > 0:
        raise ValueError("amplitude must be positive")
    rng = np.random.Generator(np.random.Philox(int(seed)))
    return amplitude * (2.0 * rng.random(space.N_dof) - 1.0)


def tanh_circle(epsilon: float, center=(0.5, 0.5), radius: float = 0.25) -> Callable:
    cx, cy = center

    def g(x, y):
        r = np.sqrt((x - cx) ** 2 + (y - cy) ** 2)
        return np.tanh((radius - r) / (np.sqrt(2.0) * epsilon))

    return g


@dataclass(eq=False)
class AllenCahnProblem:
    """Full-order model for a family of parameters.

    Parameters
    ----------
    operators : FOMOperators
    grid : TimeGrid
    parameter : {"inverse-diffusivity", "temperature"}
    potential : Potential or callable
        A fixed potential, or ``mu -> Potential`` for temperature runs.
    epsilon : float or None
        Fixed diffusivity (temperature runs).
    initial : callable
        ``(problem, mu) -> coefficient vector``.
    """

    operators: FOMOperators
    grid: TimeGrid
    parameter: str
    potential: Potential | Callable
    initial: Callable
    epsilon: float | None = None
    newton: NewtonConfig = NewtonConfig()
    fom_solves: int = field(default=0, init=False)

    def __post_init__(self):
        if self.parameter not in (INVERSE_DIFFUSIVITY, TEMPERATURE):
            raise ValueError(f"unknown parameter kind {self.parameter!r}")
        if self.parameter == TEMPERATURE and self.epsilon is None:
            raise ValueError("temperature runs need a fixed epsilon")

    @property
    def space(self) -> DGSpace:
        return self.operators.space

    def epsilon_of(self, mu: float) -> float:
        if self.parameter == INVERSE_DIFFUSIVITY:
            return 1.0 / float(mu)
        return float(self.epsilon)

    def potential_of(self, mu: float) -> Potential:
        if isinstance(self.potential, Potential):
            return self.potential
        return self.potential(float(mu))

    def initial_of(self, mu: float) -> np.ndarray:
        return self.initial(self, float(mu))

    def solve_fom(self, mu: float, energy_check: str = "fail") -> Trajectory:
        self.fom_solves += 1
        traj = solve_fom(self.initial_of(mu), self.operators, self.potential_of(mu),
                         self.epsilon_of(mu), self.grid, self.newton,
                         energy_check=energy_check)
        traj.meta["mu"] = float(mu)
        return traj


def _space_and_ops(domain, h, bc, sigma):
    space = DGSpace(build_mesh(domain, h, bc), sigma=sigma)
    return assemble_operators(space)


def quartic_circle_problem(h: float = 0.015, dt: float = 0.01, T: float = 1.0,
                           sigma: float = 18.0, domain=(0.0, 1.0, 0.0, 1.0),
                           bc: str = "neumann") -> AllenCahnProblem:
    """Shrinking-circle test: quartic potential, ``mu = 1/eps``, Neumann walls."""
    ops = _space_and_ops(domain, h, bc, sigma)

    def initial(problem, mu):
        return project_initial(tanh_circle(1.0 / mu), problem.space, problem.operators)

    return AllenCahnProblem(ops, TimeGrid(0.0, T, dt), INVERSE_DIFFUSIVITY, Quartic(), initial)


def logarithmic_random_problem(h: float = 2 * np.pi / 67, dt: float = 0.01, T: float = 1.0,
                               epsilon: float = 0.04, theta_c: float = 1.0,
                               sigma: float = 18.0, seed: int = 0,
                               amplitude: float = 0.05,
                               domain=(0.0, 2 * np.pi, 0.0, 2 * np.pi),
                               bc: str = "periodic") -> AllenCahnProblem:
    """Random-start test: logarithmic potential, ``mu = theta``, periodic box.

    The same random initial vector (from ``seed``) is used for every ``mu``.
    """
    ops = _space_and_ops(domain, h, bc, sigma)
    u0 = random_initial(seed, ops.space, amplitude)

    def potential(mu):
        return Logarithmic(theta=mu, theta_c=theta_c)

    def initial(problem, mu):
        return u0.copy()

    return AllenCahnProblem(ops, TimeGrid(0.0, T, dt), TEMPERATURE, potential, initial,
                            epsilon=epsilon)

"""Experiment configuration files (INI syntax: sections of ``key = value``).

Example::

    [problem]
    domain = 0, 1, 0, 1
    bc = neumann
    potential = quartic
    initial = tanh-circle

    [mesh]
    h = 0.015

    [time]
    T = 1
    dt = 0.01

    [parameter]
    kind = inverse-diffusivity
    train = 10, 24.78, 67.32, 132.5, 212.46, 297.54, 377.5, 442.68, 485.22, 500
    test = 200

    [rom]
    n_max = 20
    tol_g = 1e-3
    m_deim = 50

    [run]
    out = results/quartic
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field

from .avf import TimeGrid, project_initial
from .dg import DGSpace, assemble_operators
from .mesh import build_mesh
from .potentials import Logarithmic, Quartic
from .problems import (INVERSE_DIFFUSIVITY, TEMPERATURE, AllenCahnProblem, random_initial,
                       tanh_circle)

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "build_problem"]


class ConfigError(ValueError):
    pass


def _floats(text: str) -> tuple:
    return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())


@dataclass
class ExperimentConfig:
    domain: tuple = (0.0, 1.0, 0.0, 1.0)
    bc: str = "neumann"
    potential: str = "quartic"
    theta: float | None = None
    theta_c: float | None = None
    epsilon: float | None = None
    initial: str = "tanh-circle"
    amplitude: float = 0.05
    h: float = 0.015
    sigma: float = 18.0
    t0: float = 0.0
    T: float = 1.0
    dt: float = 0.01
    parameter: str = INVERSE_DIFFUSIVITY
    train: tuple = ()
    test: tuple = ()
    n_max: int = 20
    tol_g: float = 1e-3
    m_deim: int = 50
    seed: int | None = None
    out: str = "results"
    extra: dict = field(default_factory=dict)

    def validate(self) -> "ExperimentConfig":
        if len(self.domain) != 4 or self.domain[1] <= self.domain[0] or self.domain[3] <= self.domain[2]:
            raise ConfigError(f"invalid domain {self.domain}")
        for name in ("h", "sigma", "dt", "amplitude", "tol_g"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.T <= self.t0:
            raise ConfigError("T must exceed t0")
        if self.bc not in ("neumann", "periodic"):
            raise ConfigError(f"unknown bc {self.bc!r}")
        if self.potential not in ("quartic", "logarithmic"):
            raise ConfigError(f"unknown potential {self.potential!r}")
        if self.parameter not in (INVERSE_DIFFUSIVITY, TEMPERATURE):
            raise ConfigError(f"unknown parameter kind {self.parameter!r}")
        if self.potential == "logarithmic" and self.theta_c is None:
            raise ConfigError("logarithmic potential requires theta_c")
        if self.parameter == TEMPERATURE:
            if self.potential != "logarithmic":
                raise ConfigError("temperature parameter needs the logarithmic potential")
            if self.epsilon is None or not self.epsilon > 0:
                raise ConfigError("temperature runs need a positive epsilon")
        if self.parameter == INVERSE_DIFFUSIVITY and self.potential == "logarithmic" \
                and self.theta is None:
            raise ConfigError("inverse-diffusivity runs with the logarithmic potential need theta")
        if self.initial not in ("tanh-circle", "random"):
            raise ConfigError(f"unknown initial condition {self.initial!r}")
        if self.initial == "random" and self.seed is None:
            raise ConfigError("random initial conditions need a seed")
        if any(not v > 0 for v in self.train + self.test):
            raise ConfigError("parameter values must be positive")
        if self.n_max < 1 or self.m_deim < 0:
            raise ConfigError("n_max must be >= 1 and m_deim >= 0")
        try:
            TimeGrid(self.t0, self.T, self.dt)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return self


_SCHEMA = {
    "problem": {"domain": _floats, "bc": str.lower, "potential": str.lower, "theta": float,
                "theta_c": float, "epsilon": float, "initial": str.lower, "amplitude": float},
    "mesh": {"h": float, "sigma": float},
    "time": {"t0": float, "t": float, "dt": float},
    "parameter": {"kind": str.lower, "train": _floats, "test": _floats},
    "rom": {"n_max": int, "tol_g": float, "m_deim": int},
    "run": {"seed": int, "out": str},
}
_RENAME = {("time", "t"): "T", ("parameter", "kind"): "parameter"}


def load_config(path) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    values, extra = {}, {}
    for section in parser.sections():
        schema = _SCHEMA.get(section.lower())
        for key, raw in parser.items(section):
            if schema is None or key not in schema:
                extra[f"{section}.{key}"] = raw
                continue
            try:
                values[_RENAME.get((section.lower(), key), key)] = schema[key](raw.strip())
            except ValueError as exc:
                raise ConfigError(f"[{section}] {key} = {raw!r}: {exc}") from exc
    return ExperimentConfig(**values, extra=extra).validate()


def build_problem(cfg: ExperimentConfig) -> AllenCahnProblem:
    space = DGSpace(build_mesh(cfg.domain, cfg.h, cfg.bc), sigma=cfg.sigma)
    ops = assemble_operators(space)
    grid = TimeGrid(cfg.t0, cfg.T, cfg.dt)

    if cfg.potential == "quartic":
        potential = Quartic()
    elif cfg.parameter == TEMPERATURE:
        def potential(mu, theta_c=cfg.theta_c):
            return Logarithmic(theta=mu, theta_c=theta_c)
    else:
        potential = Logarithmic(theta=cfg.theta, theta_c=cfg.theta_c)

    if cfg.initial == "random":
        u0 = random_initial(cfg.seed, space, cfg.amplitude)

        def initial(problem, mu):
            return u0.copy()
    else:
        x0, x1, y0, y1 = cfg.domain
        center = (0.5 * (x0 + x1), 0.5 * (y0 + y1))
        radius = 0.25 * min(x1 - x0, y1 - y0)

        def initial(problem, mu):
            eps = problem.epsilon_of(mu)
            return project_initial(tanh_circle(eps, center, radius), problem.space,
                                   problem.operators)

    return AllenCahnProblem(ops, grid, cfg.parameter, potential, initial, epsilon=cfg.epsilon)


def mesh_summary(problem: AllenCahnProblem) -> dict:
    m = problem.space.mesh
    hx, hy = m.h
    return {"nx": m.shape[0], "ny": m.shape[1], "h_x": hx, "h_y": hy,
            "triangles": m.n_triangles, "N_dof": problem.space.N_dof}

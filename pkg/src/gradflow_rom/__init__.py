"""Energy-stable reduced-order models for the parametrized Allen-Cahn equation.

Full-order model: linear SIPG discontinuous Galerkin in space, average vector
field (AVF) time stepping.  Reduced models: POD-greedy bases with optional
DEIM hyper-reduction of the nonlinear term.
"""
from .avf import NewtonConfig, TimeGrid, Trajectory, solve_fom
from .config import ConfigError, ExperimentConfig, build_problem, load_config
from .deim import DEIMData, DEIMInterpolator, StabilityReport, pod_deim, stability_bounds
from .dg import DGSpace, FOMOperators, assemble_operators, discrete_energy
from .greedy import PODGreedy
from .harness import ComparisonReport, bench, compare
from .mesh import Mesh, build_mesh
from .metrics import l2_time_error, linf_energy_error
from .pod import PODBasis, pod
from .potentials import Logarithmic, NonlinearDomainError, Quartic
from .problems import (AllenCahnProblem, logarithmic_random_problem, quartic_circle_problem,
                       random_initial)

__version__ = "0.1.0"

__all__ = [
    "AllenCahnProblem", "ComparisonReport", "ConfigError", "DEIMData", "DEIMInterpolator",
    "DGSpace", "ExperimentConfig", "FOMOperators", "Logarithmic", "Mesh", "NewtonConfig",
    "NonlinearDomainError", "PODBasis", "PODGreedy", "Quartic", "StabilityReport", "TimeGrid",
    "Trajectory", "assemble_operators", "bench", "build_mesh", "build_problem", "compare",
    "discrete_energy", "l2_time_error", "linf_energy_error", "load_config",
    "logarithmic_random_problem", "pod", "pod_deim", "quartic_circle_problem",
    "random_initial", "solve_fom", "stability_bounds",
]

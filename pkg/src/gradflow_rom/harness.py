"""Full-order versus reduced-order comparisons and timings."""
from __future__ import annotations

from dataclasses import asdict, dataclass

from .avf import Trajectory, check_energy_decay
from .greedy import PODGreedy
from .metrics import l2_time_error, linf_energy_error
from .problems import AllenCahnProblem

__all__ = ["ComparisonReport", "compare", "bench"]


@dataclass
class ComparisonReport:
    mu: float
    sol_err_podg: float
    sol_err_deim: float
    energy_err_podg: float
    energy_err_deim: float
    wall_fom: float
    wall_podg: float
    wall_deim: float

    @property
    def speedup_podg(self) -> float:
        return self.wall_fom / self.wall_podg

    @property
    def speedup_deim(self) -> float:
        return self.wall_fom / self.wall_deim

    def as_dict(self) -> dict:
        d = asdict(self)
        d.update(speedup_podg=self.speedup_podg, speedup_deim=self.speedup_deim)
        return d


def compare(problem: AllenCahnProblem, model: PODGreedy, mu: float,
            fom: Trajectory | None = None) -> tuple[ComparisonReport, dict]:
    """Errors of the PODG and PODG-DEIM solutions against the FOM at ``mu``.

    Returns the report and the trajectories (``fom``, ``exact``, ``deim``).
    """
    if fom is None:
        fom = problem.solve_fom(mu)
    # guard: never report against a full-order run that lost monotonicity
    check_energy_decay(fom.energies, mode="fail", label="FOM")
    Psi = model.basis_
    M, dt = problem.operators.M, problem.grid.dt
    runs = {"fom": fom}
    errs = {}
    for mode in ("exact", "deim"):
        tr = model.solve(mu, mode)
        runs[mode] = tr
        errs[mode] = (l2_time_error(fom.snapshots, Psi @ tr.snapshots, M, dt),
                      linf_energy_error(fom.energies, tr.energies))
    report = ComparisonReport(float(mu), errs["exact"][0], errs["deim"][0],
                              errs["exact"][1], errs["deim"][1], fom.wall_time,
                              runs["exact"].wall_time, runs["deim"].wall_time)
    return report, runs


def bench(problem: AllenCahnProblem, model: PODGreedy, mu: float, repeats: int = 3,
          fom_repeats: int | None = None) -> dict:
    """Best-of-``repeats`` wall-clock times of the online solves (offline excluded)."""
    fom_repeats = repeats if fom_repeats is None else fom_repeats
    wall_fom = min(problem.solve_fom(mu).wall_time for _ in range(fom_repeats))
    wall_podg = min(model.solve(mu, "exact", record_energy=False).wall_time
                    for _ in range(repeats))
    wall_deim = min(model.solve(mu, "deim", record_energy=False).wall_time
                    for _ in range(repeats))
    return {"mu": float(mu), "wall_fom": wall_fom, "wall_podg": wall_podg,
            "wall_deim": wall_deim, "speedup_podg": wall_fom / wall_podg,
            "speedup_deim": wall_fom / wall_deim, "repeats": repeats}


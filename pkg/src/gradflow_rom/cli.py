"""Command-line entry point: ``gradflow-rom <command> --config FILE [options]``.

Commands
--------
fom        full-order solve, writes the trajectory and its energy trace
greedy     POD-greedy offline stage, writes the basis and DEIM data
rom        online reduced solve with a stored basis
compare    FOM versus PODG and PODG-DEIM errors, appended to ``reports.csv``
bench      best-of-3 online timings, appended to ``bench.csv``
stability  DEIM-ROM time-step bounds as ``key = value`` text

Exit status is 0 on success, 2 for configuration problems, 3 for solver
failures and 4 when a runtime check (energy decay) fails.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .avf import EnergyIncrease, NewtonDivergence, check_energy_decay
from .config import ConfigError, build_problem, load_config, mesh_summary
from .deim import SingularInterpolation, stability_bounds
from .greedy import PODGreedy
from .harness import bench, compare
from .pod import RankDeficiency
from .potentials import NonlinearDomainError

log = logging.getLogger("gradflow_rom")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_CHECK = 0, 2, 3, 4

BASIS_FILE = "basis.bin"
DEIM_FILE = "deim_modes.bin"


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gradflow-rom", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("fom", "greedy", "rom", "compare", "bench", "stability"):
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, type=Path)
        s.add_argument("--out", type=Path, help="output directory (overrides [run] out)")
        s.add_argument("--seed", type=int, help="seed for random initial data")
        s.add_argument("-v", "--verbose", action="store_true")
        if name != "greedy":
            s.add_argument("--mu", type=float, help="parameter value (default: first test value)")
        if name == "rom":
            s.add_argument("--mode", choices=("exact", "deim"), default="deim")
        if name == "bench":
            s.add_argument("--repeats", type=int, default=3)
    return p


def _setup(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    cfg.validate()
    out = Path(args.out if args.out is not None else cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    problem = build_problem(cfg)
    mu = getattr(args, "mu", None)
    if mu is None and args.command != "greedy":
        if not cfg.test:
            raise ConfigError("no --mu given and [parameter] test is empty")
        mu = cfg.test[0]
    return cfg, problem, out, mu


def _model_params(cfg) -> dict:
    return {"tol": cfg.tol_g, "n_max": cfg.n_max, "m_deim": cfg.m_deim}


def _load_model(cfg, problem, out: Path) -> PODGreedy:
    if not (out / BASIS_FILE).exists():
        raise ConfigError(f"{out / BASIS_FILE} not found; run the greedy command first")
    Psi = io.read_matrix(out / BASIS_FILE)
    W = io.read_matrix(out / DEIM_FILE) if (out / DEIM_FILE).exists() else None
    if Psi.shape[0] != problem.space.N_dof:
        raise ConfigError(f"stored basis has {Psi.shape[0]} rows, mesh has "
                          f"{problem.space.N_dof} degrees of freedom")
    return PODGreedy.from_arrays(problem, Psi, W, **_model_params(cfg))


def _tag(mu) -> str:
    return f"{mu:g}"


def cmd_fom(cfg, problem, out, mu, args):
    traj = problem.solve_fom(mu)
    io.write_matrix(out / f"fom_mu{_tag(mu)}.bin", traj.snapshots)
    io.write_energy_trace(out / f"fom_energy_mu{_tag(mu)}.csv", traj.grid.times, traj.energies)
    print(f"fom mu={mu:g} N_dof={problem.space.N_dof} steps={traj.grid.J} "
          f"mean_newton={traj.mean_newton:.2f} wall={traj.wall_time:.2f}s")


def cmd_greedy(cfg, problem, out, mu, args):
    if not cfg.train:
        raise ConfigError("[parameter] train is empty")
    model = PODGreedy(problem, **_model_params(cfg)).fit(np.asarray(cfg.train))
    res = model.result_
    io.write_matrix(out / BASIS_FILE, res.Psi)
    io.write_csv(out / "selected.csv", ["iteration", "mu"],
                 ((i + 1, f"{m:.17g}") for i, m in enumerate(res.selected)))
    io.write_csv(out / "indicator_history.csv", ["iteration"] + [f"mu={m:g}" for m in res.train_set],
                 ([i + 1] + [f"{v:.17g}" for v in row] for i, row in enumerate(res.indicator_history)))
    if res.deim is not None:
        io.write_matrix(out / DEIM_FILE, res.deim.W)
        io.write_csv(out / "deim_indices.csv", ["k", "index"], enumerate(res.deim.indices))
    if res.deim_singular_values is not None:
        io.write_csv(out / "deim_singular_values.csv", ["k", "sigma"],
                     ((k, f"{s:.17g}") for k, s in enumerate(res.deim_singular_values)))
    print(f"greedy N={res.N} M={0 if res.deim is None else res.deim.M} "
          f"termination={res.termination} fom_solves={res.fom_solves} "
          f"max_indicator={res.max_indicator[-1]:.3e}")


def cmd_rom(cfg, problem, out, mu, args):
    model = _load_model(cfg, problem, out)
    traj = model.solve(mu, args.mode)
    check_energy_decay(traj.energies, tol=1e-8, mode="warn", label="ROM")
    io.write_matrix(out / f"rom_{args.mode}_mu{_tag(mu)}.bin", traj.snapshots)
    io.write_energy_trace(out / f"rom_{args.mode}_energy_mu{_tag(mu)}.csv",
                          traj.grid.times, traj.energies)
    print(f"rom mode={args.mode} mu={mu:g} N={model.basis_.shape[1]} "
          f"mean_newton={traj.mean_newton:.2f} wall={traj.wall_time:.4f}s "
          f"full_nonlinear_evals={traj.meta.get('full_nonlinear', 0)}")


def cmd_compare(cfg, problem, out, mu, args):
    report, _ = compare(problem, _load_model(cfg, problem, out), mu)
    row = report.as_dict()
    io.append_csv(out / "reports.csv", {k: f"{v:.17g}" for k, v in row.items()})
    print(" ".join(f"{k}={v:.3e}" for k, v in row.items()))


def cmd_bench(cfg, problem, out, mu, args):
    row = bench(problem, _load_model(cfg, problem, out), mu, repeats=args.repeats)
    io.append_csv(out / "bench.csv", {k: f"{v:.17g}" for k, v in row.items()})
    print(" ".join(f"{k}={v:.4g}" for k, v in row.items()))


def cmd_stability(cfg, problem, out, mu, args):
    model = _load_model(cfg, problem, out)
    if model.deim_ is None:
        raise ConfigError("stability needs stored DEIM modes")
    traj = model.solve(mu, "deim", record_energy=False)
    rep = stability_bounds(traj, model.basis_, model.deim_, problem.operators,
                           problem.potential_of(mu))
    values = {"mu": mu, "N": model.basis_.shape[1], "M": model.deim_.M, **rep.as_dict()}
    io.write_key_values(out / f"stability_mu{_tag(mu)}.txt", values)
    print(" ".join(f"{k}={v}" for k, v in values.items()))


COMMANDS = {"fom": cmd_fom, "greedy": cmd_greedy, "rom": cmd_rom, "compare": cmd_compare,
            "bench": cmd_bench, "stability": cmd_stability}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg, problem, out, mu = _setup(args)
        log.info("mesh %s", mesh_summary(problem))
        COMMANDS[args.command](cfg, problem, out, mu, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (EnergyIncrease, AssertionError) as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except (NewtonDivergence, NonlinearDomainError, SingularInterpolation, RankDeficiency,
            np.linalg.LinAlgError, ArithmeticError, RuntimeError, ValueError) as exc:
        print(f"solver error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

import numpy as np
import pytest
from sklearn.base import clone

from gradflow_rom.avf import NewtonConfig, Trajectory
from gradflow_rom.greedy import (GreedyConfig, PODGreedy, ResidualIndicator, error_indicator,
                                 project_onto_basis)
from gradflow_rom.harness import compare
from gradflow_rom.pod import ExactNonlinearity, build_reduced_operators, project, solve_rom
from gradflow_rom.problems import logarithmic_random_problem, quartic_circle_problem

TRAIN = (10.0, 25.0, 50.0, 80.0)


@pytest.fixture(scope="module")
def problem():
    return quartic_circle_problem(h=0.125, dt=0.01, T=0.1)


@pytest.fixture(scope="module")
def fitted(problem):
    return PODGreedy(problem, tol=1e-8, n_max=6, m_deim=20).fit(TRAIN)


def test_fit_result(fitted, problem):
    res = fitted.result_
    assert res.N == len(res.selected) == len(res.indicator_history) <= 6
    assert res.termination in ("n_max", "tol", "rank")
    M = problem.operators.M
    assert np.allclose(res.Psi.T @ M @ res.Psi, np.eye(res.N), atol=1e-10)
    assert max(res.basis_drift) < 1e-10
    assert res.selected[0] == TRAIN[0]
    assert res.max_indicator[-1] < res.max_indicator[0]
    assert res.deim.M <= 20 and res.deim.PsiTQ.shape == (res.N, res.deim.M)


def test_cache_avoids_repeated_solves(fitted):
    res = fitted.result_
    unique = len(set(res.selected))
    assert res.fom_solves == unique
    assert res.cache_hits == len(res.selected) - unique
    assert set(res.fom_cache) == set(res.selected)


def test_argmax_follows_history(fitted):
    res = fitted.result_
    for k in range(1, res.N):
        row = res.indicator_history[k - 1]
        assert res.selected[k] == TRAIN[int(np.nanargmax(row))]


def test_tie_breaking_goes_to_lowest_index(problem):
    # a duplicated training value ties with itself at the maximum
    model = PODGreedy(problem, n_max=2, m_deim=0, tol=1e-12).fit([80.0, 10.0, 10.0])
    row = model.result_.indicator_history[0]
    assert row[1] == row[2] == np.nanmax(row)
    assert int(np.nanargmax(row)) == 1
    assert model.result_.selected[1] == 10.0


def test_estimator_params(problem):
    model = PODGreedy(problem, n_max=3)
    assert model.get_params()["n_max"] == 3
    assert clone(model).get_params()["tol"] == 1e-3
    with pytest.raises(ValueError):
        PODGreedy().fit(TRAIN)
    with pytest.raises(ValueError):
        GreedyConfig((), 1e-3, 2, 10)


def test_online_modes_and_predict(fitted, problem):
    before = problem.space.counters["full_nonlinear"]
    tr = fitted.solve(30.0, "deim")
    assert tr.meta["full_nonlinear"] == 0
    assert problem.space.counters["full_nonlinear"] == before
    assert fitted.solve(30.0, "exact").meta["full_nonlinear"] > 0
    P = fitted.predict([25.0, 30.0], mode="exact")
    assert P.shape == (2, problem.space.N_dof)
    with pytest.raises(ValueError):
        fitted.solve(30.0, "galerkin")


def test_lifted_energies_match_recorded(fitted):
    tr = fitted.solve(25.0, "exact")
    assert np.allclose(fitted.lifted_energies(tr, 25.0), tr.energies)


def test_from_arrays_reproduces_model(fitted, problem):
    clone_model = PODGreedy.from_arrays(problem, fitted.basis_, fitted.deim_.W)
    a = fitted.solve(40.0, "deim").snapshots
    b = clone_model.solve(40.0, "deim").snapshots
    assert np.allclose(a, b, atol=1e-13)


def test_compare_report(fitted, problem):
    report, runs = compare(problem, fitted, 25.0)
    assert report.sol_err_podg >= 0 and report.energy_err_deim >= 0
    assert report.speedup_podg == pytest.approx(report.wall_fom / report.wall_podg)
    assert set(runs) == {"fom", "exact", "deim"}
    # training parameter: small error
    assert report.sol_err_podg < 1e-2


def test_indicator_full_basis_is_newton_residual():
    problem = quartic_circle_problem(h=0.5, dt=0.01, T=0.05)
    ops = problem.operators
    Psi = np.linalg.inv(ops.R.toarray())          # M-orthonormal basis of the whole space
    mu = 20.0
    red = build_reduced_operators(Psi, ops, problem.epsilon_of(mu))
    a0 = project(problem.initial_of(mu), Psi, ops.M)
    tr = solve_rom(a0, red, Psi, problem.potential_of(mu), problem.grid,
                   ExactNonlinearity(Psi, problem.space), operators=ops,
                   newton=NewtonConfig(tol=1e-14, step_tol=1e-16))
    assert error_indicator(mu, tr, Psi, problem, deim=None) <= 1e-6


def test_indicator_empty_basis_positive(problem):
    Psi = np.zeros((problem.space.N_dof, 0))
    J = problem.grid.J
    tr = Trajectory(np.zeros((0, J + 1)), np.zeros(J + 1), np.zeros(J, int), problem.grid)
    mu = 20.0
    value = error_indicator(mu, tr, Psi, problem)
    # direct evaluation: only the first step carries the initial state
    ind = ResidualIndicator(problem.operators)
    U = np.zeros((problem.space.N_dof, J + 1))
    U[:, 0] = problem.initial_of(mu)
    R = ind.residuals(U, problem.epsilon_of(mu), problem.potential_of(mu), problem.grid.dt)
    assert value == pytest.approx(np.sqrt(problem.grid.dt * ind.dual_norms(R).sum()))
    assert value > 0


def test_projection_helper(problem, fitted):
    u = problem.initial_of(25.0)
    proj, err = project_onto_basis(u, fitted.basis_, problem.operators.M)
    assert np.allclose(proj + err, u)
    assert np.allclose(fitted.basis_.T @ problem.operators.M @ err, 0, atol=1e-12)


def test_temperature_parameter_greedy():
    problem = logarithmic_random_problem(h=2 * np.pi / 8, dt=0.01, T=0.05)
    model = PODGreedy(problem, n_max=3, m_deim=15, tol=1e-12).fit([0.05, 0.11, 0.17])
    assert model.result_.N == 3
    tr = model.solve(0.08, "deim")
    assert np.all(np.diff(model.lifted_energies(tr, 0.08)) <= 1e-8)

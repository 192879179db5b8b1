"""End-to-end optimization loop behavior on small instances."""

import importlib

import numpy as np
import pytest

from topoforge.fem import SingularSystemError, solve_equilibrium
from topoforge.problem import (
    BCSpec,
    LoadSpec,
    MaterialParams,
    MeshParams,
    OptimizerParams,
    ProblemSpec,
    Region,
    SimpParams,
    SolverParams,
)
from topoforge.simp import OptimizationResult, SolverAbort, optimize, simp_modulus


def _mini(nelx=8, nely=4, nelz=4, **overrides):
    base = dict(
        label="mini",
        mesh=MeshParams(nelx=nelx, nely=nely, nelz=nelz, lx=1.0, ly=0.5, lz=0.5),
        material=MaterialParams(e0=1.0, emin=1e-9, nu=0.3),
        bcs=[BCSpec(where=Region(x=0.0), fix_ux=True, fix_uy=True, fix_uz=True)],
        loads=[LoadSpec(where=Region(x=1.0, y=0.5), fy=-1.0)],
        solver=SolverParams(tol=1e-6, maxiter=100, n_level=3),
        simp=SimpParams(volfrac=0.3, penalty=3.0, rmin=1.5, heaviside=True),
        optimizer=OptimizerParams(kind="pgd", fun_tol=1e-4, max_iters=30),
    )
    base.update(overrides)
    return ProblemSpec(**base)


def test_full_budget_stays_solid():
    spec = _mini(simp=SimpParams(volfrac=1.0, penalty=3.0, rmin=1.5, heaviside=True))
    res = optimize(spec)
    assert res.termination == "fun_tol"
    assert res.n_iterations == 1
    np.testing.assert_array_equal(res.raw, 1.0)
    np.testing.assert_allclose(res.field.physical, 1.0, atol=1e-14)

    # compliance equals a plain solid-body solve
    from topoforge.problem import build_bcs, build_loads, build_mesh
    from topoforge.fem import assemble_force, dirichlet_data

    mesh = build_mesh(spec)
    fixed, values = dirichlet_data(mesh, build_bcs(spec))
    force = assemble_force(mesh, build_loads(spec))
    moduli = simp_modulus(np.ones(mesh.n_elements), 1.0, 1e-9, 3.0)
    u, _ = solve_equilibrium(mesh, moduli, 0.3, force, fixed, values, tol=1e-6, maxiter=100,
                             n_level=3)
    assert res.final_compliance == pytest.approx(float(force @ u), rel=1e-10)


def test_single_iteration_budget():
    spec = _mini(optimizer=OptimizerParams(kind="pgd", fun_tol=0.0, max_iters=1))
    res = optimize(spec)
    assert res.termination == "max_iters"
    assert res.n_iterations == 1
    assert len(res.compliance_history) == 1
    assert len(res.volume_history) == 1
    assert len(res.solve_iterations) == 1


def test_history_excludes_starting_point():
    spec = _mini(optimizer=OptimizerParams(kind="pgd", fun_tol=0.0, max_iters=4))
    res = optimize(spec)
    assert res.n_iterations == 4
    assert res.initial_compliance not in res.compliance_history


def test_every_iterate_feasible():
    spec = _mini(optimizer=OptimizerParams(kind="pgd", fun_tol=0.0, max_iters=10))
    res = optimize(spec)
    assert all(v <= 0.3 + 1e-6 for v in res.volume_history)


def test_compliance_improves():
    res = optimize(_mini())
    assert res.final_compliance < res.initial_compliance


def test_change_tolerance_stop():
    spec = _mini(
        optimizer=OptimizerParams(kind="pgd", fun_tol=0.0, change_tol=1.0, max_iters=10)
    )
    res = optimize(spec)
    assert res.termination == "change_tol"
    assert res.n_iterations == 1


def test_function_tolerance_labels_stop():
    spec = _mini(optimizer=OptimizerParams(kind="pgd", fun_tol=0.5, max_iters=50))
    res = optimize(spec)
    assert res.termination == "fun_tol"
    assert res.n_iterations < 50


def test_runs_are_deterministic():
    spec = _mini(optimizer=OptimizerParams(kind="pgd", fun_tol=0.0, max_iters=6))
    a = optimize(spec)
    b = optimize(spec)
    assert a.raw.tobytes() == b.raw.tobytes()
    assert a.compliance_history == b.compliance_history


def test_modulus_scale_invariance():
    # halving both moduli doubles every compliance and leaves densities alone
    kw = dict(optimizer=OptimizerParams(kind="pgd", fun_tol=0.0, max_iters=6),
              simp=SimpParams(volfrac=0.3, penalty=3.0, rmin=1.5, heaviside=False))
    res_a = optimize(_mini(**kw))
    res_b = optimize(_mini(material=MaterialParams(e0=0.5, emin=5e-10, nu=0.3), **kw))
    assert np.max(np.abs(res_a.raw - res_b.raw)) <= 1e-6
    ratios = np.array(res_b.compliance_history) / np.array(res_a.compliance_history)
    np.testing.assert_allclose(ratios, 2.0, rtol=1e-6)


def test_mma_descends_and_respects_budget():
    spec = _mini(
        nelx=6, nely=3, nelz=3,
        optimizer=OptimizerParams(kind="mma", fun_tol=0.0, max_iters=10),
    )
    res = optimize(spec)
    assert res.n_iterations == 10
    assert all(v <= 0.3 + 1e-6 for v in res.volume_history)
    assert res.final_compliance < res.initial_compliance


def test_solver_failure_carries_partial_history(monkeypatch):
    spec = _mini(optimizer=OptimizerParams(kind="pgd", fun_tol=0.0, max_iters=10))
    calls = {"n": 0}
    real = solve_equilibrium

    def flaky(*args, **kwargs):
        calls["n"] += 1
        if calls["n"] > 3:
            raise SingularSystemError("stiffness lost positive definiteness")
        return real(*args, **kwargs)

    monkeypatch.setattr(
        importlib.import_module("topoforge.simp.optimize"), "solve_equilibrium", flaky
    )
    with pytest.raises(SolverAbort) as excinfo:
        optimize(spec)
    partial = excinfo.value.partial
    assert isinstance(partial, OptimizationResult)
    assert partial.termination == "aborted"
    assert partial.n_iterations == 2  # two updates solved before the failure

"""Acceptance gate.

Twelve checks, one per release criterion, each printing a single verdict
line (ACCEPTANCE N: PASS/FAIL) on top of the usual pytest outcome. Shared
optimization runs live in module fixtures so the suite stays inside the
stated runtime budgets.
"""

import json
import time
from contextlib import contextmanager

import numpy as np
import pytest
from scipy import ndimage

from topoforge import problem as tp
from topoforge.agents import (
    FixedScoreJudge,
    JudgeVerdict,
    RevisionRecord,
    RunLog,
    ScriptedClient,
    StubJudge,
    orchestrate,
    stub_judge,
)
from topoforge.analysis import parameter_stats, score_trend
from topoforge.fem import (
    StructuredMesh,
    assemble_force,
    dirichlet_data,
    hex8_stiffness,
    solve_equilibrium,
)
from topoforge.fem.solve import operator_apply
from topoforge.manufacture import add_supports, export_obj, load_obj, marching_cubes
from topoforge.problem import build_bcs, build_loads, build_mesh
from topoforge.render import render_sixpack
from topoforge.simp import (
    FilterKernel,
    chain_to_raw,
    compliance,
    compliance_sensitivity,
    compute_fields,
    element_energies,
    optimize,
    simp_modulus,
)


@contextmanager
def criterion(capsys, n, summary):
    try:
        yield
    except BaseException:
        with capsys.disabled():
            print(f"\nACCEPTANCE {n}: FAIL — {summary}")
        raise
    with capsys.disabled():
        print(f"\nACCEPTANCE {n}: PASS — {summary}")


def revised(base, **paths):
    """Copy of a preset spec with dotted-path leaf overrides."""
    data = json.loads(tp.spec_to_json(base))
    for path, value in paths.items():
        node = data
        keys = path.split(".")
        for key in keys[:-1]:
            node = node[key]
        node[keys[-1]] = value
    spec = tp.validate_problem(json.dumps(data))
    assert isinstance(spec, tp.ProblemSpec), spec
    return spec


def reduced_phone_spec(**extra):
    return revised(
        tp.phone_stand(),
        **{"mesh.nelx": 32, "mesh.nely": 16, "mesh.nelz": 4, **extra},
    )


def timed_optimize(spec):
    t0 = time.monotonic()
    result = optimize(spec)
    return result, time.monotonic() - t0


@pytest.fixture(scope="module")
def phone_run():
    """Reduced phone stand at the preset r_min; shared by criteria 3, 4, 5, 10."""
    spec = reduced_phone_spec()
    result, elapsed = timed_optimize(spec)
    return spec, result, elapsed


@pytest.fixture(scope="module")
def phone_run_rmin3():
    spec = reduced_phone_spec(**{"simp.rmin": 3.0})
    result, elapsed = timed_optimize(spec)
    return spec, result, elapsed


def tiny_spec(**extra):
    """Fast variant for protocol checks where solve quality is irrelevant."""
    return revised(
        tp.phone_stand(),
        **{
            "mesh.nelx": 8,
            "mesh.nely": 4,
            "mesh.nelz": 2,
            "optimizer.max_iters": 2,
            "optimizer.fun_tol": 0.0,
            **extra,
        },
    )


def scripted_diff(changes, rationale="scripted revision"):
    payload = dict(changes)
    payload["rationale"] = rationale
    return "```json\n" + json.dumps(payload) + "\n```"


PREFERENCE = "Organic, skeletal, branching structure."


# -- 1: sensitivity correctness ------------------------------------------------


def test_criterion_1_sensitivities_match_finite_differences(capsys):
    with criterion(capsys, 1, "chained dc/dx matches central differences to 1e-3"):
        t0 = time.monotonic()
        spec = revised(
            tp.cantilever(),
            **{
                "mesh.nelx": 8,
                "mesh.nely": 4,
                "mesh.nelz": 4,
                "simp.heaviside": False,
            },
        )
        assert spec.simp.volfrac == 0.4
        assert spec.simp.penalty == 3.0
        assert spec.simp.rmin == 1.5
        mesh = build_mesh(spec)
        fixed, values = dirichlet_data(mesh, build_bcs(spec))
        force = assemble_force(mesh, build_loads(spec))
        kernel = FilterKernel(mesh, spec.simp.rmin)
        mat = spec.material

        def compliance_of(raw):
            field = compute_fields(raw, kernel, False, spec.simp.beta)
            moduli = simp_modulus(field.physical, mat.e0, mat.emin, spec.simp.penalty)
            u, report = solve_equilibrium(
                mesh, moduli, mat.nu, force, fixed, values,
                tol=1e-10, maxiter=4000, n_level=spec.solver.n_level,
            )
            assert report.relative_residual <= 1e-10
            return compliance(force, u), field, u

        raw = np.full(mesh.n_elements, spec.simp.volfrac)
        _, field, u = compliance_of(raw)
        energies = element_energies(mesh, mat.nu, u)
        d_phys = compliance_sensitivity(
            field.physical, energies, mat.e0, mat.emin, spec.simp.penalty
        )
        grad = chain_to_raw(d_phys, field, kernel, False, spec.simp.beta)

        h = 1e-5
        fd = np.empty_like(grad)
        for e in range(mesh.n_elements):
            xp = raw.copy()
            xp[e] += h
            xm = raw.copy()
            xm[e] -= h
            fd[e] = (compliance_of(xp)[0] - compliance_of(xm)[0]) / (2 * h)

        mask = np.abs(grad) >= 1e-12
        assert mask.all()  # every element carries gradient on this problem
        np.testing.assert_allclose(grad[mask], fd[mask], rtol=1e-3)
        assert time.monotonic() - t0 < 120.0


# -- 2: modulus-scale invariance -----------------------------------------------


def test_criterion_2_modulus_scaling_invariance(capsys):
    with criterion(capsys, 2, "halved (e0, emin) doubles compliance, densities equal"):
        t0 = time.monotonic()

        def run(e0, emin):
            spec = revised(
                tp.phone_stand(),
                **{
                    "mesh.nelx": 32,
                    "mesh.nely": 16,
                    "mesh.nelz": 8,
                    "material.e0": e0,
                    "material.emin": emin,
                    "optimizer.fun_tol": 0.0,
                    "optimizer.change_tol": 0.0,
                    "optimizer.max_iters": 30,
                },
            )
            return optimize(spec)

        base = run(1.0, 1e-9)
        halved = run(0.5, 0.5e-9)
        assert base.n_iterations == 30
        assert halved.n_iterations == 30

        ratios = np.array(halved.compliance_history) / np.array(base.compliance_history)
        np.testing.assert_allclose(ratios, 2.0, rtol=1e-6)
        assert np.max(np.abs(base.field.physical - halved.field.physical)) <= 1e-6
        assert time.monotonic() - t0 < 180.0


# -- 3: constraint satisfaction and descent ------------------------------------


def test_criterion_3_constraint_and_descent(phone_run, capsys):
    with criterion(capsys, 3, "volume within budget, compliance down by 10%"):
        spec, result, elapsed = phone_run
        assert spec.optimizer.fun_tol == 1e-4
        assert spec.optimizer.kind == "pgd"
        assert float(result.field.physical.mean()) <= 0.15 + 1e-6
        assert result.final_compliance <= 0.9 * result.initial_compliance
        assert elapsed < 300.0


# -- 4: filter feature size ----------------------------------------------------


def survival_radius(physical, mesh, threshold=0.5):
    """Largest erosion radius the thresholded design survives.

    Eroding by a Euclidean ball of radius r leaves material iff some solid
    voxel sits farther than r from the void phase, so the survival radius
    is the max distance-to-void. The domain boundary counts as solid: a
    member attached to the wall is not erodible from outside the domain.
    """
    solid = mesh.element_grid(physical) >= threshold
    if not solid.any():
        return 0.0
    padded = np.pad(solid, 4, constant_values=True)
    distance = ndimage.distance_transform_edt(padded)[4:-4, 4:-4, 4:-4]
    return float(distance[solid].max())


def test_criterion_4_filter_radius_grows_feature_size(
    phone_run, phone_run_rmin3, capsys
):
    with criterion(capsys, 4, "erosion-survival thickness strictly larger at r_min=3"):
        spec_a, result_a, elapsed_a = phone_run
        spec_b, result_b, elapsed_b = phone_run_rmin3
        thick_a = survival_radius(result_a.field.physical, build_mesh(spec_a))
        thick_b = survival_radius(result_b.field.physical, build_mesh(spec_b))
        assert thick_a > 0.0
        assert thick_b > thick_a
        assert elapsed_a + elapsed_b < 600.0


# -- 5: multigrid solver -------------------------------------------------------


def test_criterion_5_solver_residual_and_matrix_free(phone_run, capsys):
    with criterion(capsys, 5, "residual 1e-4 within maxiter, matrix-free exact"):
        # matrix-free apply against a dense assembly oracle
        mesh3 = StructuredMesh(3, 3, 3, 1.0, 1.0, 1.0)
        rng = np.random.default_rng(5)
        moduli = 0.3 + 0.7 * rng.random(mesh3.n_elements)
        k0 = hex8_stiffness(1.0, 0.3, *mesh3.spacing)
        dense = np.zeros((mesh3.n_dofs, mesh3.n_dofs))
        for e, dofs in enumerate(mesh3.element_dofs):
            dense[np.ix_(dofs, dofs)] += moduli[e] * k0
        u = rng.standard_normal(mesh3.n_dofs)
        gap = np.abs(operator_apply(mesh3, moduli, 0.3, u) - dense @ u)
        assert float(gap.max()) <= 1e-12

        # configured phone-stand solve converges inside its own budget
        spec, result, _ = phone_run
        mesh = build_mesh(spec)
        moduli = simp_modulus(
            result.field.physical, spec.material.e0, spec.material.emin,
            spec.simp.penalty,
        )
        fixed, values = dirichlet_data(mesh, build_bcs(spec))
        force = assemble_force(mesh, build_loads(spec))
        _, report = solve_equilibrium(
            mesh, moduli, spec.material.nu, force, fixed, values,
            tol=spec.solver.tol, maxiter=spec.solver.maxiter,
            n_level=spec.solver.n_level,
        )
        assert spec.solver.maxiter == 50
        assert report.converged
        assert report.iterations <= 50
        assert report.relative_residual <= 1e-4


# -- 6: trajectory replay ------------------------------------------------------


def test_criterion_6_table_replay(tmp_path, capsys):
    with criterion(capsys, 6, "four-diff replay lands on the final row exactly"):
        t0 = time.monotonic()
        spec = reduced_phone_spec(
            **{"simp.rmin": 2.0, "optimizer.max_iters": 40}
        )
        replies = [
            scripted_diff({"simp.penalty": [3.0, 5.0], "simp.volfrac": [0.15, 0.10]}),
            scripted_diff({"simp.penalty": [5.0, 7.0], "simp.volfrac": [0.10, 0.05]}),
            scripted_diff(
                {
                    "simp.penalty": [7.0, 10.0],
                    "simp.volfrac": [0.05, 0.03],
                    "mesh.nelx": [32, 40],
                    "mesh.nely": [16, 20],
                    "mesh.nelz": [4, 5],
                    "optimizer.fun_tol": [1e-4, 5e-5],
                }
            ),
            scripted_diff(
                {
                    "simp.penalty": [10.0, 12.0],
                    "simp.volfrac": [0.03, 0.02],
                    "mesh.nelx": [40, 48],
                    "mesh.nely": [20, 24],
                    "mesh.nelz": [5, 6],
                    "optimizer.fun_tol": [5e-5, 1e-5],
                    "simp.rmin": [2.0, 2.2],
                }
            ),
        ]
        log = orchestrate(
            spec,
            PREFERENCE,
            ScriptedClient(replies),
            FixedScoreJudge([2.0, 2.5, 3.0, 3.5, 4.0]),
            budget=4,
            out_dir=tmp_path,
            render_width=640,
            render_height=360,
        )

        assert len(log.records) == 5
        assert all(r.failure is None for r in log.records)
        assert all(r.result is not None for r in log.records)
        assert [r.base_index for r in log.records] == [None, 0, 1, 2, 3]
        assert all(not r.clamps for r in log.records)

        final = log.records[-1].spec
        assert final.simp.penalty == 12.0
        assert final.simp.volfrac == 0.02
        assert final.simp.rmin == 2.2
        assert (final.mesh.nelx, final.mesh.nely, final.mesh.nelz) == (48, 24, 6)
        assert final.optimizer.fun_tol == 1e-5
        assert time.monotonic() - t0 < 900.0


# -- 7: rebase and clamping ----------------------------------------------------


def test_criterion_7_rebase_and_clamping(tmp_path, capsys):
    with criterion(capsys, 7, "bases follow argmax-ties-to-latest, r_min clamped"):
        replies = [
            scripted_diff({"simp.penalty": [3.0, 4.0]}),
            scripted_diff({"simp.rmin": [1.5, 1.0]}),
            scripted_diff({"simp.volfrac": [0.15, 0.12]}),
            scripted_diff({"simp.beta": [8.0, 10.0]}),
        ]
        scores = [3.0, 4.0, 4.5, 4.5, 3.5]
        log = orchestrate(
            tiny_spec(),
            PREFERENCE,
            ScriptedClient(replies),
            FixedScoreJudge(scores),
            budget=4,
            out_dir=tmp_path,
            render_width=320,
            render_height=180,
        )
        assert len(log.records) == 5

        def best_of(prefix):
            judged = [(i, scores[i]) for i in range(prefix)]
            top = max(s for _, s in judged)
            return max(i for i, s in judged if s == top)

        # revision k was judged against records 0..k-1 at proposal time;
        # record 0 predates any verdict, so revision 1 bases on it directly
        assert log.records[1].base_index == 0
        for k in range(2, 5):
            assert log.records[k].base_index == best_of(k)
        assert log.records[4].base_index == 3  # the 4.5 tie resolves to latest

        clamped = log.records[2].clamps
        assert len(clamped) == 1
        assert clamped[0].path == "simp.rmin"
        assert clamped[0].proposed == 1.0
        assert clamped[0].enforced == 1.5
        assert clamped[0].reason == "below minimum"
        assert log.records[2].spec.simp.rmin == 1.5
        assert any(log.clamp_reports)


# -- 8: ablation blindness -----------------------------------------------------


def test_criterion_8_ablation_blindness(tmp_path, capsys):
    with criterion(capsys, 8, "ablated vision sees no images or history"):
        def run(ablation, out):
            vision = ScriptedClient(
                [
                    scripted_diff({"simp.penalty": [3.0, 4.0]}),
                    scripted_diff({"simp.volfrac": [0.15, 0.13]}),
                ]
            )
            orchestrate(
                tiny_spec(),
                PREFERENCE,
                vision,
                StubJudge(),
                budget=2,
                ablation=ablation,
                out_dir=out,
                render_width=320,
                render_height=180,
            )
            return vision.requests

        blind = run(True, tmp_path / "ablation")
        sighted = run(False, tmp_path / "normal")

        assert len(blind) == 2
        for request in blind:
            assert sum(m.image_count() for m in request) == 0
            assert "Revision" not in "\n".join(m.joined_text() for m in request)

        # one six-view pack per prior revision: 6 images, then 12
        assert [sum(m.image_count() for m in request) for request in sighted] == [6, 12]


# -- 9: rendering --------------------------------------------------------------


def test_criterion_9_rendering(tmp_path, capsys):
    with criterion(capsys, 9, "depth shading, mirror symmetry, stable bytes"):
        # nearer of two voxels renders strictly brighter
        mesh = StructuredMesh(3, 1, 3, 0.3, 0.1, 0.3)
        grid = np.zeros((3, 1, 3))
        grid[0, 0, 2] = 1.0  # near half of the front view
        grid[2, 0, 0] = 1.0  # far half
        out = render_sixpack(
            mesh.flatten_grid(grid), mesh, colorbar=False, width=240, height=136
        )
        img = out.images["front"].astype(float)
        luminance = img[:, :, :3] @ np.array([0.2126, 0.7152, 0.0722])
        foreground = (img[:, :, :3] != 255).any(axis=2)
        half = img.shape[1] // 2
        near = luminance[:, :half][foreground[:, :half]]
        far = luminance[:, half:][foreground[:, half:]]
        assert near.size and far.size
        assert near.mean() > far.mean()

        # mirror-symmetric solid: back view is the front view flipped
        rng = np.random.default_rng(7)
        sym = rng.random((6, 4, 4)) > 0.45
        sym = sym | sym[:, :, ::-1]
        mesh_s = StructuredMesh(6, 4, 4, 1.0, 0.7, 0.6)
        views = render_sixpack(
            mesh_s.flatten_grid(sym.astype(float)), mesh_s,
            colorbar=False, width=320, height=180,
        )
        np.testing.assert_array_equal(
            views.images["front"], views.images["back"][:, ::-1]
        )

        # repeated renders produce identical files
        spec = tiny_spec()
        mesh_t = build_mesh(spec)
        dens = (np.arange(mesh_t.n_elements) % 3 == 0).astype(float)
        for trial in ("a", "b"):
            render_sixpack(
                dens, mesh_t, loads=build_loads(spec), bcs=build_bcs(spec),
                width=320, height=180,
            ).save(tmp_path / trial)
        for view in ("front", "back", "left", "right", "top", "bottom"):
            first = (tmp_path / "a" / f"{view}.png").read_bytes()
            second = (tmp_path / "b" / f"{view}.png").read_bytes()
            assert first == second


# -- 10: manufacture -----------------------------------------------------------


def test_criterion_10_manufacture(phone_run, tmp_path, capsys):
    with criterion(capsys, 10, "closed manifolds, block χ=2, OBJ at 120×60×15 mm"):
        rng = np.random.default_rng(31)
        mesh_r = StructuredMesh(6, 5, 4, 1.2, 1.0, 0.8)
        checked = 0
        for _ in range(25):
            dens = (rng.random(mesh_r.n_elements) < 0.5).astype(float)
            surface = marching_cubes(dens, mesh_r)
            if surface.is_empty:
                continue
            assert surface.is_closed_manifold()
            checked += 1
        assert checked >= 20

        mesh_b = StructuredMesh(4, 3, 2, 1.0, 0.8, 0.5)
        block = marching_cubes(np.ones(mesh_b.n_elements), mesh_b)
        assert block.is_closed_manifold()
        assert block.euler_characteristic() == 2

        spec, result, _ = phone_run
        mesh = build_mesh(spec)
        supported = add_supports(result.field.physical, mesh, "phone_stand")
        stand = marching_cubes(supported, mesh)
        assert stand.is_closed_manifold()
        path = tmp_path / "stand.obj"
        export_obj(stand, path, target_longest_edge=120.0)
        reloaded = load_obj(path)
        np.testing.assert_allclose(reloaded.extents, [120.0, 60.0, 15.0], atol=1e-5)


# -- 11: statistics ------------------------------------------------------------


def _log_from(specs, scores=None, replicate="r0"):
    records = []
    for i, spec in enumerate(specs):
        verdict = None if scores is None else JudgeVerdict(score=scores[i])
        records.append(
            RevisionRecord(
                index=i,
                spec=spec,
                base_index=None if i == 0 else i - 1,
                verdict=verdict,
            )
        )
    return RunLog(preference=PREFERENCE, replicate=replicate, records=records)


def test_criterion_11_statistics(capsys):
    with criterion(capsys, 11, "p column averages 5.5 over 4 edits, slope +0.25"):
        p_values = [3.0, 5.0, 7.0, 10.0, 12.0]
        f_values = [0.15, 0.10, 0.05, 0.03, 0.02]
        specs = [
            revised(tp.phone_stand(), **{"simp.penalty": p, "simp.volfrac": f})
            for p, f in zip(p_values, f_values)
        ]
        stats = {s.path: s for s in parameter_stats([_log_from(specs)])}
        assert stats["simp.penalty"].count == 4
        assert stats["simp.penalty"].avg_delta == pytest.approx(5.5, abs=1e-12)
        assert stats["simp.penalty"].avg_abs_delta == pytest.approx(5.5, abs=1e-12)

        base = [tp.phone_stand()] * 5
        trend = score_trend(
            [
                _log_from(base, scores=[2.0, 2.5, 3.0, 3.5, 4.0], replicate="a"),
                _log_from(base, scores=[3.0, 3.0, 3.0, 3.0, 3.0], replicate="b"),
            ]
        )
        assert trend.means == pytest.approx((2.5, 2.75, 3.0, 3.25, 3.5), abs=1e-12)
        assert trend.slope == pytest.approx(0.25, abs=1e-12)


# -- 12: stub judge monotonicity -----------------------------------------------


def _tree_score(voxels, shape=(7, 8, 3)):
    mesh = StructuredMesh(*shape, *(float(s) for s in shape))
    grid = np.zeros(shape)
    for ijk in voxels:
        grid[ijk] = 1.0
    return stub_judge(mesh.flatten_grid(grid), mesh).score


def test_criterion_12_stub_judge_monotonicity(capsys):
    with criterion(capsys, 12, "branching beats the bar, branches never hurt"):
        trunk = [(3, j, 1) for j in range(8)]
        left = [(2, 4, 1), (1, 5, 1)]
        right = [(4, 4, 1), (5, 5, 1)]
        third = [(2, 6, 1), (1, 7, 1)]
        y_tree = [(3, j, 1) for j in range(4)] + left + right

        assert len(y_tree) == len(trunk)  # equal material budget
        assert _tree_score(y_tree) > _tree_score(trunk)

        growing = [trunk, trunk + left, trunk + left + right,
                   trunk + left + right + third]
        scores = [_tree_score(t) for t in growing]
        assert all(b >= a for a, b in zip(scores, scores[1:]))

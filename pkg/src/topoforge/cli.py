"""Command-line interface.

Subcommands cover the whole pipeline: one-off optimization (``solve``), the
agent revision loop (``run``), re-rendering saved densities (``render``),
printable-mesh export (``postprocess``), and run-log analysis (``stats``,
``trend``). Exit codes: 0 success, 1 validation error, 2 solver failure,
3 agent or transport failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .agents import (
    HttpClient,
    ModelEndpoint,
    RunLog,
    StubJudge,
    TransportError,
    load_scripted,
    orchestrate,
)
from .agents.judge import JudgeError
from .agents.vision import VisionReviseError
from .analysis import parameter_stats, score_trend, stats_csv
from .fem import SingularSystemError
from .manufacture import add_supports, export_obj, marching_cubes, select_best
from .problem import ProblemSpec, build_bcs, build_loads, build_mesh, validate_problem
from .render import render_sixpack
from .simp.optimize import SolverAbort, optimize
from .storage import DensityFileError, read_density, write_density

__all__ = ["main"]


class _ValidationFailure(Exception):
    """Carries already-printed validation problems to the exit-code mapper."""


def _load_spec(path: str) -> ProblemSpec:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"cannot read spec file: {exc}", file=sys.stderr)
        raise _ValidationFailure from exc
    result = validate_problem(text)
    if isinstance(result, ProblemSpec):
        return result
    for issue in result:
        print(f"{path}: {issue.path}: {issue.message}", file=sys.stderr)
    raise _ValidationFailure


def _mesh_from_density(path: str, spec: ProblemSpec):
    densities, dims, _ = read_density(path)
    mesh = build_mesh(spec)
    if dims != (mesh.nelx, mesh.nely, mesh.nelz):
        print(
            f"density grid {dims} does not match spec mesh "
            f"({mesh.nelx}, {mesh.nely}, {mesh.nelz})",
            file=sys.stderr,
        )
        raise _ValidationFailure
    return densities, mesh


def _cmd_solve(args) -> int:
    spec = _load_spec(args.spec)
    result = optimize(spec)
    mesh = build_mesh(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_density(out / "density.bin", result.field.physical, mesh)
    render_set = render_sixpack(
        result.field.physical,
        mesh,
        loads=build_loads(spec),
        bcs=build_bcs(spec),
        width=args.width,
        height=args.height,
    )
    render_set.save(out)
    summary = {
        "label": spec.label,
        "initial_compliance": result.initial_compliance,
        "final_compliance": result.final_compliance,
        "iterations": result.n_iterations,
        "termination": result.termination,
        "mean_density": float(np.mean(result.field.physical)),
        "compliance_history": result.compliance_history,
        "volume_history": result.volume_history,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2), encoding="utf-8")
    print(
        f"{spec.label}: compliance {result.final_compliance:.6g} after "
        f"{result.n_iterations} iterations ({result.termination}); outputs in {out}"
    )
    return 0


def _read_preference(value: str) -> str:
    path = Path(value)
    if path.is_file():
        return path.read_text(encoding="utf-8").strip()
    return value


def _build_agents(args):
    """Resolve vision client and judge from flags and environment."""
    scripted = None
    if args.scripted:
        scripted = load_scripted(args.scripted)

    if scripted and "vision" in scripted:
        vision = scripted["vision"]
    else:
        base, model = os.environ.get("VISION_ENDPOINT"), os.environ.get("VISION_MODEL")
        if not base or not model:
            raise TransportError(
                "no vision agent: pass --scripted or set VISION_ENDPOINT and VISION_MODEL"
            )
        vision = HttpClient(ModelEndpoint(base, model, api_key_env="VISION_API_KEY"))

    if args.stub_judge:
        judge = StubJudge()
    elif scripted and "judge" in scripted and scripted["judge"] is not scripted.get("vision"):
        judge = scripted["judge"]
    else:
        base, model = os.environ.get("JUDGE_ENDPOINT"), os.environ.get("JUDGE_MODEL")
        if not base or not model:
            raise TransportError(
                "no judge: pass --stub-judge, a scripted judge, or set "
                "JUDGE_ENDPOINT and JUDGE_MODEL"
            )
        judge = HttpClient(ModelEndpoint(base, model, api_key_env="JUDGE_API_KEY"))
    return vision, judge


def _cmd_run(args) -> int:
    spec = _load_spec(args.spec)
    preference = _read_preference(args.preference)
    vision, judge = _build_agents(args)
    out = Path(args.out)
    for rep in range(args.replicates):
        rep_dir = out / f"replicate-{rep}" if args.replicates > 1 else out
        log = orchestrate(
            spec,
            preference,
            vision,
            judge,
            budget=args.budget,
            ablation=args.ablation,
            out_dir=rep_dir,
            replicate=f"r{rep}",
            render_width=args.width,
            render_height=args.height,
        )
        best = log.best_index()
        scores = [
            "-" if r.verdict is None else f"{r.verdict.score:g}" for r in log.records
        ]
        print(
            f"replicate r{rep}: {len(log.records)} records, scores [{', '.join(scores)}], "
            f"best revision {best}; log at {rep_dir / 'runlog.json'}"
        )
    return 0


def _cmd_render(args) -> int:
    spec = _load_spec(args.spec)
    densities, mesh = _mesh_from_density(args.density, spec)
    out = Path(args.out)
    render_set = render_sixpack(
        densities,
        mesh,
        loads=build_loads(spec),
        bcs=build_bcs(spec),
        threshold=args.threshold,
        width=args.width,
        height=args.height,
    )
    paths = render_set.save(out)
    print(f"wrote {len(paths)} files to {out}")
    return 0


def _cmd_postprocess(args) -> int:
    log = RunLog.load(args.runlog)
    try:
        best = select_best(log)
    except ValueError as exc:
        print(str(exc), file=sys.stderr)
        raise _ValidationFailure from exc
    record = log.records[best]
    if record.density_file is None:
        print(f"best record {best} has no saved densities", file=sys.stderr)
        raise _ValidationFailure
    densities, dims, spacing = read_density(record.density_file)
    mesh = build_mesh(record.spec)
    if dims != (mesh.nelx, mesh.nely, mesh.nelz):
        print("density grid does not match the record's spec", file=sys.stderr)
        raise _ValidationFailure
    supported = add_supports(densities, mesh, args.preset)
    surface = marching_cubes(supported, mesh, iso=args.iso)
    if surface.is_empty:
        print("post-processed design is empty; nothing to export", file=sys.stderr)
        raise _ValidationFailure
    out_path = Path(args.output) if args.output else Path(args.out) / "design.obj"
    out_path.parent.mkdir(parents=True, exist_ok=True)
    export_obj(surface, out_path, target_longest_edge=args.size)
    lo, hi = surface.bbox
    print(
        f"exported revision {best} ({len(surface.triangles)} triangles) to {out_path}; "
        f"domain extents {np.round(hi - lo, 6).tolist()}"
    )
    return 0


def _cmd_stats(args) -> int:
    logs = [RunLog.load(p) for p in args.runlogs]
    stats = parameter_stats(logs)
    csv_text = stats_csv(stats)
    sys.stdout.write(csv_text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "stats.csv").write_text(csv_text, encoding="utf-8")
        (out / "stats.json").write_text(
            json.dumps([s.to_dict() for s in stats], indent=2), encoding="utf-8"
        )
    return 0


def _cmd_trend(args) -> int:
    logs = [RunLog.load(p) for p in args.runlogs]
    trend = score_trend(logs)
    payload = json.dumps(trend.to_dict(), indent=2)
    print(payload)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "trend.json").write_text(payload + "\n", encoding="utf-8")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="topoforge",
        description="Preference-guided topology optimization pipeline.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_render_size(p):
        p.add_argument("--width", type=int, default=1920, help="render width in pixels")
        p.add_argument("--height", type=int, default=1080, help="render height in pixels")

    p = sub.add_parser("solve", help="run one optimization from a problem spec")
    p.add_argument("spec", help="problem spec JSON file")
    p.add_argument("--out", default="out", help="output directory")
    add_render_size(p)
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("run", help="run the agent revision loop")
    p.add_argument("spec", help="problem spec JSON file")
    p.add_argument("--preference", required=True, help="preference text file (or literal text)")
    p.add_argument("--budget", type=int, default=4, help="number of revision cycles")
    p.add_argument("--ablation", action="store_true", help="blind the vision agent")
    p.add_argument("--replicates", type=int, default=1, help="independent replicates to run")
    p.add_argument("--scripted", help="JSON fixture of canned agent replies")
    p.add_argument("--stub-judge", action="store_true", help="use the offline geometry judge")
    p.add_argument("--out", default="runs", help="output directory")
    add_render_size(p)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("render", help="render a saved density field")
    p.add_argument("density", help="density file")
    p.add_argument("spec", help="problem spec JSON file")
    p.add_argument("--threshold", type=float, default=0.5, help="solid threshold")
    p.add_argument("--out", default="out", help="output directory")
    add_render_size(p)
    p.set_defaults(func=_cmd_render)

    p = sub.add_parser("postprocess", help="export the best design as a printable OBJ")
    p.add_argument("runlog", help="runlog.json from a finished run")
    p.add_argument("--preset", default="phone_stand", choices=["phone_stand", "none"])
    p.add_argument("--iso", type=float, default=0.5, help="marching-cubes iso level")
    p.add_argument("--size", type=float, default=120.0, help="longest edge after scaling, mm")
    p.add_argument("-o", "--output", help="OBJ file path (default: <out>/design.obj)")
    p.add_argument("--out", default="out", help="output directory")
    p.set_defaults(func=_cmd_postprocess)

    p = sub.add_parser("stats", help="parameter-change statistics over run logs")
    p.add_argument("runlogs", nargs="+", help="runlog.json files")
    p.add_argument("--out", default=None, help="also write stats.csv/stats.json here")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("trend", help="judge-score trend over run logs")
    p.add_argument("runlogs", nargs="+", help="runlog.json files")
    p.add_argument("--out", default=None, help="also write trend.json here")
    p.set_defaults(func=_cmd_trend)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _ValidationFailure:
        return 1
    except (DensityFileError, ValueError) as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except (SolverAbort, SingularSystemError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 2
    except (TransportError, JudgeError, VisionReviseError) as exc:
        print(f"agent failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

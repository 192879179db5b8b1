"""Replay a scripted revision loop offline and post-process the winner.

The vision client replays a fixed list of parameter diffs and the judge is
the geometric stub, so no endpoints or keys are needed. The loop itself
(solve, render, judge, rebase, revise) is exactly what `topoforge run`
drives against live models. Takes a minute or so.
"""

import argparse
import json
from pathlib import Path

from topoforge.agents import ScriptedClient, StubJudge, orchestrate
from topoforge.manufacture import add_supports, export_obj, marching_cubes, select_best
from topoforge.problem import (
    ParameterDiff,
    apply_revision,
    build_mesh,
    phone_stand,
    preset_rules,
)

PREFERENCE = "An organic, skeletal stand: thin branching members, no solid slabs."

QUARTER = ParameterDiff(
    {
        "mesh.nelx": (128, 32),
        "mesh.nely": (64, 16),
        "mesh.nelz": (16, 4),
        "optimizer.max_iters": (200, 40),
    }
)


def reply(changes, rationale):
    payload = {path: list(pair) for path, pair in changes.items()}
    payload["rationale"] = rationale
    return "```json\n" + json.dumps(payload, indent=2) + "\n```"


SCRIPT = [
    reply(
        {"simp.penalty": [3.0, 5.0], "simp.volfrac": [0.15, 0.10]},
        "Push intermediate densities out and thin the structure.",
    ),
    reply(
        {"simp.volfrac": [0.10, 0.06], "simp.rmin": [1.5, 1.0]},
        "Less material and a finer filter for thinner branches.",
    ),
    reply(
        {"simp.penalty": [5.0, 7.0], "simp.beta": [8.0, 16.0]},
        "Sharpen the projection to clean up gray halos.",
    ),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("runs/demo_agent_loop"))
    args = ap.parse_args()

    spec, _ = apply_revision(phone_stand(), QUARTER)
    log = orchestrate(
        spec,
        PREFERENCE,
        ScriptedClient(SCRIPT),
        StubJudge(),
        budget=len(SCRIPT),
        out_dir=args.out,
        rules=preset_rules("phone_stand"),
        render_width=960,
        render_height=540,
    )

    for record in log.records:
        base = "seed" if record.base_index is None else f"rev {record.base_index}"
        print(
            f"{record.label:<11} ({base:<6}) score {record.verdict.score:.1f}  "
            f"p={record.spec.simp.penalty:g} f={record.spec.simp.volfrac:g} "
            f"rmin={record.spec.simp.rmin:g}"
        )
    for clamp in log.clamp_reports:
        print(f"clamped {clamp.path}: {clamp.proposed} -> {clamp.enforced} ({clamp.reason})")

    best = log.records[select_best(log)]
    mesh = build_mesh(best.spec)
    surface = marching_cubes(add_supports(best.densities, mesh, "phone_stand"), mesh)
    out_path = args.out / "best.obj"
    export_obj(surface, out_path, target_longest_edge=120.0)
    print(f"best design: {best.label} (score {best.verdict.score:.1f}) -> {out_path}")


if __name__ == "__main__":
    main()

"""The revision loop: solve, render, propose, clamp, re-solve, judge.

One replicate is a strictly sequential conversation: the original design is
solved and rendered, then each revision cycle asks the vision agent for a
parameter diff against the best-scoring design so far, applies it under the
clamp rules, re-solves, re-renders, and has the judge re-score every design.
The full exchange — records, verdicts per round, and every chat request and
response — is persisted as a run log plus a render directory tree.

Failure policy: a flaky agent call (unparseable diff, bad path, transport
error) skips that revision and carries the base design forward so one bad
model reply cannot destroy a replicate; a solver abort truncates the run,
since later revisions would build on a design that does not exist.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Protocol, Sequence

import numpy as np

from ..fem import StructuredMesh
from ..problem import (
    ClampEvent,
    ParameterDiff,
    PRESETS,
    ProblemSpec,
    RevisionError,
    RevisionRules,
    apply_revision,
    build_bcs,
    build_loads,
    build_mesh,
    preset_rules,
    spec_to_json,
    validate_problem,
)
from ..render import VIEW_IDS, render_sixpack
from ..simp.optimize import OptimizationResult, SolverAbort, optimize
from ..storage import write_density
from .client import ChatClient, RecordingClient, TransportError
from .judge import ClientJudge, DesignView, JudgeError, JudgeVerdict
from .vision import VisionReviseError, vision_revise

__all__ = ["RevisionRecord", "RunLog", "DesignJudge", "orchestrate"]


class DesignJudge(Protocol):
    """Offline judges and ClientJudge both satisfy this."""

    def verdicts(self, designs: Sequence[DesignView]) -> list[JudgeVerdict]: ...


@dataclass
class RevisionRecord:
    """One design in a replicate: its spec, provenance, artifacts, and verdict."""

    index: int
    spec: ProblemSpec
    base_index: int | None = None
    diff: ParameterDiff | None = None
    clamps: list[ClampEvent] = field(default_factory=list)
    render_dir: str | None = None
    density_file: str | None = None
    result: dict[str, Any] | None = None
    verdict: JudgeVerdict | None = None
    failure: str | None = None
    densities: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def label(self) -> str:
        return "Original" if self.index == 0 else f"Revision {self.index}"

    def image_paths(self) -> tuple[Path, ...]:
        if self.render_dir is None:
            return ()
        root = Path(self.render_dir)
        return tuple(root / f"{view}.png" for view in VIEW_IDS)

    def front_image(self) -> Path | None:
        if self.render_dir is None:
            return None
        return Path(self.render_dir) / "front.png"

    def to_dict(self, base_dir: Path | None = None) -> dict[str, Any]:
        def rel(p):
            if p is None:
                return None
            if base_dir is None:
                return str(p)
            return os.path.relpath(p, base_dir)

        return {
            "index": self.index,
            "base_index": self.base_index,
            "spec": json.loads(spec_to_json(self.spec)),
            "diff": None
            if self.diff is None
            else {
                "changes": {k: list(v) for k, v in self.diff.changes.items()},
                "rationale": self.diff.rationale,
            },
            "clamps": [
                {
                    "path": c.path,
                    "proposed": c.proposed,
                    "enforced": c.enforced,
                    "reason": c.reason,
                }
                for c in self.clamps
            ],
            "render_dir": rel(self.render_dir),
            "density_file": rel(self.density_file),
            "result": self.result,
            "verdict": None if self.verdict is None else self.verdict.to_dict(),
            "failure": self.failure,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any], base_dir: Path | None = None) -> "RevisionRecord":
        spec = validate_problem(json.dumps(data["spec"]))
        if not isinstance(spec, ProblemSpec):
            issues = "; ".join(f"{i.path}: {i.message}" for i in spec)
            raise ValueError(f"run log contains an invalid spec: {issues}")
        diff = None
        if data.get("diff") is not None:
            diff = ParameterDiff.from_data(
                {**data["diff"]["changes"], "rationale": data["diff"].get("rationale", "")}
            )

        def resolve(p):
            if p is None:
                return None
            return str(base_dir / p) if base_dir is not None else str(p)

        return cls(
            index=data["index"],
            spec=spec,
            base_index=data.get("base_index"),
            diff=diff,
            clamps=[ClampEvent(**c) for c in data.get("clamps", [])],
            render_dir=resolve(data.get("render_dir")),
            density_file=resolve(data.get("density_file")),
            result=data.get("result"),
            verdict=None
            if data.get("verdict") is None
            else JudgeVerdict.from_dict(data["verdict"]),
            failure=data.get("failure"),
        )


@dataclass
class RunLog:
    """One replicate's complete, persistable history."""

    preference: str
    ablation: bool = False
    replicate: str = "r0"
    records: list[RevisionRecord] = field(default_factory=list)
    judge_rounds: list[list[JudgeVerdict]] = field(default_factory=list)
    transcript: list[dict[str, Any]] = field(default_factory=list)
    judge_errors: list[str] = field(default_factory=list)

    def best_index(self) -> int:
        """Highest judge score wins; ties go to the most recent; unscored runs
        fall back to the most recent record."""
        best, best_score = None, None
        for i, record in enumerate(self.records):
            if record.verdict is None:
                continue
            if best_score is None or record.verdict.score >= best_score:
                best, best_score = i, record.verdict.score
        if best is None:
            return len(self.records) - 1
        return best

    @property
    def clamp_reports(self) -> list[ClampEvent]:
        return [c for record in self.records for c in record.clamps]

    def to_dict(self, base_dir: Path | None = None) -> dict[str, Any]:
        return {
            "preference": self.preference,
            "ablation": self.ablation,
            "replicate": self.replicate,
            "records": [r.to_dict(base_dir) for r in self.records],
            "judge_rounds": [
                [v.to_dict() for v in round_] for round_ in self.judge_rounds
            ],
            "transcript": self.transcript,
            "judge_errors": self.judge_errors,
        }

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = self.to_dict(base_dir=path.parent)
        path.write_text(json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")
        return path

    @classmethod
    def load(cls, path: str | Path) -> "RunLog":
        path = Path(path)
        data = json.loads(path.read_text(encoding="utf-8"))
        return cls(
            preference=data["preference"],
            ablation=data.get("ablation", False),
            replicate=data.get("replicate", "r0"),
            records=[
                RevisionRecord.from_dict(r, base_dir=path.parent)
                for r in data.get("records", [])
            ],
            judge_rounds=[
                [JudgeVerdict.from_dict(v) for v in round_]
                for round_ in data.get("judge_rounds", [])
            ],
            transcript=data.get("transcript", []),
            judge_errors=data.get("judge_errors", []),
        )


def _summarize(result: OptimizationResult) -> dict[str, Any]:
    return {
        "initial_compliance": float(result.initial_compliance),
        "final_compliance": float(result.final_compliance),
        "iterations": int(result.n_iterations),
        "termination": result.termination,
        "mean_density": float(np.mean(result.field.physical)),
    }


def _design_views(records: Sequence[RevisionRecord]) -> list[DesignView]:
    views = []
    for record in records:
        front = record.front_image()
        views.append(
            DesignView(
                label=record.label,
                image_path=None if front is None else str(front),
                densities=record.densities,
                mesh=build_mesh(record.spec),
            )
        )
    return views


def orchestrate(
    spec: ProblemSpec,
    preference: str,
    vision: ChatClient,
    judge: ChatClient | DesignJudge,
    budget: int = 4,
    ablation: bool = False,
    out_dir: str | Path = "runs/run0",
    rules: RevisionRules | None = None,
    replicate: str = "r0",
    render_width: int = 1920,
    render_height: int = 1080,
    threshold: float = 0.5,
) -> RunLog:
    """Run one replicate: the original design plus ``budget`` revision cycles.

    ``judge`` may be a chat client (scored via the judge model each round) or
    any object with a ``verdicts(designs)`` method, such as the offline stubs.
    The run log and all renders land under ``out_dir``; projected densities
    are saved per revision alongside the six views.
    """
    if budget < 0:
        raise ValueError("budget must be nonnegative")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if rules is None:
        rules = preset_rules(spec.label) if spec.label in PRESETS else RevisionRules()

    transcript: list[dict[str, Any]] = []
    vision_client = RecordingClient(vision, "vision", transcript)
    if hasattr(judge, "verdicts"):
        design_judge: DesignJudge = judge  # offline
    else:
        design_judge = ClientJudge(RecordingClient(judge, "judge", transcript))

    log = RunLog(
        preference=preference, ablation=ablation, replicate=replicate, transcript=transcript
    )

    def run_design(design_spec: ProblemSpec, index: int) -> tuple[dict, str, str, np.ndarray]:
        result = optimize(design_spec)
        mesh = build_mesh(design_spec)
        physical = result.field.physical
        rdir = out / f"rev{index}"
        render_set = render_sixpack(
            physical,
            mesh,
            loads=build_loads(design_spec),
            bcs=build_bcs(design_spec),
            threshold=threshold,
            width=render_width,
            height=render_height,
        )
        render_set.save(rdir)
        density_path = rdir / "density.bin"
        write_density(density_path, physical, mesh)
        return _summarize(result), str(rdir), str(density_path), physical

    try:
        summary, rdir, dpath, physical = run_design(spec, 0)
    except SolverAbort as exc:
        log.records.append(
            RevisionRecord(index=0, spec=spec, failure=f"solver abort: {exc}")
        )
        log.save(out / "runlog.json")
        return log
    log.records.append(
        RevisionRecord(
            index=0,
            spec=spec,
            render_dir=rdir,
            density_file=dpath,
            result=summary,
            densities=physical,
        )
    )

    for i in range(1, budget + 1):
        base_index = log.best_index()
        base = log.records[base_index]

        diff: ParameterDiff | None = None
        failure: str | None = None
        new_spec = base.spec
        clamps: list[ClampEvent] = []
        try:
            diff = vision_revise(
                vision_client, log.records, base_index, rules, preference, ablation
            )
            new_spec, clamps = apply_revision(base.spec, diff, rules)
        except (VisionReviseError, TransportError, RevisionError) as exc:
            failure = f"{type(exc).__name__}: {exc}"

        if failure is not None:
            # Skip-and-carry-forward: the design is the base's, under the base's spec.
            log.records.append(
                RevisionRecord(
                    index=i,
                    spec=base.spec,
                    base_index=base_index,
                    diff=diff,
                    render_dir=base.render_dir,
                    density_file=base.density_file,
                    result=base.result,
                    densities=base.densities,
                    failure=failure,
                )
            )
        else:
            try:
                summary, rdir, dpath, physical = run_design(new_spec, i)
            except SolverAbort as exc:
                log.records.append(
                    RevisionRecord(
                        index=i,
                        spec=new_spec,
                        base_index=base_index,
                        diff=diff,
                        clamps=clamps,
                        failure=f"solver abort: {exc}",
                    )
                )
                break
            log.records.append(
                RevisionRecord(
                    index=i,
                    spec=new_spec,
                    base_index=base_index,
                    diff=diff,
                    clamps=clamps,
                    render_dir=rdir,
                    density_file=dpath,
                    result=summary,
                    densities=physical,
                )
            )

        try:
            verdicts = design_judge.verdicts(_design_views(log.records))
        except (JudgeError, TransportError, ValueError) as exc:
            log.judge_errors.append(f"round {i}: {type(exc).__name__}: {exc}")
            continue
        for record, verdict in zip(log.records, verdicts):
            record.verdict = verdict
        log.judge_rounds.append(list(verdicts))

    log.save(out / "runlog.json")
    return log

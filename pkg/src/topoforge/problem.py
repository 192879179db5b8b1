"""Problem schema: validation, canonical JSON, revision diffs, and clamping.

A :class:`ProblemSpec` is the single description of one optimization run:
mesh, material, boundary conditions, loads, solver settings, density-field
parameters, and optimizer settings. It is what agents read and write, so
the schema is strict: unknown keys are rejected rather than ignored, and
validation reports every violated field instead of stopping at the first.

Revisions arrive as dotted-path diffs (``{"simp.penalty": [3.0, 5.0], ...}``).
``apply_revision`` applies a diff under a :class:`RevisionRules` policy that
clamps out-of-range values and refuses edits to protected fields, recording
each intervention so the run log can show what was actually enforced.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Literal, Mapping, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .fem import DirichletBC, LoadCase, Material, StructuredMesh

__all__ = [
    "AxisRule",
    "Region",
    "MeshParams",
    "MaterialParams",
    "BCSpec",
    "LoadSpec",
    "SolverParams",
    "SimpParams",
    "OptimizerParams",
    "ProblemSpec",
    "SpecIssue",
    "validate_problem",
    "spec_to_json",
    "ParameterDiff",
    "ClampEvent",
    "RevisionRules",
    "RevisionError",
    "flatten_spec",
    "diff_specs",
    "apply_revision",
    "phone_stand",
    "cantilever",
    "PRESETS",
    "preset_rules",
    "build_mesh",
    "build_material",
    "build_bcs",
    "build_loads",
]


class _StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class AxisRule(_StrictModel):
    """Comparator form of an axis constraint, e.g. {"op": "le", "value": 0.1}."""

    op: Literal["eq", "le", "ge"]
    value: float


class Region(_StrictModel):
    """Node selector: axis constraints (plain number means equality) and/or
    the named diagonal plane. At least one constraint is required."""

    x: Union[float, AxisRule, None] = None
    y: Union[float, AxisRule, None] = None
    z: Union[float, AxisRule, None] = None
    diagonal: Literal["xy"] | None = None

    @model_validator(mode="after")
    def _nonempty(self) -> "Region":
        if self.x is None and self.y is None and self.z is None and self.diagonal is None:
            raise ValueError("region must constrain at least one axis or name a diagonal")
        return self

    def to_where(self) -> dict:
        where: dict[str, Any] = {}
        for axis in ("x", "y", "z"):
            rule = getattr(self, axis)
            if rule is None:
                continue
            where[axis] = rule.model_dump() if isinstance(rule, AxisRule) else rule
        if self.diagonal is not None:
            where["diagonal"] = self.diagonal
        return where


class MeshParams(_StrictModel):
    nelx: int = Field(ge=1, le=512)
    nely: int = Field(ge=1, le=512)
    nelz: int = Field(ge=1, le=512)
    lx: float = Field(gt=0)
    ly: float = Field(gt=0)
    lz: float = Field(gt=0)


class MaterialParams(_StrictModel):
    e0: float = Field(gt=0)
    emin: float = Field(ge=0)
    nu: float = Field(ge=0, lt=0.5)

    @model_validator(mode="after")
    def _ordered(self) -> "MaterialParams":
        if self.emin >= self.e0:
            raise ValueError("emin must be smaller than e0")
        return self


class BCSpec(_StrictModel):
    where: Region
    fix_ux: bool = False
    fix_uy: bool = False
    fix_uz: bool = False
    value: float = 0.0

    @model_validator(mode="after")
    def _fixes_something(self) -> "BCSpec":
        if not (self.fix_ux or self.fix_uy or self.fix_uz):
            raise ValueError("boundary condition must fix at least one displacement axis")
        return self


class LoadSpec(_StrictModel):
    where: Region
    fx: float = 0.0
    fy: float = 0.0
    fz: float = 0.0

    @model_validator(mode="after")
    def _nonzero(self) -> "LoadSpec":
        if self.fx == 0.0 and self.fy == 0.0 and self.fz == 0.0:
            raise ValueError("load must have a nonzero force component")
        return self


class SolverParams(_StrictModel):
    tol: float = Field(default=1e-4, gt=0)
    maxiter: int = Field(default=100, ge=1)
    n_level: int = Field(default=4, ge=1)


class SimpParams(_StrictModel):
    volfrac: float = Field(gt=0, le=1)
    penalty: float = Field(default=3.0, ge=1, le=16)
    rmin: float = Field(default=1.5, gt=0)
    heaviside: bool = True
    beta: float = Field(default=8.0, gt=0, le=64)
    eta: float = Field(default=0.5, ge=0, le=1)


class OptimizerParams(_StrictModel):
    kind: Literal["pgd", "mma"] = "pgd"
    fun_tol: float = Field(default=1e-4, ge=0)
    change_tol: float = Field(default=0.0, ge=0)
    max_iters: int = Field(default=200, ge=1)
    init: float | None = Field(default=None, gt=0, le=1)


class ProblemSpec(_StrictModel):
    """Complete, validated description of one optimization run."""

    label: str = ""
    mesh: MeshParams
    material: MaterialParams
    bcs: list[BCSpec] = Field(min_length=1)
    loads: list[LoadSpec] = Field(min_length=1)
    solver: SolverParams = SolverParams()
    simp: SimpParams
    optimizer: OptimizerParams = OptimizerParams()


@dataclass(frozen=True)
class SpecIssue:
    """One validation failure, addressed by dotted path."""

    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.path}: {self.message}"


def _loc_to_path(loc: tuple) -> str:
    parts: list[str] = []
    for item in loc:
        if isinstance(item, int):
            parts.append(f"[{item}]")
        else:
            # pydantic inserts union-member tags; they aren't field names
            if parts and item in ("AxisRule", "float", "int", "eq", "le", "ge"):
                continue
            parts.append(("." if parts else "") + str(item))
    return "".join(parts)


def _issues_from(err: ValidationError) -> list[SpecIssue]:
    issues = []
    seen = set()
    for e in err.errors():
        path = _loc_to_path(tuple(e["loc"]))
        key = (path, e["msg"])
        if key in seen:
            continue
        seen.add(key)
        issues.append(SpecIssue(path=path, message=e["msg"]))
    return issues


def validate_problem(json_text: str) -> ProblemSpec | list[SpecIssue]:
    """Parse and validate problem JSON.

    Returns the populated spec on success, otherwise a list of every
    field-level issue found. Never raises for content errors.
    """
    try:
        data = json.loads(json_text)
    except json.JSONDecodeError as e:
        return [SpecIssue(path="$", message=f"invalid JSON: {e.msg} (line {e.lineno})")]
    if not isinstance(data, dict):
        return [SpecIssue(path="$", message="top level must be a JSON object")]
    try:
        return ProblemSpec.model_validate(data)
    except ValidationError as err:
        return _issues_from(err)


def spec_to_json(spec: ProblemSpec, indent: int = 2) -> str:
    """Canonical JSON form; optional axes and unset fields are omitted."""
    data = spec.model_dump(mode="json", exclude_none=True)
    return json.dumps(data, indent=indent)


# ---------------------------------------------------------------------------
# dotted-path plumbing


def _tokenize(path: str):
    tokens: list[Any] = []
    for chunk in path.split("."):
        while "[" in chunk:
            head, rest = chunk.split("[", 1)
            idx, chunk = rest.split("]", 1)
            if head:
                tokens.append(head)
            tokens.append(int(idx))
        if chunk:
            tokens.append(chunk)
    return tokens


def _flatten(node: Any, prefix: str, out: dict[str, Any]) -> None:
    if isinstance(node, dict):
        for k, v in node.items():
            _flatten(v, f"{prefix}.{k}" if prefix else str(k), out)
    elif isinstance(node, list):
        for i, v in enumerate(node):
            _flatten(v, f"{prefix}[{i}]", out)
    else:
        out[prefix] = node


def flatten_spec(spec: ProblemSpec) -> dict[str, Any]:
    """Leaf values keyed by dotted path (list entries as ``bcs[0].value``)."""
    out: dict[str, Any] = {}
    _flatten(spec.model_dump(mode="json"), "", out)
    return out


@dataclass(frozen=True)
class ParameterDiff:
    """Changed paths between two specs: path -> (old, new), plus free text."""

    changes: Mapping[str, tuple[Any, Any]]
    rationale: str = ""

    def to_json(self, indent: int = 2) -> str:
        data: dict[str, Any] = {p: [old, new] for p, (old, new) in self.changes.items()}
        if self.rationale:
            data["rationale"] = self.rationale
        return json.dumps(data, indent=indent)

    @classmethod
    def from_data(cls, data: Mapping[str, Any]) -> "ParameterDiff":
        rationale = ""
        changes: dict[str, tuple[Any, Any]] = {}
        for key, val in data.items():
            if key == "rationale":
                rationale = str(val)
                continue
            if not (isinstance(val, (list, tuple)) and len(val) == 2):
                raise ValueError(f"diff entry {key!r} must be a [old, new] pair")
            changes[key] = (val[0], val[1])
        return cls(changes=changes, rationale=rationale)

    @classmethod
    def from_json(cls, text: str) -> "ParameterDiff":
        return cls.from_data(json.loads(text))

    def __len__(self) -> int:
        return len(self.changes)


def diff_specs(base: ProblemSpec, revised: ProblemSpec, rationale: str = "") -> ParameterDiff:
    """Exactly the leaf paths whose values differ between the two specs."""
    a = flatten_spec(base)
    b = flatten_spec(revised)
    changes = {}
    for path in a:
        if path in b and a[path] != b[path]:
            changes[path] = (a[path], b[path])
    return ParameterDiff(changes=changes, rationale=rationale)


# ---------------------------------------------------------------------------
# revision clamping

_DEFAULT_BOUNDS: dict[str, tuple[float | None, float | None]] = {
    "simp.penalty": (1.0, 16.0),
    "simp.volfrac": (0.001, 1.0),
    "simp.beta": (1e-6, 64.0),
    "mesh.nelx": (1, 512),
    "mesh.nely": (1, 512),
    "mesh.nelz": (1, 512),
}


@dataclass(frozen=True)
class RevisionRules:
    """Policy for agent-proposed edits: filter-radius floor, protected
    field prefixes, and per-path numeric bounds."""

    rmin_floor: float = 1.5
    protected: tuple[str, ...] = ()
    bounds: Mapping[str, tuple[float | None, float | None]] = field(
        default_factory=lambda: dict(_DEFAULT_BOUNDS)
    )

    def limit(self, path: str) -> tuple[float | None, float | None]:
        lo, hi = self.bounds.get(path, (None, None))
        if path == "simp.rmin":
            lo = self.rmin_floor if lo is None else max(lo, self.rmin_floor)
        return lo, hi

    def is_protected(self, path: str) -> bool:
        return any(
            path == p or path.startswith(p + ".") or path.startswith(p + "[")
            for p in self.protected
        )


@dataclass(frozen=True)
class ClampEvent:
    path: str
    proposed: Any
    enforced: Any
    reason: str


class RevisionError(ValueError):
    """A diff could not be applied (unknown path, or invalid result)."""


def _resolve_parent(data: dict, tokens: list) -> tuple[Any, Any]:
    node: Any = data
    for tok in tokens[:-1]:
        if isinstance(tok, int):
            if not isinstance(node, list) or tok >= len(node):
                raise RevisionError(f"unknown path segment [{tok}]")
            node = node[tok]
        else:
            if not isinstance(node, dict) or tok not in node:
                raise RevisionError(f"unknown path segment {tok!r}")
            node = node[tok]
    return node, tokens[-1]


def apply_revision(
    spec: ProblemSpec,
    diff: ParameterDiff,
    rules: RevisionRules | None = None,
) -> tuple[ProblemSpec, list[ClampEvent]]:
    """Apply a diff under the given rules.

    Every value is set then clamped to the rules' bounds; integer-typed
    fields are rounded. Edits to protected paths are refused and the base
    value kept. Each intervention is recorded in the returned clamp report.

    Raises :class:`RevisionError` for paths that do not resolve against
    the spec, and if the clamped result still fails validation.
    """
    rules = rules or RevisionRules()
    data = spec.model_dump(mode="json")
    report: list[ClampEvent] = []

    for path in diff.changes:
        _old, proposed = diff.changes[path]
        tokens = _tokenize(path)
        try:
            parent, leaf = _resolve_parent(data, tokens)
            if isinstance(leaf, int):
                if not isinstance(parent, list) or leaf >= len(parent):
                    raise RevisionError(f"unknown path {path!r}")
                current = parent[leaf]
            else:
                if not isinstance(parent, dict) or leaf not in parent:
                    raise RevisionError(f"unknown path {path!r}")
                current = parent[leaf]
        except RevisionError:
            raise RevisionError(f"unknown path {path!r}") from None
        if isinstance(current, (dict, list)):
            raise RevisionError(f"path {path!r} is not a leaf value")

        if rules.is_protected(path):
            report.append(
                ClampEvent(path=path, proposed=proposed, enforced=current, reason="protected")
            )
            continue

        value = proposed
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            lo, hi = rules.limit(path)
            if lo is not None and value < lo:
                value = lo
            elif hi is not None and value > hi:
                value = hi
            if isinstance(current, int) and not isinstance(current, bool):
                value = int(round(value))
            if value != proposed:
                reason = "integer-valued"
                if lo is not None and proposed < lo:
                    reason = "below minimum"
                elif hi is not None and proposed > hi:
                    reason = "above maximum"
                report.append(
                    ClampEvent(path=path, proposed=proposed, enforced=value, reason=reason)
                )
        parent[leaf] = value

    try:
        revised = ProblemSpec.model_validate(data)
    except ValidationError as err:
        issues = "; ".join(str(i) for i in _issues_from(err))
        raise RevisionError(f"revision produces an invalid spec: {issues}") from None
    return revised, report


# ---------------------------------------------------------------------------
# presets


def phone_stand() -> ProblemSpec:
    """Inclined phone stand: base plate fixed, load spread along the
    diagonal resting surface y = ly(1 - x/lx)."""
    return ProblemSpec(
        label="phone_stand",
        mesh=MeshParams(nelx=128, nely=64, nelz=16, lx=1.0, ly=0.5, lz=0.125),
        material=MaterialParams(e0=1.0, emin=1e-9, nu=0.3),
        bcs=[BCSpec(where=Region(y=0.0), fix_ux=True, fix_uy=True, fix_uz=True)],
        loads=[LoadSpec(where=Region(diagonal="xy"), fy=-1.0)],
        solver=SolverParams(tol=1e-4, maxiter=50, n_level=5),
        simp=SimpParams(volfrac=0.15, penalty=3.0, rmin=1.5, heaviside=True, beta=8.0),
        optimizer=OptimizerParams(kind="pgd", fun_tol=1e-4, change_tol=0.0, max_iters=200),
    )


def cantilever() -> ProblemSpec:
    """End-loaded cantilever: root face pinned in x/z, far bottom edge
    held in y/z, downward line load along the root's top edge."""
    return ProblemSpec(
        label="cantilever",
        mesh=MeshParams(nelx=128, nely=64, nelz=64, lx=1.0, ly=0.5, lz=0.5),
        material=MaterialParams(e0=1.0, emin=1e-9, nu=0.3),
        bcs=[
            BCSpec(where=Region(x=0.0), fix_ux=True, fix_uz=True),
            BCSpec(where=Region(x=1.0, y=0.0), fix_uy=True, fix_uz=True),
        ],
        loads=[LoadSpec(where=Region(x=0.0, y=0.5), fy=-1.0)],
        solver=SolverParams(tol=1e-4, maxiter=200, n_level=5),
        simp=SimpParams(volfrac=0.40, penalty=3.0, rmin=1.5, heaviside=True, beta=8.0),
        optimizer=OptimizerParams(kind="pgd", fun_tol=1e-4, change_tol=0.0, max_iters=200),
    )


PRESETS = {
    "phone_stand": phone_stand,
    "cantilever": cantilever,
}

_PRESET_PROTECTED = {
    "phone_stand": ("bcs", "loads"),
    "cantilever": ("bcs",),
}


def preset_rules(name: str) -> RevisionRules:
    """Revision policy for a preset: its functional surface is protected."""
    if name not in _PRESET_PROTECTED:
        raise KeyError(f"unknown preset {name!r}")
    return RevisionRules(protected=_PRESET_PROTECTED[name])


# ---------------------------------------------------------------------------
# bridges to the analysis types


def build_mesh(spec: ProblemSpec) -> StructuredMesh:
    m = spec.mesh
    return StructuredMesh(m.nelx, m.nely, m.nelz, m.lx, m.ly, m.lz)


def build_material(spec: ProblemSpec) -> Material:
    m = spec.material
    return Material(e0=m.e0, emin=m.emin, nu=m.nu)


def build_bcs(spec: ProblemSpec) -> list[DirichletBC]:
    return [
        DirichletBC(
            where=bc.where.to_where(),
            fix=(bc.fix_ux, bc.fix_uy, bc.fix_uz),
            value=bc.value,
            name=f"bc{i}",
        )
        for i, bc in enumerate(spec.bcs)
    ]


def build_loads(spec: ProblemSpec) -> list[LoadCase]:
    return [
        LoadCase(where=ld.where.to_where(), force=(ld.fx, ld.fy, ld.fz), name=f"load{i}")
        for i, ld in enumerate(spec.loads)
    ]

"""Cross-replicate statistics over persisted run logs.

Parameter deltas are always measured against each replicate's *original*
configuration, not the previous revision, and averaged only over revisions
that actually changed the parameter. Score trends aggregate the final
verdicts per revision index and fit an ordinary least-squares line.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable, Sequence

import numpy as np

from .agents.orchestrator import RunLog
from .problem import flatten_spec

__all__ = ["ParamStat", "ScoreTrend", "parameter_stats", "score_trend", "stats_csv"]


@dataclass(frozen=True)
class ParamStat:
    """Aggregate change behavior of one parameter across all revisions."""

    path: str
    avg_delta: float | None  # None when never modified
    avg_abs_delta: float | None
    count: int

    @property
    def modified(self) -> bool:
        return self.count > 0

    def to_dict(self) -> dict[str, Any]:
        return {
            "path": self.path,
            "avg_delta": self.avg_delta,
            "avg_abs_delta": self.avg_abs_delta,
            "count": self.count,
            "modified": self.modified,
        }


@dataclass(frozen=True)
class ScoreTrend:
    """Mean judge score per revision index with its least-squares slope."""

    means: tuple[float, ...]
    slope: float
    replicates: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "means": list(self.means),
            "slope": self.slope,
            "replicates": self.replicates,
        }


def _numeric_leaves(spec) -> dict[str, float]:
    """Numeric and boolean spec leaves as floats; booleans encode as 1/0 so a
    toggle contributes a ±1 delta."""
    out: dict[str, float] = {}
    for path, value in flatten_spec(spec).items():
        if isinstance(value, bool):
            out[path] = 1.0 if value else 0.0
        elif isinstance(value, (int, float)):
            out[path] = float(value)
    return out


def parameter_stats(run_logs: Iterable[RunLog]) -> list[ParamStat]:
    """Per-parameter average signed and absolute delta vs each original.

    A revision counts toward a parameter when its value differs from the
    replicate's original; the averages run over exactly those revisions.
    Parameters present in the schema but never modified get count 0.
    """
    logs = list(run_logs)
    deltas: dict[str, list[float]] = {}
    universe: set[str] = set()
    for log in logs:
        if not log.records:
            continue
        original = _numeric_leaves(log.records[0].spec)
        universe.update(original)
        for record in log.records[1:]:
            revised = _numeric_leaves(record.spec)
            universe.update(revised)
            for path, base_value in original.items():
                if path not in revised:
                    continue
                delta = revised[path] - base_value
                if delta != 0.0:
                    deltas.setdefault(path, []).append(delta)

    stats = []
    for path in sorted(universe):
        changes = deltas.get(path, [])
        if changes:
            stats.append(
                ParamStat(
                    path=path,
                    avg_delta=float(np.mean(changes)),
                    avg_abs_delta=float(np.mean(np.abs(changes))),
                    count=len(changes),
                )
            )
        else:
            stats.append(ParamStat(path=path, avg_delta=None, avg_abs_delta=None, count=0))
    return stats


def score_trend(run_logs: Iterable[RunLog]) -> ScoreTrend:
    """Mean final score per revision index and the OLS slope across indices.

    Every record in every log must carry a verdict, and all logs must have
    the same number of records.
    """
    logs = list(run_logs)
    if not logs:
        raise ValueError("score_trend needs at least one run log")
    length = len(logs[0].records)
    if length == 0:
        raise ValueError("run logs contain no records")
    scores = np.empty((len(logs), length))
    for li, log in enumerate(logs):
        if len(log.records) != length:
            raise ValueError(
                f"replicate {log.replicate!r} has {len(log.records)} records, expected {length}"
            )
        for ri, record in enumerate(log.records):
            if record.verdict is None:
                raise ValueError(
                    f"record {ri} of replicate {log.replicate!r} is unjudged"
                )
            scores[li, ri] = record.verdict.score
    means = scores.mean(axis=0)
    if length == 1:
        slope = 0.0
    else:
        slope = float(np.polyfit(np.arange(length), means, 1)[0])
    return ScoreTrend(means=tuple(float(m) for m in means), slope=slope, replicates=len(logs))


def stats_csv(stats: Sequence[ParamStat]) -> str:
    """Render parameter stats as CSV; never-modified rows show n/m."""
    lines = ["parameter,avg_delta,avg_abs_delta,count"]
    for s in stats:
        if s.modified:
            lines.append(f"{s.path},{s.avg_delta:+.6g},{s.avg_abs_delta:.6g},{s.count}")
        else:
            lines.append(f"{s.path},n/m,n/m,0")
    return "\n".join(lines) + "\n"

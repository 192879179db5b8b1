"""Vision-agent revision proposals.

The vision agent sees the full run history — per-revision configuration,
optimization outcome, judge feedback, and the six rendered views — and answers
with a structured parameter diff to apply next. It is always pointed at the
best-scoring configuration so far, not the most recent one. In ablation mode
the agent is blinded: it receives only the original configuration and the
design goal, with no images and no revision history.
"""

from __future__ import annotations

import json
import re
from typing import TYPE_CHECKING, Sequence

from ..problem import ParameterDiff, RevisionRules, spec_to_json
from .client import ChatClient, ChatMessage, ImagePart, TextPart

if TYPE_CHECKING:  # pragma: no cover
    from .orchestrator import RevisionRecord

__all__ = ["VisionReviseError", "parse_diff_reply", "vision_revise"]


class VisionReviseError(RuntimeError):
    """No usable diff even after the one allowed reprompt."""


_FENCE_RE = re.compile(r"```(?:json)?\s*(.*?)```", re.DOTALL)


def parse_diff_reply(text: str) -> ParameterDiff:
    """Extract the fenced JSON diff from an assistant reply."""
    candidates = [m.group(1).strip() for m in _FENCE_RE.finditer(text)]
    if not candidates:
        stripped = text.strip()
        if stripped.startswith("{"):
            candidates = [stripped]
    last_error = "no fenced JSON block found"
    for block in candidates:
        try:
            data = json.loads(block)
        except json.JSONDecodeError as exc:
            last_error = f"invalid JSON: {exc}"
            continue
        if not isinstance(data, dict):
            last_error = "fenced JSON is not an object"
            continue
        return ParameterDiff.from_data(data)
    raise ValueError(last_error)


_OUTPUT_FORMAT = """\
Propose your changes as exactly one fenced JSON block mapping parameter paths \
to [current, proposed] value pairs, plus a short "rationale" entry, e.g.:

```json
{
  "simp.penalty": [3.0, 5.0],
  "simp.volfrac": [0.15, 0.10],
  "rationale": "push toward thinner, more distinct members"
}
```

Only numeric or boolean leaf parameters may be edited."""


def _system_prompt(preference: str, priority: str) -> str:
    return (
        "You run the parameter-tuning layer of a voxel-based structural "
        "optimization pipeline. Each design is produced by a compliance-"
        "minimizing topology optimizer; you steer the outcome by editing its "
        "configuration between runs.\n\n"
        f"Design goal: {preference}\n\n"
        + (priority + "\n\n" if priority else "")
        + _OUTPUT_FORMAT
    )


def _hard_rules(rules: RevisionRules) -> str:
    return (
        "Hard rules:\n"
        "- The part must stay functional for its intended use; never edit the "
        "boundary conditions or the applied loads.\n"
        f"- Never set simp.rmin below {rules.rmin_floor:g}."
    )


def _result_line(record: "RevisionRecord") -> str:
    if record.failure:
        return f"Outcome: revision failed ({record.failure}); design carried over from its base."
    r = record.result or {}
    if not r:
        return "Outcome: not yet solved."
    return (
        f"Outcome: compliance {r.get('final_compliance', float('nan')):.6g} "
        f"(initial {r.get('initial_compliance', float('nan')):.6g}), "
        f"{r.get('iterations', '?')} iterations, stopped by {r.get('termination', '?')}, "
        f"mean density {r.get('mean_density', float('nan')):.4g}"
    )


def _history_parts(history: Sequence["RevisionRecord"]) -> list[TextPart | ImagePart]:
    parts: list[TextPart | ImagePart] = []
    for record in history:
        tag = " (original)" if record.index == 0 else ""
        lines = [f"## Revision {record.index}{tag}", "Configuration:", spec_to_json(record.spec)]
        lines.append(_result_line(record))
        if record.verdict is not None:
            v = record.verdict
            conf = f", confidence {v.confidence:g}%" if v.confidence is not None else ""
            lines.append(f"Judge: score {v.score:g}{conf}. {v.justification}")
        parts.append(TextPart("\n".join(lines)))
        for path in record.image_paths():
            parts.append(ImagePart(str(path)))
    return parts


_HISTORY_GUIDANCE = """\
Review the complete history above before answering. Useful patterns:
- If a past change moved the judge score up, consider continuing in that \
direction; if it moved the score down, reverse it or shrink it.
- Do not repeat a change that has already failed to help twice.
- Prefer a few decisive parameter moves per revision over many timid ones.
- Large jumps in resolution or volume fraction can destabilize the \
optimizer; move them gradually.
- Keep the run convergent: if a revision stopped on its iteration cap, favor \
settings that restore convergence."""


def vision_revise(
    client: ChatClient,
    history: Sequence["RevisionRecord"],
    best_index: int,
    rules: RevisionRules,
    preference: str,
    ablation: bool = False,
) -> ParameterDiff:
    """Ask the vision agent for the next parameter diff.

    The proposal is always applied to the best-scoring record, so any stale
    "current" values the agent echoes from other revisions are irrelevant:
    the diff is rebased onto the best configuration by construction.

    A reply without a parseable diff earns exactly one reprompt carrying the
    parse error; a second failure raises VisionReviseError.
    """
    if not history:
        raise ValueError("history must contain at least the original record")
    best = history[best_index]

    if ablation:
        system = _system_prompt(preference, "")
        user_parts: list[TextPart | ImagePart] = [
            TextPart(
                "Configuration:\n"
                + spec_to_json(history[0].spec)
                + "\n\n"
                + _hard_rules(rules)
                + "\n\nReply with the fenced JSON diff of parameter changes that "
                "best serves the design goal."
            )
        ]
    else:
        if best.verdict is not None:
            priority = (
                f"Revision {best.index} is the highest-scoring design so far "
                f"(score {best.verdict.score:g}). Base your changes on revision "
                f"{best.index}'s configuration, NOT on the most recent one."
            )
        else:
            priority = (
                "No designs have been scored yet; base your changes on the "
                f"configuration of revision {best.index}."
            )
        system = _system_prompt(preference, priority)
        user_parts = _history_parts(history)
        user_parts.append(
            TextPart(
                _HISTORY_GUIDANCE
                + "\n\n"
                + _hard_rules(rules)
                + f"\n\nReply with the fenced JSON diff for your next revision, "
                f"based on revision {best.index}."
            )
        )

    messages = [ChatMessage.text("system", system), ChatMessage("user", tuple(user_parts))]
    reply = client.complete(messages)
    try:
        return parse_diff_reply(reply)
    except ValueError as first_error:
        retry = messages + [
            ChatMessage.text("assistant", reply),
            ChatMessage.text(
                "user",
                f"Could not parse your diff: {first_error}. Reply again with "
                "exactly one fenced JSON object mapping parameter paths to "
                "[current, proposed] pairs plus a \"rationale\" string.",
            ),
        ]
        second = client.complete(retry)
        try:
            return parse_diff_reply(second)
        except ValueError as exc:
            raise VisionReviseError(f"no parseable diff after reprompt: {exc}") from exc

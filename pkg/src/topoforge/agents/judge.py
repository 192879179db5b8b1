"""Design scoring: verdict type, reply parsing, and the model-backed judge.

The judge rates every design in a run on a 1-to-5 scale with half points,
looking only at rendered images. Replies follow a loose "Image X: Score - N"
convention with an optional "Confidence: P%" per design; the parser tolerates
the punctuation variants models actually produce and snaps off-lattice scores
to the nearest half point, flagging the adjustment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from ..fem import StructuredMesh
from .client import ChatClient, ChatMessage, ImagePart, TextPart

__all__ = [
    "JudgeVerdict",
    "JudgeError",
    "DesignView",
    "snap_to_lattice",
    "parse_judge_reply",
    "judge_score",
    "ClientJudge",
]


@dataclass(frozen=True)
class JudgeVerdict:
    """Score on the half-point lattice in [1, 5], with optional confidence."""

    score: float
    justification: str = ""
    confidence: float | None = None
    adjusted: bool = False  # true when the raw score was off-lattice or out of range

    def __post_init__(self):
        if not (1.0 <= self.score <= 5.0) or (2 * self.score) % 1 != 0:
            raise ValueError(f"score {self.score} not on the half-point lattice in [1, 5]")
        if self.confidence is not None and not (0.0 <= self.confidence <= 100.0):
            raise ValueError(f"confidence {self.confidence} outside [0, 100]")

    def to_dict(self) -> dict[str, Any]:
        return {
            "score": self.score,
            "justification": self.justification,
            "confidence": self.confidence,
            "adjusted": self.adjusted,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "JudgeVerdict":
        return cls(
            score=data["score"],
            justification=data.get("justification", ""),
            confidence=data.get("confidence"),
            adjusted=data.get("adjusted", False),
        )


class JudgeError(RuntimeError):
    """The judge reply could not be parsed even after a reprompt."""


@dataclass(frozen=True)
class DesignView:
    """One design as the judges see it: a label, a front render, the voxels."""

    label: str
    image_path: str | None
    densities: np.ndarray
    mesh: StructuredMesh


def snap_to_lattice(raw: float) -> tuple[float, bool]:
    """Round to the nearest half point and clamp to [1, 5]; flag any change."""
    snapped = round(2.0 * raw) / 2.0
    snapped = min(5.0, max(1.0, snapped))
    return snapped, snapped != raw


_SCORE_RE = re.compile(r"score\s*[-–—=:]*\s*(\d+(?:\.\d+)?)", re.IGNORECASE)
_CONFIDENCE_RE = re.compile(r"confidence\s*[-–—=:]*\s*(\d+(?:\.\d+)?)\s*%", re.IGNORECASE)


def parse_judge_reply(text: str, n_designs: int) -> list[JudgeVerdict]:
    """Extract one verdict per design, in order of appearance.

    Raises ValueError when fewer than ``n_designs`` scores are present.
    """
    matches = list(_SCORE_RE.finditer(text))
    if len(matches) < n_designs:
        raise ValueError(
            f"found {len(matches)} scores, expected {n_designs}; "
            "each design needs a line like 'Image A: Score - 3'"
        )
    matches = matches[:n_designs]
    verdicts = []
    for i, m in enumerate(matches):
        seg_start = m.end()
        seg_end = matches[i + 1].start() if i + 1 < len(matches) else len(text)
        segment = text[seg_start:seg_end]
        score, adjusted = snap_to_lattice(float(m.group(1)))
        conf_match = _CONFIDENCE_RE.search(segment)
        confidence = None
        if conf_match:
            confidence = min(100.0, max(0.0, float(conf_match.group(1))))
        justification = segment.strip().strip("*_ \n")
        verdicts.append(
            JudgeVerdict(
                score=score,
                justification=justification,
                confidence=confidence,
                adjusted=adjusted,
            )
        )
    return verdicts


_JUDGE_SYSTEM = """\
You are an impartial judge of 3D-printed structural designs. You will see one \
rendered image per design. Rate each design's visible global structural \
complexity on a scale from 1 to 5, half points allowed:

1 - a plain monolithic block with no internal structure
2 - mostly solid with minor surface variation
3 - clearly articulated members with some branching
4 - strongly skeletal, multiple branching members
5 - intricate lattice-like branching throughout

Judge strictly from what is visible in the images. For every design, output a \
line of the form

  Image X (Label): Score - N

followed by one sentence of justification and, if you wish, a line \
"Confidence: P%". Keep the designs in the order given."""


def _design_messages(designs: Sequence[DesignView]) -> list[ChatMessage]:
    parts: list[TextPart | ImagePart] = [
        TextPart(f"Evaluate the {len(designs)} designs below.")
    ]
    for i, design in enumerate(designs):
        letter = chr(ord("A") + i)
        parts.append(TextPart(f"Image {letter} ({design.label}):"))
        if design.image_path is None:
            raise ValueError(f"design {design.label!r} has no rendered image")
        parts.append(ImagePart(str(design.image_path)))
    return [
        ChatMessage.text("system", _JUDGE_SYSTEM),
        ChatMessage("user", tuple(parts)),
    ]


def judge_score(client: ChatClient, designs: Sequence[DesignView]) -> list[JudgeVerdict]:
    """Ask the judge model to score every design; one verdict per design.

    A reply missing scores triggers exactly one reprompt carrying the parse
    error; a second failure raises JudgeError.
    """
    if len(designs) < 2:
        raise ValueError("judging needs at least 2 designs to compare")
    messages = _design_messages(designs)
    reply = client.complete(messages)
    try:
        return parse_judge_reply(reply, len(designs))
    except ValueError as first_error:
        retry = messages + [
            ChatMessage.text("assistant", reply),
            ChatMessage.text(
                "user",
                f"Your reply could not be parsed: {first_error}. "
                f"Restate a score for all {len(designs)} designs, one line each, "
                "in the form 'Image X (Label): Score - N'.",
            ),
        ]
        second = client.complete(retry)
        try:
            return parse_judge_reply(second, len(designs))
        except ValueError as exc:
            raise JudgeError(
                f"judge reply unparseable after reprompt: {exc}"
            ) from exc


@dataclass
class ClientJudge:
    """Model-backed judge: sends one labeled image per design each round."""

    client: ChatClient

    def verdicts(self, designs: Sequence[DesignView]) -> list[JudgeVerdict]:
        return judge_score(self.client, designs)

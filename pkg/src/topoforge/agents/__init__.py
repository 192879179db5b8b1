"""Model-backed revision agents, offline stand-ins, and the run orchestrator."""

from .client import (
    ChatClient,
    ChatMessage,
    HttpClient,
    ImagePart,
    ModelEndpoint,
    RecordingClient,
    ScriptedClient,
    TextPart,
    TransportError,
    chat,
    load_scripted,
)
from .judge import (
    ClientJudge,
    DesignView,
    JudgeError,
    JudgeVerdict,
    judge_score,
    parse_judge_reply,
    snap_to_lattice,
)
from .orchestrator import DesignJudge, RevisionRecord, RunLog, orchestrate
from .stub import FixedScoreJudge, StubJudge, stub_judge
from .vision import VisionReviseError, parse_diff_reply, vision_revise

__all__ = [
    "ChatClient",
    "ChatMessage",
    "TextPart",
    "ImagePart",
    "ModelEndpoint",
    "TransportError",
    "chat",
    "HttpClient",
    "ScriptedClient",
    "RecordingClient",
    "load_scripted",
    "JudgeVerdict",
    "JudgeError",
    "DesignView",
    "snap_to_lattice",
    "parse_judge_reply",
    "judge_score",
    "ClientJudge",
    "stub_judge",
    "StubJudge",
    "FixedScoreJudge",
    "VisionReviseError",
    "parse_diff_reply",
    "vision_revise",
    "RevisionRecord",
    "RunLog",
    "DesignJudge",
    "orchestrate",
]

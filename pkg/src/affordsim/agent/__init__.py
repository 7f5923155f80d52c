"""Agents: literal plan execution and affordance-aware execution with pluggable reasoners."""

from .policies import (
    AdaptPolicy,
    BaselinePolicy,
    Deferred,
    PendingActionMemory,
    ResolutionLoop,
    stage_target,
)
from .protocol import ExternalReasoner, MalformedResponse, ReasonerError, Timeout, serve_stub
from .reasoners import (
    DEFAULT_CLASS_ACCURACY,
    DEFAULT_ACCURACY,
    AlwaysAvailableReasoner,
    NoisyReasoner,
    OracleReasoner,
    QueryContext,
    Reasoner,
    ReasonerVerdict,
    VerdictState,
    keyed_uniform,
    oracle_reason,
    verdict_from_latent,
)

__all__ = [
    "AdaptPolicy", "AlwaysAvailableReasoner", "BaselinePolicy", "Deferred", "ExternalReasoner",
    "MalformedResponse", "NoisyReasoner", "OracleReasoner", "DEFAULT_CLASS_ACCURACY", "DEFAULT_ACCURACY",
    "PendingActionMemory", "QueryContext", "Reasoner", "ReasonerError", "ReasonerVerdict",
    "ResolutionLoop", "Timeout", "VerdictState", "keyed_uniform", "oracle_reason", "serve_stub",
    "stage_target", "verdict_from_latent",
]

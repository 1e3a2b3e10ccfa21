"""Agent interpreter and percept-aware agent loop."""

from .agent import (
    AclMessage,
    AgentRuntime,
    BehaviourInstance,
    PrioritizedPercept,
    RuntimeConfig,
    State,
    StepReport,
)
from .foreign import ForeignRegistry
from .interp import match_value, values_equal
from .trace import Trace

__all__ = [
    "AclMessage",
    "AgentRuntime",
    "BehaviourInstance",
    "ForeignRegistry",
    "PrioritizedPercept",
    "RuntimeConfig",
    "State",
    "StepReport",
    "Trace",
    "match_value",
    "values_equal",
]

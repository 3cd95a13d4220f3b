"""Measurement agents: polite probe execution against the simulator."""

from __future__ import annotations

from .bucket import TokenBucket
from .config import ALL_CAPABILITIES, AgentConfig
from .fleet import choose_ases, parse_placement, place_agents
from .runtime import PROBES, Agent, ProbeEvent, ScriptOutcome

__all__ = [
    "ALL_CAPABILITIES", "PROBES", "Agent", "AgentConfig", "ProbeEvent", "ScriptOutcome",
    "TokenBucket", "choose_ases", "parse_placement", "place_agents",
]

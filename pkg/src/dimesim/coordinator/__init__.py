"""Central management: queues, agent profiles and measurement ingest."""

from __future__ import annotations

from .profiles import (
    CAPABILITIES, COMMAND_CAPABILITY, ActivityTally, AgentProfile, Mobility,
    classify_mobility, classify_reliability, mobility_prefix,
)
from .queues import (
    Assignment, ExperimentQueues, ExperimentSpec, Global, PerAgent, PerAs, Scope,
    SpecError, load_experiments, required_capabilities,
)
from .service import (
    AgentInfo, AuthError, Coordinator, LocalTransport, RegistrationRequired,
    SocketTransport, make_server, parse_address, tally_records,
)
from .store import Ingest, IngestCounters, StoreError, StoreFile, read_records, replay_store, scan_store, write_records
from .wire import WireError, decode, encode, read_message

__all__ = [
    "CAPABILITIES", "COMMAND_CAPABILITY", "ActivityTally", "AgentInfo", "AgentProfile",
    "Assignment", "AuthError", "Coordinator", "ExperimentQueues", "ExperimentSpec",
    "Global", "Ingest", "IngestCounters", "LocalTransport", "Mobility", "PerAgent",
    "PerAs", "RegistrationRequired", "Scope", "SocketTransport", "SpecError",
    "StoreError", "StoreFile", "WireError", "classify_mobility", "classify_reliability",
    "decode", "encode", "load_experiments", "make_server", "mobility_prefix",
    "parse_address", "read_message", "read_records", "replay_store", "required_capabilities",
    "scan_store", "tally_records", "write_records",
]

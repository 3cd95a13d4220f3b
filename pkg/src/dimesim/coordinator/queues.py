"""Experiment queues: one global, one per AS, one per agent.

Agents are served bottom up: their own queue first, then the queue of the AS
they currently sit in, then the global queue. A spec stays queued until it
has been handed to ``replication`` distinct agents.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Union

from ..model import AsId
from ..penny import PennyError, parse
from .profiles import COMMAND_CAPABILITY, check_capabilities


@dataclass(frozen=True)
class Global:
    def key(self) -> tuple:
        return ("global",)


@dataclass(frozen=True)
class PerAs:
    asn: AsId

    def key(self) -> tuple:
        return ("as", self.asn)


@dataclass(frozen=True)
class PerAgent:
    agent_id: str

    def key(self) -> tuple:
        return ("agent", self.agent_id)


Scope = Union[Global, PerAs, PerAgent]
TIER_ORDER = {"agent": 0, "as": 1, "global": 2}


class SpecError(ValueError):
    pass


def required_capabilities(script_text: str) -> frozenset[str]:
    script = parse(script_text)
    return frozenset(COMMAND_CAPABILITY[c] for c in script.commands() if c in COMMAND_CAPABILITY)


@dataclass
class ExperimentSpec:
    experiment_id: str
    scope: Scope
    script: str
    capabilities: frozenset[str] | None = None  # None: derive from the script
    replication: int = 1

    def __post_init__(self) -> None:
        if self.replication < 1:
            raise SpecError("replication count must be >= 1")
        try:
            derived = required_capabilities(self.script)
        except PennyError as exc:
            raise SpecError(f"experiment {self.experiment_id}: script rejected: {exc}") from exc
        given = frozenset() if self.capabilities is None else check_capabilities(self.capabilities)
        self.capabilities = given | derived

    def to_json(self) -> dict:
        scope = self.scope
        return {
            "id": self.experiment_id,
            "scope": scope.key()[0],
            "target": getattr(scope, "asn", getattr(scope, "agent_id", None)),
            "script": self.script,
            "capabilities": sorted(self.capabilities),
            "replication": self.replication,
        }

    @classmethod
    def from_json(cls, d: dict) -> ExperimentSpec:
        kind = d.get("scope", "global")
        if kind == "global":
            scope: Scope = Global()
        elif kind == "as":
            scope = PerAs(int(d["target"]))
        elif kind == "agent":
            scope = PerAgent(str(d["target"]))
        else:
            raise SpecError(f"unknown scope {kind!r}")
        return cls(str(d["id"]), scope, d["script"], frozenset(d.get("capabilities", ())), int(d.get("replication", 1)))


@dataclass(frozen=True)
class Assignment:
    experiment_id: str
    script: str
    tier: str  # "agent" | "as" | "global"


@dataclass
class _Entry:
    spec: ExperimentSpec
    assigned_to: set[str] = field(default_factory=set)

    @property
    def remaining(self) -> int:
        return self.spec.replication - len(self.assigned_to)


class ExperimentQueues:
    """Not thread-safe on its own; the coordinator serialises access."""

    def __init__(self) -> None:
        self._queues: dict[tuple, deque[_Entry]] = {}
        self._ids: set[str] = set()

    def enqueue(self, spec: ExperimentSpec) -> int:
        if spec.experiment_id in self._ids:
            raise SpecError(f"duplicate experiment id {spec.experiment_id!r}")
        q = self._queues.setdefault(spec.scope.key(), deque())
        q.append(_Entry(spec))
        self._ids.add(spec.experiment_id)
        return len(q) - 1

    def pending(self, scope: Scope) -> list[ExperimentSpec]:
        return [e.spec for e in self._queues.get(scope.key(), ())]

    def remaining(self, experiment_id: str) -> int:
        for q in self._queues.values():
            for e in q:
                if e.spec.experiment_id == experiment_id:
                    return e.remaining
        return 0

    def take(
        self, agent_id: str, asn: AsId | None, capabilities: frozenset[str], budget: int
    ) -> list[Assignment]:
        if budget < 1:
            raise ValueError("budget must be >= 1")
        keys = [("agent", agent_id)]
        if asn is not None:
            keys.append(("as", asn))
        keys.append(("global",))
        out: list[Assignment] = []
        for key in keys:
            q = self._queues.get(key)
            if not q:
                continue
            for entry in list(q):
                if len(out) == budget:
                    return out
                if agent_id in entry.assigned_to or not entry.spec.capabilities <= capabilities:
                    continue
                entry.assigned_to.add(agent_id)
                out.append(Assignment(entry.spec.experiment_id, entry.spec.script, key[0]))
                if entry.remaining == 0:
                    q.remove(entry)
        return out

    def drop_agent_queue(self, agent_id: str) -> list[str]:
        q = self._queues.pop(("agent", agent_id), None)
        return [e.spec.experiment_id for e in q] if q else []

    def sizes(self) -> dict[str, int]:
        return {":".join(str(k) for k in key): len(q) for key, q in sorted(self._queues.items(), key=lambda kv: str(kv[0]))}


def load_experiments(items: Iterable[dict]) -> list[ExperimentSpec]:
    return [ExperimentSpec.from_json(d) for d in items]

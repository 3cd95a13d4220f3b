"""The measurement agent: pull work, run it politely, report the results."""

from __future__ import annotations

import ipaddress
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from ..coordinator.profiles import COMMAND_CAPABILITY
from ..netsim.probes import ping, traceroute
from ..netsim.topology import GroundTruthTopology
from ..penny import CommandRegistry, Interpreter, PennyError, PennyTypeError, Scheduler, VirtualClock, parse
from ..penny.builtins import is_ip
from ..records import MeasurementRecord
from .bucket import TokenBucket
from .config import AgentConfig

Transport = Callable[[dict], dict]
BACKOFF_CAP = 16  # in poll intervals

# command -> (probe function, probe kind)
PROBES = {
    "Ping": ("ping", "icmp"),
    "UdpPing": ("ping", "udp"),
    "Traceroute": ("trace", "icmp"),
    "UdpTraceroute": ("trace", "udp"),
}


@dataclass(frozen=True)
class ProbeEvent:
    time: int
    experiment_id: str
    command: str
    target: ipaddress.IPv4Address
    source: ipaddress.IPv4Address


@dataclass
class ScriptOutcome:
    experiment_id: str
    value: object
    error: str | None
    records: int
    started: int
    finished: int


class Agent:
    def __init__(
        self,
        config: AgentConfig,
        topo: GroundTruthTopology,
        transport: Transport,
        clock: VirtualClock | None = None,
    ) -> None:
        config.validate(topo)
        self.config = config
        self.topo = topo
        self.transport = transport
        self.clock = clock or VirtualClock(0, config.local_offset)
        self.bucket = TokenBucket.per_minute(config.rate_limit, start=self.clock.now)
        self.token: str | None = None
        self.rank: int | None = None
        self.probe_log: list[ProbeEvent] = []
        self.outbox: list[MeasurementRecord] = []
        self.outcomes: list[ScriptOutcome] = []
        self.failures = 0
        self.next_poll_at = self.clock.now
        self.batches_sent = 0
        self._rng = random.Random(f"{config.seed}:{config.agent_id}")
        self._seq = 0

    @property
    def agent_id(self) -> str:
        return self.config.agent_id

    def interface(self, t: int | None = None) -> ipaddress.IPv4Address:
        return self.config.interface_at(self.clock.now if t is None else t)

    # -- talking to the coordinator
    def _send(self, msg: dict) -> dict:
        reply = self.transport(msg)
        if reply.get("type") == "ERROR":
            raise RuntimeError(f"coordinator refused {msg['type']}: {reply.get('reason')}")
        return reply

    def register(self) -> None:
        reply = self._send(
            {
                "type": "REGISTER",
                "agent_id": self.agent_id,
                "ip": str(self.interface()),
                "capabilities": sorted(self.config.capabilities),
            }
        )
        self.token, self.rank = reply["token"], int(reply["rank"])

    def poll(self) -> list[dict]:
        if self.token is None:
            self.register()
        reply = self._send(
            {
                "type": "POLL",
                "agent_id": self.agent_id,
                "token": self.token,
                "budget": self.config.poll_budget,
                "ip": str(self.interface()),
                "now": self.clock.now,
            }
        )
        return reply["assignments"]

    def flush(self) -> bool:
        """Report everything waiting in the outbox; on failure keep it."""
        if not self.outbox or self.token is None:
            return not self.outbox
        batch = self.outbox[: self.config.batch_size]
        try:
            reply = self._send(
                {"type": "REPORT", "agent_id": self.agent_id, "token": self.token, "lines": [r.to_line() for r in batch]}
            )
        except (ConnectionError, RuntimeError):
            return False
        if reply.get("accepted") != len(batch):
            return False
        del self.outbox[: len(batch)]
        self.batches_sent += 1
        return self.flush() if self.outbox else True

    def backoff_delay(self) -> int:
        unit = self.config.poll_interval
        base = unit * min(2 ** (self.failures - 1), BACKOFF_CAP)
        jitter = self._rng.randrange(unit // 4 + 1)
        return min(base + jitter, unit * BACKOFF_CAP)

    # -- probes
    def probe_commands(self, experiment_id: str = "") -> CommandRegistry:
        """Probe commands this agent's capabilities allow; others are left
        unregistered so scripts calling them fail at execution."""
        reg = CommandRegistry()
        for name, (fn, kind) in PROBES.items():
            if COMMAND_CAPABILITY[name] not in self.config.capabilities:
                continue
            reg.register(name, 1, COMMAND_CAPABILITY[name], self._handler(name, fn, kind, experiment_id))
        return reg

    def _handler(self, name: str, fn: str, kind: str, experiment_id: str):
        def run(ctx, target):
            if not is_ip(target):
                raise PennyTypeError(f"{name} needs an ip argument")
            send_at = self.bucket.acquire(ctx.now)
            yield from ctx.sleep_until(send_at)
            src = self.interface(ctx.now)
            self._seq += 1
            if fn == "trace":
                result = traceroute(self.topo, src, target, kind)
                value = Fraction(len(result.hops))
            else:
                result = ping(self.topo, src, target, kind, nonce=self._seq)
                value = None if result.rtt_ms is None else Fraction(repr(result.rtt_ms))
            rec = MeasurementRecord(
                f"{self.agent_id}-{self._seq:07d}", self.agent_id, self.rank or 0, src, ctx.now, result, experiment_id
            )
            self.probe_log.append(ProbeEvent(ctx.now, experiment_id, name, target, src))
            ctx.emit(rec)
            self.outbox.append(rec)
            if len(self.outbox) >= self.config.batch_size:
                self.flush()
            return value

        return run

    def run_scripts(self, assignments: list[dict]) -> list[ScriptOutcome]:
        """Run assigned scripts side by side on this agent's clock."""
        sched = Scheduler(self.clock)
        interps = []
        for a in assignments:
            exp = a["experiment_id"]
            interp = Interpreter(
                self.probe_commands(exp), self.clock, self.config.capabilities, seed=self._rng.randrange(2**32)
            )
            interp.on_done = lambda _i: self.flush()
            try:
                interp.start(parse(a["script"]), sched)
            except PennyError as exc:
                self.outcomes.append(ScriptOutcome(exp, None, str(exc), 0, self.clock.now, self.clock.now))
                continue
            interps.append((exp, interp))
        sched.run(isolate_errors=True)
        out = []
        for exp, interp in interps:
            res = interp.result()
            err = None if interp.error is None else str(interp.error)
            out.append(ScriptOutcome(exp, res.value, err, len(res.records), res.started, res.finished))
        self.outcomes.extend(out)
        self.flush()
        return out

    def run_cycle(self) -> list[ScriptOutcome]:
        """One poll and the execution of whatever it returns. While backing
        off, or when the coordinator cannot be reached, nothing is probed."""
        now = self.clock.now
        if now < self.next_poll_at:
            return []
        try:
            if self.outbox:
                self.flush()
            assignments = self.poll()
        except (ConnectionError, RuntimeError):
            self.failures += 1
            self.next_poll_at = now + self.backoff_delay()
            return []
        self.failures = 0
        self.next_poll_at = now + self.config.poll_interval
        if not assignments:
            return []
        return self.run_scripts(assignments)

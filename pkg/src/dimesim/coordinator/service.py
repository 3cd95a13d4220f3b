"""The coordinator process: agent book-keeping, queues, ingest, and the
message handler behind the wire protocol. It never contacts an agent; every
exchange is a reply to an agent request."""

from __future__ import annotations

import ipaddress
import os
import random
import socketserver
import threading
from dataclasses import dataclass
from typing import Callable, Iterable

from ..model import AsId, Ip
from ..records import MeasurementRecord
from . import wire
from .profiles import DAY, ActivityTally, AgentProfile, check_capabilities
from .queues import Assignment, ExperimentQueues, ExperimentSpec, SpecError
from .store import Ingest, StoreError


class RegistrationRequired(LookupError):
    pass


class AuthError(PermissionError):
    pass


@dataclass
class AgentInfo:
    agent_id: str
    rank: int  # 1-based join order
    token: str
    capabilities: frozenset[str]
    ip: Ip
    asn: AsId | None
    last_seen: int


def tally_records(records: Iterable[MeasurementRecord]) -> dict[str, ActivityTally]:
    out: dict[str, ActivityTally] = {}
    for rec in records:
        out.setdefault(rec.agent_id, ActivityTally()).add(rec.timestamp, rec.source_ip)
    return out


class Coordinator:
    def __init__(
        self,
        store_path,
        resolver: Callable[[Ip], AsId | None] | None = None,
        idle_horizon: int | None = None,
        epoch: tuple[int, int] | None = None,
        background: bool = True,
        token_seed: int = 0,
    ) -> None:
        self._lock = threading.RLock()
        self.resolver = resolver
        self.idle_horizon = idle_horizon
        self.queues = ExperimentQueues()
        self.agents: dict[str, AgentInfo] = {}
        self._tallies: dict[str, ActivityTally] = {}
        self._rng = random.Random(token_seed)
        self.flow_log: list[tuple[str, str, str]] = []  # (sender, type, agent id)
        self.expired: list[tuple[str, list[str]]] = []
        self._last_day = 0
        self.ingest = Ingest(store_path, resolver=resolver, on_record=self._tally, epoch=epoch, background=background)

    # -- agents
    def _resolve(self, addr: Ip) -> AsId | None:
        return self.resolver(addr) if self.resolver is not None else None

    def register(self, agent_id: str, addr: Ip, capabilities: Iterable[str], now: int = 0) -> AgentInfo:
        caps = check_capabilities(capabilities)
        with self._lock:
            info = self.agents.get(agent_id)
            if info is not None:
                info.capabilities, info.ip, info.asn, info.last_seen = caps, addr, self._resolve(addr), now
                return info
            token = f"{self._rng.getrandbits(128):032x}"
            info = AgentInfo(agent_id, len(self.agents) + 1, token, caps, addr, self._resolve(addr), now)
            self.agents[agent_id] = info
            return info

    def _agent(self, agent_id: str) -> AgentInfo:
        info = self.agents.get(agent_id)
        if info is None:
            raise RegistrationRequired(f"agent {agent_id!r} is not registered")
        return info

    def authenticate(self, agent_id: str, token: str) -> AgentInfo:
        info = self._agent(agent_id)
        if token != info.token:
            raise AuthError(f"bad token for agent {agent_id!r}")
        return info

    # -- planning side
    def enqueue(self, spec: ExperimentSpec) -> int:
        with self._lock:
            return self.queues.enqueue(spec)

    # -- agent side
    def next_scripts(self, agent_id: str, budget: int, now: int | None = None, addr: Ip | None = None) -> list[Assignment]:
        with self._lock:
            info = self._agent(agent_id)
            if now is not None:
                self.expire_idle(now)
                info.last_seen = max(info.last_seen, now)
            if addr is not None and addr != info.ip:
                info.ip, info.asn = addr, self._resolve(addr)
            return self.queues.take(agent_id, info.asn, info.capabilities, budget)

    def report(self, agent_id: str, lines: list[str]) -> int:
        self._agent(agent_id)
        return self.ingest.submit(lines)

    def expire_idle(self, now: int) -> list[str]:
        """Drop the per-agent queues of agents silent for longer than the
        idle horizon; returns the ids of the dropped experiments."""
        if self.idle_horizon is None:
            return []
        dropped: list[str] = []
        with self._lock:
            for info in self.agents.values():
                if now - info.last_seen > self.idle_horizon:
                    ids = self.queues.drop_agent_queue(info.agent_id)
                    if ids:
                        self.expired.append((info.agent_id, ids))
                        dropped.extend(ids)
        return dropped

    # -- profiling
    def _tally(self, rec: MeasurementRecord) -> None:
        with self._lock:
            self._tallies.setdefault(rec.agent_id, ActivityTally()).add(rec.timestamp, rec.source_ip)
            self._last_day = max(self._last_day, rec.timestamp // DAY)

    def profile(self, agent_id: str, today: int | None = None) -> AgentProfile:
        with self._lock:
            info = self._agent(agent_id)
            tally = self._tallies.get(agent_id, ActivityTally())
            day = self._last_day if today is None else today
            return tally.profile(agent_id, info.rank, info.capabilities, day)

    def replay_profiles(self, path, today: int | None = None) -> list[AgentProfile]:
        """Profiles recomputed from a store file alone, for registered agents."""
        from .store import replay_store

        records, _ = replay_store(path)
        tallies = tally_records(records)
        with self._lock:
            day = self._last_day if today is None else today
            out = []
            for a in sorted(self.agents, key=lambda a: self.agents[a].rank):
                info = self.agents[a]
                out.append(tallies.get(a, ActivityTally()).profile(a, info.rank, info.capabilities, day))
            return out

    def profiles(self, today: int | None = None) -> list[AgentProfile]:
        with self._lock:
            return [self.profile(a, today) for a in sorted(self.agents, key=lambda a: self.agents[a].rank)]

    def drain(self) -> None:
        self.ingest.drain()

    def close(self) -> None:
        self.ingest.close()

    # -- wire handler
    def handle(self, msg: dict) -> dict:
        """Answer one agent request. Never raises for bad input."""
        kind = msg.get("type", "?") if isinstance(msg, dict) else "?"
        agent_id = str(msg.get("agent_id", "?")) if isinstance(msg, dict) else "?"
        with self._lock:
            self.flow_log.append(("agent", str(kind), agent_id))
        try:
            wire.validate(msg)
        except wire.WireError as exc:
            return self._reply(agent_id, wire.error(str(exc)))
        if kind not in wire.AGENT_MESSAGES:
            return self._reply(agent_id, wire.error(f"{kind} is not an agent request"))
        try:
            if kind == "REGISTER":
                info = self.register(agent_id, ipaddress.IPv4Address(msg["ip"]), msg["capabilities"])
                return self._reply(agent_id, {"type": "ACK", "agent_id": agent_id, "token": info.token, "rank": info.rank})
            self.authenticate(agent_id, msg["token"])
            if kind == "POLL":
                got = self.next_scripts(agent_id, msg["budget"], msg["now"], ipaddress.IPv4Address(msg["ip"]))
                body = [{"experiment_id": a.experiment_id, "script": a.script, "tier": a.tier} for a in got]
                return self._reply(agent_id, {"type": "ASSIGN", "assignments": body})
            lines = msg["lines"]
            if not all(isinstance(x, str) for x in lines):
                return self._reply(agent_id, wire.error("REPORT lines must be strings"))
            n = self.report(agent_id, lines)
            return self._reply(agent_id, {"type": "ACK", "accepted": n})
        except (RegistrationRequired, AuthError, SpecError, StoreError, ValueError) as exc:
            return self._reply(agent_id, wire.error(f"{type(exc).__name__}: {exc}"))

    def _reply(self, agent_id: str, msg: dict) -> dict:
        with self._lock:
            self.flow_log.append(("coordinator", msg["type"], agent_id))
        return msg

    def handle_frame(self, frame: bytes) -> bytes:
        try:
            msg = wire.decode(frame)
        except wire.WireError as exc:
            with self._lock:
                self.flow_log.append(("agent", "?", "?"))
            return wire.encode(self._reply("?", wire.error(str(exc))))
        return wire.encode(self.handle(msg))

    def coordinator_initiated(self) -> int:
        """Coordinator messages that were not replies to an agent request."""
        count = 0
        outstanding = 0
        for sender, _, _ in self.flow_log:
            if sender == "agent":
                outstanding += 1
            elif outstanding:
                outstanding -= 1
            else:
                count += 1
        return count


# -- transports ------------------------------------------------------------------


class LocalTransport:
    """In-process link that still goes through frame encoding."""

    def __init__(self, coordinator: Coordinator) -> None:
        self.coordinator = coordinator
        self.down = False  # set to simulate an unreachable coordinator

    def __call__(self, msg: dict) -> dict:
        if self.down:
            raise ConnectionError("coordinator unreachable")
        return wire.decode(self.coordinator.handle_frame(wire.encode(msg)))


def parse_address(address: str):
    """``unix:/path`` or ``host:port``."""
    if address.startswith("unix:"):
        return "unix", address[5:]
    host, _, port = address.rpartition(":")
    if not host or not port.isdigit():
        raise ValueError(f"bad address {address!r}; expected host:port or unix:/path")
    return "tcp", (host, int(port))


class SocketTransport:
    def __init__(self, address: str, timeout: float = 10.0) -> None:
        self.family, self.target = parse_address(address)
        self.timeout = timeout

    def __call__(self, msg: dict) -> dict:
        import socket

        fam = socket.AF_UNIX if self.family == "unix" else socket.AF_INET
        try:
            with socket.socket(fam, socket.SOCK_STREAM) as sock:
                sock.settimeout(self.timeout)
                sock.connect(self.target)
                sock.sendall(wire.encode(msg))
                with sock.makefile("rb") as fh:
                    reply = wire.read_message(fh)
        except OSError as exc:
            raise ConnectionError(str(exc)) from exc
        if reply is None:
            raise ConnectionError("coordinator closed the connection")
        return reply


class _Handler(socketserver.StreamRequestHandler):
    def handle(self) -> None:
        coord: Coordinator = self.server.coordinator  # type: ignore[attr-defined]
        while True:
            try:
                msg = wire.read_message(self.rfile)
            except wire.WireError as exc:
                self.wfile.write(wire.encode(wire.error(str(exc))))
                return
            if msg is None:
                return
            self.wfile.write(wire.encode(coord.handle(msg)))
            self.wfile.flush()


class _TcpServer(socketserver.ThreadingMixIn, socketserver.TCPServer):
    daemon_threads = True
    allow_reuse_address = True


class _UnixServer(socketserver.ThreadingMixIn, socketserver.UnixStreamServer):
    daemon_threads = True


def make_server(coordinator: Coordinator, address: str) -> socketserver.BaseServer:
    family, target = parse_address(address)
    if family == "unix":
        if os.path.exists(target):
            os.unlink(target)
        server = _UnixServer(target, _Handler)
    else:
        server = _TcpServer(target, _Handler)
    server.coordinator = coordinator  # type: ignore[attr-defined]
    return server

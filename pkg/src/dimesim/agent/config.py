from __future__ import annotations

import ipaddress
import json
from dataclasses import dataclass, field

from ..coordinator.profiles import CAPABILITIES, check_capabilities
from ..model import Ip

ALL_CAPABILITIES = frozenset(CAPABILITIES) - {"TcpSyn"}


@dataclass(frozen=True)
class AgentConfig:
    agent_id: str
    home_interface: Ip
    capabilities: frozenset[str] = ALL_CAPABILITIES
    rate_limit: int = 10  # probes per simulated minute
    batch_size: int = 50
    poll_budget: int = 4
    poll_interval: int = 3600  # seconds between polls, also the backoff unit
    local_offset: int = 0  # seconds east of GMT
    # (from_timestamp, interface) switches, sorted by time
    mobility: tuple[tuple[int, Ip], ...] = field(default=())
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "capabilities", check_capabilities(self.capabilities))
        object.__setattr__(self, "mobility", tuple(sorted(self.mobility)))
        if self.rate_limit < 1:
            raise ValueError("rate_limit must be >= 1")
        if self.batch_size < 1 or self.poll_budget < 1 or self.poll_interval < 1:
            raise ValueError("batch_size, poll_budget and poll_interval must be >= 1")

    def interface_at(self, t: int) -> Ip:
        current = self.home_interface
        for since, addr in self.mobility:
            if since <= t:
                current = addr
            else:
                break
        return current

    def interfaces(self) -> list[Ip]:
        return [self.home_interface, *(a for _, a in self.mobility)]

    def validate(self, topo) -> None:
        for addr in self.interfaces():
            if topo.router_of(addr) is None:
                raise ValueError(f"agent {self.agent_id}: {addr} is not an interface of the topology")

    def to_json(self) -> dict:
        return {
            "agent_id": self.agent_id,
            "home_interface": str(self.home_interface),
            "capabilities": sorted(self.capabilities),
            "rate_limit": self.rate_limit,
            "batch_size": self.batch_size,
            "poll_budget": self.poll_budget,
            "poll_interval": self.poll_interval,
            "local_offset": self.local_offset,
            "mobility": [[t, str(a)] for t, a in self.mobility],
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, d: dict) -> AgentConfig:
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown agent config keys {sorted(extra)}")
        kw = dict(d)
        kw["home_interface"] = ipaddress.IPv4Address(d["home_interface"])
        if "capabilities" in d:
            kw["capabilities"] = frozenset(d["capabilities"])
        if "mobility" in d:
            kw["mobility"] = tuple((int(t), ipaddress.IPv4Address(a)) for t, a in d["mobility"])
        return cls(**kw)

    @classmethod
    def load(cls, path) -> AgentConfig:
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, indent=1, sort_keys=True)
            fh.write("\n")
